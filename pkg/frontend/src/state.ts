import type { EventFrame, Snapshot } from "./types.js";

/** How many event frames the dashboard keeps; older ones scroll away. */
export const EVENT_LOG_MAX = 200;

export type ConnStatus = "connecting" | "live" | "reconnecting";

export interface DashState {
  conn: ConnStatus;
  snapshot: Snapshot | null;
  /** Newest last.  GAP frames stay in the list as discontinuity markers. */
  events: EventFrame[];
  /** True between a GAP frame and the snapshot refetch that heals it. */
  gap: boolean;
}

export type Action =
  | { type: "conn"; status: ConnStatus }
  | { type: "snapshot"; snapshot: Snapshot }
  | { type: "frame"; frame: EventFrame };

export function initialState(): DashState {
  return { conn: "connecting", snapshot: null, events: [], gap: false };
}

/** Frames that mean "our cached snapshot is out of date". */
export function needsRefetch(frame: EventFrame): boolean {
  return frame.event === "SNAPSHOT" || frame.event === "GAP";
}

function isMeta(frame: EventFrame): boolean {
  return frame.module === "gateway" && frame.event === "SNAPSHOT";
}

export function reduce(state: DashState, action: Action): DashState {
  switch (action.type) {
    case "conn":
      return { ...state, conn: action.status };
    case "snapshot":
      return { ...state, snapshot: action.snapshot, gap: false };
    case "frame": {
      const frame = action.frame;
      if (isMeta(frame)) {
        return state; // snapshot-changed tick; the refetch carries the data
      }
      const events = [...state.events, frame];
      if (events.length > EVENT_LOG_MAX) {
        events.splice(0, events.length - EVENT_LOG_MAX);
      }
      return {
        ...state,
        events,
        gap: frame.event === "GAP" ? true : state.gap,
      };
    }
  }
}
