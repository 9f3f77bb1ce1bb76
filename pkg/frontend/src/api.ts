import type { CommandResult, EventFrame, Snapshot } from "./types.js";

export async function fetchState(base = ""): Promise<Snapshot> {
  const resp = await fetch(`${base}/api/state`);
  if (!resp.ok) throw new Error(`state fetch failed: ${resp.status}`);
  return (await resp.json()) as Snapshot;
}

export async function postCommand(
  body: Record<string, unknown>,
  base = "",
): Promise<CommandResult> {
  const resp = await fetch(`${base}/api/command`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  return (await resp.json()) as CommandResult;
}

export interface EventHandlers {
  onOpen: () => void;
  onDown: () => void;
  onFrame: (frame: EventFrame) => void;
}

/** Subscribe to the gateway's event stream.  EventSource reconnects by
 * itself; onOpen fires on every (re)connect so the caller can refetch
 * state it may have missed while the stream was down. */
export function connectEvents(handlers: EventHandlers, base = ""): EventSource {
  const es = new EventSource(`${base}/api/events`);
  es.onopen = () => handlers.onOpen();
  es.onerror = () => handlers.onDown();
  es.onmessage = (ev) => {
    let frame: EventFrame;
    try {
      frame = JSON.parse(ev.data) as EventFrame;
    } catch {
      return; // not ours; ignore
    }
    handlers.onFrame(frame);
  };
  return es;
}
