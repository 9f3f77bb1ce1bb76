import { connectEvents, fetchState, postCommand } from "./api.js";
import { renderAll, type Controls } from "./render.js";
import { initialState, needsRefetch, reduce, type Action } from "./state.js";

let state = initialState();
let refetchQueued = false;

const controls: Controls = {
  pending: new Set(),
  onSubnetPower(subnet, on) {
    sendCommand(`subnet_power:${subnet}`, { kind: "subnet_power", subnet, on });
  },
  onNodePower(node, on) {
    sendCommand(`node_power:${node}`, { kind: "node_power", node, on });
  },
};

function dispatch(action: Action): void {
  state = reduce(state, action);
  renderAll(state, controls);
}

/** Coalesce bursts of SNAPSHOT ticks into one GET. */
function queueRefetch(): void {
  if (refetchQueued) return;
  refetchQueued = true;
  setTimeout(async () => {
    refetchQueued = false;
    try {
      dispatch({ type: "snapshot", snapshot: await fetchState() });
    } catch {
      // gateway briefly unreachable; the next frame or reconnect retries
    }
  }, 50);
}

function sendCommand(key: string, body: Record<string, unknown>): void {
  if (controls.pending.has(key)) return;
  controls.pending.add(key);
  renderAll(state, controls);
  postCommand(body)
    .then((result) => {
      if (!result.accepted) {
        console.warn(`command refused: ${result.reason ?? "?"}`);
      }
    })
    .catch((err) => console.warn("command failed:", err))
    .finally(() => {
      controls.pending.delete(key);
      queueRefetch();
    });
}

connectEvents({
  onOpen() {
    dispatch({ type: "conn", status: "live" });
    queueRefetch(); // pick up anything missed while disconnected
  },
  onDown() {
    dispatch({ type: "conn", status: "reconnecting" });
  },
  onFrame(frame) {
    dispatch({ type: "frame", frame });
    if (needsRefetch(frame)) queueRefetch();
  },
});

renderAll(state, controls);
