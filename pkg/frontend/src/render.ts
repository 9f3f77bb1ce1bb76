import { band, clock, kpiLine } from "./format.js";
import type { DashState } from "./state.js";
import { spectrumSegments, subnetColor } from "./spectrum.js";
import { edgeCoords, ringLayout } from "./topology.js";
import type { Snapshot } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface Controls {
  onSubnetPower: (subnet: number, on: boolean) => void;
  onNodePower: (ref: number, on: boolean) => void;
  /** Command keys currently awaiting a gateway reply; their controls are
   * disabled so a double click cannot race the first request. */
  pending: Set<string>;
}

export function renderAll(state: DashState, controls: Controls): void {
  renderHeader(state);
  const snap = state.snapshot;
  if (snap) {
    renderSpectrum(snap);
    renderSubnets(snap, controls);
    renderTopology(snap, controls);
  }
  renderLog(state);
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function renderHeader(state: DashState): void {
  const badge = el("conn-badge");
  badge.textContent = state.gap ? "catching up" : state.conn;
  badge.className = `badge badge-${state.gap ? "gap" : state.conn}`;

  const snap = state.snapshot;
  el("clock").textContent = snap ? clock(snap.t) : "-";
  el("plan-version").textContent = snap ? `plan v${snap.plan.version}` : "";
  const conv = el("converged");
  conv.textContent = snap ? (snap.converged ? "plane converged" : "converging") : "";
  conv.className = snap && snap.converged ? "ok" : "warn";
}

function renderSpectrum(snap: Snapshot): void {
  const bar = el("spectrum-bar");
  bar.innerHTML = "";
  for (const seg of spectrumSegments(snap.plan.assignments)) {
    const div = document.createElement("div");
    div.className = seg.subnet === null ? "seg seg-free" : "seg";
    div.style.left = `${seg.leftPct}%`;
    div.style.width = `${seg.widthPct}%`;
    if (seg.subnet !== null) {
      div.style.background = subnetColor(seg.subnet);
      div.textContent = `s${seg.subnet}`;
    }
    div.title = `${seg.lowMhz}–${seg.highMhz} MHz` +
      (seg.subnet === null ? " free" : ` subnet ${seg.subnet}`);
    bar.appendChild(div);
  }
}

function renderSubnets(snap: Snapshot, controls: Controls): void {
  const host = el("subnets");
  host.innerHTML = "";
  for (const [id, view] of Object.entries(snap.subnets)) {
    const card = document.createElement("div");
    card.className = "card";
    const phaseClass = view.phase === "Configured" ? "ok"
      : view.phase === "Off" ? "off" : "warn";
    card.innerHTML = `
      <div class="card-head">
        <span class="swatch" style="background:${subnetColor(id)}"></span>
        <strong>subnet ${id}</strong>
        <span class="phase ${phaseClass}">${view.phase}</span>
      </div>
      <div>master node ${view.master} · ${band(view.band)} · v${view.version}</div>
      <div>manager sees: ${view.sm_status}</div>
      <div class="kpi">${kpiLine(view.metrics)}</div>`;

    const btn = document.createElement("button");
    const powered = view.phase !== "Off";
    const key = `subnet_power:${id}`;
    btn.textContent = powered ? "power off" : "power on";
    btn.disabled = controls.pending.has(key);
    btn.onclick = () => controls.onSubnetPower(Number(id), !powered);
    card.appendChild(btn);
    host.appendChild(card);
  }
}

function renderTopology(snap: Snapshot, controls: Controls): void {
  const svg = el("topology");
  svg.innerHTML = "";
  const width = svg.clientWidth || 420;
  const height = svg.clientHeight || 300;
  const radius = Math.min(width, height) / 2 - 28;
  const pos = ringLayout(snap.topology.nodes, width / 2, height / 2, radius);

  for (const edge of edgeCoords(snap.topology.links, pos)) {
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(edge.x1));
    line.setAttribute("y1", String(edge.y1));
    line.setAttribute("x2", String(edge.x2));
    line.setAttribute("y2", String(edge.y2));
    line.setAttribute("class", edge.link.up ? "edge" : "edge edge-down");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${edge.link.a}–${edge.link.b} ` +
      `(${edge.link.latency_ms} ms${edge.link.up ? "" : ", down"})`;
    line.appendChild(title);
    svg.appendChild(line);
  }

  for (const node of snap.topology.nodes) {
    const p = pos.get(node.ref);
    if (!p) continue;
    const g = document.createElementNS(SVG_NS, "g");
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(p.x));
    circle.setAttribute("cy", String(p.y));
    circle.setAttribute("r", node.role === "router" ? "9" : "12");
    const cls = ["node", `role-${node.role}`];
    if (!node.up) cls.push("node-down");
    const key = `node_power:${node.ref}`;
    if (controls.pending.has(key)) cls.push("node-pending");
    circle.setAttribute("class", cls.join(" "));
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `node ${node.ref} (${node.role}` +
      `${node.up ? "" : ", down"}) — click to power ${node.up ? "off" : "on"}`;
    circle.appendChild(title);
    circle.addEventListener("click", () => {
      if (!controls.pending.has(key)) {
        controls.onNodePower(node.ref, !node.up);
      }
    });
    g.appendChild(circle);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(p.x));
    label.setAttribute("y", String(p.y + 4));
    label.setAttribute("class", "node-label");
    label.textContent = String(node.ref);
    g.appendChild(label);
    svg.appendChild(g);
  }
}

function renderLog(state: DashState): void {
  const host = el("event-log");
  host.innerHTML = "";
  for (let i = state.events.length - 1; i >= 0; i--) {
    const frame = state.events[i];
    const row = document.createElement("div");
    if (frame.event === "GAP") {
      row.className = "log-row log-gap";
      row.textContent = "— stream overflowed; some events were dropped —";
    } else {
      row.className = "log-row";
      row.innerHTML = `<span class="log-t">${clock(frame.t)}</span>` +
        `<span class="log-mod">${frame.module}</span>` +
        `<span class="log-ev">${frame.event}</span>` +
        `<span class="log-det"></span>`;
      (row.lastElementChild as HTMLElement).textContent = frame.details;
    }
    host.appendChild(row);
  }
}
