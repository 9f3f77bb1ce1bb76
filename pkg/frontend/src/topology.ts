import type { LinkView, NodeView } from "./types.js";

export interface NodePos {
  ref: number;
  x: number;
  y: number;
}

export interface EdgeCoords {
  link: LinkView;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

/**
 * Place nodes evenly on a circle, first node at twelve o'clock, walking
 * clockwise in ref order.  Deterministic, so the picture never jumps
 * between snapshots.
 */
export function ringLayout(
  nodes: NodeView[],
  cx: number,
  cy: number,
  radius: number,
): Map<number, NodePos> {
  const refs = nodes.map((n) => n.ref).sort((a, b) => a - b);
  const out = new Map<number, NodePos>();
  refs.forEach((ref, i) => {
    const angle = -Math.PI / 2 + (2 * Math.PI * i) / refs.length;
    out.set(ref, {
      ref,
      x: cx + radius * Math.cos(angle),
      y: cy + radius * Math.sin(angle),
    });
  });
  return out;
}

export function edgeCoords(
  links: LinkView[],
  pos: Map<number, NodePos>,
): EdgeCoords[] {
  const out: EdgeCoords[] = [];
  for (const link of links) {
    const a = pos.get(link.a);
    const b = pos.get(link.b);
    if (!a || !b) continue;
    out.push({ link, x1: a.x, y1: a.y, x2: b.x, y2: b.y });
  }
  return out;
}
