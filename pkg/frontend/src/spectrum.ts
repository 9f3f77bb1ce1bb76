import type { BandView } from "./types.js";

export const BAND_LOW_MHZ = 3700;
export const BAND_HIGH_MHZ = 3800;
const TOTAL = BAND_HIGH_MHZ - BAND_LOW_MHZ;

export interface Segment {
  subnet: string | null; // null for unallocated spectrum
  lowMhz: number;
  highMhz: number;
  leftPct: number;
  widthPct: number;
}

/**
 * Lay the current assignments out along the managed band as percentage
 * offsets, with explicit free segments for the gaps.  Zero-width grants
 * are skipped (a powered-down subnet holds no spectrum).
 */
export function spectrumSegments(
  assignments: Record<string, BandView>,
): Segment[] {
  const allocated = Object.entries(assignments)
    .filter(([, b]) => b.width_mhz > 0)
    .sort(([, x], [, y]) => x.low_mhz - y.low_mhz);

  const out: Segment[] = [];
  let cursor = BAND_LOW_MHZ;
  for (const [subnet, b] of allocated) {
    if (b.low_mhz > cursor) {
      out.push(free(cursor, b.low_mhz));
    }
    out.push({
      subnet,
      lowMhz: b.low_mhz,
      highMhz: b.high_mhz,
      leftPct: ((b.low_mhz - BAND_LOW_MHZ) / TOTAL) * 100,
      widthPct: (b.width_mhz / TOTAL) * 100,
    });
    cursor = b.high_mhz;
  }
  if (cursor < BAND_HIGH_MHZ) {
    out.push(free(cursor, BAND_HIGH_MHZ));
  }
  return out;
}

function free(lowMhz: number, highMhz: number): Segment {
  return {
    subnet: null,
    lowMhz,
    highMhz,
    leftPct: ((lowMhz - BAND_LOW_MHZ) / TOTAL) * 100,
    widthPct: ((highMhz - lowMhz) / TOTAL) * 100,
  };
}

/** Stable color per subnet id so bands keep their hue across replans. */
export function subnetColor(subnet: string): string {
  const palette = ["#4e9af1", "#f19a4e", "#6fc46f", "#c86fc4",
                   "#e06666", "#5fb8b8", "#b8a15f", "#8f7fe8"];
  const n = Number.parseInt(subnet, 10);
  const idx = Number.isNaN(n) ? 0 : n % palette.length;
  return palette[idx];
}
