import type { BandView, MetricsView } from "./types.js";

/** Virtual-ms timestamp as m:ss.mmm (the testbed clock, not wall time). */
export function clock(ms: number): string {
  if (ms < 0) return "-";
  const minutes = Math.floor(ms / 60_000);
  const rest = ms % 60_000;
  const seconds = Math.floor(rest / 1000);
  const millis = rest % 1000;
  return `${minutes}:${String(seconds).padStart(2, "0")}.${String(millis).padStart(3, "0")}`;
}

export function band(b: BandView): string {
  if (b.width_mhz === 0) return "no band";
  return `${b.low_mhz}–${b.high_mhz} MHz`;
}

export function mbps(v: number): string {
  return `${v.toFixed(3)} Mbps`;
}

export function micros(v: number): string {
  return `${v.toFixed(1)} µs`;
}

export function ratio(v: number): string {
  return `${(v * 100).toFixed(2)}%`;
}

export function kpiLine(m: MetricsView): string {
  if (m.no_data) return "no traffic in the last window";
  return `${mbps(m.throughput_mbps)} · p50 ${micros(m.p50_us)} · ` +
    `p99 ${micros(m.p99_us)} · jitter ${micros(m.jitter_us)} · ` +
    `miss ${ratio(m.miss_ratio)} · dropped ${m.dropped}`;
}
