/** JSON shapes served by the testbed gateway. */

export interface BandView {
  low_mhz: number;
  high_mhz: number;
  width_mhz: number;
}

export interface MetricsView {
  throughput_mbps: number;
  p50_us: number;
  p99_us: number;
  jitter_us: number;
  miss_ratio: number;
  dropped: number;
  no_data: boolean;
}

export interface NodeView {
  ref: number;
  up: boolean;
  role: "sm" | "master" | "router";
}

export interface LinkView {
  a: number;
  b: number;
  latency_ms: number;
  up: boolean;
}

export interface SubnetView {
  master: number;
  phase: string;
  version: number;
  band: BandView;
  sm_status: string;
  metrics: MetricsView;
}

export interface Snapshot {
  t: number;
  converged: boolean;
  sm_host: number;
  topology: { nodes: NodeView[]; links: LinkView[] };
  plan: {
    version: number;
    computed_at: number;
    assignments: Record<string, BandView>;
  };
  subnets: Record<string, SubnetView>;
  log_tail: string[];
}

/** One server-sent event.  Ordinary frames mirror log records; the gateway
 * adds two synthetic ones: SNAPSHOT (state changed, refetch it) and GAP
 * (the stream overflowed and frames were dropped). */
export interface EventFrame {
  t: number;
  module: string;
  event: string;
  details: string;
}

export interface CommandResult {
  accepted: boolean;
  reason?: string;
}
