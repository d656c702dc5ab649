/** Shapes of the primary pipeline's JSON reports and CSV rows. */

export interface Provenance {
  code_version: string;
  config_hash: string;
  master_seed: number | null;
  rng_id: string;
  timestamp: string;
  [extra: string]: unknown;
}

export interface Report {
  schema_version: number;
  report_type: string;
  provenance: Provenance;
  config: Record<string, unknown>;
  results: Record<string, unknown>;
  passed: boolean | null;
  criteria: Record<string, unknown>;
}

export interface TransportRow {
  observable_id: string;
  mode: string;
  t: number;
  lhs_mean: number;
  lhs_se: number;
  rhs_mean: number;
  rhs_se: number;
  z_score: number;
  log_scale: number;
  ess: number;
}

export interface Histogram {
  edges: number[];
  counts: number[];
  quantity: string;
}

export interface CsvTable {
  provenanceHash: string | null;
  header: string[];
  rows: number[][];
  raw: string[][];
}

export type PlotKind =
  | "growth-curves"
  | "tail-fit"
  | "convergence-loglog"
  | "transport-zscores"
  | "density-histogram";

export interface PlotSpec {
  kind: PlotKind;
  /** report JSON first, then any CSV sidecars */
  inputs: string[];
  output: string;
  caption?: string;
}
