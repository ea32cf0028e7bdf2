/** Shared types for the prompting UI and its service client. */

/** Patch-grid cell, row-major. */
export interface Cell {
  row: number;
  col: number;
}

/** One counterfactual motion: a source patch dragged to a destination. */
export interface Move {
  src: Cell;
  dst: Cell;
}

export type OverlayMode = "prediction" | "flow" | "segment" | "depth";

/** Prompt payload as the service expects it. */
export interface CounterfactualRequest {
  frame_id: string;
  moves: { src: [number, number]; dst: [number, number] }[];
  stops: [number, number][];
  head_motion: [number, number] | null;
}

export interface DepthRequest {
  frame_id: string;
  rho: [number, number];
}

export interface FlowStats {
  max_px: number;
  mean_px: number;
  n_valid: number;
  n_queries: number;
}

export interface CounterfactualResponse {
  prediction_png: string;
  flow_png: string | null;
  segment_png: string | null;
  segment_rle: [number, number][];
  flow_stats: FlowStats | null;
  thresholds: Record<string, number>;
}

export interface DepthResponse {
  depth_png: string;
  valid_fraction: number;
  thresholds: Record<string, number>;
}

export interface FrameResponse {
  frame_id: string;
  grid: { rows: number; cols: number };
  thresholds: Record<string, number>;
}

export interface HealthResponse {
  version: string;
  checkpoint: string;
}

/** One submitted prompt with the raw service response and its hash. */
export interface HistoryEntry {
  kind: "counterfactual" | "depth";
  request: CounterfactualRequest | DepthRequest;
  responseHash: string;
  response: CounterfactualResponse | DepthResponse;
}

export interface SessionExport {
  checkpoint: string;
  frame_id: string | null;
  history: { kind: string; request: unknown; responseHash: string }[];
}
