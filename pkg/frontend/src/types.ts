// Wire types of the difficulty service; field names match the JSON payloads.

export type ClusterName = "central" | "p_boundary" | "high_n" | "unclassified";

export interface LevelSummary {
  level_id: string;
  move_limit: number;
  total_attempts: number;
  observed_completion: number;
  n: number;
  p: number;
  D: number;
  fitted_completion: number;
  converged: boolean;
  cluster: ClusterName;
}

export interface FitRecord {
  level_id: string;
  n: number;
  p: number;
  D: number;
  fitted_completion: number;
  converged: boolean;
  boundary_hit: string[];
  mean: number;
  variance: number;
  scale: number;
  move_limit: number;
}

export interface LevelDetail extends LevelSummary {
  histogram: Record<string, number>;
  frequencies: Record<string, number>;
  fit: FitRecord;
}

export interface CurvePoint {
  m: number;
  pmf: number;
}

export interface CurvePayload {
  level_id: string;
  move_limit: number;
  points: CurvePoint[];
}

export interface WhatIfResponse {
  level_id: string;
  delta: number;
  baseline: number;
  predicted: number;
  change: number;
  corrected: boolean;
  assumes_fixed_params: boolean;
}

export interface AnalyticsPayload {
  mean_variance: { psi: number; r2: number; p_value: number } | null;
  loglinear: { a: number; b: number; r2: number } | null;
  correction: { alpha: number; beta: number; r2: number } | null;
  clusters: { central: number; p_boundary: number; high_n: number };
}
