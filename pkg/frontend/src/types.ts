// Payload shapes published by the game service (see GET /schema).

export interface FieldScore {
  total: number;
  normalized: number;
}

export interface Scores {
  fields: Record<string, FieldScore>;
  transport_efficacy: number;
  change_score: number;
  flags: string[];
}

export interface PublicBadges {
  gainer: number;
  player: number | null;
  contributor: number | null;
}

export interface ActorRef {
  name: string;
  role: string;
}

export interface Snapshot {
  name: string;
  phase: "COLLECTING" | "PROCESSING" | "REPORTING";
  round: number;
  actor_count: number;
  pending_count: number;
  actors: ActorRef[];
  sites: string[];
  colours: string[];
  criteria: string[];
  score_history: Scores[];
  gain_history: number[][];
  badge_history: PublicBadges[];
  voxel_ref: string | null;
}

export interface VoxelRecord {
  morton: number;
  site: number;
  colour: number;
}

export interface RecordView {
  t: number;
  allocation: number[][];
  volumes: number[][];
  ipf: { iterations: number; error: number; converged: boolean };
  mean_weights: number[];
  scores: Scores;
  gains: number[];
  badges: PublicBadges & { loser?: number };
  comments: string[];
  voxels: VoxelRecord[];
  duration: number;
}

export interface RoundCompleteEvent {
  t: number;
  scores: Scores;
  badges: PublicBadges;
}

export interface MeView {
  actor: number;
  name: string;
  role: string;
  agenda: number[][];
  control: number[][];
  power_surplus: number[][];
  gains: number[];
  has_submitted: boolean;
}

export interface AnovaRow {
  source: string;
  ss: number | null;
  df: number;
  ms: number | null;
  f: number | null;
  p: number | null;
  eta_sq: number | null;
}

export interface Interaction {
  factor_a: string;
  factor_b: string;
  levels_a: number[];
  levels_b: number[];
  means: number[][];
}

export interface CorrelationEntry {
  name: string;
  status: "OK" | "INSUFFICIENT" | "ZERO_VARIANCE";
  r: number | null;
}

export interface AnalyticsReport {
  levene: { w?: number; df?: [number, number]; p?: number; error?: string };
  anova: AnovaRow[];
  round_stats: { round: number; mean: number; std: number }[];
  correlations: CorrelationEntry[];
  pairwise: Record<string, unknown[]>;
  interactions: Interaction[];
}

export interface DecisionPayload {
  interests: number[][];
  weights: number[];
  comment: string;
}
