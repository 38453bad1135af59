/** JSON payload shapes served by the engine gateway. The UI renders these
 * verbatim and never recomputes scores or layout geometry. */

export interface SatellitePayload {
  view_index: number;
  angle_degrees: number;
  radius: number;
  color_index: number;
  score: number | null;
  hollow: boolean;
}

export interface SatelliteLayoutPayload {
  center_score: number | null;
  r_min: number;
  r_max: number;
  satellites: SatellitePayload[];
}

export interface DimensionEntry {
  value: number | null;
  raw: number | null;
  provenance: string;
}

export type ScoreVectorPayload = Record<string, DimensionEntry>;

export interface DefectMapPayload {
  grid: number[][][]; // [view][gy][gx]
  flags: boolean[];
  deviation_cutoff: number;
  flag_fraction: number;
}

export interface ScoreSeriesPayload {
  dimensions: string[];
  model_level: Record<string, number>;
  per_view: Record<string, Record<string, number>>;
}

export interface PromptRecordPayload {
  id: string;
  text: string;
  parent_id: string | null;
  source: string;
  drift: boolean;
}

export interface CandidatePayload {
  id: string;
  prompt: PromptRecordPayload;
  branch: string;
  views: string[];
  view_size: [number, number];
  mesh_ref: string | null;
  fuse_cosine: number | null;
  gate: { co_term: number; iou: number; bbox_iou: number; weights: number[]; total: number } | null;
  grayed: boolean;
  unscorable: string | null;
  score_vector: ScoreVectorPayload | null;
  clip_i_per_view: number[] | null;
  per_view_plausibility: (number | null)[] | null;
  defect_map: DefectMapPayload | null;
  satellite: SatelliteLayoutPayload | null;
  score_series: ScoreSeriesPayload | null;
}

export interface IterationPayload {
  index: number;
  status: string;
  root_prompt: PromptRecordPayload;
  options: { n: number; branches: string[] };
  augmented: PromptRecordPayload[];
  candidates: CandidatePayload[];
  cluster: unknown;
  keyword_stats: KeywordStatPayload[];
  treemap: TreemapPayload | null;
  diagnostics: Record<string, unknown>;
}

export interface KeywordStatPayload {
  keyword: string;
  frequency: number;
  cluster_id: number;
  mean_scores: Record<string, number | null>;
  section: string | null;
}

export interface RectPayload {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface WordBoxPayload {
  keyword: string;
  frequency: number;
  font_size: number;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface TreemapSectionPayload {
  dimension: string;
  rect: RectPayload;
  clusters: { cluster_id: number; rect: RectPayload }[];
  words: WordBoxPayload[];
}

export interface TreemapPayload {
  canvas: { w: number; h: number };
  sections: TreemapSectionPayload[];
}

export interface SankeyLinkPayload {
  keyword: string;
  view_index: number;
  weight: number;
  color_index: number;
}

export interface SankeyPayload {
  keywords: string[];
  views: number[];
  links: SankeyLinkPayload[];
  threshold: number;
}

export interface SessionSummaryPayload {
  id: string;
  seed: number;
  current_prompt: string | null;
  prompt_lineage: PromptRecordPayload[];
  iterations: { index: number; status: string; prompt: string; candidate_count: number }[];
}
