/**
 * Payload types mirroring the dashrl HTTP API.
 */

export type ColumnType = 'quantitative' | 'nominal' | 'temporal';

export interface ColumnInfo {
  name: string;
  type: ColumnType;
  missing_ratio: number;
}

export interface DatasetInfo {
  id: string;
  name: string;
  n_rows: number;
  truncated: boolean;
  columns: ColumnInfo[];
}

export interface EncodingDto {
  column: string;
  aggregate?: string;
}

export interface LimitDto {
  direction: 'top' | 'bottom';
  k: number;
}

export interface ChartDto {
  mark: 'bar' | 'line' | 'point' | 'boxplot';
  x: EncodingDto;
  y: EncodingDto;
  color?: EncodingDto | null;
  limit?: LimitDto | null;
}

export interface DashboardStateDto {
  key_column: string;
  charts: ChartDto[];
  step: number;
}

export interface InsightDto {
  kind: string;
  columns: string[];
  chart_indices: number[];
  value: number;
  reward_weight: number;
}

export interface BreakdownDto {
  dr_chart_types: number;
  dr_columns: number;
  pr: number;
  insight_sum: number;
  cr: number;
  r_immediate: number;
}

export interface TextStatDto {
  column: string;
  ctype: ColumnType;
  lines: string[];
}

export interface CellDto {
  kind: 'text' | 'chart';
  col: number;
  row: number;
  width: number;
  height: number;
  chart_index?: number;
  text?: TextStatDto;
}

export interface LayoutDto {
  cells: CellDto[];
}

export interface DashboardPayload {
  id: string;
  dataset_id: string;
  state: DashboardStateDto;
  layout: LayoutDto;
  render_specs: object[];
  breakdown: BreakdownDto;
  insights: InsightDto[];
  episode_return: number | null;
  session_id?: string;
  history_length?: number;
  diff?: DiffDto;
}

export interface TopicEntry {
  id: string;
  return: number;
  n_charts: number;
  marks: string[];
}

export interface TopicsPayload {
  dataset_id: string;
  topics: { key_column: string; dashboards: TopicEntry[] }[];
}

export interface JobInfo {
  id: string;
  dataset_id: string;
  status: 'pending' | 'running' | 'done' | 'error';
  error: string | null;
  quota: number;
}

export interface DiffDto {
  added_charts: ChartDto[];
  removed_charts: ChartDto[];
  gained_insights: InsightDto[];
  lost_insights: InsightDto[];
}

export interface CandidateDto {
  chart: ChartDto;
  gain: number;
  breakdown: BreakdownDto;
  insights_gained: InsightDto[];
  render_spec: object;
}

export interface RecommendPayload {
  note: string;
  candidates: CandidateDto[];
}

/** Chart-editor form values; `__none__` marks the empty column slots. */
export interface ChartForm {
  mark: string;
  y_field: string;
  y_aggregate: string;
  key_aggregate: string;
  color_field: string;
  limit: string;
}

export type FormField = keyof ChartForm;

export const FORM_FIELDS: FormField[] = [
  'mark',
  'y_field',
  'y_aggregate',
  'key_aggregate',
  'color_field',
  'limit',
];

export const NONE_OPTION = '__none__';

export interface OptionsPayload {
  options: Record<FormField, string[]>;
  key_column: string;
  complete: boolean;
  chart?: ChartDto;
}
