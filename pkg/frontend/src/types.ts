/** Payload shapes of the session service. Field names mirror the JSON exactly. */

export interface CriterionInfo {
  kind: string;
  alpha: number;
  max_steps: number | null;
}

export interface FitPayload {
  term_labels: string[];
  coefficients: (number | null)[];
  std_errors: (number | null)[];
  p_values: (number | null)[];
  minus2loglik: number | null;
  objective: number | null;
  penalty_per_parameter: number;
  n: number;
  m: number;
  family: string;
  converged: boolean;
}

export interface HistoryRecord {
  step: number;
  term: string | null;
  minus2loglik: number;
  objective: number;
  choice_rank: number;
  forced_choice: boolean;
}

export interface SessionSummary {
  id: string;
  version: number;
  created_at: string;
  updated_at: string;
  method: number;
  criterion: CriterionInfo;
  family: string;
  n: number;
  j: number;
  parts: string[];
  step: number;
  stopped: boolean;
  selected: string[];
  forced_terms: string[];
  alr_denominator: string | null;
  penalty_per_parameter: number;
  fit: FitPayload;
  history: HistoryRecord[];
}

export interface CandidateEntry {
  term: string;
  minus2loglik: number;
  delta_deviance: number;
  objective: number;
  would_stop: boolean;
}

export interface CandidatesPayload {
  entries: CandidateEntry[];
  exhausted: boolean;
  diagnostics: string[];
  version: number;
}

export interface ScreeRow {
  step: number;
  label: string;
  incremental: number;
  cumulative: number;
}

export interface ScreePayload {
  rows: ScreeRow[];
  baseline: number | null;
  floor: number | null;
  max_explainable: number | null;
  units: string;
}

export interface LogContrastEntry {
  part: string;
  coefficient: number;
  std_error: number | null;
  p_value: number | null;
  multiplicative_effect: number;
  percent_effect: number;
  ci_lower?: number | null;
  ci_upper?: number | null;
  effect_ci_lower?: number | null;
  effect_ci_upper?: number | null;
}

export interface BootstrapPayload {
  logcontrast: LogContrastEntry[];
  B: number;
  failures: number;
  levels: number[];
  version: number;
}

export interface CreateSessionBody {
  csv_text?: string;
  data_path?: string;
  response: string;
  covariates?: string[];
  family?: string;
  method?: number;
  criterion?: string;
  alpha?: number;
  max_steps?: number | null;
  forced_terms?: string[];
  forced_covariates?: string[];
  seed?: number;
  zero_mode?: string;
  zero_fraction?: number;
  split?: number | null;
}

export interface StepBody {
  term?: string;
  force?: boolean;
  version?: number;
}
