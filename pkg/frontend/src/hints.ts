import { ApiError } from './api.js';

// machine code -> what the analyst can actually do about it
const HINTS: Record<string, string> = {
  insufficient_complete_rows: 'connect or generate more complete rows, then translate again',
  rank_deficient: 'the complete rows are collinear; add rows that vary each predictor',
  degenerate_resamples: 'too many resamples were unusable; add more varied complete rows',
  too_few_estimates: 'not enough resamples produced a fit; add more complete rows',
  priors_stale: 'the dataset changed since TRANSLATE; translate again before checking',
  priors_missing: 'run TRANSLATE before CHECK',
  stale_plan: 'the dataset changed since this preview; preview the connection again',
  unknown_plan: 'this preview is no longer available; preview again',
  binning_conflict: 'some entities fall outside the new range; force to drop them',
  value_out_of_range: 'the value is outside the variable range; widen the range first',
  empty_marginal: 'every variable needs at least one value before a check can sample it',
  invalid_formula: 'model formulas look like "y ~ x1 + x2" or "y ~ 0 + x1"',
  priors_model_mismatch: 'these priors belong to a different model',
  unknown_session: 'the session does not exist on this server',
  invalid_interval: 'the brush must stay inside the variable range',
  stale_preview: 'the dataset changed since this preview; preview the connection again',
};

export function describeError(err: unknown): { code: string; text: string } {
  if (err instanceof ApiError) {
    const hint = HINTS[err.code];
    return { code: err.code, text: hint ? `${err.message} (${hint})` : err.message };
  }
  return { code: 'error', text: err instanceof Error ? err.message : String(err) };
}
