// Typed client for the priorsketch HTTP service. One method per endpoint;
// every non-2xx response raises ApiError carrying the server's machine code.

export type Role = 'predictor' | 'response';
export type Mode = 'complete' | 'incomplete';
export type Interval = [number, number];

export interface VariableDoc {
  name: string;
  role: Role;
  range: Interval;
  bins: number;
}

export interface EntityDoc {
  id: string;
  values: Record<string, number>;
}

export interface PriorDoc {
  parameter: string;
  family: 'normal' | 'lognormal';
  params: Record<string, number>;
  estimates: number[];
}

export interface PriorsDocument {
  schema_version: number;
  model_formula: string;
  derived_from: string;
  config: {
    resample_count: number;
    resample_size: number;
    seed: number;
    max_retries_per_resample: number;
  };
  priors: PriorDoc[];
}

export interface CheckDocument {
  schema_version: number;
  model_formula: string;
  derived_from: string;
  config: {
    predictor_sample_count: number;
    parameter_draw_count: number;
    seed: number;
    include_noise: boolean;
  };
  grid: { lo: number; hi: number; n: number };
  draws: { parameters: Record<string, number>; density: number[] }[];
  average_density: number[];
  response_histogram: { bins: Interval[]; normalized_counts: number[] };
}

interface StampedDoc<T> {
  document: T;
  dataset_version: number;
  stale: boolean;
}

export interface SessionView {
  version: number;
  model_formula: string;
  variables: VariableDoc[];
  entities: EntityDoc[];
  rng_seed: number;
  dataset_version: number;
  priors: StampedDoc<PriorsDocument> | null;
  check: StampedDoc<CheckDocument> | null;
}

export interface ConnectPreview {
  plan_token: string;
  dataset_version: number;
  merge_count: number;
  merges: string[][];
}

export interface BootstrapOptions {
  resample_count?: number;
  resample_size?: number;
  seed?: number;
  max_retries_per_resample?: number;
}

export interface PredictiveOptions {
  predictor_sample_count?: number;
  parameter_draw_count?: number;
  seed?: number;
  grid?: [number, number, number];
  include_noise?: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details?: Record<string, unknown>,
  ) {
    super(message);
  }
}

export interface LoggedCall {
  method: string;
  path: string;
  body?: unknown;
  raw?: string;
}

export class ApiClient {
  // every mutation issued, in order, with its body; tests replay this log
  // through a bare client and assert one call per gesture
  readonly log: LoggedCall[] = [];

  constructor(readonly base: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    if (method !== 'GET') this.log.push({ method, path, body });
    const resp = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (resp.status === 204) return undefined as T;
    const text = await resp.text();
    if (!resp.ok) {
      let code = 'http_error';
      let message = text || resp.statusText;
      let details: Record<string, unknown> | undefined;
      try {
        const parsed = JSON.parse(text);
        code = parsed.code ?? code;
        message = parsed.message ?? message;
        details = parsed.details;
      } catch {
        // non-JSON error body; keep the raw text
      }
      throw new ApiError(resp.status, code, message, details);
    }
    return JSON.parse(text) as T;
  }

  createSession(formula: string, opts: {
    variables?: { name: string; range?: Interval; bins?: number }[];
    rng_seed?: number;
  } = {}): Promise<{ session_id: string; dataset_version: number }> {
    return this.request('POST', '/sessions', { formula, ...opts });
  }

  getSession(id: string): Promise<SessionView> {
    return this.request('GET', `/sessions/${id}`);
  }

  addValue(id: string, body: { var: string; value?: number; bin_index?: number }):
      Promise<{ entity_id: string; value: number; dataset_version: number }> {
    return this.request('POST', `/sessions/${id}/values`, body);
  }

  removeValue(id: string, entityId: string, variable: string): Promise<void> {
    return this.request('DELETE', `/sessions/${id}/entities/${entityId}/values/${variable}`);
  }

  setBinning(id: string, variable: string, body: { bins: number; range: Interval; force?: boolean }):
      Promise<{ variable: VariableDoc; dropped_values: string[]; dataset_version: number }> {
    return this.request('PUT', `/sessions/${id}/variables/${variable}`, body);
  }

  generate(id: string, body: { constraints: Record<string, Interval>; count: number; mode: Mode }):
      Promise<{ entity_ids: string[]; dataset_version: number }> {
    return this.request('POST', `/sessions/${id}/generate`, body);
  }

  previewConnect(id: string, groups: { variables: string[]; entity_ids: string[] }[]):
      Promise<ConnectPreview> {
    return this.request('POST', `/sessions/${id}/connect/preview`, { groups });
  }

  connect(id: string, planToken: string):
      Promise<{ merged_ids: string[]; dataset_version: number }> {
    return this.request('POST', `/sessions/${id}/connect`, { plan_token: planToken });
  }

  query(id: string, brushes: Record<string, Interval>, mode: Mode):
      Promise<{ entity_ids: string[]; dataset_version: number }> {
    return this.request('POST', `/sessions/${id}/query`, { brushes, mode });
  }

  translate(id: string, config?: BootstrapOptions): Promise<PriorsDocument> {
    return this.request('POST', `/sessions/${id}/translate`,
      config ? { bootstrap_config: config } : {});
  }

  check(id: string, config?: PredictiveOptions): Promise<CheckDocument> {
    return this.request('POST', `/sessions/${id}/check`,
      config ? { predictive_config: config } : {});
  }

  async getSnapshot(id: string): Promise<string> {
    const resp = await fetch(`${this.base}/sessions/${id}/snapshot`);
    if (!resp.ok) throw new ApiError(resp.status, 'http_error', await resp.text());
    return resp.text();
  }

  async putSnapshot(id: string, text: string): Promise<{ dataset_version: number }> {
    // raw body: the canonical snapshot text must reach the server unchanged
    this.log.push({ method: 'PUT', path: `/sessions/${id}/snapshot`, raw: text });
    const resp = await fetch(`${this.base}/sessions/${id}/snapshot`, {
      method: 'PUT',
      headers: { 'content-type': 'application/json' },
      body: text,
    });
    const body = await resp.text();
    if (!resp.ok) {
      try {
        const parsed = JSON.parse(body);
        throw new ApiError(resp.status, parsed.code ?? 'http_error',
          parsed.message ?? body, parsed.details);
      } catch (err) {
        if (err instanceof ApiError) throw err;
        throw new ApiError(resp.status, 'http_error', body);
      }
    }
    return JSON.parse(body);
  }
}
