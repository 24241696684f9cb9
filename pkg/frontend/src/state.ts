// Client-side session state. The server snapshot is the single source of
// truth; everything here is either a mirror of it or ephemeral view state
// (brushes, axis order, a pending connect preview). Mutations are queued
// so at most one is in flight; reads may overlap.

import {
  ApiClient, ApiError, BootstrapOptions, CheckDocument, ConnectPreview,
  EntityDoc, Interval, Mode, PredictiveOptions, PriorsDocument, SessionView,
} from './api.js';
import { clampInterval, highlightIds } from './math.js';
import { describeError } from './hints.js';

export interface Notice {
  code: string;
  text: string;
}

export interface RenderedEntity extends EntityDoc {
  pending?: boolean;
}

export class SessionStore {
  view: SessionView | null = null;
  sessionId = '';

  brushes: Record<string, Interval> = {};
  mode: Mode = 'complete';
  axisOrder: string[] = [];
  preview: ConnectPreview | null = null;
  notice: Notice | null = null;
  busy = false;

  private pendingAdds = new Map<string, Record<string, number>>();
  private pendingSeq = 0;
  private chain: Promise<unknown> = Promise.resolve();
  private listeners = new Set<() => void>();

  constructor(readonly api: ApiClient) {}

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit() {
    for (const listener of this.listeners) listener();
  }

  private fail(err: unknown): never {
    this.notice = describeError(err);
    this.emit();
    throw err;
  }

  // one mutation in flight; later gestures wait for earlier ones
  private queue<T>(job: () => Promise<T>): Promise<T> {
    const next = this.chain.then(async () => {
      this.busy = true;
      this.emit();
      try {
        return await job();
      } finally {
        this.busy = false;
        this.emit();
      }
    });
    this.chain = next.catch(() => undefined);
    return next;
  }

  async create(formula: string, opts: { rng_seed?: number } = {}): Promise<void> {
    const created = await this.api.createSession(formula, opts).catch(err => this.fail(err));
    this.sessionId = created.session_id;
    await this.refresh();
  }

  async load(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const view = await this.api.getSession(this.sessionId).catch(err => this.fail(err));
    this.view = view;
    const names = view.variables.map(v => v.name);
    const kept = this.axisOrder.filter(name => names.includes(name));
    this.axisOrder = [...kept, ...names.filter(name => !kept.includes(name))];
    for (const name of Object.keys(this.brushes)) {
      if (!names.includes(name)) delete this.brushes[name];
    }
    // a preview from an older dataset version can only 409; drop it
    if (this.preview && this.preview.dataset_version !== view.dataset_version) {
      this.preview = null;
    }
    this.emit();
  }

  // -- derived state --------------------------------------------------------

  entities(): RenderedEntity[] {
    const out: RenderedEntity[] = this.view ? [...this.view.entities] : [];
    for (const [id, values] of this.pendingAdds) out.push({ id, values, pending: true });
    return out;
  }

  variable(name: string) {
    const spec = this.view?.variables.find(v => v.name === name);
    if (!spec) throw new Error(`unknown variable ${name}`);
    return spec;
  }

  // local cross-filter; mirrors the server's query semantics
  highlights(): string[] {
    if (!this.view) return [];
    return highlightIds(this.view.entities, this.view.variables, this.brushes, this.mode);
  }

  priorsDoc(): PriorsDocument | null {
    return this.view?.priors?.document ?? null;
  }

  checkDoc(): CheckDocument | null {
    return this.view?.check?.document ?? null;
  }

  priorsStale(): boolean {
    return this.view?.priors?.stale ?? false;
  }

  checkStale(): boolean {
    return this.view?.check?.stale ?? false;
  }

  canCheck(): boolean {
    return !!this.view?.priors && !this.priorsStale();
  }

  // -- local view gestures --------------------------------------------------

  setBrush(name: string, interval: Interval | null) {
    if (interval === null) {
      delete this.brushes[name];
    } else {
      // brushes stay inside the variable range
      this.brushes[name] = clampInterval(interval, this.variable(name).range);
    }
    this.emit();
  }

  clearBrushes() {
    this.brushes = {};
    this.emit();
  }

  setMode(mode: Mode) {
    this.mode = mode;
    this.emit();
  }

  moveAxis(from: number, to: number) {
    if (from === to || from < 0 || from >= this.axisOrder.length) return;
    const order = [...this.axisOrder];
    const [name] = order.splice(from, 1);
    order.splice(Math.max(0, Math.min(to, order.length)), 0, name!);
    this.axisOrder = order;
    this.emit();
  }

  dismissNotice() {
    this.notice = null;
    this.emit();
  }

  // -- mutations (one API call per gesture) ---------------------------------

  clickBin(name: string, binIndex: number): Promise<void> {
    return this.addOptimistic(name, null, binIndex);
  }

  addValue(name: string, value: number): Promise<void> {
    return this.addOptimistic(name, value, null);
  }

  // single value adds render immediately and roll back on rejection
  private addOptimistic(name: string, value: number | null, binIndex: number | null): Promise<void> {
    const spec = this.variable(name);
    const shown = value ?? spec.range[0] +
      ((binIndex ?? 0) + 0.5) * (spec.range[1] - spec.range[0]) / spec.bins;
    const tempId = `pending-${++this.pendingSeq}`;
    this.pendingAdds.set(tempId, { [name]: shown });
    this.emit();
    return this.queue(async () => {
      try {
        await this.api.addValue(this.sessionId,
          value !== null ? { var: name, value } : { var: name, bin_index: binIndex! });
      } catch (err) {
        this.pendingAdds.delete(tempId);
        this.fail(err);
      }
      this.pendingAdds.delete(tempId);
      await this.refresh();
    });
  }

  removeValue(entityId: string, name: string): Promise<void> {
    return this.queue(async () => {
      await this.api.removeValue(this.sessionId, entityId, name).catch(err => this.fail(err));
      await this.refresh();
    });
  }

  rebin(name: string, bins: number, range: Interval, force = false): Promise<void> {
    return this.queue(async () => {
      await this.api.setBinning(this.sessionId, name, { bins, range, force })
        .catch(err => this.fail(err));
      await this.refresh();
    });
  }

  generate(constraints: Record<string, Interval>, count: number): Promise<string[]> {
    const all = this.view?.variables.every(v => constraints[v.name] !== undefined) ?? false;
    return this.queue(async () => {
      const result = await this.api.generate(this.sessionId, {
        constraints, count, mode: all ? 'complete' : 'incomplete',
      }).catch(err => this.fail(err));
      await this.refresh();
      return result.entity_ids;
    });
  }

  previewConnect(groups: { variables: string[]; entity_ids: string[] }[]): Promise<ConnectPreview> {
    return this.queue(async () => {
      const preview = await this.api.previewConnect(this.sessionId, groups)
        .catch(err => this.fail(err));
      this.preview = preview;
      this.emit();
      return preview;
    });
  }

  // commit is never optimistic: the merge set shown is the server's plan
  commitConnect(): Promise<string[]> {
    return this.queue(async () => {
      if (!this.preview) throw new Error('no pending preview');
      const token = this.preview.plan_token;
      let merged: string[];
      try {
        merged = (await this.api.connect(this.sessionId, token)).merged_ids;
      } catch (err) {
        if (err instanceof ApiError && (err.code === 'stale_plan' || err.code === 'unknown_plan')) {
          this.preview = null;
        }
        this.fail(err);
      }
      this.preview = null;
      await this.refresh();
      return merged;
    });
  }

  discardPreview() {
    this.preview = null;
    this.emit();
  }

  runTranslate(config?: BootstrapOptions): Promise<void> {
    return this.queue(async () => {
      await this.api.translate(this.sessionId, config).catch(err => this.fail(err));
      await this.refresh();
    });
  }

  runCheck(config?: PredictiveOptions): Promise<void> {
    // stale priors are blocked client-side too; the server would 409
    if (!this.view?.priors) {
      return Promise.reject(this.softFail('priors_missing', 'run TRANSLATE before CHECK'));
    }
    if (this.priorsStale()) {
      return Promise.reject(this.softFail('priors_stale',
        'the dataset changed since TRANSLATE; translate again before checking'));
    }
    return this.queue(async () => {
      await this.api.check(this.sessionId, config).catch(err => this.fail(err));
      await this.refresh();
    });
  }

  private softFail(code: string, text: string): Error {
    this.notice = { code, text };
    this.emit();
    return new Error(text);
  }

  // -- reads ----------------------------------------------------------------

  // direct server-side cross-filter, used to cross-check local highlights
  async queryHighlights(): Promise<string[]> {
    const result = await this.api.query(this.sessionId, this.brushes, this.mode);
    return result.entity_ids;
  }

  snapshotText(): Promise<string> {
    return this.api.getSnapshot(this.sessionId);
  }
}
