import { ApiClient } from './api.js';
import { clear, el } from './dom.js';
import { SessionStore } from './state.js';
import { Histogram } from './views/histogram.js';
import { ParallelCoordinates } from './views/parcoords.js';
import { Scatterplot } from './views/scatterplot.js';
import { CheckPanel, TranslatePanel } from './views/panels.js';

function apiBase(): string {
  const override = (globalThis as { PRIORSKETCH_API?: string }).PRIORSKETCH_API;
  if (override) return override;
  const param = new URLSearchParams(location.search).get('api');
  return param ?? 'http://127.0.0.1:8787';
}

class App {
  private store = new SessionStore(new ApiClient(apiBase()));
  private workspace = el('div', { class: 'workspace' });
  private noticeBox = el('div', { class: 'notice-box' });
  private views: { render(): void }[] = [];

  constructor(private root: HTMLElement) {
    root.append(this.buildHeader(), this.noticeBox, this.workspace);
    this.store.subscribe(() => {
      for (const view of this.views) view.render();
      this.renderNotice();
    });
  }

  private buildHeader(): HTMLElement {
    const formula = el('input', {
      type: 'text', size: 30, value: 'income ~ 0 + age + education_years',
      placeholder: 'response ~ predictor + ...',
    });
    const seed = el('input', { type: 'number', size: 8, placeholder: 'seed' });
    const createBtn = el('button', { class: 'primary', text: 'new session' });
    createBtn.addEventListener('click', () => {
      const opts = seed.value === '' ? {} : { rng_seed: Number(seed.value) };
      void this.store.create(formula.value, opts)
        .then(() => this.buildWorkspace())
        .catch(() => undefined);
    });
    const sessionId = el('input', { type: 'text', size: 6, placeholder: 's1' });
    const loadBtn = el('button', { text: 'load' });
    loadBtn.addEventListener('click', () => {
      void this.store.load(sessionId.value)
        .then(() => this.buildWorkspace())
        .catch(() => undefined);
    });
    return el('header', {},
      el('h1', { text: 'priorsketch' }),
      el('span', { class: 'spacer' }),
      formula, seed, createBtn,
      el('span', { class: 'divider' }), sessionId, loadBtn);
  }

  private buildModeToggle(): HTMLElement {
    const block = el('div', { class: 'mode-toggle' }, 'show ');
    for (const mode of ['complete', 'incomplete'] as const) {
      const radio = el('input', { type: 'radio', name: 'mode', value: mode });
      radio.checked = this.store.mode === mode;
      radio.addEventListener('change', () => this.store.setMode(mode));
      block.append(el('label', {}, radio, ` ${mode}`));
    }
    const clearBtn = el('button', { text: 'clear brushes' });
    clearBtn.addEventListener('click', () => this.store.clearBrushes());
    block.append(clearBtn);
    return block;
  }

  private buildWorkspace() {
    const view = this.store.view;
    if (!view) return;
    clear(this.workspace);
    this.views = [];

    const session = el('div', { class: 'session-line' },
      `session ${this.store.sessionId}`,
      el('code', { text: ` ${view.model_formula} ` }),
      this.buildModeToggle());

    const histRow = el('div', { class: 'histogram-row' });
    for (const spec of view.variables) {
      const hist = new Histogram(this.store, spec.name);
      this.views.push(hist);
      histRow.append(hist.root);
    }

    const predictors = view.variables.filter(v => v.role === 'predictor');
    const response = view.variables.find(v => v.role === 'response');
    const scatter = new Scatterplot(this.store,
      predictors[0]?.name ?? view.variables[0]!.name,
      response?.name ?? view.variables[view.variables.length - 1]!.name);
    const parcoords = new ParallelCoordinates(this.store);
    const translate = new TranslatePanel(this.store);
    const check = new CheckPanel(this.store);
    this.views.push(scatter, parcoords, translate, check);

    this.workspace.append(
      session,
      histRow,
      el('div', { class: 'plots-row' }, scatter.root, parcoords.root),
      el('div', { class: 'panels-row' }, translate.root, check.root),
    );
    for (const v of this.views) v.render();
  }

  private renderNotice() {
    clear(this.noticeBox);
    const notice = this.store.notice;
    if (!notice) return;
    const dismiss = el('button', { text: 'x' });
    dismiss.addEventListener('click', () => this.store.dismissNotice());
    this.noticeBox.append(el('div', { class: 'notice' },
      el('code', { text: notice.code }), ` ${notice.text} `, dismiss));
  }
}

const mount = document.getElementById('app');
if (mount) new App(mount);
