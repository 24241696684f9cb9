// TRANSLATE panel: suggested prior curves per parameter (display only).
// CHECK panel: faded predictive curves plus their solid average over the
// analyst's response histogram. Both carry stale badges driven by the
// dataset version stamps; CHECK is disabled until priors are fresh.

import { clear, el, svg } from '../dom.js';
import type { PriorDoc } from '../api.js';
import { linspace, lognormalPdf, normalPdf, polylinePoints, scaleLinear } from '../math.js';
import type { SessionStore } from '../state.js';

const CURVE_W = 210;
const CURVE_H = 70;

function curveFor(prior: PriorDoc): { xs: number[]; ys: number[] } {
  if (prior.family === 'normal') {
    const mean = prior.params.mean ?? 0;
    const scale = Math.max(prior.params.scale ?? 1, 1e-12);
    const xs = linspace(mean - 4 * scale, mean + 4 * scale, 80);
    return { xs, ys: xs.map(x => normalPdf(x, mean, scale)) };
  }
  const logMean = prior.params.log_mean ?? 0;
  const logScale = Math.max(prior.params.log_scale ?? 1, 1e-12);
  const lo = Math.exp(logMean - 3 * logScale);
  const hi = Math.exp(logMean + 3 * logScale);
  const xs = linspace(lo, hi, 80);
  return { xs, ys: xs.map(x => lognormalPdf(x, logMean, logScale)) };
}

function describe(prior: PriorDoc): string {
  const fmt = (v: number) => Number.isFinite(v) ? v.toPrecision(4) : String(v);
  if (prior.family === 'normal') {
    return `Normal(${fmt(prior.params.mean ?? NaN)}, ${fmt(prior.params.scale ?? NaN)})`;
  }
  return `LogNormal(${fmt(prior.params.log_mean ?? NaN)}, ${fmt(prior.params.log_scale ?? NaN)})`;
}

export class TranslatePanel {
  readonly root: HTMLDivElement;
  readonly translateBtn: HTMLButtonElement;
  readonly staleBadge: HTMLSpanElement;
  private curves: HTMLDivElement;

  constructor(private store: SessionStore) {
    this.translateBtn = el('button', { class: 'primary', text: 'TRANSLATE' });
    this.translateBtn.addEventListener('click', () => {
      void this.store.runTranslate().catch(() => undefined);
    });
    this.staleBadge = el('span', { class: 'stale-badge', text: 'stale' });
    this.curves = el('div', { class: 'prior-curves' });
    this.root = el('div', { class: 'panel' },
      el('div', { class: 'view-title' }, 'suggested priors',
        el('span', { class: 'spacer' }), this.staleBadge, this.translateBtn),
      this.curves);
    this.render();
  }

  render() {
    const doc = this.store.priorsDoc();
    this.staleBadge.style.display = this.store.priorsStale() ? '' : 'none';
    this.translateBtn.disabled = this.store.busy;
    clear(this.curves);
    if (!doc) {
      this.curves.append(el('p', { class: 'placeholder' },
        'no priors yet; TRANSLATE derives them from the complete rows'));
      return;
    }
    for (const prior of doc.priors) {
      const { xs, ys } = curveFor(prior);
      const x = scaleLinear([xs[0]!, xs[xs.length - 1]!], [0, CURVE_W]);
      const y = scaleLinear([0, Math.max(...ys, 1e-300)], [CURVE_H - 4, 4]);
      const plot = svg('svg', {
        width: CURVE_W, height: CURVE_H, class: 'prior-curve',
        viewBox: `0 0 ${CURVE_W} ${CURVE_H}`,
      }, svg('polyline', {
        points: polylinePoints(xs.map(x), ys.map(y)), class: 'curve-line', fill: 'none',
      }));
      this.curves.append(el('div', { class: 'prior-row' },
        el('div', { class: 'prior-name' },
          el('strong', { text: prior.parameter }), ' ', describe(prior)),
        plot));
    }
  }
}

export class CheckPanel {
  readonly root: HTMLDivElement;
  readonly checkBtn: HTMLButtonElement;
  readonly staleBadge: HTMLSpanElement;
  private plotBox: HTMLDivElement;

  constructor(private store: SessionStore) {
    this.checkBtn = el('button', { class: 'primary', text: 'CHECK' });
    this.checkBtn.addEventListener('click', () => {
      void this.store.runCheck().catch(() => undefined);
    });
    this.staleBadge = el('span', { class: 'stale-badge', text: 'stale' });
    this.plotBox = el('div', { class: 'check-plot' });
    this.root = el('div', { class: 'panel' },
      el('div', { class: 'view-title' }, 'prior predictive check',
        el('span', { class: 'spacer' }), this.staleBadge, this.checkBtn),
      this.plotBox);
    this.render();
  }

  render() {
    const store = this.store;
    // blocked until priors exist and are fresh
    this.checkBtn.disabled = !store.canCheck() || store.busy;
    this.checkBtn.title = store.canCheck() ? ''
      : store.priorsDoc() ? 'priors are stale; TRANSLATE again first' : 'TRANSLATE first';
    this.staleBadge.style.display = store.checkStale() ? '' : 'none';
    clear(this.plotBox);
    const doc = store.checkDoc();
    if (!doc) {
      this.plotBox.append(el('p', { class: 'placeholder' },
        'no check yet; CHECK simulates response distributions from the priors'));
      return;
    }
    const width = 420;
    const height = 180;
    const grid = linspace(doc.grid.lo, doc.grid.hi, doc.grid.n);
    const histBins = doc.response_histogram.bins;
    const histCounts = doc.response_histogram.normalized_counts;
    const peak = Math.max(
      ...doc.draws.flatMap(d => d.density),
      ...doc.average_density,
      ...histCounts,
      1e-300);
    const x = scaleLinear([doc.grid.lo, doc.grid.hi], [6, width - 6]);
    const y = scaleLinear([0, peak], [height - 16, 6]);

    const plot = svg('svg', {
      width, height, class: 'check-svg', viewBox: `0 0 ${width} ${height}`,
    });
    for (let i = 0; i < histBins.length; i++) {
      const [lo, hi] = histBins[i]!;
      const count = histCounts[i] ?? 0;
      if (count <= 0) continue;
      plot.append(svg('rect', {
        x: x(lo), y: y(count), width: Math.max(1, x(hi) - x(lo) - 1),
        height: y(0) - y(count), class: 'response-bar',
      }));
    }
    for (const draw of doc.draws) {
      plot.append(svg('polyline', {
        points: polylinePoints(grid.map(x), draw.density.map(y)),
        class: 'check-draw', fill: 'none',
      }));
    }
    plot.append(svg('polyline', {
      points: polylinePoints(grid.map(x), doc.average_density.map(y)),
      class: 'check-average', fill: 'none',
    }));
    plot.append(svg('line', {
      x1: 6, y1: height - 16, x2: width - 6, y2: height - 16, class: 'axis-line',
    }));
    this.plotBox.append(plot);
  }
}
