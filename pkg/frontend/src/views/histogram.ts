// One histogram per variable. Clicking a bin adds a value at its center;
// a small editor rebins or re-ranges the variable. Entities of the
// non-active mode render faded behind the active ones; cross-filter
// highlights render as an accent overlay.

import { clear, el, svg } from '../dom.js';
import { binCounts, isComplete, scaleLinear } from '../math.js';
import type { SessionStore } from '../state.js';

const WIDTH = 230;
const HEIGHT = 140;
const PLOT_H = 110;

export class Histogram {
  readonly root: HTMLDivElement;
  private plot: SVGSVGElement;
  private editor: HTMLFormElement;

  constructor(private store: SessionStore, readonly variable: string) {
    this.plot = svg('svg', {
      width: WIDTH, height: HEIGHT, class: 'histogram',
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    });
    this.editor = this.buildEditor();
    const title = el('div', { class: 'view-title' }, variable);
    const details = el('details', {}, el('summary', { text: 'bins' }), this.editor);
    this.root = el('div', { class: 'histogram-block' }, title, this.plot, details);
    this.render();
  }

  private buildEditor(): HTMLFormElement {
    const bins = el('input', { name: 'bins', type: 'number', min: 2, value: 10, size: 4 });
    const lo = el('input', { name: 'lo', type: 'number', value: 0, size: 6 });
    const hi = el('input', { name: 'hi', type: 'number', value: 100, size: 6 });
    const force = el('input', { name: 'force', type: 'checkbox' });
    const form = el('form', { class: 'bin-editor' },
      el('label', {}, 'bins ', bins),
      el('label', {}, 'lo ', lo),
      el('label', {}, 'hi ', hi),
      el('label', { title: 'drop values outside the new range' }, 'force ', force),
      el('button', { type: 'submit', text: 'apply' }),
    );
    form.addEventListener('submit', event => {
      event.preventDefault();
      void this.store.rebin(this.variable,
        Number(bins.value), [Number(lo.value), Number(hi.value)], force.checked)
        .catch(() => undefined); // surfaced via the store notice
    });
    return form;
  }

  render() {
    const store = this.store;
    if (!store.view) return;
    const spec = store.variable(this.variable);

    const form = this.editor.elements as unknown as Record<string, HTMLInputElement>;
    if (document.activeElement?.closest('form') !== this.editor) {
      form.bins!.value = String(spec.bins);
      form.lo!.value = String(spec.range[0]);
      form.hi!.value = String(spec.range[1]);
    }

    const entities = store.entities();
    const active = entities.filter(e =>
      e.pending || isComplete(e, store.view!.variables) === (store.mode === 'complete'));
    const other = entities.filter(e => !active.includes(e));
    const highlighted = new Set(store.highlights());

    const activeCounts = binCounts(active, spec);
    const otherCounts = binCounts(other, spec);
    const hlCounts = binCounts(store.view.entities, spec, highlighted);
    const maxCount = Math.max(1, ...activeCounts.map((c, i) => c + (otherCounts[i] ?? 0)));
    const y = scaleLinear([0, maxCount], [PLOT_H, 8]);
    const barW = WIDTH / spec.bins;

    clear(this.plot);
    for (let i = 0; i < spec.bins; i++) {
      const ac = activeCounts[i] ?? 0;
      const oc = otherCounts[i] ?? 0;
      const hc = hlCounts[i] ?? 0;
      const x = i * barW;
      // faded other-mode counts stack behind the active ones
      if (oc > 0) {
        this.plot.append(svg('rect', {
          x: x + 1, y: y(ac + oc), width: barW - 2, height: y(0) - y(oc),
          class: 'bar-other',
        }));
      }
      if (ac > 0) {
        this.plot.append(svg('rect', {
          x: x + 1, y: y(ac), width: barW - 2, height: y(0) - y(ac),
          class: 'bar-active',
        }));
      }
      if (hc > 0) {
        this.plot.append(svg('rect', {
          x: x + 1, y: y(hc), width: barW - 2, height: y(0) - y(hc),
          class: 'bar-highlight',
        }));
      }
      const hit = svg('rect', {
        x, y: 0, width: barW, height: PLOT_H, class: 'bar-hit',
        'data-bin': i,
      });
      hit.addEventListener('click', () => {
        void this.store.clickBin(this.variable, i).catch(() => undefined);
      });
      this.plot.append(hit);
    }
    this.plot.append(svg('line', {
      x1: 0, y1: PLOT_H, x2: WIDTH, y2: PLOT_H, class: 'axis-line',
    }));
    this.plot.append(svg('text', {
      x: 2, y: HEIGHT - 6, class: 'axis-label', text: String(spec.range[0]),
    }));
    const hiLabel = svg('text', {
      x: WIDTH - 2, y: HEIGHT - 6, class: 'axis-label', 'text-anchor': 'end',
      text: String(spec.range[1]),
    });
    this.plot.append(hiLabel);
  }
}
