// Scatterplot over a chosen variable pair with a rectangular brush.
// The brush writes both variables' intervals into the shared view state;
// GENERATE samples new entities uniformly inside the brushed box.

import { clear, el, svg } from '../dom.js';
import type { Interval } from '../api.js';
import { isComplete, scaleLinear } from '../math.js';
import type { SessionStore } from '../state.js';

const WIDTH = 340;
const HEIGHT = 300;
const PAD = 34;

export class Scatterplot {
  readonly root: HTMLDivElement;
  private plot: SVGSVGElement;
  private xSelect: HTMLSelectElement;
  private ySelect: HTMLSelectElement;
  private countInput: HTMLInputElement;
  private generateBtn: HTMLButtonElement;
  private dragStart: { x: number; y: number } | null = null;
  private dragRect: SVGRectElement | null = null;

  constructor(private store: SessionStore, private xVar: string, private yVar: string) {
    this.plot = svg('svg', {
      width: WIDTH, height: HEIGHT, class: 'scatterplot',
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    });
    this.xSelect = el('select', { 'data-axis': 'x' });
    this.ySelect = el('select', { 'data-axis': 'y' });
    this.xSelect.addEventListener('change', () => { this.xVar = this.xSelect.value; this.render(); });
    this.ySelect.addEventListener('change', () => { this.yVar = this.ySelect.value; this.render(); });
    this.countInput = el('input', { type: 'number', min: 1, value: 5, size: 3 });
    this.generateBtn = el('button', { text: 'generate' });
    this.generateBtn.addEventListener('click', () => this.generate());

    this.root = el('div', { class: 'scatter-block' },
      el('div', { class: 'view-title' },
        this.ySelect, ' vs ', this.xSelect,
        el('span', { class: 'spacer' }),
        this.countInput, this.generateBtn),
      this.plot);
    this.bindBrush();
    this.render();
  }

  private scales() {
    const xSpec = this.store.variable(this.xVar);
    const ySpec = this.store.variable(this.yVar);
    return {
      xSpec, ySpec,
      x: scaleLinear(xSpec.range, [PAD, WIDTH - 8]),
      y: scaleLinear(ySpec.range, [HEIGHT - PAD, 8]),
    };
  }

  private toValue(px: number, py: number): [number, number] {
    const { xSpec, ySpec } = this.scales();
    const fx = (px - PAD) / (WIDTH - 8 - PAD);
    const fy = (HEIGHT - PAD - py) / (HEIGHT - PAD - 8);
    return [
      xSpec.range[0] + fx * (xSpec.range[1] - xSpec.range[0]),
      ySpec.range[0] + fy * (ySpec.range[1] - ySpec.range[0]),
    ];
  }

  private bindBrush() {
    this.plot.addEventListener('pointerdown', event => {
      const box = this.plot.getBoundingClientRect();
      this.dragStart = { x: event.clientX - box.left, y: event.clientY - box.top };
      this.plot.setPointerCapture(event.pointerId);
    });
    this.plot.addEventListener('pointermove', event => {
      if (!this.dragStart) return;
      const box = this.plot.getBoundingClientRect();
      this.drawDragRect(this.dragStart, {
        x: event.clientX - box.left, y: event.clientY - box.top,
      });
    });
    this.plot.addEventListener('pointerup', event => {
      if (!this.dragStart) return;
      const box = this.plot.getBoundingClientRect();
      const end = { x: event.clientX - box.left, y: event.clientY - box.top };
      const start = this.dragStart;
      this.dragStart = null;
      if (Math.abs(end.x - start.x) < 4 && Math.abs(end.y - start.y) < 4) {
        this.store.setBrush(this.xVar, null);
        this.store.setBrush(this.yVar, null);
        return;
      }
      const [vx1, vy1] = this.toValue(start.x, start.y);
      const [vx2, vy2] = this.toValue(end.x, end.y);
      this.store.setBrush(this.xVar, [Math.min(vx1, vx2), Math.max(vx1, vx2)]);
      this.store.setBrush(this.yVar, [Math.min(vy1, vy2), Math.max(vy1, vy2)]);
    });
  }

  private drawDragRect(a: { x: number; y: number }, b: { x: number; y: number }) {
    if (!this.dragRect) {
      this.dragRect = svg('rect', { class: 'brush-rect' });
      this.plot.append(this.dragRect);
    }
    this.dragRect.setAttribute('x', String(Math.min(a.x, b.x)));
    this.dragRect.setAttribute('y', String(Math.min(a.y, b.y)));
    this.dragRect.setAttribute('width', String(Math.abs(b.x - a.x)));
    this.dragRect.setAttribute('height', String(Math.abs(b.y - a.y)));
  }

  private generate() {
    const bx = this.store.brushes[this.xVar];
    const by = this.store.brushes[this.yVar];
    if (!bx || !by) return;
    const constraints: Record<string, Interval> = {
      [this.xVar]: bx, [this.yVar]: by,
    };
    void this.store.generate(constraints, Number(this.countInput.value) || 5)
      .catch(() => undefined);
  }

  render() {
    const store = this.store;
    if (!store.view) return;
    const names = store.view.variables.map(v => v.name);
    for (const select of [this.xSelect, this.ySelect]) {
      if (select.options.length !== names.length ||
          names.some((n, i) => select.options[i]?.value !== n)) {
        clear(select);
        for (const name of names) select.append(el('option', { value: name, text: name }));
      }
    }
    if (!names.includes(this.xVar)) this.xVar = names[0]!;
    if (!names.includes(this.yVar)) this.yVar = names[names.length - 1]!;
    this.xSelect.value = this.xVar;
    this.ySelect.value = this.yVar;

    const { x, y } = this.scales();
    const highlighted = new Set(store.highlights());
    clear(this.plot);
    this.dragRect = null;

    this.plot.append(
      svg('line', { x1: PAD, y1: HEIGHT - PAD, x2: WIDTH - 8, y2: HEIGHT - PAD, class: 'axis-line' }),
      svg('line', { x1: PAD, y1: 8, x2: PAD, y2: HEIGHT - PAD, class: 'axis-line' }),
      svg('text', { x: WIDTH - 8, y: HEIGHT - PAD + 14, class: 'axis-label', 'text-anchor': 'end', text: this.xVar }),
      svg('text', { x: PAD - 4, y: 12, class: 'axis-label', 'text-anchor': 'end', text: this.yVar }),
    );

    const brushX = store.brushes[this.xVar];
    const brushY = store.brushes[this.yVar];
    if (brushX && brushY) {
      this.plot.append(svg('rect', {
        x: x(brushX[0]), y: y(brushY[1]),
        width: x(brushX[1]) - x(brushX[0]), height: y(brushY[0]) - y(brushY[1]),
        class: 'brush-rect',
      }));
    }

    for (const entity of store.entities()) {
      const vx = entity.values[this.xVar];
      const vy = entity.values[this.yVar];
      if (vx === undefined || vy === undefined) continue;
      const active = entity.pending ||
        isComplete(entity, store.view.variables) === (store.mode === 'complete');
      const cls = highlighted.has(entity.id) ? 'dot-highlight'
        : active ? 'dot-active' : 'dot-other';
      this.plot.append(svg('circle', {
        cx: x(vx), cy: y(vy), r: highlighted.has(entity.id) ? 4 : 3,
        class: cls, 'data-entity': entity.id,
      }));
    }
    this.generateBtn.disabled = !(store.brushes[this.xVar] && store.brushes[this.yVar]);
  }
}
