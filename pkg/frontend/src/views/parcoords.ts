// Parallel coordinates: one vertical axis per variable in the shared
// axis order. Axis brushes cross-filter every view; labels drag to
// reorder. CONNECT previews merges of partial entities as dashed
// connectors with provisional dots, then commits the server's plan.

import { clear, el, svg } from '../dom.js';
import type { EntityDoc } from '../api.js';
import { isComplete, scaleLinear } from '../math.js';
import type { SessionStore } from '../state.js';

const HEIGHT = 320;
const TOP = 28;
const BOTTOM = 24;
const AXIS_GAP = 110;
const PAD = 50;

export class ParallelCoordinates {
  readonly root: HTMLDivElement;
  private plot: SVGSVGElement;
  private countInput: HTMLInputElement;
  private generateBtn: HTMLButtonElement;
  private previewBtn: HTMLButtonElement;
  private commitBtn: HTMLButtonElement;
  private discardBtn: HTMLButtonElement;
  private previewLabel: HTMLSpanElement;
  private brushDrag: { axis: string; startY: number } | null = null;
  private labelDrag: { from: number } | null = null;

  constructor(private store: SessionStore) {
    this.plot = svg('svg', { class: 'parcoords', height: HEIGHT });
    this.countInput = el('input', { type: 'number', min: 1, value: 5, size: 3 });
    this.generateBtn = el('button', { text: 'generate' });
    this.generateBtn.addEventListener('click', () => this.generate());
    this.previewBtn = el('button', { text: 'preview connect' });
    this.previewBtn.addEventListener('click', () => this.previewConnect());
    this.commitBtn = el('button', { text: 'connect' });
    this.commitBtn.addEventListener('click', () => {
      void this.store.commitConnect().catch(() => undefined);
    });
    this.discardBtn = el('button', { text: 'discard' });
    this.discardBtn.addEventListener('click', () => this.store.discardPreview());
    this.previewLabel = el('span', { class: 'preview-label' });

    this.root = el('div', { class: 'parcoords-block' },
      el('div', { class: 'view-title' },
        'parallel coordinates',
        el('span', { class: 'spacer' }),
        this.countInput, this.generateBtn,
        this.previewBtn, this.commitBtn, this.discardBtn, this.previewLabel),
      this.plot);
    this.bindPointer();
    this.render();
  }

  private axisX(index: number): number {
    return PAD + index * AXIS_GAP;
  }

  private axisAt(px: number): number | null {
    const index = Math.round((px - PAD) / AXIS_GAP);
    if (index < 0 || index >= this.store.axisOrder.length) return null;
    return Math.abs(px - this.axisX(index)) <= 14 ? index : null;
  }

  private yScale(name: string) {
    return scaleLinear(this.store.variable(name).range, [HEIGHT - BOTTOM, TOP]);
  }

  private toValue(name: string, py: number): number {
    const [lo, hi] = this.store.variable(name).range;
    const f = (HEIGHT - BOTTOM - py) / (HEIGHT - BOTTOM - TOP);
    return lo + Math.max(0, Math.min(1, f)) * (hi - lo);
  }

  private bindPointer() {
    this.plot.addEventListener('pointerdown', event => {
      const box = this.plot.getBoundingClientRect();
      const px = event.clientX - box.left;
      const py = event.clientY - box.top;
      const index = this.axisAt(px);
      if (index === null) return;
      const name = this.store.axisOrder[index]!;
      if (py < TOP) {
        this.labelDrag = { from: index };
      } else {
        this.brushDrag = { axis: name, startY: py };
      }
      this.plot.setPointerCapture(event.pointerId);
    });
    this.plot.addEventListener('pointerup', event => {
      const box = this.plot.getBoundingClientRect();
      const px = event.clientX - box.left;
      const py = event.clientY - box.top;
      if (this.labelDrag) {
        const to = Math.max(0, Math.min(this.store.axisOrder.length - 1,
          Math.round((px - PAD) / AXIS_GAP)));
        this.store.moveAxis(this.labelDrag.from, to);
        this.labelDrag = null;
        return;
      }
      if (this.brushDrag) {
        const { axis, startY } = this.brushDrag;
        this.brushDrag = null;
        if (Math.abs(py - startY) < 4) {
          this.store.setBrush(axis, null); // click clears the axis brush
          return;
        }
        const a = this.toValue(axis, Math.max(startY, py));
        const b = this.toValue(axis, Math.min(startY, py));
        this.store.setBrush(axis, [Math.min(a, b), Math.max(a, b)]);
      }
    });
  }

  private generate() {
    const store = this.store;
    if (!store.view) return;
    const constraints = { ...store.brushes };
    void store.generate(constraints, Number(this.countInput.value) || 5)
      .catch(() => undefined);
  }

  // groups incomplete highlighted entities by their defined-variable set
  connectGroups(): { variables: string[]; entity_ids: string[] }[] {
    const store = this.store;
    if (!store.view) return [];
    const highlighted = new Set(store.highlights());
    const groups = new Map<string, { variables: string[]; entity_ids: string[] }>();
    for (const entity of store.view.entities) {
      if (!highlighted.has(entity.id)) continue;
      if (isComplete(entity, store.view.variables)) continue;
      const variables = store.axisOrder.filter(n => entity.values[n] !== undefined);
      const key = variables.join('|');
      let group = groups.get(key);
      if (!group) {
        group = { variables, entity_ids: [] };
        groups.set(key, group);
      }
      group.entity_ids.push(entity.id);
    }
    return [...groups.values()];
  }

  private previewConnect() {
    const groups = this.connectGroups();
    if (groups.length < 2) return;
    void this.store.previewConnect(groups).catch(() => undefined);
  }

  private entityById(id: string): EntityDoc | undefined {
    return this.store.view?.entities.find(e => e.id === id);
  }

  render() {
    const store = this.store;
    if (!store.view) return;
    const order = store.axisOrder;
    const width = PAD * 2 + AXIS_GAP * Math.max(1, order.length - 1);
    this.plot.setAttribute('width', String(width));
    this.plot.setAttribute('viewBox', `0 0 ${width} ${HEIGHT}`);
    clear(this.plot);

    const scales = new Map(order.map(name => [name, this.yScale(name)]));
    const highlighted = new Set(store.highlights());

    for (const [index, name] of order.entries()) {
      const x = this.axisX(index);
      const spec = store.variable(name);
      this.plot.append(
        svg('line', { x1: x, y1: TOP, x2: x, y2: HEIGHT - BOTTOM, class: 'axis-line' }),
        svg('text', { x, y: TOP - 10, class: 'axis-title', 'text-anchor': 'middle', text: name }),
        svg('text', { x, y: TOP - 1, class: 'axis-label', 'text-anchor': 'middle', text: String(spec.range[1]) }),
        svg('text', { x, y: HEIGHT - BOTTOM + 12, class: 'axis-label', 'text-anchor': 'middle', text: String(spec.range[0]) }),
      );
      const brush = store.brushes[name];
      if (brush) {
        const y = scales.get(name)!;
        this.plot.append(svg('rect', {
          x: x - 7, y: y(brush[1]), width: 14, height: y(brush[0]) - y(brush[1]),
          class: 'axis-brush', 'data-axis': name,
        }));
      }
    }

    const lineFor = (values: Record<string, number>, cls: string, dashed = false) => {
      let path = '';
      let previous: { x: number; y: number } | null = null;
      for (const [index, name] of order.entries()) {
        const value = values[name];
        if (value === undefined) { previous = null; continue; }
        const point = { x: this.axisX(index), y: scales.get(name)!(value) };
        if (previous) {
          path += `M${previous.x},${previous.y}L${point.x},${point.y}`;
        }
        previous = point;
      }
      if (!path) return null;
      return svg('path', {
        d: path, class: cls, fill: 'none', ...(dashed ? { 'stroke-dasharray': '5,4' } : {}),
      });
    };

    // faded other-mode entities first, then active, then highlighted on top
    const ranked = [...store.entities()].sort((a, b) => {
      const rank = (e: typeof a) =>
        highlighted.has(e.id) ? 2
          : (e.pending || isComplete(e, store.view!.variables) === (store.mode === 'complete')) ? 1 : 0;
      return rank(a) - rank(b);
    });
    for (const entity of ranked) {
      const active = entity.pending ||
        isComplete(entity, store.view.variables) === (store.mode === 'complete');
      const cls = highlighted.has(entity.id) ? 'line-highlight'
        : active ? 'line-active' : 'line-other';
      const path = lineFor(entity.values, cls);
      if (path) this.plot.append(path);
      for (const [index, name] of order.entries()) {
        const value = entity.values[name];
        if (value === undefined) continue;
        this.plot.append(svg('circle', {
          cx: this.axisX(index), cy: scales.get(name)!(value), r: 2.5,
          class: cls.replace('line', 'dot'), 'data-entity': entity.id,
        }));
      }
    }

    // pending merges: dashed connectors through the union of each merge
    if (store.preview) {
      for (const merge of store.preview.merges) {
        const union: Record<string, number> = {};
        for (const id of merge) {
          Object.assign(union, this.entityById(id)?.values ?? {});
        }
        const path = lineFor(union, 'line-preview', true);
        if (path) this.plot.append(path);
        for (const [index, name] of order.entries()) {
          const value = union[name];
          if (value === undefined) continue;
          this.plot.append(svg('circle', {
            cx: this.axisX(index), cy: scales.get(name)!(value), r: 3.5,
            class: 'dot-preview',
          }));
        }
      }
    }

    const modeComplete = store.mode === 'complete';
    const allBrushed = order.every(name => store.brushes[name] !== undefined);
    this.generateBtn.disabled = modeComplete && !allBrushed;
    this.generateBtn.title = this.generateBtn.disabled
      ? 'complete mode needs a brush on every axis' : '';
    this.previewBtn.disabled = this.connectGroups().length < 2;
    this.commitBtn.disabled = !store.preview;
    this.discardBtn.disabled = !store.preview;
    this.previewLabel.textContent = store.preview
      ? `${store.preview.merge_count} merge(s) previewed` : '';
  }
}
