// Pure helpers shared by the views. The filtering here mirrors the
// server's query semantics exactly (closed intervals, an entity missing
// a brushed variable never matches, mode picks complete xor incomplete
// entities, insertion order preserved) so local highlights and the
// query endpoint always agree.

import type { EntityDoc, Interval, Mode, VariableDoc } from './api.js';

export function binWidth(spec: VariableDoc): number {
  return (spec.range[1] - spec.range[0]) / spec.bins;
}

export function binCenter(spec: VariableDoc, index: number): number {
  return spec.range[0] + (index + 0.5) * binWidth(spec);
}

// last bin is closed on both ends, like the server's histogram
export function binIndexFor(spec: VariableDoc, value: number): number {
  const raw = Math.floor((value - spec.range[0]) / binWidth(spec));
  return Math.max(0, Math.min(spec.bins - 1, raw));
}

export function isComplete(entity: EntityDoc, variables: VariableDoc[]): boolean {
  return Object.keys(entity.values).length === variables.length;
}

export function matchesBrushes(
  entity: EntityDoc,
  brushes: Record<string, Interval>,
): boolean {
  for (const [name, [lo, hi]] of Object.entries(brushes)) {
    const value = entity.values[name];
    if (value === undefined || value < lo || value > hi) return false;
  }
  return true;
}

export function highlightIds(
  entities: EntityDoc[],
  variables: VariableDoc[],
  brushes: Record<string, Interval>,
  mode: Mode,
): string[] {
  const wantComplete = mode === 'complete';
  const ids: string[] = [];
  for (const entity of entities) {
    if (isComplete(entity, variables) !== wantComplete) continue;
    if (matchesBrushes(entity, brushes)) ids.push(entity.id);
  }
  return ids;
}

export function binCounts(
  entities: EntityDoc[],
  spec: VariableDoc,
  only?: Set<string>,
): number[] {
  const counts = new Array<number>(spec.bins).fill(0);
  for (const entity of entities) {
    const value = entity.values[spec.name];
    if (value === undefined) continue;
    if (only && !only.has(entity.id)) continue;
    const index = binIndexFor(spec, value);
    counts[index] = (counts[index] ?? 0) + 1;
  }
  return counts;
}

const SQRT_2PI = Math.sqrt(2 * Math.PI);

export function normalPdf(x: number, mean: number, scale: number): number {
  const z = (x - mean) / scale;
  return Math.exp(-0.5 * z * z) / (scale * SQRT_2PI);
}

export function lognormalPdf(x: number, logMean: number, logScale: number): number {
  if (x <= 0) return 0;
  const z = (Math.log(x) - logMean) / logScale;
  return Math.exp(-0.5 * z * z) / (x * logScale * SQRT_2PI);
}

export function linspace(lo: number, hi: number, n: number): number[] {
  if (n === 1) return [lo];
  const out = new Array<number>(n);
  const step = (hi - lo) / (n - 1);
  for (let i = 0; i < n; i++) out[i] = lo + i * step;
  return out;
}

// y pixels grow downward, so invert the value axis
export function scaleLinear(domain: Interval, range: Interval) {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const slope = d1 === d0 ? 0 : (r1 - r0) / (d1 - d0);
  return (v: number) => r0 + (v - d0) * slope;
}

export function polylinePoints(xs: number[], ys: number[]): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) parts.push(`${xs[i]},${ys[i]}`);
  return parts.join(' ');
}

export function clampInterval(interval: Interval, bounds: Interval): Interval {
  const lo = Math.max(bounds[0], Math.min(interval[0], interval[1]));
  const hi = Math.min(bounds[1], Math.max(interval[0], interval[1]));
  return [lo, hi];
}
