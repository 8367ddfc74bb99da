/**
 * Minimal deterministic SVG renderer: log/linear axes, grid, polyline series
 * with optional dash patterns and markers, legend.  No dependencies, so the
 * same chart object always produces byte-identical output.
 */

import { Chart, Series } from "./series.js";

const MARGIN = { left: 74, right: 18, top: 42, bottom: 56 };

interface Scale {
  (v: number): number;
  ticks: number[];
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.001 && a < 10000) {
    return String(Number(v.toPrecision(6)));
  }
  return v.toExponential(0).replace("+", "");
}

function px(v: number): string {
  return String(Math.round(v * 100) / 100);
}

function linearTicks(lo: number, hi: number, target = 6): number[] {
  const span = hi - lo || 1;
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= target) ?? 10 * mag;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = first; t <= hi + 1e-12 * span; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const eLo = Math.floor(Math.log10(lo));
  const eHi = Math.ceil(Math.log10(hi));
  const collect = (mantissas: number[]): number[] => {
    const ticks: number[] = [];
    for (let e = eLo; e <= eHi; e++) {
      for (const m of mantissas) {
        const v = m * Math.pow(10, e);
        if (v >= lo * 0.999 && v <= hi * 1.001) ticks.push(v);
      }
    }
    return ticks;
  };
  for (const mantissas of [[1, 2, 5], [1, 1.5, 2, 3, 4, 5, 7], [1, 2, 3, 4, 5, 6, 7, 8, 9]]) {
    const ticks = collect(mantissas);
    if (ticks.length >= 3) return ticks;
  }
  return linearTicks(lo, hi, 5).filter((t) => t > 0);
}

function makeScale(values: number[], log: boolean, lengthPx: number, invert: boolean, maxOverride?: number): Scale {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (log) {
    const positive = values.filter((v) => v > 0);
    if (positive.length === 0) {
      throw new Error("log scale requires positive values");
    }
    lo = Math.min(...positive);
    hi = Math.max(...positive);
    lo /= 1.25;
    hi *= 1.25;
  } else {
    const pad = 0.06 * (hi - lo || Math.abs(hi) || 1);
    lo -= pad;
    hi = (maxOverride ?? hi + pad);
    if (!log && lo > 0 && lo < 0.1 * hi) lo = 0;
  }
  const tlo = log ? Math.log10(lo) : lo;
  const thi = log ? Math.log10(hi) : hi;
  const scale = ((v: number) => {
    const t = log ? Math.log10(Math.max(v, Number.MIN_VALUE)) : v;
    const frac = (t - tlo) / (thi - tlo || 1);
    return invert ? lengthPx * (1 - frac) : lengthPx * frac;
  }) as Scale;
  scale.ticks = log ? logTicks(lo, hi) : linearTicks(lo, hi);
  return scale;
}

function markerPath(kind: NonNullable<Series["marker"]>, cx: number, cy: number, r: number): string {
  switch (kind) {
    case "circle":
      return `<circle cx="${px(cx)}" cy="${px(cy)}" r="${px(r)}"/>`;
    case "square":
      return `<rect x="${px(cx - r)}" y="${px(cy - r)}" width="${px(2 * r)}" height="${px(2 * r)}"/>`;
    case "triangle":
      return `<path d="M ${px(cx)} ${px(cy - r)} L ${px(cx + r)} ${px(cy + r)} L ${px(cx - r)} ${px(cy + r)} Z"/>`;
    case "diamond":
      return `<path d="M ${px(cx)} ${px(cy - r)} L ${px(cx + r)} ${px(cy)} L ${px(cx)} ${px(cy + r)} L ${px(cx - r)} ${px(cy)} Z"/>`;
  }
}

export function renderSvg(chart: Chart, width = 760, height = 500): string {
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const xs = chart.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = chart.series.flatMap((s) => s.points.map((p) => p.y));
  const sx = makeScale(xs, chart.logX, plotW, false);
  const sy = makeScale(ys, chart.logY, plotH, true, chart.yMax);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${px(width / 2)}" y="24" font-size="15" text-anchor="middle">${escapeXml(chart.title)}</text>`
  );
  const g0 = `<g transform="translate(${MARGIN.left},${MARGIN.top})">`;
  parts.push(g0);

  // grid + ticks
  for (const t of sx.ticks) {
    const x = sx(t);
    parts.push(`<line x1="${px(x)}" y1="0" x2="${px(x)}" y2="${px(plotH)}" stroke="#eeeeee"/>`);
    parts.push(
      `<text x="${px(x)}" y="${px(plotH + 18)}" font-size="11" text-anchor="middle">${fmt(t)}</text>`
    );
  }
  for (const t of sy.ticks) {
    const y = sy(t);
    parts.push(`<line x1="0" y1="${px(y)}" x2="${px(plotW)}" y2="${px(y)}" stroke="#eeeeee"/>`);
    parts.push(
      `<text x="-8" y="${px(y + 4)}" font-size="11" text-anchor="end">${fmt(t)}</text>`
    );
  }
  parts.push(`<rect x="0" y="0" width="${px(plotW)}" height="${px(plotH)}" fill="none" stroke="#333333"/>`);

  // series
  for (const s of chart.series) {
    const pts = [...s.points].sort((a, b) => a.x - b.x);
    const coords = pts.map((p) => `${px(sx(p.x))},${px(sy(p.y))}`).join(" ");
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${s.color}" stroke-width="1.6"${dash}/>`
    );
    if (s.marker) {
      parts.push(`<g fill="${s.color}" stroke="none">`);
      for (const p of pts) {
        parts.push(markerPath(s.marker, sx(p.x), sy(p.y), 3.4));
      }
      parts.push("</g>");
    }
  }

  // axis labels
  parts.push(
    `<text x="${px(plotW / 2)}" y="${px(plotH + 42)}" font-size="13" text-anchor="middle">${escapeXml(chart.xLabel)}</text>`
  );
  parts.push(
    `<text x="${px(-52)}" y="${px(plotH / 2)}" font-size="13" text-anchor="middle" transform="rotate(-90 ${px(-52)} ${px(plotH / 2)})">${escapeXml(chart.yLabel)}</text>`
  );

  // legend (top-right inside the plot area)
  const lx = plotW - 178;
  let ly = 10;
  parts.push(
    `<rect x="${px(lx - 8)}" y="${px(ly - 8)}" width="186" height="${px(chart.series.length * 17 + 10)}" fill="white" fill-opacity="0.85" stroke="#cccccc"/>`
  );
  for (const s of chart.series) {
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<line x1="${px(lx)}" y1="${px(ly + 4)}" x2="${px(lx + 26)}" y2="${px(ly + 4)}" stroke="${s.color}" stroke-width="1.6"${dash}/>`
    );
    if (s.marker) {
      parts.push(`<g fill="${s.color}">${markerPath(s.marker, lx + 13, ly + 4, 3.2)}</g>`);
    }
    parts.push(
      `<text x="${px(lx + 32)}" y="${px(ly + 8)}" font-size="11">${escapeXml(s.label)}</text>`
    );
    ly += 17;
  }

  parts.push("</g>");
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
