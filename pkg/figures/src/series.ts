import { basename } from "node:path";

import { EmptyPlotError, Table, cell, columnIndex } from "./csv.js";
import { PlotSpec } from "./spec.js";

export interface Point {
  x: number;
  y: number;
  xRaw: string;
  yRaw: string;
}

export interface Series {
  label: string;
  points: Point[];
  color: string;
  dash?: string;
  marker?: "circle" | "square" | "triangle" | "diamond";
}

export interface Chart {
  title: string;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  logY: boolean;
  series: Series[];
  yMax?: number;
}

const PALETTE: Record<string, string> = {
  eocab: "#c0392b",
  ocab: "#2471a3",
  icab: "#1e8449",
  crb_w: "#7d3c98",
  crb_i: "#626567",
};
const MARKERS: Record<string, Series["marker"]> = {
  eocab: "circle",
  ocab: "square",
  icab: "triangle",
};

function numeric(raw: string, column: string, table: Table): number {
  const v = Number(raw);
  if (raw === "" || Number.isNaN(v)) {
    throw new EmptyPlotError(`${table.path}: non-numeric value '${raw}' in column '${column}'`);
  }
  return v;
}

/** Rows of one estimator at the requested source index, in sweep order. */
function estimatorRows(table: Table, estimator: string, source: number): string[][] {
  const est = columnIndex(table, "estimator");
  const src = columnIndex(table, "source");
  return table.rows.filter((r) => r[est] === estimator && r[src] === String(source));
}

function pickPoints(
  table: Table,
  rows: string[][],
  xCol: string,
  yCol: string,
  skipEmpty = false
): Point[] {
  const points: Point[] = [];
  for (const row of rows) {
    const xRaw = cell(table, row, xCol);
    const yRaw = cell(table, row, yCol);
    if (yRaw === "" && skipEmpty) continue;
    points.push({
      x: numeric(xRaw, xCol, table),
      y: numeric(yRaw, yCol, table),
      xRaw,
      yRaw,
    });
  }
  return points;
}

function stem(path: string): string {
  return basename(path).replace(/\.[^.]*$/, "");
}

export function buildChart(spec: PlotSpec, tables: Table[]): Chart {
  for (const t of tables) {
    if (t.rows.length === 0) {
      throw new EmptyPlotError(`${t.path}: no data rows (header-only CSV)`);
    }
  }
  const multi = tables.length > 1;
  const series: Series[] = [];
  const prefix = (t: Table, label: string) => (multi ? `${stem(t.path)} ${label}` : label);

  if (spec.kind === "rmse_vs_n" || spec.kind === "rmse_vs_snr") {
    for (const t of tables) {
      for (const est of spec.estimators) {
        const rows = estimatorRows(t, est, spec.source);
        if (rows.length === 0) continue;
        series.push({
          label: prefix(t, est.toUpperCase()),
          points: pickPoints(t, rows, "sweep_value", "rmse_deg"),
          color: PALETTE[est],
          marker: MARKERS[est],
        });
        if (spec.overlays.includes("thm6_mse")) {
          const pts = pickPoints(t, rows, "sweep_value", "mse_thm6_deg", true);
          if (pts.length > 0) {
            series.push({
              label: prefix(t, `${est.toUpperCase()} theory`),
              points: pts,
              color: PALETTE[est],
              dash: "6 3",
            });
          }
        }
      }
      for (const ov of ["crb_w", "crb_i"] as const) {
        if (!spec.overlays.includes(ov)) continue;
        const rows = dedupeBySweep(t, anySourceRows(t, spec.source), `${ov}_deg`);
        const pts = pickPoints(t, rows, "sweep_value", `${ov}_deg`, true);
        if (pts.length > 0) {
          series.push({
            label: prefix(t, ov === "crb_w" ? "one-bit CRB" : "infinite-bit CRB"),
            points: pts,
            color: PALETTE[ov],
            dash: ov === "crb_w" ? "2 3" : "8 3 2 3",
          });
        }
      }
    }
    return {
      title: spec.title,
      xLabel: spec.kind === "rmse_vs_n" ? "snapshots N" : "SNR (dB)",
      yLabel: "RMSE (degrees)",
      logX: spec.logX,
      logY: spec.logY,
      series: nonEmpty(series),
    };
  }

  if (spec.kind === "crb_vs_k") {
    for (const t of tables) {
      for (const ov of ["crb_w", "crb_i"] as const) {
        if (!spec.overlays.includes(ov)) continue;
        const rows = dedupeBySweep(t, anySourceRows(t, spec.source), `${ov}_deg`);
        const pts = pickPoints(t, rows, "sweep_value", `${ov}_deg`, true);
        if (pts.length > 0) {
          series.push({
            label: prefix(t, ov === "crb_w" ? "one-bit CRB" : "infinite-bit CRB"),
            points: pts,
            color: PALETTE[ov],
            marker: ov === "crb_w" ? "circle" : "diamond",
            dash: ov === "crb_i" ? "6 3" : undefined,
          });
        }
      }
    }
    return {
      title: spec.title,
      xLabel: "number of sources K",
      yLabel: "sqrt(CRB) (degrees)",
      logX: spec.logX,
      logY: spec.logY,
      series: nonEmpty(series),
    };
  }

  // resolution
  for (const t of tables) {
    for (const est of spec.estimators) {
      const rows = estimatorRows(t, est, 0);
      if (rows.length === 0) continue;
      const pts = pickPoints(t, rows, "sweep_value", "resolution_freq", true);
      if (pts.length > 0) {
        series.push({
          label: prefix(t, est.toUpperCase()),
          points: pts,
          color: PALETTE[est],
          marker: MARKERS[est],
        });
      }
      if (spec.overlays.includes("resolution_bound")) {
        const bpts = pickPoints(t, rows, "sweep_value", "resolution_bound", true);
        if (bpts.length > 0) {
          series.push({
            label: prefix(t, `${est.toUpperCase()} bound`),
            points: bpts,
            color: PALETTE[est],
            dash: "6 3",
          });
        }
      }
    }
  }
  return {
    title: spec.title,
    xLabel: "source separation (degrees)",
    yLabel: "resolution probability",
    logX: spec.logX,
    logY: spec.logY,
    series: nonEmpty(series),
    yMax: 1.05,
  };
}

function anySourceRows(table: Table, source: number): string[][] {
  const src = columnIndex(table, "source");
  return table.rows.filter((r) => r[src] === String(source));
}

function dedupeBySweep(table: Table, rows: string[][], col: string): string[][] {
  columnIndex(table, col);
  const sweep = columnIndex(table, "sweep_value");
  const seen = new Set<string>();
  const out: string[][] = [];
  for (const row of rows) {
    if (!seen.has(row[sweep])) {
      seen.add(row[sweep]);
      out.push(row);
    }
  }
  return out;
}

function nonEmpty(series: Series[]): Series[] {
  const kept = series.filter((s) => s.points.length > 0);
  if (kept.length === 0) {
    throw new EmptyPlotError("no plottable points after series selection");
  }
  return kept;
}

/** Exact plotted numbers, one row per point, for diffing against the CSV. */
export function dumpTable(chart: Chart): string {
  const lines = ["series,x,y"];
  for (const s of chart.series) {
    for (const p of s.points) {
      lines.push(`${s.label},${p.xRaw},${p.yRaw}`);
    }
  }
  return lines.join("\n") + "\n";
}
