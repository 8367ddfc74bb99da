import { readFileSync, writeFileSync } from "node:fs";

import { parseCsv, Table } from "./csv.js";
import { buildChart, Chart, dumpTable } from "./series.js";
import { PlotSpec } from "./spec.js";
import { renderSvg } from "./svg.js";

function loadTables(spec: PlotSpec): Table[] {
  return spec.inputs.map((p) => parseCsv(readFileSync(p, "utf8"), p));
}

export function chartFor(spec: PlotSpec): Chart {
  return buildChart(spec, loadTables(spec));
}

/** Render the figure to spec.output; returns the SVG string. */
export function render(spec: PlotSpec): string {
  const svg = renderSvg(chartFor(spec), spec.width, spec.height);
  writeFileSync(spec.output, svg);
  return svg;
}

/** The exact numbers plotted, as series,x,y rows (strings copied from the CSV). */
export function renderDumpTable(spec: PlotSpec): string {
  return dumpTable(chartFor(spec));
}
