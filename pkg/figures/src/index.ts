export { EmptyPlotError, SchemaError, parseCsv } from "./csv.js";
export { chartFor, render, renderDumpTable } from "./render.js";
export { buildChart, dumpTable } from "./series.js";
export type { Chart, Point, Series } from "./series.js";
export { FIGURE_KINDS, loadSpec, makeSpec, validateSpec } from "./spec.js";
export type { FigureKind, PlotSpec } from "./spec.js";
export { renderSvg } from "./svg.js";
