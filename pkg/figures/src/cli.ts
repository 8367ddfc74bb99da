#!/usr/bin/env node
/**
 * render --spec spec.json [--dump-table]
 * render --kind rmse_vs_n --input results.csv --out fig.svg
 *        [--source 1] [--estimators eocab,ocab] [--overlays crb_w,thm6_mse]
 *        [--title ...] [--dump-table]
 *
 * Exit codes: 0 ok, 2 spec/schema error, 3 empty plot (e.g. header-only CSV).
 */

import { EmptyPlotError, SchemaError } from "./csv.js";
import { render, renderDumpTable } from "./render.js";
import { FIGURE_KINDS, FigureKind, loadSpec, makeSpec, PlotSpec } from "./spec.js";

interface Args {
  [key: string]: string | boolean;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {};
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (!a.startsWith("--")) {
      throw new Error(`unexpected argument '${a}'`);
    }
    const key = a.slice(2);
    if (key === "dump-table") {
      args[key] = true;
    } else {
      const v = argv[++i];
      if (v === undefined) throw new Error(`missing value for --${key}`);
      args[key] = v;
    }
  }
  return args;
}

function specFromArgs(args: Args): PlotSpec {
  if (typeof args["spec"] === "string") {
    return loadSpec(args["spec"]);
  }
  const kind = args["kind"];
  const input = args["input"];
  const out = args["out"];
  if (typeof kind !== "string" || typeof input !== "string" || typeof out !== "string") {
    throw new Error("need either --spec FILE or --kind KIND --input CSV --out FILE");
  }
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new Error(`unknown figure kind '${kind}' (expected ${FIGURE_KINDS.join("|")})`);
  }
  const partial: Partial<PlotSpec> & { kind: FigureKind; inputs: string[]; output: string } = {
    kind: kind as FigureKind,
    inputs: input.split(","),
    output: out,
  };
  if (typeof args["source"] === "string") partial.source = Number(args["source"]);
  if (typeof args["estimators"] === "string") {
    partial.estimators = (args["estimators"] as string).split(",").filter((s) => s.length);
  }
  if (typeof args["overlays"] === "string") {
    partial.overlays = (args["overlays"] as string).split(",").filter((s) => s.length);
  }
  if (typeof args["title"] === "string") partial.title = args["title"] as string;
  return makeSpec(partial);
}

export function main(argv: string[]): number {
  let args: Args;
  let spec: PlotSpec;
  try {
    args = parseArgs(argv);
    spec = specFromArgs(args);
  } catch (err) {
    process.stderr.write(`spec error: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    if (args["dump-table"]) {
      process.stdout.write(renderDumpTable(spec));
    }
    render(spec);
    return 0;
  } catch (err) {
    if (err instanceof EmptyPlotError) {
      process.stderr.write(`empty plot: ${err.message}\n`);
      return 3;
    }
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
}

const isDirectRun =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
