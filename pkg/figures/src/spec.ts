import { readFileSync } from "node:fs";

export const FIGURE_KINDS = ["rmse_vs_n", "rmse_vs_snr", "crb_vs_k", "resolution"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export const ESTIMATORS = ["eocab", "ocab", "icab"] as const;
export const OVERLAYS = ["crb_w", "crb_i", "thm6_mse", "resolution_bound"] as const;

export interface PlotSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  /** source index whose per-source columns are plotted (default 1, i.e. theta_2) */
  source: number;
  estimators: string[];
  overlays: string[];
  logX: boolean;
  logY: boolean;
  title: string;
  width: number;
  height: number;
}

const DEFAULTS: Record<FigureKind, { logX: boolean; logY: boolean; title: string }> = {
  rmse_vs_n: { logX: true, logY: true, title: "RMSE vs snapshot count" },
  rmse_vs_snr: { logX: false, logY: true, title: "RMSE vs SNR" },
  crb_vs_k: { logX: false, logY: true, title: "CRB vs source count" },
  resolution: { logX: false, logY: false, title: "Resolution probability vs separation" },
};

export function makeSpec(partial: Partial<PlotSpec> & { kind: FigureKind; inputs: string[]; output: string }): PlotSpec {
  const d = DEFAULTS[partial.kind];
  const spec: PlotSpec = {
    source: 1,
    estimators: [...ESTIMATORS],
    overlays: [],
    logX: d.logX,
    logY: d.logY,
    title: d.title,
    width: 760,
    height: 500,
    ...partial,
  };
  validateSpec(spec);
  return spec;
}

export function validateSpec(spec: PlotSpec): void {
  if (!FIGURE_KINDS.includes(spec.kind)) {
    throw new Error(`unknown figure kind '${spec.kind}'`);
  }
  if (!spec.inputs || spec.inputs.length === 0) {
    throw new Error("spec needs at least one input CSV");
  }
  if (!spec.output) {
    throw new Error("spec needs an output path");
  }
  if (spec.estimators.length === 0 && spec.overlays.length === 0) {
    throw new Error("spec selects no series (no estimators, no overlays)");
  }
  for (const e of spec.estimators) {
    if (!(ESTIMATORS as readonly string[]).includes(e)) {
      throw new Error(`unknown estimator '${e}'`);
    }
  }
  for (const o of spec.overlays) {
    if (!(OVERLAYS as readonly string[]).includes(o)) {
      throw new Error(`unknown overlay '${o}'`);
    }
  }
  if (!Number.isInteger(spec.source) || spec.source < 0) {
    throw new Error(`source index must be a non-negative integer, got ${spec.source}`);
  }
}

export function loadSpec(path: string): PlotSpec {
  const raw = JSON.parse(readFileSync(path, "utf8"));
  if (typeof raw.kind !== "string" || !raw.inputs || !raw.output) {
    throw new Error(`${path}: spec must define kind, inputs and output`);
  }
  return makeSpec(raw);
}
