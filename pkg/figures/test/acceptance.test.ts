/**
 * Secondary acceptance: regenerate all four figure kinds from real harness
 * CSVs produced through the primary package's CLI (its external interface),
 * and check --dump-table echoes the plotted rows.
 *
 * The harness runs here are desk-scale (tiny trial counts); the figure code
 * only cares about the schema, which is identical at any trial count.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { beforeAll, describe, expect, it } from "vitest";

const cliPath = join(dirname(fileURLToPath(import.meta.url)), "..", "dist", "cli.js");
const dir = mkdtempSync(join(tmpdir(), "figaccept-"));

function primaryCli(args: string[]): void {
  execFileSync("onebit-doa", args, { stdio: "pipe", timeout: 600_000 });
}

function writeYaml(name: string, lines: string[]): string {
  const path = join(dir, name);
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}

const csvs = {
  rmse_vs_n: join(dir, "rmse_vs_n.csv"),
  rmse_vs_snr: join(dir, "rmse_vs_snr.csv"),
  crb_vs_k: join(dir, "crb_vs_k.csv"),
  resolution: join(dir, "resolution.csv"),
};

beforeAll(() => {
  const common = [
    "geometry: [0, 2, 3, 4, 6, 9]",
    "trials: 6",
    "seed: 4242",
    "music_step_deg: 0.05",
    "workers: 1",
  ];
  primaryCli([
    "simulate",
    "--config",
    writeYaml("n.yaml", [
      ...common,
      "k: 2",
      "doa_rule: [-22.0, 31.0]",
      "snr_db: 3.0",
      "sweep: N",
      "sweep_grid: [200, 400]",
      "estimators: [eocab, ocab, icab]",
      "overlays: [crb_w, crb_i, thm6_mse]",
    ]),
    "--out",
    csvs.rmse_vs_n,
  ]);
  primaryCli([
    "simulate",
    "--config",
    writeYaml("snr.yaml", [
      ...common,
      "k: 2",
      "doa_rule: [-22.0, 31.0]",
      "sweep: SNR",
      "sweep_grid: [0, 6]",
      "n_snapshots: 300",
      "estimators: [ocab, icab]",
      "overlays: [crb_w, crb_i]",
    ]),
    "--out",
    csvs.rmse_vs_snr,
  ]);
  primaryCli([
    "simulate",
    "--config",
    writeYaml("k.yaml", [
      ...common,
      "k: 2",
      "doa_rule: equally_spaced",
      "snr_db: 3.0",
      "sweep: K",
      "sweep_grid: [2, 4, 6]",
      "n_snapshots: 200",
      "estimators: [ocab]",
      "overlays: [crb_w, crb_i]",
    ]),
    "--out",
    csvs.crb_vs_k,
  ]);
  primaryCli([
    "resolve",
    "--config",
    writeYaml("res.yaml", [
      ...common,
      "k: 2",
      "sweep: delta_theta",
      "sweep_grid: [3.0, 10.0]",
      "n_snapshots: 300",
      "snr_db: 10.0",
      "estimators: [eocab, ocab]",
      "overlays: [resolution_bound]",
    ]),
    "--out",
    csvs.resolution,
  ]);
}, 600_000);

describe("figure regeneration from harness output", () => {
  const cases: Array<[keyof typeof csvs, string[]]> = [
    ["rmse_vs_n", ["--overlays", "crb_w,crb_i,thm6_mse"]],
    ["rmse_vs_snr", ["--estimators", "ocab,icab", "--overlays", "crb_w,crb_i"]],
    ["crb_vs_k", ["--estimators", "", "--overlays", "crb_w,crb_i", "--source", "1"]],
    ["resolution", ["--estimators", "eocab,ocab", "--overlays", "resolution_bound", "--source", "0"]],
  ];

  for (const [kind, extra] of cases) {
    it(`renders ${kind} and dumps the plotted rows`, () => {
      const out = join(dir, `${kind}.svg`);
      const dump = execFileSync(
        "node",
        [cliPath, "--kind", kind, "--input", csvs[kind], "--out", out, "--dump-table", ...extra],
        { encoding: "utf8" }
      );
      const svg = readFileSync(out, "utf8");
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg).toContain("<polyline");

      // every dumped (x, y) pair appears verbatim in the source CSV row set
      const csvLines = readFileSync(csvs[kind], "utf8").trim().split("\n").slice(1);
      const cells = new Set(csvLines.flatMap((l) => l.split(",")));
      const dumpLines = dump.trim().split("\n");
      expect(dumpLines[0]).toBe("series,x,y");
      expect(dumpLines.length).toBeGreaterThan(1);
      for (const line of dumpLines.slice(1)) {
        const parts = line.split(",");
        const x = parts[parts.length - 2];
        const y = parts[parts.length - 1];
        expect(cells.has(x)).toBe(true);
        expect(cells.has(y)).toBe(true);
      }
    });
  }
});
