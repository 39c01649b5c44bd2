/**
 * Utility-versus-order-of-mixture experiment.
 *
 * For each (epsilon target, l) cell: invoke the dpsynth CLI to synthesize
 * a container (implicit noise calibration via --epsilon; sigma 0 for the
 * non-private column), train the classifier on it, and score the real test
 * split. Emits a CSV with one row per cell, echoing each container's
 * embedded privacy report so every accuracy is traceable to its epsilon.
 */

import { spawnSync } from "node:child_process";
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { toCsv } from "./csv.js";
import { EvalConfig, EvalResult, trainAndEval } from "./train.js";

export interface SweepConfig {
  /** Primary CLI argv prefix; must be on PATH. */
  cli?: string[];
  inputPath: string;
  inputFormat: "idx" | "cifar10" | "csv";
  labelsPath?: string;
  labelColumn?: string;
  testFormat: "idx" | "cifar10";
  testImages: string;
  testLabels?: string;
  /** null means the non-private column (sigma = 0). */
  epsilons: (number | null)[];
  ls: number[];
  t: number;
  c?: number;
  delta?: number;
  ratio?: number;
  seed?: number;
  threads?: number;
  workdir: string;
  repetitions?: number;
  epochs?: number;
  batchSize?: number;
  utilityThreshold?: number;
  quiet?: boolean;
}

export interface SweepCell {
  l: number;
  epsilonTarget: number | null;
  epsilonReported: number | null;
  sigmaX: number | null;
  sigmaY: number | null;
  alphaStar: number | null;
  result: EvalResult;
  containerPath: string;
}

export interface SweepOutcome {
  cells: SweepCell[];
  /** Best l per epsilon column, by mean accuracy. */
  bestL: Map<string, number>;
  csv: string;
}

function epsKey(eps: number | null): string {
  return eps === null ? "inf" : String(eps);
}

export function synthesizeContainer(cfg: SweepConfig, l: number, eps: number | null, outPath: string): void {
  const cli = cfg.cli ?? ["dpsynth"];
  const args = [
    ...cli.slice(1),
    "synthesize",
    "--input", cfg.inputPath,
    "--format", cfg.inputFormat,
    "--l", String(l),
    "--t", String(cfg.t),
    "--c", String(cfg.c ?? 1.0),
    "--delta", String(cfg.delta ?? 1e-5),
    "--seed", String(cfg.seed ?? 1),
    "--threads", String(cfg.threads ?? 1),
    "--out", outPath,
  ];
  if (cfg.labelsPath) args.push("--labels", cfg.labelsPath);
  if (cfg.labelColumn) args.push("--label-column", cfg.labelColumn);
  if (eps === null) {
    args.push("--sigma-x", "0", "--sigma-y", "0");
  } else {
    args.push("--epsilon", String(eps), "--ratio", String(cfg.ratio ?? 1.0));
  }
  const run = spawnSync(cli[0], args, { encoding: "utf-8" });
  if (run.error) throw run.error;
  if (run.status !== 0) {
    throw new Error(
      `dpsynth synthesize exited ${run.status}: ${run.stderr || run.stdout}`,
    );
  }
}

export async function lSweepExperiment(cfg: SweepConfig): Promise<SweepOutcome> {
  mkdirSync(cfg.workdir, { recursive: true });
  const cells: SweepCell[] = [];
  for (const eps of cfg.epsilons) {
    for (const l of cfg.ls) {
      const containerPath = join(cfg.workdir, `l${l}_eps${epsKey(eps)}.dpcd`);
      synthesizeContainer(cfg, l, eps, containerPath);
      const evalCfg: EvalConfig = {
        trainContainer: containerPath,
        testFormat: cfg.testFormat,
        testImages: cfg.testImages,
        testLabels: cfg.testLabels,
        repetitions: cfg.repetitions,
        epochs: cfg.epochs,
        batchSize: cfg.batchSize,
        utilityThreshold: cfg.utilityThreshold,
        seed: cfg.seed,
        quiet: cfg.quiet,
      };
      const result = await trainAndEval(evalCfg);
      const accounting = result.accounting ?? {};
      const generating = result.generatingConfig ?? {};
      cells.push({
        l,
        epsilonTarget: eps,
        epsilonReported: (accounting["epsilon"] as number | null) ?? null,
        sigmaX: (generating["sigma_x"] as number) ?? null,
        sigmaY: (generating["sigma_y"] as number) ?? null,
        alphaStar: (accounting["alpha_star"] as number | null) ?? null,
        result,
        containerPath,
      });
      if (!cfg.quiet) {
        console.log(
          `l=${l} eps=${epsKey(eps)}: accuracy ${result.mean.toFixed(4)} ± ${result.std.toFixed(4)}`,
        );
      }
    }
  }

  const bestL = new Map<string, number>();
  for (const eps of cfg.epsilons) {
    const column = cells.filter((c) => c.epsilonTarget === eps);
    const best = column.reduce((a, b) => (b.result.mean > a.result.mean ? b : a));
    bestL.set(epsKey(eps), best.l);
  }

  // the non-private l=1 cell, when present, anchors the utility threshold
  const baseline = cells.find((c) => c.epsilonTarget === null && c.l === 1);
  const theta = cfg.utilityThreshold ?? 0.8;
  const header = [
    "l", "epsilon_target", "epsilon_reported", "sigma_x", "sigma_y", "alpha_star",
    "repetitions", "accuracy_mean", "accuracy_std", "accuracies", "epochs",
    "meets_threshold",
  ];
  const rows = cells.map((c) => [
    String(c.l),
    epsKey(c.epsilonTarget),
    c.epsilonReported === null ? "inf" : String(c.epsilonReported),
    c.sigmaX === null ? "" : String(c.sigmaX),
    c.sigmaY === null ? "" : String(c.sigmaY),
    c.alphaStar === null ? "" : String(c.alphaStar),
    String(c.result.accuracies.length),
    c.result.mean.toFixed(6),
    c.result.std.toFixed(6),
    c.result.accuracies.map((a) => a.toFixed(6)).join(";"),
    c.result.epochsRun.join(";"),
    baseline ? String(c.result.mean >= theta * baseline.result.mean) : "",
  ]);
  const csv = toCsv([header, ...rows]);
  writeFileSync(join(cfg.workdir, "sweep_results.csv"), csv);
  return { cells, bestL, csv };
}
