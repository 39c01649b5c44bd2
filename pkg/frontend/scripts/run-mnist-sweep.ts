/**
 * MNIST utility reproduction: l-sweep at a fixed privacy budget plus the
 * non-private baseline, through the dpsynth CLI and the container format.
 *
 * Usage:
 *   tsx scripts/run-mnist-sweep.ts --mnist-dir /data/mnist [--workdir out]
 *       [--epsilons 10] [--ls 1,2,4,8,16] [--reps 3] [--epochs 30] [--t 60000]
 *
 * Expects train-images-idx3-ubyte / train-labels-idx1-ubyte and the t10k
 * pair inside --mnist-dir. Verdict: the epsilon column should peak at
 * l = 4 with mean accuracy in 0.7808 +/- 0.05, and the non-private l = 1
 * baseline should reach at least 0.985. Exits 0 when both hold.
 */

import { existsSync } from "node:fs";
import { join } from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { lSweepExperiment } from "../src/sweep.js";

const EXPECTED_PEAK_L = 4;
const EXPECTED_PEAK_ACCURACY = 0.7808;
const PEAK_TOLERANCE = 0.05;
const BASELINE_FLOOR = 0.985;

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option("mnist-dir", { type: "string", demandOption: true })
    .option("workdir", { type: "string", default: "mnist-sweep-out" })
    .option("epsilons", { type: "string", default: "10" })
    .option("ls", { type: "string", default: "1,2,4,8,16" })
    .option("reps", { type: "number", default: 3 })
    .option("epochs", { type: "number", default: 30 })
    .option("t", { type: "number", default: 60000 })
    .option("threads", { type: "number", default: 4 })
    .strict()
    .parseAsync();

  const trainImages = join(argv.mnistDir, "train-images-idx3-ubyte");
  const trainLabels = join(argv.mnistDir, "train-labels-idx1-ubyte");
  const testImages = join(argv.mnistDir, "t10k-images-idx3-ubyte");
  const testLabels = join(argv.mnistDir, "t10k-labels-idx1-ubyte");
  for (const p of [trainImages, trainLabels, testImages, testLabels]) {
    if (!existsSync(p)) {
      console.error(`missing ${p}`);
      process.exit(1);
    }
  }

  const epsilons = argv.epsilons.split(",").map(Number);
  const outcome = await lSweepExperiment({
    inputPath: trainImages,
    labelsPath: trainLabels,
    inputFormat: "idx",
    testFormat: "idx",
    testImages,
    testLabels,
    epsilons: [...epsilons, null], // null = non-private baseline column
    ls: argv.ls.split(",").map(Number),
    t: argv.t,
    seed: 1,
    threads: argv.threads,
    workdir: argv.workdir,
    repetitions: argv.reps,
    epochs: argv.epochs,
  });

  let ok = true;
  for (const eps of epsilons) {
    const best = outcome.bestL.get(String(eps));
    const peak = outcome.cells.find((c) => c.epsilonTarget === eps && c.l === best)!;
    const inBand = Math.abs(peak.result.mean - EXPECTED_PEAK_ACCURACY) <= PEAK_TOLERANCE;
    const peaksAtFour = best === EXPECTED_PEAK_L;
    console.log(
      `epsilon=${eps}: best l=${best} (accuracy ${peak.result.mean.toFixed(4)} ` +
      `± ${peak.result.std.toFixed(4)}) -> peak_l_ok=${peaksAtFour} band_ok=${inBand}`,
    );
    ok = ok && peaksAtFour && inBand;
  }
  const baseline = outcome.cells.find((c) => c.epsilonTarget === null && c.l === 1);
  if (baseline) {
    const floorOk = baseline.result.mean >= BASELINE_FLOOR;
    console.log(
      `non-private l=1 baseline: ${baseline.result.mean.toFixed(4)} -> floor_ok=${floorOk}`,
    );
    ok = ok && floorOk;
  }
  console.log(ok ? "VERDICT: PASS" : "VERDICT: FAIL");
  process.exit(ok ? 0 : 1);
}

main().catch((err) => {
  console.error(err instanceof Error ? err.stack : String(err));
  process.exit(2);
});
