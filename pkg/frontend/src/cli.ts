/** Command-line entry: train on one container, or run the full l-sweep. */

import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { lSweepExperiment } from "./sweep.js";
import { trainAndEval } from "./train.js";

function parseEpsilons(spec: string): (number | null)[] {
  return spec.split(",").map((tok) => {
    const s = tok.trim().toLowerCase();
    return s === "inf" || s === "none" ? null : Number(s);
  });
}

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .command(
      "train",
      "Train the classifier on a synthetic container and score the real test split",
      (y) =>
        y
          .option("container", { type: "string", demandOption: true })
          .option("test-format", { choices: ["idx", "cifar10"] as const, default: "idx" as const })
          .option("test-images", { type: "string", demandOption: true })
          .option("test-labels", { type: "string" })
          .option("epochs", { type: "number", default: 30 })
          .option("batch-size", { type: "number", default: 128 })
          .option("repetitions", { type: "number", default: 3 })
          .option("seed", { type: "number", default: 1 })
          .option("out", { type: "string", describe: "Write the result as JSON" }),
      async (argv) => {
        const result = await trainAndEval({
          trainContainer: argv.container,
          testFormat: argv.testFormat,
          testImages: argv.testImages,
          testLabels: argv.testLabels,
          epochs: argv.epochs,
          batchSize: argv.batchSize,
          repetitions: argv.repetitions,
          seed: argv.seed,
        });
        console.log(
          `accuracy ${result.mean.toFixed(4)} ± ${result.std.toFixed(4)} over ` +
          `${result.accuracies.length} runs; epsilon = ${result.accounting?.epsilon ?? "inf"}`,
        );
        if (argv.out) writeFileSync(argv.out, JSON.stringify(result, null, 2) + "\n");
      },
    )
    .command(
      "sweep",
      "Synthesize (via the dpsynth CLI), train and score over an (epsilon, l) grid",
      (y) =>
        y
          .option("input", { type: "string", demandOption: true })
          .option("input-format", { choices: ["idx", "cifar10", "csv"] as const, demandOption: true })
          .option("labels", { type: "string" })
          .option("label-column", { type: "string" })
          .option("test-format", { choices: ["idx", "cifar10"] as const, default: "idx" as const })
          .option("test-images", { type: "string", demandOption: true })
          .option("test-labels", { type: "string" })
          .option("epsilons", { type: "string", demandOption: true, describe: "e.g. 10,20,inf" })
          .option("ls", { type: "string", demandOption: true, describe: "e.g. 1,2,4,8,16" })
          .option("t", { type: "number", demandOption: true })
          .option("c", { type: "number", default: 1.0 })
          .option("delta", { type: "number", default: 1e-5 })
          .option("ratio", { type: "number", default: 1.0 })
          .option("seed", { type: "number", default: 1 })
          .option("threads", { type: "number", default: 1 })
          .option("repetitions", { type: "number", default: 3 })
          .option("epochs", { type: "number", default: 30 })
          .option("batch-size", { type: "number", default: 128 })
          .option("utility-threshold", { type: "number", default: 0.8 })
          .option("workdir", { type: "string", demandOption: true }),
      async (argv) => {
        const outcome = await lSweepExperiment({
          inputPath: argv.input,
          inputFormat: argv.inputFormat,
          labelsPath: argv.labels,
          labelColumn: argv.labelColumn,
          testFormat: argv.testFormat,
          testImages: argv.testImages,
          testLabels: argv.testLabels,
          epsilons: parseEpsilons(argv.epsilons),
          ls: argv.ls.split(",").map(Number),
          t: argv.t,
          c: argv.c,
          delta: argv.delta,
          ratio: argv.ratio,
          seed: argv.seed,
          threads: argv.threads,
          repetitions: argv.repetitions,
          epochs: argv.epochs,
          batchSize: argv.batchSize,
          utilityThreshold: argv.utilityThreshold,
          workdir: argv.workdir,
        });
        for (const [eps, l] of outcome.bestL) {
          console.log(`epsilon=${eps}: best l = ${l}`);
        }
        console.log(`rows written to ${argv.workdir}/sweep_results.csv`);
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(msg ?? err?.message);
      process.exit(err && !msg ? 2 : 1);
    })
    .parseAsync();
}

main().catch((err) => {
  console.error(err instanceof Error ? err.message : String(err));
  process.exit(2);
});
