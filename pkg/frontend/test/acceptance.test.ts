/**
 * Full-scale utility reproduction. Needs the real MNIST IDX files; set
 * DPSYNTH_MNIST_DIR to a directory containing train-images-idx3-ubyte,
 * train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte.
 * Expect 30+ minutes of runtime; everything skips when the variable is
 * unset so the default suite stays desk-scale.
 */

import { existsSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { lSweepExperiment } from "../src/sweep.js";

const dir = process.env.DPSYNTH_MNIST_DIR ?? "";
const files = [
  "train-images-idx3-ubyte",
  "train-labels-idx1-ubyte",
  "t10k-images-idx3-ubyte",
  "t10k-labels-idx1-ubyte",
].map((f) => join(dir, f));
const available = dir !== "" && files.every((f) => existsSync(f));

describe.skipIf(!available)("mnist utility reproduction", () => {
  it(
    "peaks at l = 4 for epsilon 10 and holds the non-private baseline",
    async () => {
      const outcome = await lSweepExperiment({
        inputPath: files[0],
        labelsPath: files[1],
        inputFormat: "idx",
        testFormat: "idx",
        testImages: files[2],
        testLabels: files[3],
        epsilons: [10, null],
        ls: [1, 2, 4, 8, 16],
        t: 60000,
        seed: 1,
        threads: 8,
        workdir: mkdtempSync(join(tmpdir(), "mnist-sweep-")),
        repetitions: 3,
        epochs: 30,
      });
      expect(outcome.bestL.get("10")).toBe(4);
      const peak = outcome.cells.find((c) => c.epsilonTarget === 10 && c.l === 4)!;
      expect(Math.abs(peak.result.mean - 0.7808)).toBeLessThanOrEqual(0.05);
      const baseline = outcome.cells.find((c) => c.epsilonTarget === null && c.l === 1)!;
      expect(baseline.result.mean).toBeGreaterThanOrEqual(0.985);
    },
    6 * 3600_000,
  );
});
