/**
 * Train the classifier on a synthetic container and score it on the real
 * test split.
 *
 * The synthetic features live in the pipeline's normalized space (z-score
 * then l2 clip to the c recorded in the container config). The private
 * normalization statistics are never released, so the test split is
 * z-scored with its own per-column statistics and clipped to the same c;
 * after clipping both live on the same l2 ball and the residual shift is
 * absorbed by batch normalization.
 */

import * as tf from "@tensorflow/tfjs";

import { ensureBackend } from "./backend.js";
import { readContainer, SyntheticContainer } from "./container.js";
import { readCifarBatch, readIdxPair, TestSplit } from "./idx.js";
import { buildClassifier, INPUT_SIDE, plateauScheduler } from "./model.js";
import { shuffledIndices } from "./rng.js";

export interface EvalConfig {
  trainContainer: string;
  testFormat: "idx" | "cifar10";
  /** IDX image file, or the CIFAR test batch when testFormat is cifar10. */
  testImages: string;
  /** IDX label file; unused for cifar10. */
  testLabels?: string;
  epochs?: number;
  batchSize?: number;
  repetitions?: number;
  validationFraction?: number;
  earlyStoppingPatience?: number;
  learningRate?: number;
  /** Relative utility threshold in (0, 1]; echoed into results. */
  utilityThreshold?: number;
  seed?: number;
  quiet?: boolean;
}

export interface EvalResult {
  accuracies: number[];
  mean: number;
  std: number;
  epochsRun: number[];
  config: Required<Omit<EvalConfig, "testLabels" | "quiet">> & { testLabels?: string };
  /** Privacy report echoed from the container metadata. */
  accounting: Record<string, unknown> | null;
  generatingConfig: Record<string, unknown> | null;
}

const DEFAULTS = {
  epochs: 30,
  batchSize: 128,
  repetitions: 3,
  validationFraction: 0.05,
  earlyStoppingPatience: 4,
  learningRate: 0.001,
  utilityThreshold: 0.8,
  seed: 1,
};

export function channelsForWidth(dX: number): 1 | 3 {
  const area = INPUT_SIDE * INPUT_SIDE;
  if (dX === area) return 1;
  if (dX === 3 * area) return 3;
  throw new Error(
    `container width ${dX} does not match the ${INPUT_SIDE}x${INPUT_SIDE} architecture ` +
    `(expected ${area} or ${3 * area})`,
  );
}

/** z-score each column (population std), then clip rows to the l2 ball of radius c. */
export function normalizeLikePipeline(features: Float32Array, n: number, dX: number, c: number): Float32Array {
  const means = new Float64Array(dX);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < dX; j++) means[j] += features[i * dX + j];
  }
  for (let j = 0; j < dX; j++) means[j] /= n;
  const vars_ = new Float64Array(dX);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < dX; j++) {
      const d = features[i * dX + j] - means[j];
      vars_[j] += d * d;
    }
  }
  const stds = new Float64Array(dX);
  for (let j = 0; j < dX; j++) stds[j] = Math.sqrt(vars_[j] / n);

  const out = new Float32Array(n * dX);
  for (let i = 0; i < n; i++) {
    let normSq = 0;
    for (let j = 0; j < dX; j++) {
      const z = stds[j] < 1e-12 ? 0 : (features[i * dX + j] - means[j]) / stds[j];
      out[i * dX + j] = z;
      normSq += z * z;
    }
    const norm = Math.sqrt(normSq);
    if (norm > c) {
      const scale = c / norm;
      for (let j = 0; j < dX; j++) out[i * dX + j] *= scale;
    }
  }
  return out;
}

function toImageTensor(features: Float32Array, n: number, dX: number, channels: 1 | 3): tf.Tensor4D {
  return tf.tidy(() => {
    const flat = tf.tensor2d(features, [n, dX]);
    if (channels === 1) {
      return flat.reshape([n, INPUT_SIDE, INPUT_SIDE, 1]) as tf.Tensor4D;
    }
    // channel-planar rows -> NHWC
    return flat
      .reshape([n, 3, INPUT_SIDE, INPUT_SIDE])
      .transpose([0, 2, 3, 1]) as tf.Tensor4D;
  });
}

function mapTestLabels(split: TestSplit, container: SyntheticContainer): Int32Array {
  const values = container.metadata.source?.label_values;
  const lookup = new Map<number, number>();
  if (values && values.length === container.classCount) {
    values.forEach((v, k) => lookup.set(v, k));
  } else {
    for (let k = 0; k < container.classCount; k++) lookup.set(k, k);
  }
  const mapped = new Int32Array(split.n);
  for (let i = 0; i < split.n; i++) {
    const cls = lookup.get(split.rawLabels[i]);
    if (cls === undefined) {
      throw new Error(`test label ${split.rawLabels[i]} not among the training classes`);
    }
    mapped[i] = cls;
  }
  return mapped;
}

function gatherRows(src: Float32Array, dX: number, order: Int32Array): Float32Array {
  const out = new Float32Array(order.length * dX);
  for (let i = 0; i < order.length; i++) {
    out.set(src.subarray(order[i] * dX, (order[i] + 1) * dX), i * dX);
  }
  return out;
}

export async function trainAndEval(cfg: EvalConfig): Promise<EvalResult> {
  await ensureBackend();
  const given = Object.fromEntries(
    Object.entries(cfg).filter(([, v]) => v !== undefined),
  ) as EvalConfig;
  const opts = { ...DEFAULTS, ...given };
  if (!(opts.utilityThreshold > 0 && opts.utilityThreshold <= 1)) {
    throw new Error(`utility threshold must lie in (0, 1], got ${opts.utilityThreshold}`);
  }
  if (opts.repetitions < 1) throw new Error("repetitions must be >= 1");

  const container = readContainer(opts.trainContainer);
  const channels = channelsForWidth(container.dX);
  const clip = container.metadata.config?.c ?? 1.0;

  const split =
    opts.testFormat === "idx"
      ? readIdxPair(opts.testImages, opts.testLabels ?? "")
      : readCifarBatch(opts.testImages);
  if (split.dX !== container.dX) {
    throw new Error(`test width ${split.dX} does not match container width ${container.dX}`);
  }
  const testFeatures = normalizeLikePipeline(split.features, split.n, split.dX, clip);
  const testClasses = mapTestLabels(split, container);

  const testX = toImageTensor(testFeatures, split.n, split.dX, channels);
  const testYIdx = tf.tensor1d(Float32Array.from(testClasses), "float32");

  const accuracies: number[] = [];
  const epochsRun: number[] = [];
  try {
    for (let rep = 0; rep < opts.repetitions; rep++) {
      const repSeed = opts.seed + 1000 * rep;
      const order = shuffledIndices(container.t, repSeed);
      const shuffled = gatherRows(container.features, container.dX, order);
      const labels = new Float32Array(container.t);
      for (let i = 0; i < container.t; i++) labels[i] = container.labels[order[i]] - 1;

      const trainX = toImageTensor(shuffled, container.t, container.dX, channels);
      const trainY = tf.oneHot(tf.tensor1d(labels, "int32"), container.classCount);

      const model = buildClassifier({
        channels,
        classCount: container.classCount,
        seed: repSeed,
      });
      model.compile({
        optimizer: tf.train.adam(opts.learningRate),
        loss: "categoricalCrossentropy",
        metrics: ["accuracy"],
      });
      const scheduler = plateauScheduler(model, opts.learningRate);
      const history = await model.fit(trainX, trainY, {
        epochs: opts.epochs,
        batchSize: opts.batchSize,
        shuffle: false, // pre-shuffled with a seeded permutation
        validationSplit: opts.validationFraction,
        verbose: 0,
        callbacks: [
          scheduler.callback,
          tf.callbacks.earlyStopping({
            monitor: "val_loss",
            patience: opts.earlyStoppingPatience,
          }),
        ],
      });
      epochsRun.push(history.epoch.length);

      const pred = model.predict(testX, { batchSize: 512 }) as tf.Tensor2D;
      const correct = tf.tidy(() =>
        pred.argMax(1).toFloat().equal(testYIdx).sum().dataSync()[0],
      );
      pred.dispose();
      accuracies.push(correct / split.n);

      model.dispose();
      trainX.dispose();
      trainY.dispose();
      if (!opts.quiet) {
        console.log(
          `rep ${rep + 1}/${opts.repetitions}: accuracy ${accuracies[rep].toFixed(4)} ` +
          `(${epochsRun[rep]} epochs)`,
        );
      }
    }
  } finally {
    testX.dispose();
    testYIdx.dispose();
  }

  const mean = accuracies.reduce((a, b) => a + b, 0) / accuracies.length;
  const variance =
    accuracies.reduce((a, b) => a + (b - mean) ** 2, 0) / accuracies.length;
  return {
    accuracies,
    mean,
    std: Math.sqrt(variance),
    epochsRun,
    config: opts,
    accounting: (container.metadata.accounting as Record<string, unknown>) ?? null,
    generatingConfig: (container.metadata.config as Record<string, unknown>) ?? null,
  };
}
