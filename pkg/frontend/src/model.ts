/**
 * The small image classifier trained on synthetic data.
 *
 * Architecture: 5x5x32 conv (stride 1, pad 2) -> ReLU -> BatchNorm ->
 * 2x2 max-pool -> 3x3x64 conv (stride 1, pad 1) -> ReLU -> BatchNorm ->
 * 2x2 max-pool -> flatten (3136) -> FC 100 -> ReLU -> dropout 0.5 ->
 * FC 100 -> ReLU -> dropout 0.5 -> FC classCount. Input is 28x28 with 1
 * channel; 3-channel inputs adapt the first convolution only.
 */

import * as tf from "@tensorflow/tfjs";

export interface ModelOptions {
  channels: 1 | 3;
  classCount?: number;
  seed?: number;
}

export const INPUT_SIDE = 28;

export function buildClassifier({ channels, classCount = 10, seed = 42 }: ModelOptions): tf.Sequential {
  const init = (offset: number) => tf.initializers.glorotUniform({ seed: seed + offset });
  const model = tf.sequential();
  model.add(
    tf.layers.conv2d({
      inputShape: [INPUT_SIDE, INPUT_SIDE, channels],
      filters: 32,
      kernelSize: 5,
      strides: 1,
      padding: "same",
      activation: "relu",
      kernelInitializer: init(1),
    }),
  );
  model.add(tf.layers.batchNormalization());
  model.add(tf.layers.maxPooling2d({ poolSize: 2, strides: 2 }));
  model.add(
    tf.layers.conv2d({
      filters: 64,
      kernelSize: 3,
      strides: 1,
      padding: "same",
      activation: "relu",
      kernelInitializer: init(2),
    }),
  );
  model.add(tf.layers.batchNormalization());
  model.add(tf.layers.maxPooling2d({ poolSize: 2, strides: 2 }));
  model.add(tf.layers.flatten());
  model.add(tf.layers.dense({ units: 100, activation: "relu", kernelInitializer: init(3) }));
  model.add(tf.layers.dropout({ rate: 0.5, seed: seed + 4 }));
  model.add(tf.layers.dense({ units: 100, activation: "relu", kernelInitializer: init(5) }));
  model.add(tf.layers.dropout({ rate: 0.5, seed: seed + 6 }));
  model.add(tf.layers.dense({ units: classCount, activation: "softmax", kernelInitializer: init(7) }));
  return model;
}

/**
 * Halve the optimizer's learning rate when validation loss stalls.
 * Returns a fit() callback; tracks its own best-loss state.
 */
export function plateauScheduler(
  model: tf.Sequential,
  initial: number,
  patience = 2,
  factor = 0.5,
  floor = 1e-5,
): { callback: tf.CustomCallback; current: () => number } {
  let best = Infinity;
  let stale = 0;
  let lr = initial;
  const callback = new tf.CustomCallback({
    onEpochEnd: async (_epoch, logs) => {
      const valLoss = logs?.val_loss ?? logs?.loss;
      if (valLoss === undefined) return;
      if (valLoss < best - 1e-6) {
        best = valLoss;
        stale = 0;
        return;
      }
      stale += 1;
      if (stale >= patience && lr > floor) {
        lr = Math.max(floor, lr * factor);
        // AdamOptimizer exposes learningRate as a mutable field
        (model.optimizer as unknown as { learningRate: number }).learningRate = lr;
        stale = 0;
      }
    },
  });
  return { callback, current: () => lr };
}
