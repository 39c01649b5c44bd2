import * as tf from "@tensorflow/tfjs";
import { describe, expect, it } from "vitest";

import { buildClassifier } from "../src/model.js";
import { channelsForWidth, normalizeLikePipeline } from "../src/train.js";

describe("classifier architecture", () => {
  it("maps 28x28x1 input to 10 classes through a 3136-wide flatten", () => {
    const model = buildClassifier({ channels: 1 });
    const flatten = model.layers.find((l) => l.name.startsWith("flatten"));
    expect(flatten?.outputShape).toEqual([null, 3136]);
    const out = model.predict(tf.zeros([2, 28, 28, 1])) as tf.Tensor;
    expect(out.shape).toEqual([2, 10]);
    out.dispose();
    model.dispose();
  });

  it("adapts the input convolution for 3 channels", () => {
    const model = buildClassifier({ channels: 3 });
    const out = model.predict(tf.zeros([1, 28, 28, 3])) as tf.Tensor;
    expect(out.shape).toEqual([1, 10]);
    out.dispose();
    model.dispose();
  });

  it("is seed-deterministic at initialization", () => {
    const a = buildClassifier({ channels: 1, seed: 5 });
    const b = buildClassifier({ channels: 1, seed: 5 });
    const wa = a.getWeights()[0].dataSync();
    const wb = b.getWeights()[0].dataSync();
    expect(Array.from(wa.slice(0, 16))).toEqual(Array.from(wb.slice(0, 16)));
    a.dispose();
    b.dispose();
  });
});

describe("input plumbing", () => {
  it("derives channels from the container width", () => {
    expect(channelsForWidth(784)).toBe(1);
    expect(channelsForWidth(2352)).toBe(3);
    expect(() => channelsForWidth(100)).toThrow(/width/);
  });

  it("normalization clips every row onto the c-ball", () => {
    const n = 8;
    const dX = 16;
    const raw = new Float32Array(n * dX);
    for (let i = 0; i < raw.length; i++) raw[i] = (i * 37) % 251;
    const out = normalizeLikePipeline(raw, n, dX, 1.0);
    for (let i = 0; i < n; i++) {
      let norm = 0;
      for (let j = 0; j < dX; j++) norm += out[i * dX + j] ** 2;
      expect(Math.sqrt(norm)).toBeLessThanOrEqual(1.0 + 1e-6);
    }
  });
});
