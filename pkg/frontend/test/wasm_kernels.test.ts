import * as tf from "@tensorflow/tfjs";
import { beforeAll, describe, expect, it } from "vitest";

import { ensureBackend } from "../src/backend.js";

function filterGradient(
  x: tf.Tensor4D,
  w: tf.Tensor4D,
  pad: "same" | "valid",
): Float32Array {
  const loss = (filter: tf.Tensor) =>
    tf.conv2d(x, filter as tf.Tensor4D, 1, pad).square().sum();
  const grad = tf.grad(loss)(w);
  const data = grad.dataSync() as Float32Array;
  grad.dispose();
  return data;
}

describe("wasm conv filter-gradient shim", () => {
  beforeAll(async () => {
    await ensureBackend();
  });

  it.each(["same", "valid"] as const)(
    "matches the cpu reference for %s padding",
    async (pad) => {
      const backend = tf.getBackend();
      if (backend !== "wasm") return; // shim inactive; nothing to compare

      const xData = new Float32Array(2 * 8 * 8 * 3).map(() => Math.random() - 0.5);
      const wData = new Float32Array(3 * 3 * 3 * 4).map(() => Math.random() - 0.5);

      const xW = tf.tensor4d(xData, [2, 8, 8, 3]);
      const wW = tf.tensor4d(wData, [3, 3, 3, 4]);
      const wasmGrad = filterGradient(xW, wW, pad);
      xW.dispose();
      wW.dispose();

      await tf.setBackend("cpu");
      const xC = tf.tensor4d(xData, [2, 8, 8, 3]);
      const wC = tf.tensor4d(wData, [3, 3, 3, 4]);
      const cpuGrad = filterGradient(xC, wC, pad);
      xC.dispose();
      wC.dispose();
      await tf.setBackend("wasm");

      expect(wasmGrad.length).toBe(cpuGrad.length);
      for (let i = 0; i < cpuGrad.length; i++) {
        expect(Math.abs(wasmGrad[i] - cpuGrad[i])).toBeLessThanOrEqual(
          1e-4 * Math.max(1, Math.abs(cpuGrad[i])),
        );
      }
    },
  );

  it("rejects strides above one", async () => {
    if (tf.getBackend() !== "wasm") return;
    const x = tf.randomNormal<tf.Rank.R4>([1, 8, 8, 1]);
    const w = tf.randomNormal<tf.Rank.R4>([3, 3, 1, 2]);
    const loss = (filter: tf.Tensor) =>
      tf.conv2d(x, filter as tf.Tensor4D, 2, "same").square().sum();
    expect(() => tf.grad(loss)(w)).toThrow(/stride 1/);
    x.dispose();
    w.dispose();
  });
});
