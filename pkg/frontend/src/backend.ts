/**
 * Pick the fastest available tf.js backend: native tensorflow when
 * @tensorflow/tfjs-node is installed, else the bundled WASM backend
 * (SIMD/threads), else the pure-JS CPU fallback.
 */

import { createRequire } from "node:module";
import { dirname, sep } from "node:path";

import * as tf from "@tensorflow/tfjs";

let initialized: Promise<string> | null = null;

async function pick(): Promise<string> {
  try {
    await import("@tensorflow/tfjs-node" as string);
    await tf.ready();
    return tf.getBackend();
  } catch {
    // native backend not installed
  }
  try {
    const wasm = await import("@tensorflow/tfjs-backend-wasm");
    const { registerWasmTrainingKernels } = await import("./wasm_kernels.js");
    const require_ = createRequire(import.meta.url);
    wasm.setWasmPaths(dirname(require_.resolve("@tensorflow/tfjs-backend-wasm")) + sep);
    if (await tf.setBackend("wasm")) {
      registerWasmTrainingKernels();
      await tf.ready();
      return tf.getBackend();
    }
  } catch {
    // wasm backend not installed or failed to load
  }
  await tf.ready();
  return tf.getBackend();
}

export function ensureBackend(): Promise<string> {
  if (!initialized) initialized = pick();
  return initialized;
}
