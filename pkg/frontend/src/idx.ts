/**
 * IDX image/label readers (big-endian) plus the CIFAR-10 test batch, used
 * to load the real, unmixed and noise-free test split.
 */

import { readFileSync } from "node:fs";

export interface TestSplit {
  /** Row-major [n, dX] raw pixel values 0..255. */
  features: Float32Array;
  /** Raw label values as stored in the source files (0-based for both formats). */
  rawLabels: Int32Array;
  n: number;
  dX: number;
}

const IDX_IMAGE_MAGIC = 0x00000803;
const IDX_LABEL_MAGIC = 0x00000801;
const CIFAR_RECORD_BYTES = 3073;

export function readIdxPair(imagesPath: string, labelsPath: string): TestSplit {
  const img = readFileSync(imagesPath);
  if (img.length < 16) throw new Error(`${imagesPath}: truncated IDX header`);
  if (img.readUInt32BE(0) !== IDX_IMAGE_MAGIC) {
    throw new Error(`${imagesPath}: bad IDX image magic`);
  }
  const n = img.readUInt32BE(4);
  const rows = img.readUInt32BE(8);
  const cols = img.readUInt32BE(12);
  const dX = rows * cols;
  if (img.length !== 16 + n * dX) {
    throw new Error(`${imagesPath}: expected ${16 + n * dX} bytes, got ${img.length}`);
  }

  const lbl = readFileSync(labelsPath);
  if (lbl.length < 8) throw new Error(`${labelsPath}: truncated IDX header`);
  if (lbl.readUInt32BE(0) !== IDX_LABEL_MAGIC) {
    throw new Error(`${labelsPath}: bad IDX label magic`);
  }
  const nLabels = lbl.readUInt32BE(4);
  if (nLabels !== n) {
    throw new Error(`${n} images but ${nLabels} labels`);
  }
  if (lbl.length !== 8 + n) {
    throw new Error(`${labelsPath}: expected ${8 + n} bytes, got ${lbl.length}`);
  }

  const features = new Float32Array(n * dX);
  for (let i = 0; i < n * dX; i++) features[i] = img[16 + i];
  const rawLabels = new Int32Array(n);
  for (let i = 0; i < n; i++) rawLabels[i] = lbl[8 + i];
  return { features, rawLabels, n, dX };
}

export function readCifarBatch(path: string): TestSplit {
  const buf = readFileSync(path);
  if (buf.length === 0 || buf.length % CIFAR_RECORD_BYTES !== 0) {
    throw new Error(`${path}: size ${buf.length} is not a multiple of ${CIFAR_RECORD_BYTES}`);
  }
  const n = buf.length / CIFAR_RECORD_BYTES;
  const dX = CIFAR_RECORD_BYTES - 1;
  const features = new Float32Array(n * dX);
  const rawLabels = new Int32Array(n);
  for (let i = 0; i < n; i++) {
    const base = i * CIFAR_RECORD_BYTES;
    rawLabels[i] = buf[base];
    if (rawLabels[i] > 9) throw new Error(`${path}: label byte ${rawLabels[i]} exceeds 9`);
    for (let j = 0; j < dX; j++) features[i * dX + j] = buf[base + 1 + j];
  }
  return { features, rawLabels, n, dX };
}
