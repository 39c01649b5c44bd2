import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { readCifarBatch, readIdxPair } from "../src/idx.js";

export function writeIdxPair(
  dir: string,
  images: number[][],
  labels: number[],
  side: number,
): { images: string; labels: string } {
  const n = images.length;
  const img = Buffer.alloc(16 + n * side * side);
  img.writeUInt32BE(0x803, 0);
  img.writeUInt32BE(n, 4);
  img.writeUInt32BE(side, 8);
  img.writeUInt32BE(side, 12);
  images.flat().forEach((v, i) => img.writeUInt8(v, 16 + i));
  const lbl = Buffer.alloc(8 + n);
  lbl.writeUInt32BE(0x801, 0);
  lbl.writeUInt32BE(n, 4);
  labels.forEach((v, i) => lbl.writeUInt8(v, 8 + i));
  const imagesPath = join(dir, "images.idx");
  const labelsPath = join(dir, "labels.idx");
  writeFileSync(imagesPath, img);
  writeFileSync(labelsPath, lbl);
  return { images: imagesPath, labels: labelsPath };
}

describe("idx reader", () => {
  it("parses a hand-built pair byte-exactly", () => {
    const dir = mkdtempSync(join(tmpdir(), "idx-"));
    const paths = writeIdxPair(dir, [[0, 1, 2, 3], [255, 128, 64, 32]], [3, 0], 2);
    const split = readIdxPair(paths.images, paths.labels);
    expect(split.n).toBe(2);
    expect(split.dX).toBe(4);
    expect(Array.from(split.features)).toEqual([0, 1, 2, 3, 255, 128, 64, 32]);
    expect(Array.from(split.rawLabels)).toEqual([3, 0]);
  });

  it("rejects count mismatches", () => {
    const dir = mkdtempSync(join(tmpdir(), "idx-"));
    const a = writeIdxPair(dir, [[0, 0, 0, 0]], [0], 2);
    const lbl = Buffer.alloc(8 + 2);
    lbl.writeUInt32BE(0x801, 0);
    lbl.writeUInt32BE(2, 4);
    const badLabels = join(dir, "bad-labels.idx");
    writeFileSync(badLabels, lbl);
    expect(() => readIdxPair(a.images, badLabels)).toThrow(/labels/);
  });
});

describe("cifar batch reader", () => {
  it("parses records", () => {
    const dir = mkdtempSync(join(tmpdir(), "cifar-"));
    const rec = Buffer.alloc(3073 * 2);
    rec.writeUInt8(7, 0);
    for (let j = 0; j < 3072; j++) rec.writeUInt8(j % 256, 1 + j);
    rec.writeUInt8(2, 3073);
    const path = join(dir, "test_batch.bin");
    writeFileSync(path, rec);
    const split = readCifarBatch(path);
    expect(split.n).toBe(2);
    expect(split.rawLabels[0]).toBe(7);
    expect(split.features[1]).toBe(1);
  });

  it("rejects wrong sizes", () => {
    const dir = mkdtempSync(join(tmpdir(), "cifar-"));
    const path = join(dir, "test_batch.bin");
    writeFileSync(path, Buffer.alloc(3072));
    expect(() => readCifarBatch(path)).toThrow(/3073/);
  });
});
