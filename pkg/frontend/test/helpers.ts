/** Shared fixture builders: raw bytes written independently of the readers. */

import { writeFileSync } from "node:fs";
import { join } from "node:path";

export function encodeContainer(
  t: number,
  dX: number,
  k: number,
  features: ArrayLike<number>,
  labels: ArrayLike<number>,
  metadata: object = {},
): Buffer {
  const metaBytes = Buffer.from(JSON.stringify(metadata), "utf-8");
  const buf = Buffer.alloc(32 + t * dX * 4 + t + 4 + metaBytes.length);
  buf.write("DPCD", 0, "latin1");
  buf.writeUInt16LE(1, 4);
  buf.writeUInt16LE(0, 6);
  buf.writeBigUInt64LE(BigInt(t), 8);
  buf.writeBigUInt64LE(BigInt(dX), 16);
  buf.writeUInt32LE(k, 24);
  buf.writeUInt32LE(0, 28);
  let off = 32;
  for (let i = 0; i < t * dX; i++) {
    buf.writeFloatLE(features[i], off);
    off += 4;
  }
  for (let i = 0; i < t; i++) {
    buf.writeUInt8(labels[i], off);
    off += 1;
  }
  buf.writeUInt32LE(metaBytes.length, off);
  metaBytes.copy(buf, off + 4);
  return buf;
}

export function writeIdxPair(
  dir: string,
  images: number[][],
  labels: number[],
  side: number,
  prefix = "",
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
  const imagesPath = join(dir, `${prefix}images.idx`);
  const labelsPath = join(dir, `${prefix}labels.idx`);
  writeFileSync(imagesPath, img);
  writeFileSync(labelsPath, lbl);
  return { images: imagesPath, labels: labelsPath };
}

/**
 * Trivially separable 28x28 two-class images: class 1 lights the top band,
 * class 2 the bottom band, with deterministic per-sample texture.
 */
export function toyImages(n: number, seedOffset = 0): { images: number[][]; labels: number[] } {
  const images: number[][] = [];
  const labels: number[] = [];
  for (let i = 0; i < n; i++) {
    const cls = i % 2;
    const img = new Array(28 * 28).fill(0);
    for (let r = 0; r < 28; r++) {
      for (let c = 0; c < 28; c++) {
        const inBand = cls === 0 ? r < 14 : r >= 14;
        const texture = ((i + seedOffset) * 31 + r * 7 + c * 13) % 40;
        img[r * 28 + c] = inBand ? 180 + texture : texture;
      }
    }
    images.push(img);
    labels.push(cls);
  }
  return { images, labels };
}
