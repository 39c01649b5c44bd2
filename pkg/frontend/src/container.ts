/**
 * Reader for the synthetic-dataset container emitted by the dpsynth CLI.
 *
 * Layout (little-endian): 32-byte header — magic "DPCD", u16 version=1,
 * u16 reserved, u64 T, u64 d_x, u32 K, u32 reserved — then T*d_x float32
 * features row-major, T u8 labels in 1..K, then a u32 length-prefixed
 * UTF-8 JSON metadata blob.
 */

import { readFileSync } from "node:fs";

export interface AccountingEcho {
  epsilon: number | null;
  non_private?: boolean;
  delta?: number;
  alpha_star?: number | null;
  [key: string]: unknown;
}

export interface ContainerMetadata {
  config?: {
    l: number;
    t: number;
    sigma_x: number;
    sigma_y: number;
    c: number;
    seed: number;
  };
  accounting?: AccountingEcho;
  generated_per_class?: number[];
  source?: {
    name?: string;
    n?: number;
    d_x?: number;
    class_count?: number;
    label_values?: number[];
    [key: string]: unknown;
  };
  [key: string]: unknown;
}

export interface SyntheticContainer {
  t: number;
  dX: number;
  classCount: number;
  /** Row-major [t, dX]. */
  features: Float32Array;
  /** Values in 1..classCount. */
  labels: Uint8Array;
  metadata: ContainerMetadata;
}

const HEADER_BYTES = 32;

export function parseContainer(buf: Buffer): SyntheticContainer {
  if (buf.length < HEADER_BYTES) {
    throw new Error(`container too short: ${buf.length} bytes`);
  }
  const magic = buf.toString("latin1", 0, 4);
  if (magic !== "DPCD") {
    throw new Error(`bad container magic ${JSON.stringify(magic)}`);
  }
  const version = buf.readUInt16LE(4);
  if (version !== 1) {
    throw new Error(`unsupported container version ${version}`);
  }
  const t = Number(buf.readBigUInt64LE(8));
  const dX = Number(buf.readBigUInt64LE(16));
  const classCount = buf.readUInt32LE(24);

  const featBytes = t * dX * 4;
  let offset = HEADER_BYTES;
  if (buf.length < offset + featBytes + t + 4) {
    throw new Error(
      `truncated container: need ${offset + featBytes + t + 4} bytes, have ${buf.length}`,
    );
  }
  // copy so the typed array is aligned and detached from the file buffer
  const features = new Float32Array(
    buf.buffer.slice(buf.byteOffset + offset, buf.byteOffset + offset + featBytes),
  );
  offset += featBytes;
  const labels = new Uint8Array(buf.subarray(offset, offset + t));
  offset += t;
  const metaLen = buf.readUInt32LE(offset);
  offset += 4;
  if (buf.length < offset + metaLen) {
    throw new Error(`truncated metadata: need ${metaLen} bytes, have ${buf.length - offset}`);
  }
  const metadata = JSON.parse(buf.toString("utf-8", offset, offset + metaLen));
  for (const label of labels) {
    if (label < 1 || label > classCount) {
      throw new Error(`label ${label} outside 1..${classCount}`);
    }
  }
  return { t, dX, classCount, features, labels, metadata };
}

export function readContainer(path: string): SyntheticContainer {
  return parseContainer(readFileSync(path));
}
