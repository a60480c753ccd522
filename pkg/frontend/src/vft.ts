// Binary frame-feature files.
//
//   offset 0   magic "VFT1"
//   offset 4   version      u32 LE (currently 1)
//   offset 8   feature_dim  u32 LE
//   offset 12  num_frames   u32 LE
//   offset 16  fps          f32 LE
//   offset 20  id_len       u32 LE
//   offset 24  video_id     UTF-8, id_len bytes
//   then       num_frames x feature_dim f32 LE, row-major

import * as fs from "node:fs";
import * as path from "node:path";

import { FormatError, UsageError } from "./errors.js";

const MAGIC = Buffer.from("VFT1", "ascii");
const VERSION = 1;

export interface FeatureSequence {
  videoId: string;
  fps: number;
  featureDim: number;
  numFrames: number;
  /** row-major, numFrames * featureDim entries */
  features: Float32Array;
}

export function makeSequence(videoId: string, fps: number, featureDim: number,
                             rows: Float32Array[]): FeatureSequence {
  if (!videoId) throw new UsageError("video_id must be non-empty");
  if (rows.length < 1 || featureDim < 1) {
    throw new UsageError(`features must be (num_frames, dim), got (${rows.length}, ${featureDim})`);
  }
  // fps travels as f32, so quantize up front: written == re-read
  const fps32 = Math.fround(fps);
  if (!Number.isFinite(fps32) || fps32 <= 0) {
    throw new UsageError(`fps must be positive and finite, got ${fps}`);
  }
  const features = new Float32Array(rows.length * featureDim);
  rows.forEach((row, i) => {
    if (row.length !== featureDim) {
      throw new UsageError(`frame ${i} has ${row.length} dims, expected ${featureDim}`);
    }
    for (let j = 0; j < featureDim; j++) {
      if (!Number.isFinite(row[j])) {
        throw new UsageError(`features contain non-finite values (frame ${i} dim ${j})`);
      }
    }
    features.set(row, i * featureDim);
  });
  return { videoId, fps: fps32, featureDim, numFrames: rows.length, features };
}

export function encodeFeatures(seq: FeatureSequence): Buffer {
  const idBytes = Buffer.from(seq.videoId, "utf-8");
  const header = Buffer.alloc(24);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(seq.featureDim, 8);
  header.writeUInt32LE(seq.numFrames, 12);
  header.writeFloatLE(seq.fps, 16);
  header.writeUInt32LE(idBytes.length, 20);
  const payload = Buffer.alloc(seq.features.length * 4);
  for (let i = 0; i < seq.features.length; i++) {
    payload.writeFloatLE(seq.features[i], i * 4);
  }
  return Buffer.concat([header, idBytes, payload]);
}

/**
 * Atomic write: the bytes land in a sibling temp file that is renamed into
 * place only once complete, so a failure mid-stream leaves nothing behind.
 */
export function writeFeatures(seq: FeatureSequence, filePath: string): void {
  const blob = encodeFeatures(seq);
  const tmp = path.join(path.dirname(filePath),
                        `.${path.basename(filePath)}.${process.pid}.tmp`);
  fs.writeFileSync(tmp, blob);
  try {
    fs.renameSync(tmp, filePath);
  } catch (err) {
    fs.rmSync(tmp, { force: true });
    throw err;
  }
}

export function decodeFeatures(blob: Buffer, label = "buffer"): FeatureSequence {
  const need = (count: number, offset: number, what: string) => {
    if (blob.length < offset + count) {
      throw new FormatError(
        `${label}: truncated ${what} at offset ${offset} ` +
        `(need ${count} bytes, have ${blob.length - offset})`);
    }
  };
  need(4, 0, "magic");
  if (!blob.subarray(0, 4).equals(MAGIC)) {
    throw new FormatError(`${label}: bad magic at offset 0, expected "VFT1"`);
  }
  need(20, 4, "header");
  const version = blob.readUInt32LE(4);
  const dim = blob.readUInt32LE(8);
  const frames = blob.readUInt32LE(12);
  const fps = blob.readFloatLE(16);
  const idLen = blob.readUInt32LE(20);
  if (version !== VERSION) {
    throw new FormatError(`${label}: unsupported version ${version} at offset 4`);
  }
  if (dim === 0) throw new FormatError(`${label}: zero feature_dim at offset 8`);
  if (frames === 0) throw new FormatError(`${label}: zero num_frames at offset 12`);
  if (!Number.isFinite(fps) || fps <= 0) {
    throw new FormatError(`${label}: invalid fps ${fps} at offset 16`);
  }
  need(idLen, 24, "video_id");
  const videoId = blob.subarray(24, 24 + idLen).toString("utf-8");
  const payloadOff = 24 + idLen;
  const expect = 4 * dim * frames;
  const have = blob.length - payloadOff;
  if (have !== expect) {
    throw new FormatError(
      `${label}: payload at offset ${payloadOff} holds ${have} bytes, ` +
      `expected ${expect} (${frames} frames x ${dim} dims x 4)`);
  }
  const features = new Float32Array(dim * frames);
  for (let i = 0; i < features.length; i++) {
    features[i] = blob.readFloatLE(payloadOff + i * 4);
  }
  for (let i = 0; i < features.length; i++) {
    if (!Number.isFinite(features[i])) {
      const r = Math.floor(i / dim);
      const c = i % dim;
      throw new FormatError(
        `${label}: non-finite value at frame ${r} dim ${c} ` +
        `(offset ${payloadOff + 4 * i})`);
    }
  }
  return { videoId, fps, featureDim: dim, numFrames: frames, features };
}

export function readFeatures(filePath: string): FeatureSequence {
  return decodeFeatures(fs.readFileSync(filePath), filePath);
}
