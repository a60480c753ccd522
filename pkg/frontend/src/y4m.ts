// YUV4MPEG2 (.y4m) reader: the uncompressed interchange format that normal
// video tooling can emit losslessly (ffmpeg: `-f yuv4mpeg`). The stream
// declares its own frame rate, which is exactly what the feature files
// need to record. Planar YCbCr is converted to RGB with BT.601 studio
// range; 420/422 chroma is upsampled by sample repetition.

import { ExtractionError, FormatError } from "./errors.js";
import type { RgbImage } from "./image.js";

export interface Y4mVideo {
  width: number;
  height: number;
  fps: number;
  frames: RgbImage[];
}

const PLANE_DIVISORS: Record<string, [number, number]> = {
  // [x divisor, y divisor] for the chroma planes
  "420": [2, 2],
  "420jpeg": [2, 2],
  "420mpeg2": [2, 2],
  "420paldv": [2, 2],
  "422": [2, 1],
  "444": [1, 1],
};

function clampByte(v: number): number {
  return v < 0 ? 0 : v > 255 ? 255 : Math.round(v);
}

function ycbcrToRgb(y: Uint8Array, cb: Uint8Array, cr: Uint8Array,
                    width: number, height: number,
                    dx: number, dy: number): RgbImage {
  const cw = Math.ceil(width / dx);
  const rgb = new Uint8Array(width * height * 3);
  for (let row = 0; row < height; row++) {
    const crow = Math.floor(row / dy) * cw;
    for (let col = 0; col < width; col++) {
      const c = y[row * width + col] - 16;
      const idx = crow + Math.floor(col / dx);
      const d = cb[idx] - 128;
      const e = cr[idx] - 128;
      const p = (row * width + col) * 3;
      rgb[p] = clampByte(1.164383 * c + 1.596027 * e);
      rgb[p + 1] = clampByte(1.164383 * c - 0.391762 * d - 0.812968 * e);
      rgb[p + 2] = clampByte(1.164383 * c + 2.017232 * d);
    }
  }
  return { width, height, rgb };
}

export function decodeY4m(blob: Buffer, label = "y4m"): Y4mVideo {
  const headerEnd = blob.indexOf(0x0a);
  if (headerEnd < 0) throw new FormatError(`${label}: no stream header line`);
  const header = blob.subarray(0, headerEnd).toString("ascii");
  const fields = header.split(" ");
  if (fields[0] !== "YUV4MPEG2") {
    throw new FormatError(`${label}: not a YUV4MPEG2 stream (header '${fields[0]}')`);
  }
  let width = 0, height = 0, fpsNum = 0, fpsDen = 0;
  let colorspace = "420";
  for (const field of fields.slice(1)) {
    const tag = field[0];
    const value = field.slice(1);
    if (tag === "W") width = parseInt(value, 10);
    else if (tag === "H") height = parseInt(value, 10);
    else if (tag === "F") {
      const [n, d] = value.split(":");
      fpsNum = parseInt(n, 10);
      fpsDen = parseInt(d, 10);
    } else if (tag === "C") colorspace = value;
    // I, A, X fields carry nothing the pipeline needs
  }
  if (!(width > 0) || !(height > 0)) {
    throw new FormatError(`${label}: missing or bad W/H in header '${header}'`);
  }
  if (!(fpsNum > 0) || !(fpsDen > 0)) {
    throw new FormatError(`${label}: missing or bad frame rate in header '${header}'`);
  }
  const divisors = PLANE_DIVISORS[colorspace];
  if (!divisors) {
    throw new FormatError(
      `${label}: colourspace C${colorspace} unsupported ` +
      `(supported: ${Object.keys(PLANE_DIVISORS).map(c => "C" + c).join(", ")})`);
  }
  const [dx, dy] = divisors;
  const ySize = width * height;
  const cSize = Math.ceil(width / dx) * Math.ceil(height / dy);

  const frames: RgbImage[] = [];
  let pos = headerEnd + 1;
  while (pos < blob.length) {
    const lineEnd = blob.indexOf(0x0a, pos);
    if (lineEnd < 0) {
      throw new ExtractionError(
        `${label}: truncated FRAME marker after frame ${frames.length}`);
    }
    const marker = blob.subarray(pos, lineEnd).toString("ascii");
    if (!marker.startsWith("FRAME")) {
      throw new FormatError(
        `${label}: expected FRAME marker before frame ${frames.length}, got '${marker}'`);
    }
    pos = lineEnd + 1;
    const frameBytes = ySize + 2 * cSize;
    if (blob.length - pos < frameBytes) {
      throw new ExtractionError(
        `${label}: frame ${frames.length} truncated ` +
        `(need ${frameBytes} bytes, have ${blob.length - pos})`);
    }
    const y = new Uint8Array(blob.subarray(pos, pos + ySize));
    const cb = new Uint8Array(blob.subarray(pos + ySize, pos + ySize + cSize));
    const cr = new Uint8Array(blob.subarray(pos + ySize + cSize, pos + frameBytes));
    frames.push(ycbcrToRgb(y, cb, cr, width, height, dx, dy));
    pos += frameBytes;
  }
  if (frames.length === 0) throw new FormatError(`${label}: stream holds no frames`);
  return { width, height, fps: fpsNum / fpsDen, frames };
}
