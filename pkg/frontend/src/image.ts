// Frame decoding for still images: PNG, JPEG, and binary PPM (P6).
// Everything normalizes to 8-bit interleaved RGB.

import * as fs from "node:fs";

import * as jpeg from "jpeg-js";
import { PNG } from "pngjs";

import { FormatError } from "./errors.js";

export interface RgbImage {
  width: number;
  height: number;
  /** interleaved RGB, width * height * 3 bytes */
  rgb: Uint8Array;
}

export function decodePpm(blob: Buffer, label = "ppm"): RgbImage {
  // header: "P6" <ws> width <ws> height <ws> maxval <single ws> pixels
  // where comments (# to end of line) may appear inside the whitespace
  let pos = 0;
  const token = (): string => {
    for (;;) {
      while (pos < blob.length && /\s/.test(String.fromCharCode(blob[pos]))) pos++;
      if (pos < blob.length && blob[pos] === 0x23) {          // '#'
        while (pos < blob.length && blob[pos] !== 0x0a) pos++;
        continue;
      }
      break;
    }
    const start = pos;
    while (pos < blob.length && !/\s/.test(String.fromCharCode(blob[pos]))) pos++;
    if (start === pos) throw new FormatError(`${label}: truncated header`);
    return blob.subarray(start, pos).toString("ascii");
  };
  if (token() !== "P6") throw new FormatError(`${label}: not a binary PPM (P6)`);
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!(width > 0) || !(height > 0)) {
    throw new FormatError(`${label}: bad dimensions ${width}x${height}`);
  }
  if (maxval !== 255) throw new FormatError(`${label}: maxval ${maxval} unsupported (only 255)`);
  pos += 1;        // exactly one whitespace byte separates header and pixels
  const count = width * height * 3;
  if (blob.length - pos < count) {
    throw new FormatError(`${label}: pixel data truncated ` +
                          `(need ${count} bytes, have ${blob.length - pos})`);
  }
  return { width, height, rgb: new Uint8Array(blob.subarray(pos, pos + count)) };
}

export function encodePpm(img: RgbImage): Buffer {
  const header = Buffer.from(`P6\n${img.width} ${img.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(img.rgb)]);
}

function decodePng(blob: Buffer, label: string): RgbImage {
  let png: PNG;
  try {
    png = PNG.sync.read(blob);
  } catch (err) {
    throw new FormatError(`${label}: PNG decode failed: ${(err as Error).message}`);
  }
  const n = png.width * png.height;
  const rgb = new Uint8Array(n * 3);
  for (let i = 0; i < n; i++) {          // drop alpha
    rgb[i * 3] = png.data[i * 4];
    rgb[i * 3 + 1] = png.data[i * 4 + 1];
    rgb[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, rgb };
}

function decodeJpeg(blob: Buffer, label: string): RgbImage {
  let out: jpeg.UintArrRet;
  try {
    out = jpeg.decode(blob, { useTArray: true, formatAsRGBA: false, maxMemoryUsageInMB: 512 });
  } catch (err) {
    throw new FormatError(`${label}: JPEG decode failed: ${(err as Error).message}`);
  }
  return { width: out.width, height: out.height, rgb: new Uint8Array(out.data) };
}

const DECODERS: Array<[RegExp, (blob: Buffer, label: string) => RgbImage]> = [
  [/\.png$/i, decodePng],
  [/\.jpe?g$/i, decodeJpeg],
  [/\.ppm$/i, decodePpm],
];

export function imageExtensions(): string[] {
  return [".png", ".jpg", ".jpeg", ".ppm"];
}

export function decodeImageFile(filePath: string): RgbImage {
  for (const [pattern, decode] of DECODERS) {
    if (pattern.test(filePath)) return decode(fs.readFileSync(filePath), filePath);
  }
  throw new FormatError(`${filePath}: unsupported image type ` +
                        `(expected one of ${imageExtensions().join(", ")})`);
}
