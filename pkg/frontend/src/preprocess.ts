// Input conditioning before the backbone: Lanczos resize to 256x256,
// center crop to 224x224, scale to [0,1], normalize per channel with the
// ImageNet statistics. Arithmetic is float throughout; pixels are never
// re-quantized between stages.

import { UsageError } from "./errors.js";
import type { RgbImage } from "./image.js";

export const RESIZE_TO = 256;
export const CROP_TO = 224;
export const CHANNEL_MEAN = [0.485, 0.456, 0.406];
export const CHANNEL_STD = [0.229, 0.224, 0.225];

const LOBES = 3;

function lanczos3(x: number): number {
  if (x <= -LOBES || x >= LOBES) return 0;
  if (x === 0) return 1;
  const px = Math.PI * x;
  return (LOBES * Math.sin(px) * Math.sin(px / LOBES)) / (px * px);
}

interface TapRow {
  first: number;
  weights: Float64Array;
}

/**
 * Per-output-pixel filter taps along one axis. When shrinking, the kernel
 * is stretched by the scale factor so it keeps covering the source evenly
 * (plain subsampling would alias); weights are normalized to sum to 1.
 */
function buildTaps(srcSize: number, dstSize: number): TapRow[] {
  const scale = srcSize / dstSize;
  const stretch = Math.max(scale, 1);
  const support = LOBES * stretch;
  const rows: TapRow[] = [];
  for (let i = 0; i < dstSize; i++) {
    const center = (i + 0.5) * scale;
    const first = Math.max(0, Math.floor(center - support));
    const last = Math.min(srcSize, Math.ceil(center + support));
    const weights = new Float64Array(last - first);
    let total = 0;
    for (let s = first; s < last; s++) {
      const w = lanczos3((s + 0.5 - center) / stretch);
      weights[s - first] = w;
      total += w;
    }
    for (let k = 0; k < weights.length; k++) weights[k] /= total;
    rows.push({ first, weights });
  }
  return rows;
}

/** Separable Lanczos resample of interleaved RGB; returns float RGB in [0,255]. */
export function lanczosResize(img: RgbImage, dstWidth: number,
                              dstHeight: number): { width: number; height: number; rgb: Float32Array } {
  if (dstWidth < 1 || dstHeight < 1) {
    throw new UsageError(`resize target must be positive, got ${dstWidth}x${dstHeight}`);
  }
  const { width: sw, height: sh } = img;
  const hTaps = buildTaps(sw, dstWidth);
  const vTaps = buildTaps(sh, dstHeight);

  // horizontal pass: sh rows of dstWidth
  const mid = new Float64Array(sh * dstWidth * 3);
  for (let y = 0; y < sh; y++) {
    const rowOff = y * sw * 3;
    for (let x = 0; x < dstWidth; x++) {
      const { first, weights } = hTaps[x];
      let r = 0, g = 0, b = 0;
      for (let k = 0; k < weights.length; k++) {
        const p = rowOff + (first + k) * 3;
        const w = weights[k];
        r += w * img.rgb[p];
        g += w * img.rgb[p + 1];
        b += w * img.rgb[p + 2];
      }
      const q = (y * dstWidth + x) * 3;
      // reference lanczos implementations clamp between passes, and ringing
      // at hard edges makes that visible; do the same (values stay float)
      mid[q] = Math.min(255, Math.max(0, r));
      mid[q + 1] = Math.min(255, Math.max(0, g));
      mid[q + 2] = Math.min(255, Math.max(0, b));
    }
  }

  // vertical pass: dstHeight rows of dstWidth
  const out = new Float32Array(dstHeight * dstWidth * 3);
  for (let y = 0; y < dstHeight; y++) {
    const { first, weights } = vTaps[y];
    for (let x = 0; x < dstWidth; x++) {
      let r = 0, g = 0, b = 0;
      for (let k = 0; k < weights.length; k++) {
        const p = ((first + k) * dstWidth + x) * 3;
        const w = weights[k];
        r += w * mid[p];
        g += w * mid[p + 1];
        b += w * mid[p + 2];
      }
      const q = (y * dstWidth + x) * 3;
      // lanczos overshoots at hard edges; clamp to the pixel range
      out[q] = Math.min(255, Math.max(0, r));
      out[q + 1] = Math.min(255, Math.max(0, g));
      out[q + 2] = Math.min(255, Math.max(0, b));
    }
  }
  return { width: dstWidth, height: dstHeight, rgb: out };
}

export function centerCrop(img: { width: number; height: number; rgb: Float32Array },
                           size: number): { width: number; height: number; rgb: Float32Array } {
  if (img.width < size || img.height < size) {
    throw new UsageError(`cannot crop ${size}x${size} out of ${img.width}x${img.height}`);
  }
  const x0 = Math.floor((img.width - size) / 2);
  const y0 = Math.floor((img.height - size) / 2);
  const out = new Float32Array(size * size * 3);
  for (let y = 0; y < size; y++) {
    const src = ((y0 + y) * img.width + x0) * 3;
    out.set(img.rgb.subarray(src, src + size * 3), y * size * 3);
  }
  return { width: size, height: size, rgb: out };
}

/**
 * The full conditioning chain. Returns interleaved HWC floats,
 * CROP_TO * CROP_TO * 3 entries, standardized per channel.
 */
export function preprocess(img: RgbImage): Float32Array {
  const resized = lanczosResize(img, RESIZE_TO, RESIZE_TO);
  const crop = centerCrop(resized, CROP_TO);
  const out = new Float32Array(crop.rgb.length);
  for (let i = 0; i < out.length; i += 3) {
    out[i] = (crop.rgb[i] / 255 - CHANNEL_MEAN[0]) / CHANNEL_STD[0];
    out[i + 1] = (crop.rgb[i + 1] / 255 - CHANNEL_MEAN[1]) / CHANNEL_STD[1];
    out[i + 2] = (crop.rgb[i + 2] / 255 - CHANNEL_MEAN[2]) / CHANNEL_STD[2];
  }
  return out;
}
