import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { UsageError } from "../src/errors.js";
import { CHANNEL_MEAN, CHANNEL_STD, CROP_TO, RESIZE_TO, centerCrop,
         lanczosResize, preprocess } from "../src/preprocess.js";
import { synthImage } from "./helpers.js";

function unpack(p: { width: number; height: number; rgb_b64: string }) {
  return { width: p.width, height: p.height,
           rgb: new Uint8Array(Buffer.from(p.rgb_b64, "base64")) };
}

describe("lanczos resize", () => {
  it("matches the Pillow reference outputs within rounding", () => {
    // fixtures generated once with PIL Image.resize(..., LANCZOS); the
    // reference quantizes to uint8 between passes, we stay float, so
    // agreement is within one 8-bit step, not exact
    const doc = JSON.parse(fs.readFileSync(
      path.join(path.dirname(fileURLToPath(import.meta.url)),
                "fixtures", "lanczos_pillow.json"), "utf-8"));
    for (const c of doc.cases) {
      const src = unpack(c.src);
      const ref = unpack(c.dst);
      const got = lanczosResize(src, ref.width, ref.height);
      let maxDiff = 0;
      let sum = 0;
      for (let i = 0; i < ref.rgb.length; i++) {
        const d = Math.abs(Math.round(got.rgb[i]) - ref.rgb[i]);
        maxDiff = Math.max(maxDiff, d);
        sum += d;
      }
      expect(maxDiff, c.name).toBeLessThanOrEqual(1);
      expect(sum / ref.rgb.length, c.name).toBeLessThan(0.2);
    }
  });

  it("is exact on constant images at any scale", () => {
    const img = synthImage(50, 30, () => [37, 200, 91]);
    for (const [w, h] of [[17, 23], [100, 60], [256, 256]] as const) {
      const out = lanczosResize(img, w, h);
      for (let i = 0; i < out.rgb.length; i += 3) {
        expect(out.rgb[i]).toBeCloseTo(37, 6);
        expect(out.rgb[i + 1]).toBeCloseTo(200, 6);
        expect(out.rgb[i + 2]).toBeCloseTo(91, 6);
      }
    }
  });

  it("identity resize reproduces the image", () => {
    const img = synthImage(24, 16, (x, y) => [x * 10, y * 15, (x * y) % 256]);
    const out = lanczosResize(img, 24, 16);
    for (let i = 0; i < img.rgb.length; i++) {
      expect(Math.abs(out.rgb[i] - img.rgb[i])).toBeLessThan(1e-6);
    }
  });

  it("clamps ringing overshoot into the pixel range", () => {
    const img = synthImage(64, 64, x => (x >= 32 ? [255, 255, 255] : [0, 0, 0]));
    const out = lanczosResize(img, 40, 40);
    for (const v of out.rgb) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(255);
    }
  });

  it("rejects degenerate targets", () => {
    const img = synthImage(8, 8, () => [0, 0, 0]);
    expect(() => lanczosResize(img, 0, 8)).toThrow(UsageError);
  });
});

describe("center crop", () => {
  it("takes the middle square", () => {
    // plant a distinct value at the exact center of a 6x6, crop 2x2
    const img = { width: 6, height: 6, rgb: new Float32Array(6 * 6 * 3) };
    img.rgb[(2 * 6 + 2) * 3] = 11;  // (x=2,y=2) lands inside crop from (2,2)
    img.rgb[(3 * 6 + 3) * 3] = 22;
    const out = centerCrop(img, 2);
    expect(out.rgb[0]).toBe(11);
    expect(out.rgb[(1 * 2 + 1) * 3]).toBe(22);
  });

  it("refuses crops larger than the image", () => {
    const img = { width: 4, height: 4, rgb: new Float32Array(48) };
    expect(() => centerCrop(img, 5)).toThrow(UsageError);
  });
});

describe("full conditioning chain", () => {
  it("produces the documented shape", () => {
    const img = synthImage(320, 240, (x, y) => [x % 256, y % 256, 128]);
    expect(preprocess(img).length).toBe(CROP_TO * CROP_TO * 3);
  });

  it("standardizes channels with the ImageNet constants", () => {
    // a constant gray image must map to exactly (v/255 - mean) / std
    const img = synthImage(300, 300, () => [128, 128, 128]);
    const out = preprocess(img);
    for (let c = 0; c < 3; c++) {
      const want = (128 / 255 - CHANNEL_MEAN[c]) / CHANNEL_STD[c];
      expect(out[c]).toBeCloseTo(want, 5);
      expect(out[out.length - 3 + c]).toBeCloseTo(want, 5);
    }
  });

  it("upscales small frames rather than failing", () => {
    const img = synthImage(40, 30, (x, y) => [x * 6, y * 8, 0]);
    expect(preprocess(img).length).toBe(CROP_TO * CROP_TO * 3);
  });

  it("resize target exceeds crop target", () => {
    expect(RESIZE_TO).toBeGreaterThan(CROP_TO);
  });
});
