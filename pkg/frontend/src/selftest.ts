// Drift guard for the whole image-to-feature path. The repo ships a small
// bundle of images with the features they produced when the bundle was
// made; recomputing them must agree within 1e-4 per value, otherwise some
// stage (decode, resample, crop, normalize, backbone) changed behavior.

import * as fs from "node:fs";
import * as path from "node:path";

import { extractFeatures } from "./backbone.js";
import { UsageError } from "./errors.js";
import { decodeImageFile } from "./image.js";
import { listFrameFiles } from "./extract.js";
import { preprocess } from "./preprocess.js";
import { readFeatures } from "./vft.js";

export const TOLERANCE = 1e-4;

export interface SelftestReport {
  backbone: string;
  images: number;
  maxDeviation: number;
  /** "image 2 dim 517" style locator for the worst value */
  worstAt: string;
  ok: boolean;
}

export function runSelftest(bundleDir: string,
                            tolerance = TOLERANCE): SelftestReport[] {
  const imagesDir = path.join(bundleDir, "images");
  if (!fs.existsSync(imagesDir)) {
    throw new UsageError(`selftest bundle '${bundleDir}' has no images/ directory`);
  }
  const imageFiles = listFrameFiles(imagesDir);
  if (imageFiles.length === 0) {
    throw new UsageError(`selftest bundle '${bundleDir}' holds no images`);
  }
  const references = fs.readdirSync(bundleDir).filter(n => n.endsWith(".vft")).sort();
  if (references.length === 0) {
    throw new UsageError(`selftest bundle '${bundleDir}' holds no reference .vft files`);
  }

  const pixels = imageFiles.map(file => preprocess(decodeImageFile(file)));
  const reports: SelftestReport[] = [];
  for (const ref of references) {
    const backbone = ref.replace(/\.vft$/, "");
    const expected = readFeatures(path.join(bundleDir, ref));
    if (expected.numFrames !== imageFiles.length) {
      throw new UsageError(
        `bundle reference ${ref} holds ${expected.numFrames} rows ` +
        `but images/ holds ${imageFiles.length} files`);
    }
    let maxDeviation = 0;
    let worstAt = "";
    pixels.forEach((pix, i) => {
      const row = extractFeatures(pix, backbone);
      for (let j = 0; j < row.length; j++) {
        const dev = Math.abs(row[j] - expected.features[i * expected.featureDim + j]);
        if (dev > maxDeviation) {
          maxDeviation = dev;
          worstAt = `image ${i} dim ${j}`;
        }
      }
    });
    reports.push({
      backbone,
      images: imageFiles.length,
      maxDeviation,
      worstAt,
      ok: maxDeviation <= tolerance,
    });
  }
  return reports;
}

/** The bundle shipped with the package, resolved relative to this module. */
export function defaultBundleDir(): string {
  const here = path.dirname(new URL(import.meta.url).pathname);
  return path.resolve(here, "..", "selftest");
}
