import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { UsageError } from "../src/errors.js";
import { TOLERANCE, defaultBundleDir, runSelftest } from "../src/selftest.js";
import { tempDir } from "./helpers.js";

/** Copy the shipped bundle so a test can deface its own private copy. */
function copyBundle(): string {
  const dst = path.join(tempDir("bundle-"), "selftest");
  fs.cpSync(defaultBundleDir(), dst, { recursive: true });
  return dst;
}

function bumpReferenceValue(vftPath: string, frame: number, dim: number,
                            featureDim: number, delta: number) {
  const blob = fs.readFileSync(vftPath);
  const idLen = blob.readUInt32LE(20);
  const off = 24 + idLen + 4 * (frame * featureDim + dim);
  blob.writeFloatLE(blob.readFloatLE(off) + delta, off);
  fs.writeFileSync(vftPath, blob);
}

describe("shipped bundle", () => {
  it("recomputes to the stored references", () => {
    const reports = runSelftest(defaultBundleDir());
    expect(reports.map(r => r.backbone)).toEqual(["googlenet", "resnet50"]);
    for (const r of reports) {
      expect(r.ok).toBe(true);
      expect(r.images).toBe(3);
      expect(r.maxDeviation).toBeLessThanOrEqual(TOLERANCE);
    }
  });
});

describe("drift detection", () => {
  it("catches a reference value off by more than the tolerance", () => {
    const bundle = copyBundle();
    bumpReferenceValue(path.join(bundle, "googlenet.vft"), 1, 517, 1024, 3e-4);
    const reports = runSelftest(bundle);
    const byName = new Map(reports.map(r => [r.backbone, r]));
    const g = byName.get("googlenet")!;
    expect(g.ok).toBe(false);
    expect(g.maxDeviation).toBeCloseTo(3e-4, 5);
    expect(g.worstAt).toBe("image 1 dim 517");
    expect(byName.get("resnet50")!.ok).toBe(true);
  });

  it("stays quiet for a nudge inside the tolerance", () => {
    const bundle = copyBundle();
    bumpReferenceValue(path.join(bundle, "resnet50.vft"), 0, 3, 2048, 5e-5);
    const reports = runSelftest(bundle);
    expect(reports.every(r => r.ok)).toBe(true);
  });

  it("honours a caller-supplied tolerance", () => {
    const bundle = copyBundle();
    bumpReferenceValue(path.join(bundle, "googlenet.vft"), 0, 0, 1024, 5e-5);
    const strict = runSelftest(bundle, 1e-6);
    expect(strict.find(r => r.backbone === "googlenet")!.ok).toBe(false);
  });
});

describe("broken bundles", () => {
  it("rejects a bundle without images", () => {
    const bundle = copyBundle();
    fs.rmSync(path.join(bundle, "images"), { recursive: true });
    expect(() => runSelftest(bundle)).toThrow(UsageError);
    expect(() => runSelftest(bundle)).toThrow(/no images\/ directory/);
  });

  it("rejects a bundle without references", () => {
    const bundle = copyBundle();
    for (const n of fs.readdirSync(bundle)) {
      if (n.endsWith(".vft")) fs.rmSync(path.join(bundle, n));
    }
    expect(() => runSelftest(bundle)).toThrow(/no reference \.vft files/);
  });

  it("rejects image/reference count mismatches", () => {
    const bundle = copyBundle();
    const images = fs.readdirSync(path.join(bundle, "images")).sort();
    fs.rmSync(path.join(bundle, "images", images[0]));
    expect(() => runSelftest(bundle)).toThrow(/3 rows.*2 files/s);
  });
});
