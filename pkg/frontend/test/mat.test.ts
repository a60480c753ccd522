import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { FormatError } from "../src/errors.js";
import { matGet, readMat } from "../src/mat.js";
import { runPython, tempDir } from "./helpers.js";

function savemat(file: string, entriesPy: string, compress: boolean) {
  runPython(`
import numpy as np
from scipy.io import savemat
savemat(${JSON.stringify(file)}, {${entriesPy}}, do_compression=${compress ? "True" : "False"})
`);
}

describe("scipy-written archives", () => {
  for (const compress of [false, true]) {
    it(`reads a ${compress ? "compressed" : "plain"} double matrix`, () => {
      const dir = tempDir("mat-");
      const file = path.join(dir, "m.mat");
      savemat(file, `"user_score": np.arange(12, dtype=float).reshape(3, 4)`, compress);
      const parsed = readMat(fs.readFileSync(file));
      const m = parsed.matrices.get("user_score")!;
      expect(m.rows).toBe(3);
      expect(m.cols).toBe(4);
      // numpy reshape is row-major: element (r, c) = r * 4 + c
      for (let r = 0; r < 3; r++) {
        for (let c = 0; c < 4; c++) expect(matGet(m, r, c)).toBe(r * 4 + c);
      }
    });
  }

  it("reads every numeric storage class to the same values", () => {
    const dir = tempDir("mat-");
    const file = path.join(dir, "m.mat");
    const kinds = ["int8", "uint8", "int16", "uint16", "int32", "float32", "float64"];
    const entries = kinds
      .map(k => `"v_${k}": np.array([[3, 1], [4, 1], [5, 9]], dtype="${k}")`)
      .join(", ");
    savemat(file, entries, true);
    const parsed = readMat(fs.readFileSync(file));
    for (const k of kinds) {
      const m = parsed.matrices.get(`v_${k}`)!;
      expect(m).toBeDefined();
      expect([matGet(m, 0, 0), matGet(m, 1, 0), matGet(m, 2, 1)]).toEqual([3, 4, 9]);
    }
  });

  it("keeps fractional doubles exact", () => {
    const dir = tempDir("mat-");
    const file = path.join(dir, "m.mat");
    savemat(file, `"scores": np.array([[0.125, 0.75, 2.5]])`, true);
    const m = readMat(fs.readFileSync(file)).matrices.get("scores")!;
    expect(m.rows).toBe(1);
    expect([m.data[0], m.data[1], m.data[2]]).toEqual([0.125, 0.75, 2.5]);
  });

  it("skips non-numeric variables by name instead of failing", () => {
    const dir = tempDir("mat-");
    const file = path.join(dir, "m.mat");
    savemat(file,
            `"user_score": np.ones((2, 2)), "label": "driving home", ` +
            `"parts": np.array([["a"], ["bb"]], dtype=object)`,
            true);
    const parsed = readMat(fs.readFileSync(file));
    expect(parsed.matrices.has("user_score")).toBe(true);
    expect(parsed.skipped).toContain("label");
    expect(parsed.skipped).toContain("parts");
    expect(parsed.matrices.has("label")).toBe(false);
  });

  it("reads a 1x1 scalar", () => {
    const dir = tempDir("mat-");
    const file = path.join(dir, "m.mat");
    savemat(file, `"FPS": np.array([[29.97]])`, false);
    const m = readMat(fs.readFileSync(file)).matrices.get("FPS")!;
    expect(m.rows).toBe(1);
    expect(m.cols).toBe(1);
    expect(matGet(m, 0, 0)).toBeCloseTo(29.97, 10);
  });
});

describe("malformed input", () => {
  it("fingerprints files that are not v5 archives", () => {
    const junk = Buffer.alloc(200);
    junk.write("PK\x03\x04", 0, "latin1");
    expect(() => readMat(junk)).toThrow(FormatError);
    expect(() => readMat(junk)).toThrow(/not a MATLAB v5 file.*PK/s);
  });

  it("rejects files shorter than the header", () => {
    expect(() => readMat(Buffer.from("MATLAB 5.0"))).toThrow(/too short/);
  });

  it("refuses big-endian archives explicitly", () => {
    const dir = tempDir("mat-");
    const file = path.join(dir, "m.mat");
    savemat(file, `"x": np.ones((1, 1))`, false);
    const blob = fs.readFileSync(file);
    blob[126] = "M".charCodeAt(0);      // flip the endian marker to MI
    blob[127] = "I".charCodeAt(0);
    expect(() => readMat(blob)).toThrow(/big-endian/);
  });

  it("reports elements that overrun the file", () => {
    const dir = tempDir("mat-");
    const file = path.join(dir, "m.mat");
    savemat(file, `"x": np.ones((4, 4))`, false);
    const blob = fs.readFileSync(file);
    expect(() => readMat(blob.subarray(0, blob.length - 8))).toThrow(FormatError);
  });
});
