import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

/** Run a python snippet against the training-side package; returns stdout. */
export function runPython(code: string): string {
  const res = spawnSync("python3", ["-c", code], { encoding: "utf-8" });
  if (res.status !== 0) {
    throw new Error(`python3 failed (${res.status}):\n${res.stderr}`);
  }
  return res.stdout;
}

export function tempDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

/** Deterministic RGB test card. */
export function synthImage(width: number, height: number,
                           pixelFn: (x: number, y: number) => [number, number, number]) {
  const rgb = new Uint8Array(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = pixelFn(x, y);
      const p = (y * width + x) * 3;
      rgb[p] = r & 0xff;
      rgb[p + 1] = g & 0xff;
      rgb[p + 2] = b & 0xff;
    }
  }
  return { width, height, rgb };
}

/** Build a tiny y4m stream from planar frames. */
export function buildY4m(opts: {
  width: number; height: number; fpsNum: number; fpsDen: number;
  colorspace?: string;
  frames: Array<{ y: Uint8Array; cb: Uint8Array; cr: Uint8Array }>;
}): Buffer {
  const c = opts.colorspace ?? "420";
  const header = `YUV4MPEG2 W${opts.width} H${opts.height} F${opts.fpsNum}:${opts.fpsDen} Ip A1:1 C${c}\n`;
  const parts: Buffer[] = [Buffer.from(header, "ascii")];
  for (const f of opts.frames) {
    parts.push(Buffer.from("FRAME\n", "ascii"));
    parts.push(Buffer.from(f.y), Buffer.from(f.cb), Buffer.from(f.cr));
  }
  return Buffer.concat(parts);
}
