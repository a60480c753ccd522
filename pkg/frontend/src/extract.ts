// Source video -> one VFT1 feature file. Sources are either a .y4m stream
// (frame rate taken from the stream header) or a directory of frame images
// in playback order (frame rate must be supplied). All frames are decoded
// and featurized before a single output byte exists, and the write itself
// is temp-file-plus-rename, so a failure anywhere leaves no partial file.

import * as fs from "node:fs";
import * as path from "node:path";

import { extractFeatures, featureDim } from "./backbone.js";
import { ExtractionError, FormatError, UsageError } from "./errors.js";
import { decodeImageFile, imageExtensions, type RgbImage } from "./image.js";
import { preprocess } from "./preprocess.js";
import { decodeY4m } from "./y4m.js";
import { makeSequence, writeFeatures, type FeatureSequence } from "./vft.js";

export interface ExtractOptions {
  backbone: string;
  /** required for frame directories; ignored for .y4m (stream declares it) */
  fps?: number;
  /** defaults to the source basename without extension */
  videoId?: string;
}

export function listFrameFiles(dir: string): string[] {
  const wanted = new Set(imageExtensions());
  const names = fs.readdirSync(dir)
    .filter(name => wanted.has(path.extname(name).toLowerCase()))
    .sort();
  return names.map(name => path.join(dir, name));
}

function featurize(frames: RgbImage[], backbone: string,
                   describe: (i: number) => string): Float32Array[] {
  const rows: Float32Array[] = [];
  frames.forEach((frame, i) => {
    try {
      rows.push(extractFeatures(preprocess(frame), backbone));
    } catch (err) {
      throw new ExtractionError(`${describe(i)}: ${(err as Error).message}`);
    }
  });
  return rows;
}

export function extractSequence(source: string, opts: ExtractOptions): FeatureSequence {
  const dim = featureDim(opts.backbone);
  const stat = fs.statSync(source, { throwIfNoEntry: false });
  if (!stat) throw new UsageError(`source '${source}' does not exist`);

  let frames: RgbImage[];
  let fps: number;
  let fallbackId: string;

  if (stat.isDirectory()) {
    if (opts.fps === undefined) {
      throw new UsageError(
        `frame directories carry no frame rate; pass fps explicitly for '${source}'`);
    }
    fps = opts.fps;
    fallbackId = path.basename(source);
    const files = listFrameFiles(source);
    if (files.length === 0) {
      throw new ExtractionError(
        `no frame images in '${source}' (looked for ${imageExtensions().join(", ")})`);
    }
    frames = files.map(file => {
      try {
        return decodeImageFile(file);
      } catch (err) {
        if (err instanceof FormatError) {
          throw new ExtractionError(`undecodable frame: ${err.message}`);
        }
        throw err;
      }
    });
  } else if (/\.y4m$/i.test(source)) {
    const video = decodeY4m(fs.readFileSync(source), source);
    frames = video.frames;
    fps = video.fps;
    fallbackId = path.basename(source).replace(/\.y4m$/i, "");
  } else {
    throw new UsageError(
      `source '${source}' is neither a directory of frames nor a .y4m stream`);
  }

  const videoId = opts.videoId ?? fallbackId;
  const describe = stat.isDirectory()
    ? (i: number) => `frame ${i}`
    : (i: number) => `${source} frame ${i}`;
  const rows = featurize(frames, opts.backbone, describe);
  return makeSequence(videoId, fps, dim, rows);
}

export function extractToFile(source: string, outPath: string,
                              opts: ExtractOptions): FeatureSequence {
  const seq = extractSequence(source, opts);
  writeFeatures(seq, outPath);
  return seq;
}
