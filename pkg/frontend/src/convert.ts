// Benchmark annotation archives -> per-video annotation JSON in the schema
// the training side reads:
//
//   { "video_id": str, "fps": number, "annotations": [[...], ...],
//     "change_points": [[a, b], ...] (optional) }
//
// Two source layouts are recognized. A TSV file where every line is
// "video_id <TAB> category <TAB> comma-separated per-frame scores" and each
// video repeats once per annotator (the layout TVSum-style archives ship).
// Or a directory of per-video MATLAB v5 files whose 'user_score' matrix is
// frames x annotators (the layout SumMe-style archives ship).

import * as fs from "node:fs";
import * as path from "node:path";

import { ConversionError } from "./errors.js";
import { matGet, readMat } from "./mat.js";
import { readFeatures } from "./vft.js";

export interface ConvertedVideo {
  videoId: string;
  fps: number;
  /** annotators x frames */
  rows: number[][];
}

export interface ConvertResult {
  videos: ConvertedVideo[];
  kind: "tvsum" | "summe";
}

export function annotationDocument(video: ConvertedVideo): string {
  const doc: Record<string, unknown> = {
    annotations: video.rows,
    fps: video.fps,
    video_id: video.videoId,
  };
  return JSON.stringify(doc, Object.keys(doc).sort(), 1) + "\n";
}

function parseScoreTsv(filePath: string): ConvertedVideo[] {
  const text = fs.readFileSync(filePath, "utf-8");
  const byVideo = new Map<string, number[][]>();
  const order: string[] = [];
  text.split("\n").forEach((line, lineno) => {
    if (!line.trim()) return;
    const cells = line.split("\t");
    if (cells.length !== 3) {
      throw new ConversionError(
        `${filePath}:${lineno + 1}: expected 3 tab-separated columns ` +
        `(video_id, category, scores), got ${cells.length}`);
    }
    const [videoId, , scoreText] = cells;
    const row = scoreText.split(",").map(s => Number(s));
    if (row.length === 0 || row.some(v => !Number.isFinite(v))) {
      throw new ConversionError(
        `${filePath}:${lineno + 1}: scores for '${videoId}' are not all numeric`);
    }
    if (!byVideo.has(videoId)) {
      byVideo.set(videoId, []);
      order.push(videoId);
    }
    const rows = byVideo.get(videoId)!;
    if (rows.length && rows[0].length !== row.length) {
      throw new ConversionError(
        `${filePath}:${lineno + 1}: '${videoId}' rows disagree on frame count ` +
        `(${rows[0].length} vs ${row.length})`);
    }
    rows.push(row);
  });
  if (order.length === 0) throw new ConversionError(`${filePath}: no annotation rows`);
  return order.map(videoId => ({ videoId, fps: 0.0, rows: byVideo.get(videoId)! }));
}

function parseMatDir(dir: string, files: string[]): ConvertedVideo[] {
  const videos: ConvertedVideo[] = [];
  for (const name of files) {
    const full = path.join(dir, name);
    const mat = readMat(fs.readFileSync(full), full);
    const score = mat.matrices.get("user_score");
    if (!score) {
      const found = [...mat.matrices.keys(), ...mat.skipped];
      throw new ConversionError(
        `${full}: no 'user_score' matrix ` +
        `(file holds: ${found.length ? found.join(", ") : "nothing readable"})`);
    }
    // stored frames x annotators; annotation rows go annotator-major
    const rows: number[][] = [];
    for (let a = 0; a < score.cols; a++) {
      const row = new Array<number>(score.rows);
      for (let f = 0; f < score.rows; f++) row[f] = matGet(score, f, a);
      rows.push(row);
    }
    const fpsMat = mat.matrices.get("FPS") ?? mat.matrices.get("fps");
    const fps = fpsMat && fpsMat.rows * fpsMat.cols === 1 ? fpsMat.data[0] : 0.0;
    videos.push({ videoId: name.replace(/\.mat$/i, ""), fps, rows });
  }
  return videos;
}

function fingerprint(source: string): string {
  const stat = fs.statSync(source, { throwIfNoEntry: false });
  if (!stat) return `'${source}' does not exist`;
  if (stat.isDirectory()) {
    const names = fs.readdirSync(source).sort();
    const sample = names.slice(0, 5).join(", ") + (names.length > 5 ? ", ..." : "");
    return `'${source}' is a directory of ${names.length} entries (${sample}) ` +
           `with no .mat files`;
  }
  const head = fs.readFileSync(source).subarray(0, 8).toString("latin1");
  return `'${source}' is a file starting ${JSON.stringify(head)}, ` +
         `neither a score TSV nor a .mat directory`;
}

export function convertAnnotations(source: string,
                                   kind?: "tvsum" | "summe"): ConvertResult {
  const stat = fs.statSync(source, { throwIfNoEntry: false });
  if (!stat) throw new ConversionError(`source '${source}' does not exist`);

  if (kind === "tvsum" || (kind === undefined && stat.isFile() && /\.tsv$/i.test(source))) {
    if (!stat.isFile()) {
      throw new ConversionError(`tvsum-style source must be a TSV file, got directory '${source}'`);
    }
    return { videos: parseScoreTsv(source), kind: "tvsum" };
  }
  if (stat.isDirectory()) {
    const mats = fs.readdirSync(source).filter(n => /\.mat$/i.test(n)).sort();
    if (kind === "summe" || (kind === undefined && mats.length > 0)) {
      if (mats.length === 0) {
        throw new ConversionError(`summe-style source '${source}' holds no .mat files`);
      }
      return { videos: parseMatDir(source, mats), kind: "summe" };
    }
  }
  throw new ConversionError(`unrecognized annotation layout: ${fingerprint(source)}`);
}

/**
 * Cross-check converted row lengths against extracted feature files:
 * every video must annotate exactly as many frames as were featurized.
 */
export function checkFrameCounts(videos: ConvertedVideo[], featuresDir: string): string[] {
  const problems: string[] = [];
  for (const video of videos) {
    const vft = path.join(featuresDir, `${video.videoId}.vft`);
    if (!fs.existsSync(vft)) {
      problems.push(`${video.videoId}: no feature file at ${vft}`);
      continue;
    }
    const seq = readFeatures(vft);
    const annFrames = video.rows[0].length;
    if (seq.numFrames !== annFrames) {
      problems.push(
        `${video.videoId}: ${annFrames} annotated frames vs ` +
        `${seq.numFrames} extracted frames`);
    }
  }
  return problems;
}

export function writeConverted(videos: ConvertedVideo[], outDir: string): string[] {
  fs.mkdirSync(outDir, { recursive: true });
  return videos.map(video => {
    const out = path.join(outDir, `${video.videoId}.json`);
    fs.writeFileSync(out, annotationDocument(video));
    return out;
  });
}
