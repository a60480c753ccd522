#!/usr/bin/env node
// framefeat <extract|convert|selftest> : the operator surface.
//
// exit codes: 0 ok, 1 selftest deviation, 2 usage, 4 file format,
//             5 extraction, 6 conversion

import { parseArgs } from "node:util";

import { checkFrameCounts, convertAnnotations, writeConverted } from "./convert.js";
import { ConversionError, UsageError, exitCodeFor } from "./errors.js";
import { extractToFile } from "./extract.js";
import { defaultBundleDir, runSelftest } from "./selftest.js";

const HELP = `usage: framefeat COMMAND ...

commands:
  extract   --source PATH --out FILE.vft [--backbone googlenet|resnet50]
            [--fps N] [--video-id ID]
            featurize a .y4m stream (frame rate from its header) or a
            directory of frame images (pass --fps) into one VFT1 file

  convert   --source PATH --out-dir DIR [--kind tvsum|summe]
            [--features-dir DIR]
            turn an annotation archive (score TSV, or directory of .mat
            files) into per-video annotation JSON; with --features-dir,
            verify annotated frame counts match the extracted features

  selftest  [--bundle DIR]
            recompute the shipped reference bundle and compare within 1e-4
`;

function parsed(argv: string[], options: Record<string, { type: "string" | "boolean" }>) {
  try {
    return parseArgs({ args: argv, options, allowPositionals: false });
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
}

function requireOption(values: Record<string, unknown>, name: string): string {
  const v = values[name];
  if (typeof v !== "string" || !v) {
    throw new UsageError(`--${name} is required`);
  }
  return v;
}

function cmdExtract(argv: string[]): number {
  const { values } = parsed(argv, {
    source: { type: "string" },
    out: { type: "string" },
    backbone: { type: "string" },
    fps: { type: "string" },
    "video-id": { type: "string" },
  });
  let fps: number | undefined;
  if (values.fps !== undefined) {
    fps = Number(values.fps);
    if (!Number.isFinite(fps) || fps <= 0) {
      throw new UsageError(`--fps must be a positive number, got '${values.fps}'`);
    }
  }
  const out = requireOption(values, "out");
  const seq = extractToFile(requireOption(values, "source"), out, {
    backbone: (values.backbone as string) ?? "googlenet",
    fps,
    videoId: values["video-id"] as string | undefined,
  });
  console.log(`extract: ${seq.numFrames} frames x ${seq.featureDim} dims ` +
              `at ${seq.fps} fps -> ${out}`);
  return 0;
}

function cmdConvert(argv: string[]): number {
  const { values } = parsed(argv, {
    source: { type: "string" },
    "out-dir": { type: "string" },
    kind: { type: "string" },
    "features-dir": { type: "string" },
  });
  const kind = values.kind as string | undefined;
  if (kind !== undefined && kind !== "tvsum" && kind !== "summe") {
    throw new UsageError(`--kind must be tvsum or summe, got '${kind}'`);
  }
  const result = convertAnnotations(requireOption(values, "source"),
                                    kind as "tvsum" | "summe" | undefined);
  if (values["features-dir"]) {
    const problems = checkFrameCounts(result.videos, values["features-dir"] as string);
    if (problems.length) {
      throw new ConversionError(
        `frame counts disagree with extracted features:\n  ${problems.join("\n  ")}`);
    }
  }
  const written = writeConverted(result.videos, requireOption(values, "out-dir"));
  console.log(`convert: ${result.kind}-style source, ${written.length} videos -> ` +
              `${values["out-dir"]}`);
  return 0;
}

function cmdSelftest(argv: string[]): number {
  const { values } = parsed(argv, { bundle: { type: "string" } });
  const bundle = (values.bundle as string) ?? defaultBundleDir();
  const reports = runSelftest(bundle);
  let failed = false;
  for (const r of reports) {
    const verdict = r.ok ? "ok" : "FAIL";
    const where = r.worstAt ? ` at ${r.worstAt}` : "";
    console.log(`selftest ${r.backbone}: ${verdict}, ${r.images} images, ` +
                `max deviation ${r.maxDeviation.toExponential(3)}${where}`);
    if (!r.ok) failed = true;
  }
  return failed ? 1 : 0;
}

const COMMANDS: Record<string, (argv: string[]) => number> = {
  extract: cmdExtract,
  convert: cmdConvert,
  selftest: cmdSelftest,
};

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] === "--help" || argv[0] === "-h") {
    console.log(HELP);
    return argv.length === 0 ? 2 : 0;
  }
  const command = COMMANDS[argv[0]];
  if (!command) {
    console.error(`error: unknown command '${argv[0]}' (expected ${Object.keys(COMMANDS).join(", ")})`);
    return 2;
  }
  try {
    return command(argv.slice(1));
  } catch (err) {
    if (err instanceof Error) {
      console.error(`error: ${err.message}`);
      return exitCodeFor(err);
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1] &&
  new URL(import.meta.url).pathname === process.argv[1];
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
