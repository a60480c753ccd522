"""Operator surface: train, score and evaluate from the shell.

One JSON config file plus --set key=value overrides (overrides win); every
key has a documented default, --help lists them all. Each run freezes its
fully resolved config next to its artifacts so it can be reproduced exactly.

Set FRAMESUM_THREADS to cap BLAS thread counts (honored at package import).
"""

import argparse
import json
import os
import sys

from .errors import (
    CheckpointError,
    ConfigurationError,
    FormatError,
    FramesumError,
    SamplingError,
    ScoringError,
    TrainingError,
    UsageError,
)

THREAD_ENV = "FRAMESUM_THREADS"

# key -> (default, help); value type is the default's type, except
# score.target_slot (int or the string "none") and the crossval lists.
CONFIG_KEYS = {
    "model.clip_len": (30, "frames per training window"),
    "model.input_dim": (1024, "feature vector width"),
    "model.enc_depth": (12, "encoder blocks"),
    "model.enc_heads": (12, "encoder attention heads"),
    "model.enc_dim": (768, "encoder width"),
    "model.dec_depth": (4, "decoder blocks"),
    "model.dec_heads": (6, "decoder attention heads"),
    "model.dec_dim": (384, "decoder width"),
    "model.mlp_ratio": (4, "feed-forward width multiplier"),
    "model.norm_targets": (False, "standardize reconstruction targets per frame"),
    "train.mode": ("epochs", "'epochs' or 'samples'"),
    "train.total_epochs": (200.0, "passes over the corpus (epochs mode)"),
    "train.total_samples": (10000, "clips to draw (samples mode)"),
    "train.batch_size": (128, "clips per optimizer step"),
    "train.base_lr": (4e-4, "peak lr is base_lr * batch_size / 256"),
    "train.warmup_epochs": (40.0, "linear warmup span (iterations in samples mode)"),
    "train.min_lr": (1e-6, "cosine floor"),
    "train.mask_ratio": (0.5, "fraction of window frames hidden"),
    "train.stride_policy": ("rand(1,8)", "'fixed(s)' or 'rand(lo,hi)'"),
    "train.clips_per_video": (10, "samples per video per epoch"),
    "train.weight_decay": (0.05, "decoupled decay on weight matrices"),
    "score.stride": (2, "frame step of the scoring window"),
    "score.target_slot": ("none", "window slot for the scored frame; 'none' centers it"),
    "eval.aggregation": ("per_annotator_mean", "'per_annotator_mean' or 'mean_annotation'"),
    "eval.budget_fraction": (0.15, "summary length as a fraction of frames"),
    "eval.f1_aggregation": ("mean", "combine per-annotator F1 by 'mean' or 'max'"),
    "splitgen.num_splits": (5, "independent test splits to draw"),
    "splitgen.test_fraction": (0.2, "videos per split"),
    "gradcheck.seeds": (20, "model/batch draws to verify"),
    "gradcheck.tolerance": (1e-3, "max relative error allowed"),
    "manifest": ("", "dataset manifest path"),
    "checkpoint": ("", "model checkpoint path"),
    "checkpoints": ([], "checkpoint paths (crossval rows)"),
    "manifests": ([], "manifest paths (crossval columns)"),
    "curves_dir": ("", "directory of per-video curve CSVs"),
    "splits": ("", "optional splits file for per-split evaluation"),
    "out_dir": ("run_out", "where artifacts are written"),
    "seed": (0, "root random seed for the whole run"),
}

SUBCOMMANDS = ("train", "finetune", "score", "eval", "crossval", "splitgen",
               "gradcheck", "export-curves", "validate")

EXIT_CODES = (
    (UsageError, 2),
    (ConfigurationError, 3),
    (FormatError, 4),
    (TrainingError, 5),
    (SamplingError, 6),
    (ScoringError, 7),
    (CheckpointError, 8),
)


def _parse_value(key: str, raw: str):
    default = CONFIG_KEYS[key][0]
    if key == "score.target_slot":
        return "none" if raw.lower() == "none" else int(raw)
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes"):
            return True
        if low in ("0", "false", "no"):
            return False
        raise UsageError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, list):
        return [p for p in raw.split(",") if p]
    return raw


def _coerce_file_value(key: str, value):
    default = CONFIG_KEYS[key][0]
    if key == "score.target_slot":
        if value == "none" or isinstance(value, int):
            return value
        raise UsageError(f"{key}: expected an integer or 'none', got {value!r}")
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise UsageError(f"{key}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise UsageError(f"{key}: expected an integer, got {value!r}")
    if isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise UsageError(f"{key}: expected a number, got {value!r}")
    if isinstance(default, list):
        if isinstance(value, list) and all(isinstance(v, str) for v in value):
            return value
        raise UsageError(f"{key}: expected a list of strings, got {value!r}")
    if isinstance(value, str):
        return value
    raise UsageError(f"{key}: expected a string, got {value!r}")


def _flatten(doc, prefix=""):
    for k, v in doc.items():
        dotted = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, dotted + ".")
        else:
            yield dotted, v


def resolve_config(config_path, set_args):
    """Defaults, then the config file, then --set pairs. Returns the full
    resolved mapping and the set of keys given explicitly."""
    resolved = {k: d for k, (d, _) in CONFIG_KEYS.items()}
    explicit = set()
    if config_path:
        try:
            with open(config_path) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as e:
            raise FormatError(f"{config_path}: not valid JSON: {e}") from None
        if not isinstance(doc, dict):
            raise FormatError(f"{config_path}: config must be a JSON object")
        flat = dict(_flatten(doc))
        unknown = sorted(k for k in flat if k not in CONFIG_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for k, v in flat.items():
            resolved[k] = _coerce_file_value(k, v)
            explicit.add(k)
    unknown = []
    for pair in set_args:
        if "=" not in pair:
            raise UsageError(f"--set expects KEY=VALUE, got {pair!r}")
        key, raw = pair.split("=", 1)
        if key not in CONFIG_KEYS:
            unknown.append(key)
            continue
        resolved[key] = _parse_value(key, raw)
        explicit.add(key)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return resolved, explicit


def _key_table() -> str:
    lines = ["config keys (JSON file sections or --set key=value):"]
    for key, (default, help_text) in CONFIG_KEYS.items():
        shown = json.dumps(default) if not isinstance(default, str) else (default or "''")
        lines.append(f"  {key:<24} default {shown:<18} {help_text}")
    return "\n".join(lines)


def _require(cfg, key, command):
    if not cfg[key]:
        raise UsageError(f"'{command}' needs {key} (set it in the config or via --set {key}=...)")
    return cfg[key]


def _freeze(cfg, command, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    doc = {"command": command, "config": {k: cfg[k] for k in sorted(cfg)}}
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _model_config(cfg):
    from .model import ModelConfig

    return ModelConfig(**{k.split(".", 1)[1]: v for k, v in cfg.items()
                          if k.startswith("model.")})


def _train_config(cfg, explicit, finetune=False):
    from .trainer import TrainConfig

    kw = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("train.")}
    kw["seed"] = cfg["seed"]
    if finetune:
        if "train.mode" not in explicit:
            kw["mode"] = "samples"
        if "train.warmup_epochs" not in explicit:
            kw["warmup_epochs"] = 5.0
    return TrainConfig(**kw)


def _scoring_config(cfg, clip_len):
    from .scorer import ScoringConfig

    slot = cfg["score.target_slot"]
    return ScoringConfig(stride=cfg["score.stride"], clip_len=clip_len,
                         target_slot=None if slot == "none" else slot)


def _load_curves(curves_dir, manifest):
    from .scorer import read_curve

    curves = {}
    for e in manifest.entries:
        path = os.path.join(curves_dir, f"{e.video_id}.csv")
        if not os.path.exists(path):
            raise UsageError(f"no curve for '{e.video_id}' under {curves_dir}")
        curves[e.video_id] = read_curve(path, video_id=e.video_id)
    return curves


def _load_annotations_by_video(manifest):
    from .datastore import load_annotations

    anns = {}
    for e in manifest.entries:
        if e.annotations is None:
            raise UsageError(f"video '{e.video_id}' has no annotations in the manifest")
        anns[e.video_id] = load_annotations(e.annotations)
    return anns


# ----------------------------- subcommands -----------------------------


def _run_training(cfg, explicit, command):
    from . import rng
    from .datastore import load_manifest
    from .trainer import load_checkpoint, save_checkpoint, train

    manifest = load_manifest(_require(cfg, "manifest", command))
    tcfg = _train_config(cfg, explicit, finetune=command == "finetune")
    if command == "finetune":
        model, _ = load_checkpoint(_require(cfg, "checkpoint", command))
    else:
        from .model import AutoencoderState

        model = AutoencoderState.initialize(_model_config(cfg),
                                            rng.stream(cfg["seed"], "init"))
    out_dir = cfg["out_dir"]
    _freeze(cfg, command, out_dir)
    model, trace = train(manifest, model, tcfg,
                         trace_path=os.path.join(out_dir, "trace.csv"))
    ckpt = os.path.join(out_dir, "model.vckp")
    save_checkpoint(model, tcfg, ckpt)
    print(f"{command}: {len(trace)} iterations on {len(manifest.entries)} videos, "
          f"final loss {trace[-1][3]:.6f}, checkpoint {ckpt}")
    return 0


def cmd_train(cfg, explicit):
    return _run_training(cfg, explicit, "train")


def cmd_finetune(cfg, explicit):
    return _run_training(cfg, explicit, "finetune")


def cmd_score(cfg, explicit):
    from .datastore import load_manifest, read_features
    from .scorer import score_video, write_curve
    from .trainer import load_checkpoint

    model, _ = load_checkpoint(_require(cfg, "checkpoint", "score"))
    manifest = load_manifest(_require(cfg, "manifest", "score"))
    out_dir = cfg["out_dir"]
    _freeze(cfg, "score", out_dir)
    curve_dir = os.path.join(out_dir, "curves")
    os.makedirs(curve_dir, exist_ok=True)
    scfg = _scoring_config(cfg, model.config.clip_len)
    for e in manifest.entries:
        curve = score_video(model, read_features(e.features), scfg)
        write_curve(curve, os.path.join(curve_dir, f"{e.video_id}.csv"))
    print(f"score: wrote {len(manifest.entries)} curves to {curve_dir}")
    return 0


def cmd_eval(cfg, explicit):
    from .datastore import load_manifest, read_splits
    from .evaluator import evaluate_dataset, evaluate_splits, write_report, write_split_report

    manifest = load_manifest(_require(cfg, "manifest", "eval"))
    curves = _load_curves(_require(cfg, "curves_dir", "eval"), manifest)
    anns = _load_annotations_by_video(manifest)
    out_dir = cfg["out_dir"]
    _freeze(cfg, "eval", out_dir)
    pairs = [(curves[e.video_id], anns[e.video_id]) for e in manifest.entries]
    report = evaluate_dataset(pairs, cfg["eval.aggregation"],
                              cfg["eval.budget_fraction"], cfg["eval.f1_aggregation"])
    write_report(report, os.path.join(out_dir, "report.txt"))
    if cfg["splits"]:
        split_report = evaluate_splits(curves, anns, read_splits(cfg["splits"]),
                                       cfg["eval.aggregation"],
                                       cfg["eval.budget_fraction"],
                                       cfg["eval.f1_aggregation"])
        write_split_report(split_report, os.path.join(out_dir, "split_report.txt"))

    def fmt(v):
        return "undefined" if v is None else f"{v:.4f}"

    print(f"eval: {len(pairs)} videos, mean tau {fmt(report.mean_tau)}, "
          f"rho {fmt(report.mean_rho)}, f1 {fmt(report.mean_f1)}")
    return 0


def cmd_crossval(cfg, explicit):
    from .datastore import load_manifest
    from .evaluator import cross_matrix, load_eval_pairs
    from .trainer import load_checkpoint

    ckpts = _require(cfg, "checkpoints", "crossval")
    manifests = _require(cfg, "manifests", "crossval")
    models = []
    for path in ckpts:
        model, _ = load_checkpoint(path)
        tag = os.path.splitext(os.path.basename(path))[0]
        models.append((tag, model))
    datasets = []
    for path in manifests:
        manifest = load_manifest(path)
        datasets.append((manifest.name, load_eval_pairs(manifest)))
    out_dir = cfg["out_dir"]
    _freeze(cfg, "crossval", out_dir)
    scfg = _scoring_config(cfg, models[0][1].config.clip_len)
    matrix = cross_matrix(models, datasets, scfg, cfg["eval.aggregation"])
    path = os.path.join(out_dir, "cross_matrix.csv")
    matrix.to_csv(path)
    print(f"crossval: {len(models)}x{len(datasets)} matrix at {path}")
    return 0


def cmd_splitgen(cfg, explicit):
    from .datastore import generate_splits, load_manifest, write_splits

    manifest = load_manifest(_require(cfg, "manifest", "splitgen"))
    out_dir = cfg["out_dir"]
    _freeze(cfg, "splitgen", out_dir)
    splits = generate_splits(manifest, cfg["splitgen.num_splits"],
                             cfg["splitgen.test_fraction"], cfg["seed"])
    path = os.path.join(out_dir, "splits.txt")
    write_splits(splits, path)
    sizes = [len(ids) for _, ids in splits.splits]
    print(f"splitgen: {len(sizes)} splits of sizes {sizes} at {path}")
    return 0


def cmd_gradcheck(cfg, explicit):
    from .gradcheck import check_model_gradients

    seeds = cfg["gradcheck.seeds"]
    tol = cfg["gradcheck.tolerance"]
    worst = max(check_model_gradients(cfg["seed"] + i) for i in range(seeds))
    print(f"gradcheck: max relative error {worst:.3e} over {seeds} seeds "
          f"(tolerance {tol:g})")
    if worst >= tol:
        raise TrainingError(
            f"analytic gradient disagrees with finite differences: {worst:.3e} >= {tol:g}"
        )
    return 0


def export_curve_pair(curve, ann):
    """(num_frames, 2) array: min-max normalized mean annotation and prediction.

    A constant series has no range; it maps to all zeros.
    """
    import numpy as np

    if curve.num_frames != ann.num_frames:
        raise UsageError(
            f"curve for '{curve.video_id}' has {curve.num_frames} frames, "
            f"annotations have {ann.num_frames}"
        )

    def minmax(v):
        lo, hi = float(v.min()), float(v.max())
        if hi == lo:
            return np.zeros_like(v)
        return (v - lo) / (hi - lo)

    gt = ann.scores.mean(axis=0)
    return np.stack([minmax(gt), minmax(curve.scores)], axis=1)


def cmd_export_curves(cfg, explicit):
    from .datastore import load_manifest

    manifest = load_manifest(_require(cfg, "manifest", "export-curves"))
    curves = _load_curves(_require(cfg, "curves_dir", "export-curves"), manifest)
    anns = _load_annotations_by_video(manifest)
    out_dir = cfg["out_dir"]
    _freeze(cfg, "export-curves", out_dir)
    export_dir = os.path.join(out_dir, "export")
    os.makedirs(export_dir, exist_ok=True)
    for e in manifest.entries:
        table = export_curve_pair(curves[e.video_id], anns[e.video_id])
        with open(os.path.join(export_dir, f"{e.video_id}.csv"), "w") as fh:
            fh.write("frame_index,ground_truth,prediction\n")
            for i, (g, p) in enumerate(table):
                fh.write(f"{i},{float(g)!r},{float(p)!r}\n")
    print(f"export-curves: wrote {len(manifest.entries)} files to {export_dir}")
    return 0


def cmd_validate(cfg, explicit):
    from .datastore import load_manifest, validate_manifest

    manifest = load_manifest(_require(cfg, "manifest", "validate"))
    report = validate_manifest(manifest)
    if report.ok:
        print(f"validate: '{manifest.name}' clean ({len(manifest.entries)} videos)")
        return 0
    for issue in report.issues:
        print(f"validate: {issue}", file=sys.stderr)
    print(f"validate: '{manifest.name}' has {len(report.issues)} issues")
    return 4


DISPATCH = {
    "train": cmd_train,
    "finetune": cmd_finetune,
    "score": cmd_score,
    "eval": cmd_eval,
    "crossval": cmd_crossval,
    "splitgen": cmd_splitgen,
    "gradcheck": cmd_gradcheck,
    "export-curves": cmd_export_curves,
    "validate": cmd_validate,
}

_HELP = {
    "train": "train a model from scratch on a manifest corpus",
    "finetune": "continue training from a checkpoint (samples mode, short warmup)",
    "score": "write one importance-curve CSV per manifest video",
    "eval": "rank correlations (and F1 where change points exist) for stored curves",
    "crossval": "evaluate every checkpoint on every dataset; emits a CSV matrix",
    "splitgen": "draw random test splits from a manifest",
    "gradcheck": "verify analytic gradients against finite differences",
    "export-curves": "per-video normalized (ground truth, prediction) columns",
    "validate": "check that a manifest's files exist and agree with each other",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framesum",
        description=__doc__.splitlines()[0],
        epilog=_key_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=_HELP[name], epilog=_key_table(),
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable, wins over the file)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, explicit = resolve_config(args.config, args.set)
        return DISPATCH[args.command](cfg, explicit)
    except FramesumError as e:
        print(f"error: {e}", file=sys.stderr)
        for cls, code in EXIT_CODES:
            if isinstance(e, cls):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
