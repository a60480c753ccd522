#!/usr/bin/env python3
# Every file the pipeline reads or writes, round-tripped in a temp directory:
# feature files, annotations, manifests, split lists, checkpoints, curves.

import os
import tempfile

import numpy as np

from framesum.datastore import (
    AnnotationSet,
    DatasetManifest,
    FeatureSequence,
    ManifestEntry,
    generate_splits,
    load_annotations,
    load_manifest,
    read_features,
    read_splits,
    validate_manifest,
    write_annotations,
    write_features,
    write_manifest,
    write_splits,
)
from framesum.model import AutoencoderState, ModelConfig
from framesum.scorer import ImportanceCurve, read_curve, write_curve
from framesum.trainer import TrainConfig, load_checkpoint, save_checkpoint

root = tempfile.mkdtemp(prefix="framesum_demo_")
print("writing into", root)

# --- feature files ----------------------------------------------------------

# binary, little-endian: magic "VFT1", version, feature_dim, num_frames,
# fps, id length, the id, then float32 rows. nothing else.
feats = np.random.default_rng(0).normal(size=(2, 3)).astype(np.float32)
seq = FeatureSequence("clip_a", 29.97, feats)
fpath = os.path.join(root, "clip_a.vft")
write_features(seq, fpath)

raw = open(fpath, "rb").read()
print(f"{len(raw)} bytes on disk; header starts {raw[:4]} version", raw[4])
back = read_features(fpath)
print("round trip exact:", np.array_equal(back.features, feats), "fps", back.fps)

# --- annotations ------------------------------------------------------------

# JSON: per-annotator score rows plus optional half-open shot change points
# that must tile [0, num_frames) without gaps or overlaps
ann = AnnotationSet("clip_a", np.array([[3.0, 4.0], [2.0, 2.0]]), fps=29.97,
                    change_points=[[0, 1], [1, 2]])
apath = os.path.join(root, "clip_a.json")
write_annotations(ann, apath)
print("\nannotation file:")
print(open(apath).read().strip())
print("fragment lengths:", load_annotations(apath).fragment_lengths())

# --- manifests --------------------------------------------------------------

# a dataset is a name plus (video_id, features, annotations) rows; paths are
# stored relative to the manifest so the directory can move as a unit
manifest = DatasetManifest("demo_set", [ManifestEntry("clip_a", fpath, apath)])
mpath = os.path.join(root, "manifest.json")
write_manifest(manifest, mpath)
loaded = load_manifest(mpath)
report = validate_manifest(loaded)
print("\nmanifest validates cleanly:", report.ok)

# --- split lists ------------------------------------------------------------

# plain text, the layout evaluation scripts in this field expect:
#   Split 1:
#     video_id
big = DatasetManifest("big", [ManifestEntry(f"v{i:02d}", f"v{i:02d}.vft")
                              for i in range(10)])
splits = generate_splits(big, num_splits=2, test_fraction=0.3, seed=7)
spath = os.path.join(root, "splits.txt")
write_splits(splits, spath)
print("\nsplit file:")
print(open(spath).read().strip())
print("parsed back:", [(name, len(ids)) for name, ids in read_splits(spath).splits])

# --- checkpoints ------------------------------------------------------------

# magic "VCKP", a JSON header carrying model + train configs and a tensor
# manifest (name, shape, byte offset), then every parameter as float32 in
# one canonical order. saving a loaded checkpoint reproduces it byte for byte.
cfg = ModelConfig.tiny()
model = AutoencoderState.initialize(cfg, np.random.default_rng(1))
cpath = os.path.join(root, "model.vckp")
save_checkpoint(model, TrainConfig(seed=3), cpath)

restored, tcfg = load_checkpoint(cpath)
again = os.path.join(root, "model2.vckp")
save_checkpoint(restored, tcfg, again)
identical = open(cpath, "rb").read() == open(again, "rb").read()
print(f"\ncheckpoint: {os.path.getsize(cpath)} bytes, save-load-save identical: {identical}")

# --- importance curves -------------------------------------------------------

# two-column CSV; floats are written with repr so parsing them back is exact
curve = ImportanceCurve("clip_a", np.array([0.25, 1.75]))
cpath = os.path.join(root, "clip_a.curve.csv")
write_curve(curve, cpath)
print("\ncurve file:")
print(open(cpath).read().strip())
print("round trip exact:", np.array_equal(read_curve(cpath).scores, curve.scores))
