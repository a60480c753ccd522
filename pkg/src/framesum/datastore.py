"""Persistent data: feature files, annotations, manifests, and splits.

Feature files use the "VFT1" binary layout:

    offset 0   magic "VFT1"
    offset 4   version        u32 LE (currently 1)
    offset 8   feature_dim    u32 LE
    offset 12  num_frames     u32 LE
    offset 16  fps            f32 LE
    offset 20  id_len         u32 LE
    offset 24  video_id       UTF-8, id_len bytes
    then       num_frames x feature_dim f32 LE, row-major

Annotations, manifests, and validation reports are JSON; split sets are a
simple indented text list (see SplitSet.to_text). All readers are pure;
writers assume exclusive access to the destination path.
"""

from dataclasses import dataclass, field
import json
import os
import struct

import numpy as np

from .errors import ConfigurationError, FormatError, UsageError
from .rng import stream

MAGIC = b"VFT1"
VERSION = 1


# -------------------------- feature sequences --------------------------


@dataclass
class FeatureSequence:
    """Per-frame feature vectors for one video; the model's only view of it."""

    video_id: str
    fps: float
    features: np.ndarray

    def __post_init__(self):
        if not self.video_id:
            raise UsageError("video_id must be non-empty")
        feats = np.ascontiguousarray(self.features, dtype=np.float32)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise UsageError(f"features must be (num_frames, dim), got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise UsageError("features contain non-finite values")
        # fps quantized to f32 so written and re-read sequences compare equal
        fps32 = np.float32(self.fps)
        if not np.isfinite(fps32) or fps32 <= 0:
            raise UsageError(f"fps must be positive and finite, got {self.fps}")
        self.fps = float(fps32)
        self.features = feats

    @property
    def num_frames(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


def write_features(seq: FeatureSequence, path) -> None:
    id_bytes = seq.video_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIIfI", VERSION, seq.feature_dim, seq.num_frames,
                             seq.fps, len(id_bytes)))
        fh.write(id_bytes)
        fh.write(np.ascontiguousarray(seq.features, dtype="<f4").tobytes())


def read_features(path) -> FeatureSequence:
    with open(path, "rb") as fh:
        blob = fh.read()

    def need(count, offset, what):
        if len(blob) < offset + count:
            raise FormatError(
                f"{path}: truncated {what} at offset {offset} "
                f"(need {count} bytes, have {len(blob) - offset})"
            )

    need(4, 0, "magic")
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r} at offset 0, expected b'VFT1'")
    need(20, 4, "header")
    version, dim, frames, fps, id_len = struct.unpack_from("<IIIfI", blob, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version} at offset 4")
    if dim == 0:
        raise FormatError(f"{path}: zero feature_dim at offset 8")
    if frames == 0:
        raise FormatError(f"{path}: zero num_frames at offset 12")
    if not np.isfinite(fps) or fps <= 0:
        raise FormatError(f"{path}: invalid fps {fps} at offset 16")
    need(id_len, 24, "video_id")
    try:
        video_id = blob[24:24 + id_len].decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: video_id at offset 24 is not UTF-8: {e}") from None
    payload_off = 24 + id_len
    expect = 4 * dim * frames
    have = len(blob) - payload_off
    if have != expect:
        raise FormatError(
            f"{path}: payload at offset {payload_off} holds {have} bytes, "
            f"expected {expect} ({frames} frames x {dim} dims x 4)"
        )
    feats = np.frombuffer(blob, dtype="<f4", count=dim * frames, offset=payload_off)
    feats = feats.reshape(frames, dim).copy()
    bad = np.nonzero(~np.isfinite(feats))
    if bad[0].size:
        r, c = int(bad[0][0]), int(bad[1][0])
        raise FormatError(
            f"{path}: non-finite value at frame {r} dim {c} "
            f"(offset {payload_off + 4 * (r * dim + c)})"
        )
    return FeatureSequence(video_id, float(fps), feats)


# -------------------------- annotations --------------------------


@dataclass
class AnnotationSet:
    """Multi-annotator per-frame scores, with optional shot boundaries.

    change_points are half-open (start, end) fragments that must tile
    [0, num_frames) in order.
    """

    video_id: str
    scores: np.ndarray
    fps: float = 0.0
    change_points: list = None

    def __post_init__(self):
        mat = np.asarray(self.scores, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
            raise FormatError(
                f"{self.video_id}: scores must be (annotators, frames), got {mat.shape}"
            )
        if not np.all(np.isfinite(mat)):
            raise FormatError(f"{self.video_id}: non-finite annotation score")
        self.scores = mat
        if self.change_points is not None:
            pts = [(int(a), int(b)) for a, b in self.change_points]
            cursor = 0
            for i, (a, b) in enumerate(pts):
                if a != cursor or b <= a:
                    raise FormatError(
                        f"{self.video_id}: change_points fragment {i} is ({a}, {b}); "
                        f"fragments must be half-open, in order, and contiguous from {cursor}"
                    )
                cursor = b
            if cursor != self.num_frames:
                raise FormatError(
                    f"{self.video_id}: change_points cover [0, {cursor}) "
                    f"but the video has {self.num_frames} frames"
                )
            self.change_points = pts

    @property
    def num_annotators(self) -> int:
        return self.scores.shape[0]

    @property
    def num_frames(self) -> int:
        return self.scores.shape[1]

    def fragment_lengths(self):
        return [b - a for a, b in self.change_points]


def load_annotations(path) -> AnnotationSet:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from None
    for key in ("video_id", "fps", "annotations"):
        if key not in doc:
            raise FormatError(f"{path}: missing key '{key}'")
    rows = doc["annotations"]
    if not rows or not all(isinstance(r, list) for r in rows):
        raise FormatError(f"{path}: 'annotations' must be a non-empty list of rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FormatError(f"{path}: ragged annotator rows, lengths {sorted(widths)}")
    try:
        return AnnotationSet(
            video_id=doc["video_id"],
            scores=np.asarray(rows, dtype=np.float64),
            fps=float(doc["fps"]),
            change_points=doc.get("change_points"),
        )
    except FormatError as e:
        raise FormatError(f"{path}: {e}") from None


def write_annotations(ann: AnnotationSet, path) -> None:
    doc = {
        "video_id": ann.video_id,
        "fps": ann.fps,
        "annotations": [[float(v) for v in row] for row in ann.scores],
    }
    if ann.change_points is not None:
        doc["change_points"] = [[a, b] for a, b in ann.change_points]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


# -------------------------- manifests --------------------------


@dataclass
class ManifestEntry:
    video_id: str
    features: str
    annotations: str = None


@dataclass
class DatasetManifest:
    """Names a dataset and locates its files. Paths are kept as written;
    resolve() maps them relative to a base directory."""

    name: str
    entries: list

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.video_id in seen:
                raise FormatError(f"manifest '{self.name}': duplicate video_id '{e.video_id}'")
            seen.add(e.video_id)

    def video_ids(self):
        return [e.video_id for e in self.entries]

    def entry(self, video_id) -> ManifestEntry:
        for e in self.entries:
            if e.video_id == video_id:
                return e
        raise UsageError(f"manifest '{self.name}' has no video '{video_id}'")


def load_manifest(path) -> DatasetManifest:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from None
    if "dataset" not in doc or "entries" not in doc:
        raise FormatError(f"{path}: manifest needs 'dataset' and 'entries'")
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for i, e in enumerate(doc["entries"]):
        if "video_id" not in e or "features" not in e:
            raise FormatError(f"{path}: entry {i} needs 'video_id' and 'features'")
        feat = os.path.join(base, e["features"])
        ann = os.path.join(base, e["annotations"]) if e.get("annotations") else None
        entries.append(ManifestEntry(e["video_id"], feat, ann))
    return DatasetManifest(doc["dataset"], entries)


def write_manifest(manifest: DatasetManifest, path) -> None:
    base = os.path.dirname(os.path.abspath(path))
    doc = {"dataset": manifest.name, "entries": []}
    for e in manifest.entries:
        row = {"video_id": e.video_id, "features": os.path.relpath(e.features, base)}
        if e.annotations:
            row["annotations"] = os.path.relpath(e.annotations, base)
        doc["entries"].append(row)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_manifest(manifest: DatasetManifest) -> ValidationReport:
    """Scan every entry; collect issues instead of aborting on the first."""
    report = ValidationReport()
    dims = {}
    for e in manifest.entries:
        seq = None
        try:
            seq = read_features(e.features)
        except (OSError, FormatError) as err:
            report.issues.append(f"{e.video_id}: unreadable features: {err}")
        if seq is not None:
            dims.setdefault(seq.feature_dim, []).append(e.video_id)
            if seq.video_id != e.video_id:
                report.issues.append(
                    f"{e.video_id}: feature file says video_id '{seq.video_id}'"
                )
        if e.annotations is None:
            continue
        try:
            ann = load_annotations(e.annotations)
        except (OSError, FormatError) as err:
            report.issues.append(f"{e.video_id}: unreadable annotations: {err}")
            continue
        if ann.video_id != e.video_id:
            report.issues.append(
                f"{e.video_id}: annotation file says video_id '{ann.video_id}'"
            )
        if seq is not None and ann.num_frames != seq.num_frames:
            report.issues.append(
                f"{e.video_id}: features have {seq.num_frames} frames "
                f"but annotations have {ann.num_frames}"
            )
    if len(dims) > 1:
        listing = "; ".join(
            f"dim {d}: {', '.join(ids)}" for d, ids in sorted(dims.items())
        )
        report.issues.append(f"mixed feature_dims within '{manifest.name}': {listing}")
    return report


# -------------------------- splits --------------------------


@dataclass
class SplitSet:
    """Named test splits, each a list of video_ids."""

    splits: list  # of (name, [video_id, ...])

    def to_text(self) -> str:
        lines = []
        for name, ids in self.splits:
            lines.append(f"{name}:")
            lines.extend(f"  {vid}" for vid in ids)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SplitSet":
        splits = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            if not raw.strip():
                continue
            if raw.startswith((" ", "\t")):
                if not splits:
                    raise FormatError(f"line {lineno}: video id before any split header")
                splits[-1][1].append(raw.strip())
            else:
                if not raw.rstrip().endswith(":"):
                    raise FormatError(f"line {lineno}: expected 'Name:' header, got {raw!r}")
                splits.append((raw.rstrip()[:-1], []))
        if not splits:
            raise FormatError("no splits found")
        return cls(splits)


def write_splits(splitset: SplitSet, path) -> None:
    with open(path, "w") as fh:
        fh.write(splitset.to_text())


def read_splits(path) -> SplitSet:
    with open(path) as fh:
        try:
            return SplitSet.from_text(fh.read())
        except FormatError as e:
            raise FormatError(f"{path}: {e}") from None


def generate_splits(manifest: DatasetManifest, num_splits: int, test_fraction: float,
                    seed: int) -> SplitSet:
    """num_splits independent uniform samples (without replacement within a
    split) of round(test_fraction * N) ids each."""
    ids = manifest.video_ids()
    if not ids:
        raise UsageError("cannot split an empty manifest")
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if num_splits < 1:
        raise ConfigurationError(f"num_splits must be >= 1, got {num_splits}")
    k = int(np.floor(test_fraction * len(ids) + 0.5))
    if k == 0:
        raise ConfigurationError(
            f"test_fraction {test_fraction} rounds to an empty split over {len(ids)} videos"
        )
    splits = []
    for i in range(num_splits):
        rng = stream(seed, "splits", i)
        chosen = rng.choice(len(ids), size=k, replace=False)
        splits.append((f"Split {i + 1}", [ids[j] for j in chosen]))
    return SplitSet(splits)


def check_splits(splitset: SplitSet, manifest: DatasetManifest) -> None:
    known = set(manifest.video_ids())
    for name, ids in splitset.splits:
        missing = [v for v in ids if v not in known]
        if missing:
            raise UsageError(f"{name} names videos absent from the manifest: {missing}")
