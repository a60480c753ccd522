"""Clip sampling, the masked-reconstruction training loop, and checkpoints.

Sampling is coordinate-addressed: the stride, start frame, video choice and
mask of global sample g are drawn from streams keyed by (seed, label, g),
so batch assembly order and worker layout cannot change the draws.
"""

from dataclasses import dataclass, asdict
import json
import math
import re
import struct

import numpy as np

from . import datastore
from .errors import (
    CheckpointError,
    ConfigurationError,
    SamplingError,
    TrainingError,
    UsageError,
)
from .model import AutoencoderState, ModelConfig, param_specs, random_mask
from .optim import LrSchedule, adamw_step, lr_at
from .rng import stream


# -------------------------- stride policy --------------------------


@dataclass(frozen=True)
class StridePolicy:
    """Temporal gap between consecutive clip frames: fixed or uniform int."""

    lo: int
    hi: int

    def __post_init__(self):
        if not 1 <= self.lo <= self.hi:
            raise ConfigurationError(f"stride bounds must satisfy 1 <= lo <= hi, got {self}")

    @classmethod
    def fixed(cls, s: int) -> "StridePolicy":
        return cls(s, s)

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "StridePolicy":
        return cls(lo, hi)

    @classmethod
    def parse(cls, text) -> "StridePolicy":
        """Accepts "rand(1,8)", "fixed(2)", or a bare integer."""
        if isinstance(text, StridePolicy):
            return text
        if isinstance(text, int):
            return cls.fixed(text)
        s = str(text).strip()
        m = re.fullmatch(r"rand\((\d+),\s*(\d+)\)", s)
        if m:
            return cls.uniform(int(m.group(1)), int(m.group(2)))
        m = re.fullmatch(r"fixed\((\d+)\)", s)
        if m:
            return cls.fixed(int(m.group(1)))
        if s.isdigit():
            return cls.fixed(int(s))
        raise ConfigurationError(
            f"cannot parse stride policy {text!r}; use rand(lo,hi), fixed(s), or an integer"
        )

    def __str__(self):
        if self.lo == self.hi:
            return f"fixed({self.lo})"
        return f"rand({self.lo},{self.hi})"

    def draw(self, rng: np.random.Generator) -> int:
        if self.lo == self.hi:
            return self.lo
        return int(rng.integers(self.lo, self.hi + 1))


@dataclass(frozen=True)
class ClipSpec:
    """Which frames of which video one training sample covers."""

    video_id: str
    start_frame: int
    stride: int
    clip_len: int

    def __post_init__(self):
        if self.start_frame < 0 or self.stride < 1 or self.clip_len < 2:
            raise UsageError(f"invalid clip spec {self}")

    @property
    def span(self) -> int:
        return 1 + (self.clip_len - 1) * self.stride

    def frame_indices(self) -> np.ndarray:
        return self.start_frame + np.arange(self.clip_len) * self.stride


def sample_clip(video: datastore.FeatureSequence, policy: StridePolicy, clip_len: int,
                rng: np.random.Generator) -> ClipSpec:
    """Draw stride per policy (clamped so the span fits), then a uniform start.

    Draw order is fixed: stride first, then start.
    """
    if clip_len < 2:
        raise ConfigurationError(f"clip_len must be >= 2, got {clip_len}")
    n = video.num_frames
    if n < clip_len:
        raise SamplingError(
            f"video '{video.video_id}' has {n} frames, needs at least {clip_len}"
        )
    stride = policy.draw(rng)
    max_stride = (n - 1) // (clip_len - 1)
    if stride > max_stride:
        stride = max_stride
    span = 1 + (clip_len - 1) * stride
    start = int(rng.integers(0, n - span + 1))
    return ClipSpec(video.video_id, start, stride, clip_len)


def materialize(clip: ClipSpec, video: datastore.FeatureSequence) -> np.ndarray:
    """Rows of the video at start, start+stride, ..."""
    if clip.video_id != video.video_id:
        raise UsageError(f"clip is for '{clip.video_id}', video is '{video.video_id}'")
    if clip.start_frame + clip.span > video.num_frames:
        raise UsageError(
            f"clip {clip} overruns video '{video.video_id}' ({video.num_frames} frames)"
        )
    return video.features[clip.frame_indices()]


# -------------------------- train config --------------------------


@dataclass
class TrainConfig:
    """Optimization settings. mode "epochs" passes the corpus total_epochs
    times (one clip per video per epoch, times clips_per_video); mode
    "samples" stops after exactly total_samples clips."""

    mode: str = "epochs"
    total_epochs: float = 200.0
    total_samples: int = 10_000
    batch_size: int = 128
    base_lr: float = 4e-4
    warmup_epochs: float = 40.0
    min_lr: float = 1e-6
    mask_ratio: float = 0.5
    stride_policy: StridePolicy = StridePolicy(1, 8)
    clips_per_video: int = 10
    weight_decay: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("epochs", "samples"):
            raise ConfigurationError(f"mode must be 'epochs' or 'samples', got {self.mode!r}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.mask_ratio < 1.0:
            raise ConfigurationError(f"mask_ratio must lie in (0, 1), got {self.mask_ratio}")
        if self.mode == "epochs" and self.total_epochs <= 0:
            raise ConfigurationError("total_epochs must be positive")
        if self.mode == "samples" and self.total_samples < 1:
            raise ConfigurationError("total_samples must be >= 1")
        if self.clips_per_video < 1:
            raise ConfigurationError("clips_per_video must be >= 1")
        self.stride_policy = StridePolicy.parse(self.stride_policy)

    @classmethod
    def finetune(cls, total_samples: int = 10_000, base_lr: float = 4e-4, **kw) -> "TrainConfig":
        """Unsupervised fine-tuning regime: sample-count budget, short warmup."""
        args = dict(mode="samples", total_samples=total_samples, base_lr=base_lr,
                    warmup_epochs=5.0)
        args.update(kw)
        return cls(**args)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stride_policy"] = str(self.stride_policy)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = cls.__dataclass_fields__.keys()
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigurationError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


# -------------------------- the loop --------------------------


def _load_corpus(corpus):
    if isinstance(corpus, datastore.DatasetManifest):
        return [datastore.read_features(e.features) for e in corpus.entries]
    return list(corpus)


def _decayed(name: str) -> bool:
    # decay multiplies weights only; biases, norm affines and the mask token
    # stay unregularized
    return name.endswith(".w")


def iteration_plan(cfg: TrainConfig, num_videos: int):
    """(total_iterations, clips_per_epoch, schedule, fractional_epoch_fn).

    In samples mode one iteration is the schedule unit: warmup_epochs counts
    iterations and the cosine spans the full run.
    """
    if cfg.mode == "epochs":
        per_epoch = num_videos * cfg.clips_per_video
        total = math.ceil(cfg.total_epochs * per_epoch / cfg.batch_size)
        schedule = LrSchedule(cfg.base_lr, cfg.batch_size, cfg.warmup_epochs,
                              cfg.total_epochs, cfg.min_lr)
        frac = lambda k: min(k * cfg.batch_size / per_epoch, cfg.total_epochs)
    else:
        per_epoch = num_videos * cfg.clips_per_video
        total = math.ceil(cfg.total_samples / cfg.batch_size)
        warmup = min(cfg.warmup_epochs, max(total - 1, 0))
        schedule = LrSchedule(cfg.base_lr, cfg.batch_size, warmup, total, cfg.min_lr)
        frac = lambda k: float(k)
    return total, per_epoch, schedule, frac


def _sample_for(g: int, cfg: TrainConfig, videos, per_epoch: int, perms: dict):
    """Video index for global sample g; epochs mode walks shuffled epoch lists."""
    if cfg.mode == "epochs":
        epoch_idx, slot = divmod(g, per_epoch)
        if epoch_idx not in perms:
            perms.clear()
            perms[epoch_idx] = stream(cfg.seed, "order", epoch_idx).permutation(per_epoch)
        return int(perms[epoch_idx][slot]) // cfg.clips_per_video
    return int(stream(cfg.seed, "video", g).integers(len(videos)))


def train(corpus, model: AutoencoderState, cfg: TrainConfig, trace_path=None):
    """Run the masked-reconstruction loop; returns (model, trace).

    trace rows are (iteration, fractional_epoch, lr, loss); the same rows are
    appended to trace_path as CSV when given.
    """
    videos = _load_corpus(corpus)
    if not videos:
        raise UsageError("training corpus is empty")
    clip_len = model.config.clip_len
    total_iters, per_epoch, schedule, frac = iteration_plan(cfg, len(videos))

    trace = []
    perms = {}
    trace_fh = open(trace_path, "a") if trace_path else None
    try:
        if trace_fh is not None and trace_fh.tell() == 0:
            trace_fh.write("iteration,epoch,lr,loss\n")
        for k in range(total_iters):
            lr = lr_at(schedule, frac(k))
            clips = np.empty((cfg.batch_size, clip_len, model.config.input_dim),
                             dtype=np.float32)
            plans = []
            specs = []
            for b in range(cfg.batch_size):
                g = k * cfg.batch_size + b
                vid = videos[_sample_for(g, cfg, videos, per_epoch, perms)]
                spec = sample_clip(vid, cfg.stride_policy, clip_len,
                                   stream(cfg.seed, "clip", g))
                clips[b] = materialize(spec, vid)
                plans.append(random_mask(clip_len, cfg.mask_ratio,
                                         stream(cfg.seed, "mask", g)))
                specs.append(spec)
            model.zero_grads()
            loss = model.loss_and_grad(clips, plans)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at iteration {k}; clip specs: {specs}"
                )
            for p in model.parameters():
                adamw_step(p, lr,
                           weight_decay=cfg.weight_decay if _decayed(p.name) else 0.0)
            row = (k, frac(k), lr, loss)
            trace.append(row)
            if trace_fh is not None:
                trace_fh.write(f"{k},{row[1]:.10g},{lr:.10g},{loss:.10g}\n")
    finally:
        if trace_fh is not None:
            trace_fh.close()
    return model, trace


# -------------------------- checkpoints --------------------------

CKPT_MAGIC = b"VCKP"


def save_checkpoint(model: AutoencoderState, train_cfg, path) -> None:
    """Header JSON (configs + tensor manifest) then raw f32 LE payload."""
    manifest = []
    offset = 0
    for name, shape, _ in param_specs(model.config):
        manifest.append([name, list(shape), offset])
        offset += 4 * int(np.prod(shape))
    header = {
        "format_version": 1,
        "model": model.config.to_dict(),
        "train": train_cfg.to_dict() if train_cfg is not None else None,
        "params": manifest,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name, _, _ in param_specs(model.config):
            fh.write(np.ascontiguousarray(model.params[name].value, dtype="<f4").tobytes())


def load_checkpoint(path):
    """Returns (model, train_cfg or None); verifies names, shapes, payload size."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CKPT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {blob[:4]!r}, expected b'VCKP'")
    if len(blob) < 8:
        raise CheckpointError(f"{path}: truncated header")
    (hlen,) = struct.unpack_from("<I", blob, 4)
    try:
        header = json.loads(blob[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable header: {e}") from None
    config = ModelConfig.from_dict(header["model"])
    train_cfg = TrainConfig.from_dict(header["train"]) if header.get("train") else None

    expected = param_specs(config)
    stored = header["params"]
    problems = []
    for (name, shape, _), row in zip(expected, stored):
        if row[0] != name:
            problems.append(f"tensor '{row[0]}' where '{name}' expected")
        elif tuple(row[1]) != tuple(shape):
            problems.append(f"tensor '{name}' has shape {tuple(row[1])}, expected {tuple(shape)}")
    if len(stored) != len(expected):
        problems.append(f"{len(stored)} tensors stored, {len(expected)} expected")
    if problems:
        raise CheckpointError(f"{path}: " + "; ".join(problems))

    payload = blob[8 + hlen:]
    total = sum(int(np.prod(s)) for _, s, _ in expected)
    if len(payload) != 4 * total:
        raise CheckpointError(
            f"{path}: payload holds {len(payload)} bytes, expected {4 * total}"
        )
    model = AutoencoderState.zeros(config)
    for name, shape, _ in expected:
        count = int(np.prod(shape))
        (_, _, offset) = next(r for r in stored if r[0] == name)
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        model.params[name].value[...] = arr.reshape(shape)
    return model, train_cfg
