"""Per-frame importance from a trained autoencoder.

Each frame is placed at (or as near as the video boundary allows to) a fixed
slot of a strided window, masked alone, reconstructed, and scored by cosine
dissimilarity between reconstruction and original: 0 means perfectly
predictable from context, 2 means anti-aligned.
"""

from dataclasses import dataclass
import logging

import numpy as np

from .datastore import FeatureSequence
from .errors import ConfigurationError, ScoringError, UsageError
from .model import AutoencoderState, single_mask
from .trainer import ClipSpec

log = logging.getLogger(__name__)

COS_EPS = 1e-12
_CHUNK = 256  # frames reconstructed per forward pass


@dataclass
class ScoringConfig:
    stride: int = 2
    clip_len: int = 30
    target_slot: int = None  # defaults to clip_len // 2

    def __post_init__(self):
        if self.stride < 1:
            raise ConfigurationError(f"stride must be >= 1, got {self.stride}")
        if self.clip_len < 2:
            raise ConfigurationError(f"clip_len must be >= 2, got {self.clip_len}")
        if self.target_slot is None:
            self.target_slot = self.clip_len // 2
        if not 0 <= self.target_slot < self.clip_len:
            raise ConfigurationError(
                f"target_slot {self.target_slot} outside [0, {self.clip_len})"
            )


@dataclass
class ImportanceCurve:
    video_id: str
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise UsageError(f"{self.video_id}: scores must be a non-empty vector")
        if not np.all(np.isfinite(s)):
            raise UsageError(f"{self.video_id}: non-finite score")
        if s.min() < 0.0 or s.max() > 2.0:
            raise UsageError(
                f"{self.video_id}: scores outside [0, 2] ({s.min()}..{s.max()})"
            )
        self.scores = s

    @property
    def num_frames(self) -> int:
        return self.scores.size


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def window_for_target(num_frames: int, t: int, cfg: ScoringConfig,
                      video_id: str = "") -> tuple:
    """The strided window that scores frame t, and t's slot inside it.

    Ideal placement puts t at cfg.target_slot with cfg.stride. When the video
    boundary forbids that, the window shifts (same stride) so t lands on the
    nearest feasible slot; when no window of that stride contains t at all,
    the stride drops until one does.
    """
    L = cfg.clip_len
    if num_frames < L:
        raise ScoringError(
            f"video {video_id or '<anon>'!r} has {num_frames} frames, "
            f"scoring needs at least {L}"
        )
    if not 0 <= t < num_frames:
        raise UsageError(f"frame {t} outside [0, {num_frames})")
    for s in range(cfg.stride, 0, -1):
        span = 1 + (L - 1) * s
        if span > num_frames:
            continue
        # feasible slots keep the window inside [0, num_frames)
        slot_lo = max(0, _ceil_div(t - (num_frames - span), s))
        slot_hi = min(L - 1, t // s)
        if slot_lo > slot_hi:
            continue  # t is off-grid for every start at this stride
        slot = min(max(cfg.target_slot, slot_lo), slot_hi)
        start = t - slot * s
        return ClipSpec(video_id, start, s, L), slot
    raise ScoringError(f"no window of length {L} fits {num_frames} frames")


def _cosine_dissim(recon: np.ndarray, original: np.ndarray, video_id, frames):
    """1 - cos for row pairs, epsilon-guarded, clipped to the exact range."""
    r = recon.astype(np.float64)
    o = original.astype(np.float64)
    rn = np.linalg.norm(r, axis=-1)
    on = np.linalg.norm(o, axis=-1)
    zero = on < COS_EPS
    if np.any(zero):
        for t in np.asarray(frames)[zero]:
            log.warning("%s: frame %d has a zero-norm feature vector; "
                        "its score is epsilon-defined", video_id, int(t))
    cos = (r * o).sum(axis=-1) / np.maximum(rn, COS_EPS) / np.maximum(on, COS_EPS)
    return 1.0 - np.clip(cos, -1.0, 1.0)


def score_frame(model: AutoencoderState, video: FeatureSequence, t: int,
                cfg: ScoringConfig) -> float:
    """1 - cos(reconstructed frame t, original frame t)."""
    spec, slot = window_for_target(video.num_frames, t, cfg, video.video_id)
    clip = video.features[spec.frame_indices()]
    recon = model.reconstruct(clip, single_mask(cfg.clip_len, slot))
    score = _cosine_dissim(recon[None, slot], clip[None, slot], video.video_id, [t])
    return float(score[0])


def score_video(model: AutoencoderState, video: FeatureSequence,
                cfg: ScoringConfig) -> ImportanceCurve:
    """score_frame for every frame, batched through the model."""
    if model.config.clip_len != cfg.clip_len:
        raise ConfigurationError(
            f"scoring clip_len {cfg.clip_len} != model clip_len {model.config.clip_len}"
        )
    if model.config.input_dim != video.feature_dim:
        raise UsageError(
            f"video '{video.video_id}' has {video.feature_dim}-d features, "
            f"model expects {model.config.input_dim}"
        )
    n = video.num_frames
    windows = [window_for_target(n, t, cfg, video.video_id) for t in range(n)]
    scores = np.empty(n, dtype=np.float64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        batch = np.stack([video.features[spec.frame_indices()]
                          for spec, _ in windows[lo:hi]])
        plans = [single_mask(cfg.clip_len, slot) for _, slot in windows[lo:hi]]
        recon = model.reconstruct_batch(batch, plans)
        rows = np.arange(hi - lo)
        slots = np.array([slot for _, slot in windows[lo:hi]])
        scores[lo:hi] = _cosine_dissim(recon[rows, slots], batch[rows, slots],
                                       video.video_id, np.arange(lo, hi))
    return ImportanceCurve(video.video_id, scores)


# -------------------------- curve files --------------------------


def write_curve(curve: ImportanceCurve, path) -> None:
    """CSV of (frame_index, score); floats at full round-trip precision."""
    with open(path, "w") as fh:
        fh.write("frame_index,score\n")
        for i, v in enumerate(curve.scores):
            fh.write(f"{i},{float(v)!r}\n")


def read_curve(path, video_id=None) -> ImportanceCurve:
    scores = []
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "frame_index,score":
            raise UsageError(f"{path}: expected 'frame_index,score' header")
        for line in fh:
            if line.strip():
                _, v = line.split(",")
                scores.append(float(v))
    if video_id is None:
        import os
        video_id = os.path.splitext(os.path.basename(str(path)))[0]
    return ImportanceCurve(video_id, np.array(scores))
