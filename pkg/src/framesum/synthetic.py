"""Synthetic corpora for convergence checks, demos, and evaluation baselines.

motif_corpus builds videos whose frames repeat one of a few fixed feature
motifs, with a small fraction of injected outlier frames living in feature
dimensions the motifs never touch. A masked autoencoder can learn to predict
motif frames from context but has no information about the outliers, so a
working scorer must rank outliers highest.
"""

import numpy as np

from .datastore import AnnotationSet, FeatureSequence
from .errors import ConfigurationError
from .rng import stream


def motif_corpus(num_videos=20, dim=8, frames_lo=40, frames_hi=60,
                 outlier_fraction=0.05, num_motifs=3, scale=3.0, noise=0.05,
                 seed=0):
    """Returns (videos, outliers): FeatureSequences plus per-video outlier frames.

    Motifs occupy the first num_motifs dimensions (one axis each, amplitude
    `scale`); outliers are random unit vectors in the remaining dimensions
    at the same amplitude, so they are exactly as "loud" but unpredictable.
    Every frame gets i.i.d. Gaussian jitter of size `noise`.
    """
    if dim < 2 * num_motifs:
        raise ConfigurationError(
            f"dim {dim} too small for {num_motifs} motifs plus outlier dimensions"
        )
    videos = []
    outliers = {}
    for v in range(num_videos):
        rng = stream(seed, "video", v)
        frames = int(rng.integers(frames_lo, frames_hi + 1))
        motif = np.zeros(dim, dtype=np.float64)
        motif[v % num_motifs] = scale

        feats = np.tile(motif, (frames, 1))
        count = max(1, int(round(outlier_fraction * frames)))
        where = np.sort(rng.choice(frames, size=count, replace=False))
        for t in where:
            direction = rng.normal(size=dim - num_motifs)
            direction /= np.linalg.norm(direction)
            feats[t] = 0.0
            feats[t, num_motifs:] = scale * direction
        feats += noise * rng.normal(size=feats.shape)

        vid = f"synth_{v:02d}"
        videos.append(FeatureSequence(vid, 30.0, feats.astype(np.float32)))
        outliers[vid] = [int(t) for t in where]
    return videos, outliers


def tvsum_toy_annotations(video_id, num_frames, num_annotators=20, shot_len=15,
                          seed=0):
    """Shot-constant integer scores 1..5 per annotator, with change points."""
    rng = stream(seed, "toyann")
    bounds = list(range(0, num_frames, shot_len)) + [num_frames]
    cps = [[a, b] for a, b in zip(bounds, bounds[1:]) if b > a]
    scores = np.empty((num_annotators, num_frames))
    for a in range(num_annotators):
        for start, end in cps:
            scores[a, start:end] = rng.integers(1, 6)
    return AnnotationSet(video_id, scores, fps=30.0, change_points=cps)
