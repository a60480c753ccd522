#!/usr/bin/env python3
# The core mechanism, end to end on synthetic data.
#
# Build videos whose frames repeat a few feature motifs, hide a handful of
# one-off outlier frames among them, train the masked autoencoder to fill in
# hidden frames, then score every frame by how badly its reconstruction
# matches the original. Motif frames are predictable from context; outliers
# are not. If the pipeline works, the outliers float to the top.

import numpy as np

from framesum import rng as frng
from framesum.model import AutoencoderState, ModelConfig
from framesum.scorer import ScoringConfig, score_video
from framesum.synthetic import motif_corpus
from framesum.trainer import TrainConfig, train

SEED = 5

videos, outliers = motif_corpus(num_videos=20, seed=SEED)
total = sum(v.num_frames for v in videos)
planted = sum(len(ix) for ix in outliers.values())
print(f"corpus: {len(videos)} videos, {total} frames, {planted} planted outliers")

# desk-scale model: 6-frame windows over 8-d features
cfg = ModelConfig.tiny()
model = AutoencoderState.initialize(cfg, frng.stream(SEED, "init"))

# 2000 iterations of 16 clips; lr warms up linearly then decays on a cosine.
# the paper-scale defaults (batch 128, base_lr 4e-4, 200 epochs) live in
# TrainConfig() — these numbers are sized for a laptop minute.
tcfg = TrainConfig(mode="samples", total_samples=32000, batch_size=16,
                   base_lr=3.2e-2, warmup_epochs=50.0,
                   stride_policy="rand(1,4)", seed=SEED)
model, trace = train(videos, model, tcfg)

for k in (0, len(trace) // 4, len(trace) // 2, len(trace) - 1):
    it, _, lr, loss = trace[k]
    print(f"  iter {it:4d}  lr {lr:.2e}  loss {loss:.4f}")

# scoring masks each frame alone inside a stride-2 window and measures
# 1 - cos(reconstruction, original); higher = harder to predict
scfg = ScoringConfig(stride=2, clip_len=cfg.clip_len)

video = videos[0]
curve = score_video(model, video, scfg)
marked = set(outliers[video.video_id])
print(f"\n{video.video_id}: planted outliers at {sorted(marked)}")
ranked = np.argsort(-curve.scores)
print("ten highest-scoring frames:", ranked[:10].tolist())

# how cleanly do the scores separate the two populations?
rest = np.setdiff1d(np.arange(video.num_frames), sorted(marked))
print(f"mean outlier score  {curve.scores[sorted(marked)].mean():.4f}")
print(f"mean ordinary score {curve.scores[rest].mean():.4f}")

# and across the whole corpus: count videos where every planted outlier
# lands in the top decile of that video's scores
hits = 0
for v in videos:
    s = score_video(model, v, scfg).scores
    decile = set(np.argsort(-s)[: int(np.ceil(0.1 * v.num_frames))].tolist())
    hits += set(outliers[v.video_id]) <= decile
print(f"\noutliers fully inside the top decile: {hits}/{len(videos)} videos")
