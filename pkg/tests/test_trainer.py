"""Clip sampling, epoch accounting, the training loop, checkpoints."""

import math

import numpy as np
import pytest

from framesum.datastore import DatasetManifest, FeatureSequence, ManifestEntry, write_features
from framesum.errors import (
    CheckpointError,
    ConfigurationError,
    SamplingError,
    UsageError,
)
from framesum.model import AutoencoderState, ModelConfig, single_mask
from framesum.optim import lr_at
from framesum.rng import stream
from framesum.synthetic import motif_corpus
from framesum.trainer import (
    ClipSpec,
    StridePolicy,
    TrainConfig,
    iteration_plan,
    load_checkpoint,
    materialize,
    sample_clip,
    save_checkpoint,
    train,
)

TINY = ModelConfig.tiny()


def make_video(frames, dim=8, vid="v", seed=0):
    feats = stream(seed, "v").normal(size=(frames, dim)).astype(np.float32)
    return FeatureSequence(vid, 30.0, feats)


# ---------------- stride policy ----------------


def test_policy_parse_forms():
    assert StridePolicy.parse("rand(1,8)") == StridePolicy(1, 8)
    assert StridePolicy.parse("fixed(2)") == StridePolicy(2, 2)
    assert StridePolicy.parse("31") == StridePolicy(31, 31)
    assert StridePolicy.parse(4) == StridePolicy(4, 4)
    assert str(StridePolicy(1, 8)) == "rand(1,8)"
    assert str(StridePolicy(2, 2)) == "fixed(2)"
    assert StridePolicy.parse(str(StridePolicy(3, 7))) == StridePolicy(3, 7)


def test_policy_validation():
    with pytest.raises(ConfigurationError):
        StridePolicy(0, 4)
    with pytest.raises(ConfigurationError):
        StridePolicy(5, 2)
    with pytest.raises(ConfigurationError):
        StridePolicy.parse("sometimes(1,2)")


def test_policy_draw_frequencies():
    counts = np.zeros(9)
    for i in range(10_000):
        counts[StridePolicy(1, 8).draw(stream(0, "s", i))] += 1
    freq = counts[1:9] / 10_000
    assert np.all(np.abs(freq - 1 / 8) < 0.02)


# ---------------- sample_clip ----------------


def test_sample_clip_span_arithmetic():
    video = make_video(300)
    for i in range(200):
        spec = sample_clip(video, StridePolicy.fixed(8), 30, stream(1, "c", i))
        assert spec.stride == 8
        assert spec.span == 233
        assert 0 <= spec.start_frame <= 67
        assert spec.start_frame + spec.span <= 300


def test_sample_clip_exact_fit():
    video = make_video(30)
    spec = sample_clip(video, StridePolicy.fixed(8), 30, stream(2, "c"))
    assert (spec.start_frame, spec.stride) == (0, 1)


def test_sample_clip_clamps_stride():
    video = make_video(60)  # max stride for clip_len 30 is (60-1)//29 = 2
    for i in range(50):
        spec = sample_clip(video, StridePolicy(1, 8), 30, stream(3, "c", i))
        assert spec.stride <= 2
        assert spec.start_frame + spec.span <= 60


def test_sample_clip_too_short():
    with pytest.raises(SamplingError, match="shorty"):
        sample_clip(make_video(5, vid="shorty"), StridePolicy.fixed(1), 30, stream(4, "c"))


def test_sample_clip_start_coverage():
    # uniform over legal starts: with n=40, L=30, s=1 there are 11 starts
    video = make_video(40)
    seen = set()
    for i in range(500):
        seen.add(sample_clip(video, StridePolicy.fixed(1), 30, stream(5, "c", i)).start_frame)
    assert seen == set(range(11))


# ---------------- materialize ----------------


def test_materialize_every_other_frame():
    video = make_video(10)
    out = materialize(ClipSpec("v", 0, 2, 3), video)
    np.testing.assert_array_equal(out, video.features[[0, 2, 4]])


def test_materialize_contiguous():
    video = make_video(10)
    out = materialize(ClipSpec("v", 4, 1, 3), video)
    np.testing.assert_array_equal(out, video.features[4:7])


def test_materialize_matches_index_arithmetic():
    video = make_video(200)
    for i in range(100):
        rng = stream(6, "m", i)
        stride = int(rng.integers(1, 9))
        clip_len = int(rng.integers(2, 12))
        max_start = 200 - (1 + (clip_len - 1) * stride)
        if max_start < 0:
            continue
        start = int(rng.integers(0, max_start + 1))
        out = materialize(ClipSpec("v", start, stride, clip_len), video)
        expect = np.stack([video.features[start + j * stride] for j in range(clip_len)])
        np.testing.assert_array_equal(out, expect)


def test_materialize_rejects_overrun():
    with pytest.raises(UsageError):
        materialize(ClipSpec("v", 5, 2, 4), make_video(10))


def test_clip_spec_validation():
    with pytest.raises(UsageError):
        ClipSpec("v", -1, 1, 3)
    with pytest.raises(UsageError):
        ClipSpec("v", 0, 0, 3)
    with pytest.raises(UsageError):
        ClipSpec("v", 0, 1, 1)


# ---------------- iteration accounting ----------------


def test_samples_mode_iteration_count():
    cfg = TrainConfig.finetune(total_samples=10_000)
    total, _, _, _ = iteration_plan(cfg, num_videos=5)
    assert total == 79 == math.ceil(10_000 / 128)


def test_finetune_table_grid():
    for samples in (10_000, 50_000):
        for lr in (4e-4, 4e-5):
            cfg = TrainConfig.finetune(total_samples=samples, base_lr=lr)
            assert cfg.mode == "samples"
            assert cfg.warmup_epochs == 5.0
            assert cfg.total_samples == samples
            assert cfg.base_lr == lr


def test_epochs_mode_touches_videos_equally():
    videos, _ = motif_corpus(num_videos=4, seed=1)
    cfg = TrainConfig(mode="epochs", total_epochs=2, batch_size=8, clips_per_video=3,
                      mask_ratio=0.5, stride_policy="fixed(2)", seed=3)
    from framesum.trainer import _sample_for

    per_epoch = 4 * 3
    perms = {}
    for epoch in range(2):
        counts = np.zeros(4, dtype=int)
        for slot in range(per_epoch):
            counts[_sample_for(epoch * per_epoch + slot, cfg, videos, per_epoch, perms)] += 1
        assert list(counts) == [3, 3, 3, 3]


def test_lr_follows_schedule_exactly():
    videos, _ = motif_corpus(num_videos=3, frames_lo=20, frames_hi=24, seed=2)
    model = AutoencoderState.initialize(TINY, stream(0, "init"))
    cfg = TrainConfig(mode="epochs", total_epochs=2, batch_size=4, clips_per_video=2,
                      warmup_epochs=1, stride_policy="rand(1,3)", seed=5)
    _, trace = train(videos, model, cfg)
    total, per_epoch, schedule, frac = iteration_plan(cfg, len(videos))
    assert len(trace) == total
    for k, epoch, lr, loss in trace:
        assert epoch == frac(k)
        assert lr == lr_at(schedule, frac(k))
        assert np.isfinite(loss)


def test_train_deterministic_given_seed():
    videos, _ = motif_corpus(num_videos=3, frames_lo=20, frames_hi=24, seed=4)
    cfg = TrainConfig(mode="samples", total_samples=40, batch_size=8, warmup_epochs=1,
                      stride_policy="rand(1,2)", seed=11)
    runs = []
    for _ in range(2):
        model = AutoencoderState.initialize(TINY, stream(9, "init"))
        model, trace = train(videos, model, cfg)
        runs.append((trace, {n: p.value.copy() for n, p in model.params.items()}))
    assert runs[0][0] == runs[1][0]
    for name in runs[0][1]:
        np.testing.assert_array_equal(runs[0][1][name], runs[1][1][name])


def test_train_writes_csv_trace(tmp_path):
    videos, _ = motif_corpus(num_videos=2, frames_lo=20, frames_hi=22, seed=5)
    cfg = TrainConfig(mode="samples", total_samples=8, batch_size=4, warmup_epochs=1,
                      stride_policy="fixed(1)", seed=2)
    model = AutoencoderState.initialize(TINY, stream(1, "init"))
    path = tmp_path / "trace.csv"
    _, trace = train(videos, model, cfg, trace_path=path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iteration,epoch,lr,loss"
    assert len(lines) == len(trace) + 1
    first = lines[1].split(",")
    assert int(first[0]) == 0
    assert float(first[2]) == trace[0][2]


def test_train_converges_on_motif_corpus():
    # repeated patterns are learnable: loss falls below 10% of start.
    # the floor is set by the 5% of frames that are pure outliers (~6%),
    # so the tail is measured as a 50-iteration mean, not one noisy batch
    videos, _ = motif_corpus(num_videos=20, seed=6)
    model = AutoencoderState.initialize(TINY, stream(3, "init"))
    cfg = TrainConfig(mode="samples", total_samples=1000 * 16, batch_size=16,
                      warmup_epochs=50, base_lr=3.2e-2, stride_policy="rand(1,4)",
                      seed=7, clips_per_video=10)
    _, trace = train(videos, model, cfg)
    assert len(trace) == 1000
    losses = [row[3] for row in trace]
    assert all(np.isfinite(v) for v in losses)
    assert float(np.mean(losses[-50:])) < 0.1 * losses[0]


def test_train_empty_corpus_rejected():
    model = AutoencoderState.initialize(TINY, stream(0, "init"))
    with pytest.raises(UsageError):
        train([], model, TrainConfig())


def test_train_accepts_manifest(tmp_path):
    videos, _ = motif_corpus(num_videos=2, frames_lo=20, frames_hi=22, seed=8)
    entries = []
    for v in videos:
        p = tmp_path / f"{v.video_id}.vft"
        write_features(v, p)
        entries.append(ManifestEntry(v.video_id, str(p)))
    manifest = DatasetManifest("synth", entries)
    model = AutoencoderState.initialize(TINY, stream(2, "init"))
    cfg = TrainConfig(mode="samples", total_samples=8, batch_size=4, warmup_epochs=1,
                      stride_policy="fixed(1)", seed=1)
    _, trace = train(manifest, model, cfg)
    assert len(trace) == 2


# ---------------- checkpoints ----------------


def trained_tiny(seed=0):
    model = AutoencoderState.initialize(TINY, stream(seed, "init"))
    videos, _ = motif_corpus(num_videos=2, frames_lo=20, frames_hi=22, seed=seed)
    cfg = TrainConfig(mode="samples", total_samples=8, batch_size=4, warmup_epochs=1,
                      stride_policy="fixed(1)", seed=seed)
    model, _ = train(videos, model, cfg)
    return model, cfg


def test_checkpoint_roundtrip(tmp_path):
    model, cfg = trained_tiny()
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, cfg, path)
    back, back_cfg = load_checkpoint(path)
    assert back.config == model.config
    assert back_cfg == cfg
    for name in model.params:
        np.testing.assert_array_equal(back.params[name].value, model.params[name].value)


def test_checkpoint_save_load_save_identical(tmp_path):
    model, cfg = trained_tiny(1)
    a = tmp_path / "a.ckpt"
    b = tmp_path / "b.ckpt"
    save_checkpoint(model, cfg, a)
    back, back_cfg = load_checkpoint(a)
    save_checkpoint(back, back_cfg, b)
    assert a.read_bytes() == b.read_bytes()


def test_checkpoint_without_train_config(tmp_path):
    model = AutoencoderState.initialize(TINY, stream(4, "init"))
    path = tmp_path / "bare.ckpt"
    save_checkpoint(model, None, path)
    _, cfg = load_checkpoint(path)
    assert cfg is None


def test_checkpoint_reconstruction_survives_roundtrip(tmp_path):
    model, cfg = trained_tiny(2)
    clip = stream(5, "clip").normal(size=(6, 8)).astype(np.float32)
    plan = single_mask(6, 3)
    before = model.reconstruct(clip, plan)
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, cfg, path)
    back, _ = load_checkpoint(path)
    np.testing.assert_array_equal(back.reconstruct(clip, plan), before)


def test_checkpoint_rejects_mangled_manifest(tmp_path):
    model, cfg = trained_tiny(3)
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, cfg, path)
    blob = bytearray(path.read_bytes())
    # rename a tensor inside the JSON header
    idx = blob.find(b"in_proj.w")
    blob[idx:idx + 9] = b"in_proj.z"
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="in_proj"):
        load_checkpoint(path)


def test_checkpoint_rejects_truncated_payload(tmp_path):
    model, cfg = trained_tiny(4)
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, cfg, path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(CheckpointError, match="payload"):
        load_checkpoint(path)


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)
