"""Unsupervised video summarization via masked feature reconstruction.

A numpy library for training a masked autoencoder over per-frame feature
sequences, scoring frame importance by leave-one-out reconstruction error,
and evaluating the resulting curves against human annotations.
"""

import os as _os

# honored only if set before numpy's first import, so it runs here
_threads = _os.environ.get("FRAMESUM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)
del _os, _threads

__version__ = "0.1.0"

from .errors import (
    FramesumError,
    ConfigurationError,
    UsageError,
    FormatError,
    TrainingError,
    SamplingError,
    ScoringError,
    CheckpointError,
)
from .model import (
    ModelConfig,
    MaskPlan,
    AutoencoderState,
    random_mask,
    single_mask,
    masked_mse,
    parameter_count,
)
from .optim import Parameter, LrSchedule, adamw_step, lr_at
from .trainer import ClipSpec, StridePolicy, TrainConfig, train, save_checkpoint, load_checkpoint
from .scorer import ImportanceCurve, ScoringConfig, score_frame, score_video, window_for_target
from .evaluator import (
    FragmentSelection,
    RankMetricReport,
    evaluate_curve,
    evaluate_dataset,
    evaluate_splits,
    cross_matrix,
    f1_keyfragment,
    kendall_tau_b,
    knapsack_select,
    spearman_rho,
)

__all__ = [
    "FramesumError",
    "ConfigurationError",
    "UsageError",
    "FormatError",
    "TrainingError",
    "SamplingError",
    "ScoringError",
    "CheckpointError",
    "ModelConfig",
    "MaskPlan",
    "AutoencoderState",
    "random_mask",
    "single_mask",
    "masked_mse",
    "parameter_count",
    "Parameter",
    "LrSchedule",
    "adamw_step",
    "lr_at",
    "ClipSpec",
    "StridePolicy",
    "TrainConfig",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "ImportanceCurve",
    "ScoringConfig",
    "score_frame",
    "score_video",
    "window_for_target",
    "FragmentSelection",
    "RankMetricReport",
    "evaluate_curve",
    "evaluate_dataset",
    "evaluate_splits",
    "cross_matrix",
    "f1_keyfragment",
    "kendall_tau_b",
    "knapsack_select",
    "spearman_rho",
]
