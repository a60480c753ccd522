"""Rank correlations, key-fragment F1, split studies and cross-dataset matrices.

Correlations against a constant sequence have a zero denominator. Those are
returned as None ("undefined"), excluded from every mean, and counted in the
reports; they are never folded into 0.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .datastore import AnnotationSet, DatasetManifest, SplitSet, load_annotations, read_features
from .errors import ScoringError, UsageError
from .scorer import ImportanceCurve, ScoringConfig, score_video

PER_ANNOTATOR_MEAN = "per_annotator_mean"
MEAN_ANNOTATION = "mean_annotation"
_AGGREGATIONS = (PER_ANNOTATOR_MEAN, MEAN_ANNOTATION)


def _as_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise UsageError(f"sequences must be equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise UsageError("correlation needs at least 2 points")
    return x, y


def kendall_tau_b(x, y):
    """Tie-corrected Kendall correlation; None when either side is constant."""
    x, y = _as_pair(x, y)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None
    tau = scipy.stats.kendalltau(x, y, variant="b")[0]
    return None if np.isnan(tau) else float(tau)


def spearman_rho(x, y):
    """Pearson correlation of average ranks; None when either side is constant."""
    x, y = _as_pair(x, y)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None
    rho = scipy.stats.spearmanr(x, y)[0]
    return None if np.isnan(rho) else float(rho)


def evaluate_curve(curve: ImportanceCurve, ann: AnnotationSet,
                   aggregation: str = PER_ANNOTATOR_MEAN):
    """(tau, rho) of a curve against multi-annotator scores.

    per_annotator_mean correlates against each annotator row and averages the
    coefficients; mean_annotation averages the rows first and correlates once.
    Either value is None when every contributing correlation is undefined.
    """
    if aggregation not in _AGGREGATIONS:
        raise UsageError(f"unknown aggregation '{aggregation}'")
    if curve.num_frames != ann.num_frames:
        raise UsageError(
            f"curve for '{curve.video_id}' has {curve.num_frames} frames, "
            f"annotations have {ann.num_frames}"
        )
    if aggregation == MEAN_ANNOTATION:
        row = ann.scores.mean(axis=0)
        return kendall_tau_b(curve.scores, row), spearman_rho(curve.scores, row)
    taus, rhos = [], []
    for row in ann.scores:
        t = kendall_tau_b(curve.scores, row)
        r = spearman_rho(curve.scores, row)
        if t is not None:
            taus.append(t)
        if r is not None:
            rhos.append(r)
    tau = float(np.mean(taus)) if taus else None
    rho = float(np.mean(rhos)) if rhos else None
    return tau, rho


# ------------------------- key-fragment F1 -------------------------


@dataclass
class FragmentSelection:
    values: np.ndarray          # per-fragment mean importance
    chosen: list                # selected fragment indices, ascending
    budget_frames: int
    change_points: list = None  # the fragments the values were pooled over

    @property
    def total_value(self) -> float:
        return float(sum(self.values[i] for i in self.chosen))


def knapsack_select(fragment_values, fragment_lengths, budget_frames: int) -> FragmentSelection:
    """Exact 0/1 knapsack over frame counts.

    Dynamic program on total selected length; ties broken toward skipping, so
    the result is deterministic. An empty selection is valid.
    """
    values = np.asarray(fragment_values, dtype=np.float64)
    lengths = [int(l) for l in fragment_lengths]
    if values.ndim != 1 or len(lengths) != values.size:
        raise UsageError("values and lengths must be equal-length vectors")
    if not np.all(np.isfinite(values)):
        raise UsageError("fragment values must be finite")
    if any(l < 1 for l in lengths):
        raise UsageError("fragment lengths must be positive")
    if budget_frames < 0:
        raise UsageError(f"budget_frames must be >= 0, got {budget_frames}")
    n, w_cap = values.size, int(budget_frames)
    dp = np.zeros(w_cap + 1)
    take = np.zeros((n, w_cap + 1), dtype=bool)
    for i in range(n):
        l, v = lengths[i], values[i]
        if l > w_cap:
            continue
        cand = dp[: w_cap + 1 - l] + v
        better = cand > dp[l:]
        take[i, l:] = better
        dp = dp.copy()
        dp[l:][better] = cand[better]
    chosen = []
    w = w_cap
    for i in range(n - 1, -1, -1):
        if take[i, w]:
            chosen.append(i)
            w -= lengths[i]
    chosen.reverse()
    return FragmentSelection(values, chosen, w_cap)


def _fragment_means(scores: np.ndarray, change_points) -> np.ndarray:
    return np.array([scores[a:b].mean() for a, b in change_points])


def _selection_mask(sel: FragmentSelection, change_points, num_frames) -> np.ndarray:
    mask = np.zeros(num_frames, dtype=bool)
    for i in sel.chosen:
        a, b = change_points[i]
        mask[a:b] = True
    return mask


def _binary_f1(pred: np.ndarray, truth: np.ndarray) -> float:
    overlap = int(np.sum(pred & truth))
    if overlap == 0:
        return 0.0
    precision = overlap / int(pred.sum())
    recall = overlap / int(truth.sum())
    return 2.0 * precision * recall / (precision + recall)


def f1_keyfragment(curve: ImportanceCurve, ann: AnnotationSet,
                   budget_fraction: float = 0.15, aggregation: str = "mean"):
    """Key-fragment F1 in percent, or None when the annotations carry no
    change points (the metric is then unsupported for that video).

    Fragments are pooled to their mean curve score and selected by exact
    knapsack under a floor(budget_fraction * num_frames) frame budget. Each
    annotator's keyshot frames are the nonzero entries of a binary row; a
    graded row is first reduced to keyshots by the same pooling and knapsack
    applied to that row. Per-annotator F1 is aggregated by mean or max.
    """
    if aggregation not in ("mean", "max"):
        raise UsageError(f"unknown F1 aggregation '{aggregation}'")
    if not 0.0 < budget_fraction <= 1.0:
        raise UsageError(f"budget_fraction must be in (0, 1], got {budget_fraction}")
    if ann.change_points is None:
        return None
    if curve.num_frames != ann.num_frames:
        raise UsageError(
            f"curve for '{curve.video_id}' has {curve.num_frames} frames, "
            f"annotations have {ann.num_frames}"
        )
    n = curve.num_frames
    cps = ann.change_points
    lengths = ann.fragment_lengths()
    budget = int(budget_fraction * n)
    sel = knapsack_select(_fragment_means(curve.scores, cps), lengths, budget)
    sel.change_points = cps
    pred = _selection_mask(sel, cps, n)
    per_annotator = []
    for row in ann.scores:
        uniq = np.unique(row)
        if np.all(np.isin(uniq, (0.0, 1.0))):
            truth = row > 0
        else:
            gt_sel = knapsack_select(_fragment_means(row, cps), lengths, budget)
            truth = _selection_mask(gt_sel, cps, n)
        per_annotator.append(_binary_f1(pred, truth))
    agg = np.mean if aggregation == "mean" else np.max
    return float(agg(per_annotator)) * 100.0


# --------------------------- reports ---------------------------


@dataclass
class VideoMetrics:
    video_id: str
    tau: float = None
    rho: float = None
    f1: float = None


@dataclass
class RankMetricReport:
    rows: list
    aggregation: str
    mean_tau: float = None
    mean_rho: float = None
    mean_f1: float = None
    undefined_tau: int = 0
    undefined_rho: int = 0


def _mean_or_none(vals):
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


def evaluate_dataset(pairs, aggregation: str = PER_ANNOTATOR_MEAN,
                     budget_fraction: float = 0.15,
                     f1_aggregation: str = None) -> RankMetricReport:
    """Per-video metrics plus dataset means, rows in input order.

    pairs: iterable of (ImportanceCurve, AnnotationSet). F1 is computed only
    when f1_aggregation is given ("mean" or "max"); videos without change
    points then report it as None.
    """
    rows = []
    for curve, ann in pairs:
        tau, rho = evaluate_curve(curve, ann, aggregation)
        f1 = None
        if f1_aggregation is not None:
            f1 = f1_keyfragment(curve, ann, budget_fraction, f1_aggregation)
        rows.append(VideoMetrics(curve.video_id, tau, rho, f1))
    return RankMetricReport(
        rows=rows,
        aggregation=aggregation,
        mean_tau=_mean_or_none([r.tau for r in rows]),
        mean_rho=_mean_or_none([r.rho for r in rows]),
        mean_f1=_mean_or_none([r.f1 for r in rows]),
        undefined_tau=sum(1 for r in rows if r.tau is None),
        undefined_rho=sum(1 for r in rows if r.rho is None),
    )


def _fmt(v):
    return "undefined" if v is None else f"{v:.6f}"


def write_report(report: RankMetricReport, path) -> None:
    """Plain-text table: one row per video, aggregate lines at the bottom."""
    with open(path, "w") as fh:
        fh.write("video_id\ttau\trho\tf1\n")
        for r in report.rows:
            fh.write(f"{r.video_id}\t{_fmt(r.tau)}\t{_fmt(r.rho)}\t{_fmt(r.f1)}\n")
        fh.write(f"mean\t{_fmt(report.mean_tau)}\t{_fmt(report.mean_rho)}"
                 f"\t{_fmt(report.mean_f1)}\n")
        fh.write(f"undefined\t{report.undefined_tau}\t{report.undefined_rho}\t-\n")
        fh.write(f"aggregation\t{report.aggregation}\n")


# ------------------------- split studies -------------------------


@dataclass
class SplitReport:
    split_names: list
    per_split: list               # RankMetricReport per split
    mean_tau: float = None
    mean_rho: float = None
    mean_f1: float = None


def evaluate_splits(curves_by_video: dict, ann_by_video: dict, splits: SplitSet,
                    aggregation: str = PER_ANNOTATOR_MEAN,
                    budget_fraction: float = 0.15,
                    f1_aggregation: str = None) -> SplitReport:
    """Metric means inside each split, plus the across-split mean of those."""
    for name, ids in splits.splits:
        for vid in ids:
            if vid not in curves_by_video:
                raise UsageError(f"split '{name}' needs a curve for '{vid}'")
            if vid not in ann_by_video:
                raise UsageError(f"split '{name}' needs annotations for '{vid}'")
    names, reports = [], []
    for name, ids in splits.splits:
        pairs = [(curves_by_video[v], ann_by_video[v]) for v in ids]
        names.append(name)
        reports.append(evaluate_dataset(pairs, aggregation, budget_fraction,
                                        f1_aggregation))
    return SplitReport(
        split_names=names,
        per_split=reports,
        mean_tau=_mean_or_none([r.mean_tau for r in reports]),
        mean_rho=_mean_or_none([r.mean_rho for r in reports]),
        mean_f1=_mean_or_none([r.mean_f1 for r in reports]),
    )


def write_split_report(report: SplitReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("split\ttau\trho\tf1\n")
        for name, rep in zip(report.split_names, report.per_split):
            fh.write(f"{name}\t{_fmt(rep.mean_tau)}\t{_fmt(rep.mean_rho)}"
                     f"\t{_fmt(rep.mean_f1)}\n")
        fh.write(f"mean\t{_fmt(report.mean_tau)}\t{_fmt(report.mean_rho)}"
                 f"\t{_fmt(report.mean_f1)}\n")


# ----------------------- cross-dataset matrix -----------------------


@dataclass
class CrossMatrix:
    train_tags: list
    dataset_names: list
    taus: np.ndarray   # (models, datasets), nan where undefined
    rhos: np.ndarray

    def to_csv(self, path) -> None:
        """Train tags as rows; each dataset contributes a tau and a rho column."""
        with open(path, "w") as fh:
            cols = []
            for name in self.dataset_names:
                cols += [f"{name}_tau", f"{name}_rho"]
            fh.write("train_tag," + ",".join(cols) + "\n")
            for i, tag in enumerate(self.train_tags):
                cells = []
                for j in range(len(self.dataset_names)):
                    for v in (self.taus[i, j], self.rhos[i, j]):
                        cells.append("undefined" if np.isnan(v) else f"{v:.6f}")
                fh.write(tag + "," + ",".join(cells) + "\n")


def load_eval_pairs(manifest: DatasetManifest):
    """(FeatureSequence, AnnotationSet) for every annotated manifest entry."""
    pairs = []
    for e in manifest.entries:
        if e.annotations is None:
            raise UsageError(
                f"dataset '{manifest.name}': video '{e.video_id}' has no annotations"
            )
        pairs.append((read_features(e.features), load_annotations(e.annotations)))
    return pairs


def cross_matrix(models, datasets, scfg: ScoringConfig,
                 aggregation: str = PER_ANNOTATOR_MEAN) -> CrossMatrix:
    """Evaluate every model on every dataset.

    models: list of (train_tag, AutoencoderState);
    datasets: list of (name, pairs) with pairs as from load_eval_pairs.
    Scoring failures are re-raised naming the (model, dataset) cell.
    """
    tags = [tag for tag, _ in models]
    names = [name for name, _ in datasets]
    taus = np.full((len(models), len(datasets)), np.nan)
    rhos = np.full((len(models), len(datasets)), np.nan)
    for i, (tag, model) in enumerate(models):
        for j, (name, pairs) in enumerate(datasets):
            try:
                curves = [(score_video(model, video, scfg), ann)
                          for video, ann in pairs]
            except ScoringError as e:
                raise ScoringError(f"model '{tag}' on dataset '{name}': {e}") from None
            report = evaluate_dataset(curves, aggregation)
            if report.mean_tau is not None:
                taus[i, j] = report.mean_tau
            if report.mean_rho is not None:
                rhos[i, j] = report.mean_rho
    return CrossMatrix(tags, names, taus, rhos)
