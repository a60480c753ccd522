#!/usr/bin/env python3
# The evaluation harness piece by piece: rank correlations, why F1 needs a
# knapsack, and what random split draws do to reported numbers.

import numpy as np

from framesum.datastore import AnnotationSet, DatasetManifest, ManifestEntry, generate_splits
from framesum.evaluator import (
    evaluate_curve,
    evaluate_dataset,
    evaluate_splits,
    f1_keyfragment,
    kendall_tau_b,
    knapsack_select,
    spearman_rho,
)
from framesum.scorer import ImportanceCurve
from framesum.synthetic import tvsum_toy_annotations

# --- rank correlations -----------------------------------------------------

# tau-b counts concordant vs discordant pairs with tie correction
print("identical order:  ", kendall_tau_b([1, 2, 3, 4], [10, 20, 30, 40]))
print("reversed order:   ", kendall_tau_b([1, 2, 3, 4], [4, 3, 2, 1]))
print("one tie in x:     ", kendall_tau_b([1, 2, 2, 3], [1, 2, 3, 4]))  # 5/sqrt(30)

# rho is Pearson on average ranks; one swapped neighbor costs 0.5 here
print("swapped neighbor: ", spearman_rho([1, 2, 3], [1, 3, 2]))

# a constant side has no ranking to correlate against. that is reported as
# None (excluded from means, counted in reports) rather than silently 0.
print("flat annotator:   ", kendall_tau_b([1, 2, 3], [7, 7, 7]))

# human scores come per annotator; the default mode correlates against each
# row and averages the coefficients
ann = tvsum_toy_annotations("demo", 60, num_annotators=20, seed=0)
curve = ImportanceCurve("demo", np.random.default_rng(1).uniform(0, 2, 60))
tau, rho = evaluate_curve(curve, ann)
print(f"random curve vs 20 annotators: tau {tau:+.4f}  rho {rho:+.4f}")

# --- key-fragment F1 and its blind spot ------------------------------------

# videos come pre-cut into fragments (shot change points). a summary is a
# subset of fragments under a length budget; the knapsack picks the subset
# with maximal total importance.
sel = knapsack_select([10.0, 9.0, 6.0], [4, 3, 2], budget_frames=5)
print("\nknapsack picks fragments", sel.chosen, "worth", sel.total_value)

# hand-checkable F1: 10 frames, three fragments, budget half the video
cps = [[0, 4], [4, 7], [7, 10]]
pred = ImportanceCurve("toy", np.array([1.0] * 4 + [0.5] * 3 + [0.2] * 3))
gt_row = np.array([[1, 1, 0, 0, 1, 1, 1, 0, 0, 0]], dtype=float)
toy = AnnotationSet("toy", gt_row, change_points=cps)
f1 = f1_keyfragment(pred, toy, budget_fraction=0.5)
print(f"toy F1: {f1:.2f}  (precision 2/4, recall 2/5 -> 2pr/(p+r) = 44.44)")

# the blind spot: a random curve still collects F1 credit because some
# selected fragment always overlaps somebody's keyshots, while its rank
# correlation stays near zero. this is why tau/rho lead the reports.
# (100 frames so the default 15% budget holds at least one 15-frame shot)
long_ann = tvsum_toy_annotations("long", 100, num_annotators=20, seed=0)
f1s, taus = [], []
for trial in range(50):
    c = ImportanceCurve("long", np.random.default_rng(100 + trial).uniform(0, 2, 100))
    f1s.append(f1_keyfragment(c, long_ann))
    taus.append(evaluate_curve(c, long_ann)[0])
print(f"50 random curves: mean F1 {np.mean(f1s):.1f}  mean tau {np.mean(taus):+.4f}")

# --- split studies ----------------------------------------------------------

# retraining-free protocols often evaluate on 5 random test splits. the
# split draw itself moves the reported mean — measurably.
curves, anns = {}, {}
for i in range(12):
    vid = f"v{i}"
    curves[vid] = ImportanceCurve(vid, np.random.default_rng(i).uniform(0, 2, 40))
    anns[vid] = tvsum_toy_annotations(vid, 40, num_annotators=5, seed=i)

manifest = DatasetManifest("demo", [ManifestEntry(v, f"{v}.vft") for v in sorted(curves)])
for seed in (1, 2, 3):
    splits = generate_splits(manifest, num_splits=5, test_fraction=0.4, seed=seed)
    rep = evaluate_splits(curves, anns, splits)
    print(f"split draw {seed}: across-split mean tau {rep.mean_tau:+.4f}")

whole = evaluate_dataset([(curves[v], anns[v]) for v in sorted(curves)])
print(f"whole dataset (no splits): mean tau {whole.mean_tau:+.4f}")
