"""Independent oracle implementations used to cross-check the library.

Everything here is deliberately naive (quadratic pair counting, subset
enumeration, exhaustive window search) and shares no code with src/.
"""

import itertools
import math

import numpy as np


def tau_b_bruteforce(x, y):
    """Tie-corrected Kendall tau by explicit O(n^2) pair counting.

    Returns None when either side is constant (zero denominator).
    """
    x = list(map(float, x))
    y = list(map(float, y))
    n = len(x)
    nc = nd = 0
    tx = ty = 0  # pairs tied in x only / y only counted via n1, n2 below
    n1 = n2 = 0
    for i in range(n):
        for j in range(i + 1, n):
            a = x[i] - x[j]
            b = y[i] - y[j]
            if a == 0:
                n1 += 1
            if b == 0:
                n2 += 1
            if a * b > 0:
                nc += 1
            elif a * b < 0:
                nd += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - n1) * (n0 - n2))
    if denom == 0:
        return None
    return (nc - nd) / denom


def average_ranks(values):
    """Ranks 1..n with ties replaced by the mean of their rank positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def rho_bruteforce(x, y):
    """Spearman rho as Pearson correlation of average ranks. None if constant."""
    rx = average_ranks(list(map(float, x)))
    ry = average_ranks(list(map(float, y)))
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        return None
    return cov / math.sqrt(vx * vy)


def knapsack_bruteforce(values, lengths, budget):
    """Best 0/1 subset by enumeration. Returns (best_value, chosen_indices)."""
    best_v = 0.0
    best_set = ()
    n = len(values)
    for r in range(n + 1):
        for combo in itertools.combinations(range(n), r):
            w = sum(lengths[i] for i in combo)
            if w > budget:
                continue
            v = sum(values[i] for i in combo)
            if v > best_v + 1e-12:
                best_v = v
                best_set = combo
    return best_v, list(best_set)


def knapsack_bruteforce_vec(values, lengths, budget):
    """Same enumeration of all 2^n subsets, vectorized so n=20 stays fast."""
    n = len(values)
    bits = (np.arange(1 << n, dtype=np.uint32)[:, None]
            >> np.arange(n, dtype=np.uint32)) & 1
    bits = bits.astype(np.uint8)
    weights = bits @ np.asarray(lengths, dtype=np.int64)
    totals = bits @ np.asarray(values, dtype=np.float64)
    totals[weights > budget] = -np.inf
    best = int(np.argmax(totals))
    return float(totals[best]), [i for i in range(n) if (best >> i) & 1]


def window_oracle(num_frames, t, stride, clip_len, target_slot):
    """Exhaustive search for the window the scorer must pick.

    Enumerates every start position at every stride from `stride` down to 1,
    keeps windows that contain frame t on-grid, prefers the largest stride
    and, within it, the slot closest to target_slot. Returns (start, used
    stride, slot) or None if no window fits.
    """
    for s in range(stride, 0, -1):
        feasible = []
        for start in range(num_frames):
            end = start + (clip_len - 1) * s
            if end >= num_frames:
                break
            if (t - start) % s == 0 and start <= t <= end:
                slot = (t - start) // s
                feasible.append((abs(slot - target_slot), start, slot))
        if feasible:
            _, start, slot = min(feasible)
            return start, s, slot
    return None


def gelu_reference(x):
    """x * Phi(x) evaluated with math.erf, elementwise, float64."""
    x = np.asarray(x, dtype=np.float64)
    return np.array(
        [v * 0.5 * (1.0 + math.erf(v / math.sqrt(2.0))) for v in x.reshape(-1)]
    ).reshape(x.shape)
