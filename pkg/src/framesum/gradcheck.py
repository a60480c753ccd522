"""Central finite differences for verifying analytic gradients.

The oracle only evaluates the forward function, never any backward pass.
"""

import numpy as np


def finite_difference(f, x: np.ndarray, step: float = 1e-3, dtype=np.float64) -> np.ndarray:
    """Central-difference gradient of scalar f at x, elementwise.

    Perturbations happen in `dtype` (pass float32 to probe at production
    precision); the quotient itself is always accumulated in float64.
    """
    x = np.array(x, dtype=dtype)
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + np.asarray(step, dtype=dtype)
        fp = float(f(x))
        flat[i] = orig - np.asarray(step, dtype=dtype)
        fm = float(f(x))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """sup|a - n| / max(sup|a|, sup|n|, floor): error relative to gradient scale.

    Elementwise quotients blow up on near-zero entries at float32 precision
    (forward noise ~ eps * |f| / step swamps tiny components), so the
    comparison normalizes by the tensor's magnitude instead.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(n))), floor)
    return float(np.max(np.abs(a - n)) / scale)


def check_model_gradients(seed: int, samples_per_tensor: int = 3,
                          batch_size: int = 2, step: float = 1e-5) -> float:
    """Worst relative error of the analytic loss gradient on a small model.

    Builds a float64 model from `seed`, draws a random batch with random
    masks, and central-differences `samples_per_tensor` coordinates of every
    parameter tensor against the analytic gradient. Each coordinate's error
    is normalized by its tensor's gradient magnitude.
    """
    from .model import AutoencoderState, MaskPlan, ModelConfig

    cfg = ModelConfig.tiny()
    rng = np.random.default_rng(seed)
    model = AutoencoderState.initialize(cfg, rng).astype(np.float64)
    L = cfg.clip_len
    clips = rng.normal(size=(batch_size, L, cfg.input_dim))
    plans = [MaskPlan(L, rng.choice(L, size=L // 2, replace=False))
             for _ in range(batch_size)]

    model.zero_grads()
    model.loss_and_grad(clips, plans)
    worst = 0.0
    for param in model.parameters():
        flat = param.value.reshape(-1)
        gflat = param.grad.reshape(-1)
        scale = max(float(np.max(np.abs(param.grad))), 1e-6)
        coords = rng.choice(flat.size, size=min(samples_per_tensor, flat.size),
                            replace=False)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + step
            fp = model.masked_loss(clips, plans)
            flat[c] = orig - step
            fm = model.masked_loss(clips, plans)
            flat[c] = orig
            numeric = (fp - fm) / (2.0 * step)
            worst = max(worst, abs(float(gflat[c]) - numeric) / scale)
    return worst
