"""AdamW update arithmetic and the warmup/cosine schedule."""

import math

import numpy as np
import pytest

from framesum.errors import ConfigurationError, TrainingError
from framesum.optim import LrSchedule, Parameter, adamw_step, lr_at


def scalar_param(value, grad):
    p = Parameter("w", np.array([value], dtype=np.float64))
    p.grad = np.array([grad], dtype=np.float64)
    return p


def test_zero_grad_zero_decay_is_identity():
    p = scalar_param(1.5, 0.0)
    adamw_step(p, lr=0.1, weight_decay=0.0)
    assert p.value[0] == 1.5
    assert p.m[0] == 0.0 and p.v[0] == 0.0
    assert p.step == 1


def hand_adamw_trace(w, g, lr, beta1, beta2, eps, wd, steps):
    """Scalar reference computed with plain python floats."""
    m = v = 0.0
    out = []
    for t in range(1, steps + 1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        w = w - lr * (m_hat / (math.sqrt(v_hat) + eps) + wd * w)
        out.append(w)
    return out


def test_first_step_hand_value():
    # m_hat = g = 0.1, v_hat = g^2 = 0.01 regardless of betas on step 1
    p = scalar_param(1.0, 0.1)
    adamw_step(p, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.05)
    expect = 1.0 - 0.1 * (0.1 / (math.sqrt(0.01) + 1e-8) + 0.05 * 1.0)
    assert abs(p.value[0] - expect) < 1e-12
    assert abs(p.value[0] - 0.895) < 1e-6


def test_two_step_trace_matches_reference():
    trace = hand_adamw_trace(1.0, 0.1, 0.1, 0.9, 0.999, 1e-8, 0.05, 2)
    p = scalar_param(1.0, 0.1)
    adamw_step(p, lr=0.1, weight_decay=0.05)
    assert abs(p.value[0] - trace[0]) < 1e-12
    adamw_step(p, lr=0.1, weight_decay=0.05)
    assert abs(p.value[0] - trace[1]) < 1e-12
    # frozen values from the reference above
    assert abs(trace[0] - 0.8950000100) < 1e-9
    assert abs(trace[1] - 0.7905250193) < 1e-9


def test_decay_is_decoupled_from_moments():
    # with zero gradient, the update must be exactly -lr*wd*w (no moment term)
    p = scalar_param(2.0, 0.0)
    adamw_step(p, lr=0.1, weight_decay=0.5)
    assert abs(p.value[0] - (2.0 - 0.1 * 0.5 * 2.0)) < 1e-15
    assert p.m[0] == 0.0 and p.v[0] == 0.0


def test_non_finite_gradient_names_parameter():
    p = scalar_param(1.0, float("nan"))
    with pytest.raises(TrainingError, match="'w'"):
        adamw_step(p, lr=0.1)


def test_negative_lr_rejected():
    with pytest.raises(ConfigurationError):
        adamw_step(scalar_param(1.0, 0.1), lr=-0.1)


def test_step_counter_advances_once_per_step():
    p = scalar_param(1.0, 0.1)
    for expect in (1, 2, 3):
        adamw_step(p, lr=0.01)
        assert p.step == expect


# ---------------- schedule ----------------


def default_schedule(**kw):
    args = dict(base_lr=4e-4, batch_size=128, warmup_epochs=40, total_epochs=200, min_lr=1e-6)
    args.update(kw)
    return LrSchedule(**args)


def test_peak_follows_linear_scale_rule():
    assert default_schedule().peak_lr == 4e-4 * 128 / 256
    assert default_schedule().peak_lr == 2e-4


def test_endpoints():
    s = default_schedule()
    assert lr_at(s, 0) == 0.0
    assert abs(lr_at(s, 40) - 2e-4) < 1e-18
    assert lr_at(s, 200) == pytest.approx(1e-6, abs=1e-18)


def test_warmup_is_linear():
    s = default_schedule()
    for e in (10, 20, 30):
        assert abs(lr_at(s, e) - s.peak_lr * e / 40) < 1e-18


def test_continuity_at_junction():
    s = default_schedule()
    below = lr_at(s, 40 - 1e-9)
    at = lr_at(s, 40)
    assert abs(below - at) < 1e-12


def test_cosine_midpoint():
    s = default_schedule()
    mid = (40 + 200) / 2
    assert abs(lr_at(s, mid) - (1e-6 + (2e-4 - 1e-6) / 2)) < 1e-15


def test_monotone_decay_after_warmup():
    s = default_schedule()
    grid = np.linspace(40, 200, 161)
    values = [lr_at(s, e) for e in grid]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_out_of_range_epoch_rejected():
    s = default_schedule()
    for bad in (-0.1, 200.01):
        with pytest.raises(ConfigurationError):
            lr_at(s, bad)


def test_invalid_schedules_rejected():
    with pytest.raises(ConfigurationError):
        default_schedule(warmup_epochs=200)
    with pytest.raises(ConfigurationError):
        default_schedule(warmup_epochs=250)
    with pytest.raises(ConfigurationError):
        default_schedule(min_lr=1.0)
    with pytest.raises(ConfigurationError):
        default_schedule(total_epochs=0)


def test_zero_warmup_starts_at_peak():
    s = default_schedule(warmup_epochs=0)
    assert lr_at(s, 0) == s.peak_lr
