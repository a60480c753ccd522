#!/usr/bin/env python3
# Verify the hand-written backward passes against central finite differences.
#
# Every gradient in this library is derived and coded by hand, so the only
# trustworthy referee is the forward pass itself: wiggle one number, rerun
# the forward function, and compare the slope against what backward claimed.

import numpy as np

from framesum.gradcheck import check_model_gradients, finite_difference, max_relative_error
from framesum.layers import attention, attention_backward, linear, linear_backward
from framesum.model import AutoencoderState, MaskPlan, ModelConfig

rng = np.random.default_rng(0)

# --- a single linear layer, checked coordinate by coordinate -------------

x = rng.normal(size=(5, 3))
w = rng.normal(size=(3, 4))
b = rng.normal(size=4)

# scalar head: sum of outputs, so dL/dy is all ones
g = np.ones((5, 4))
dx, dw, db = linear_backward(g, x, w)

num_dx = finite_difference(lambda t: linear(t, w, b).sum(), x)
num_dw = finite_difference(lambda t: linear(x, t, b).sum(), w)
print("linear dx error:", max_relative_error(dx, num_dx))
print("linear dw error:", max_relative_error(dw, num_dw))

# --- multi-head attention: same drill, more moving parts -----------------

dim, heads = 8, 2
params = {k: rng.normal(size=(dim, dim)) * 0.2 for k in ("wq", "wk", "wv", "wo")}
params.update({k: rng.normal(size=dim) * 0.1 for k in ("bq", "bk", "bv", "bo")})
xa = rng.normal(size=(6, dim))

out, cache = attention(xa, heads, params)
dxa, dparams = attention_backward(np.ones_like(out), cache)
num_dxa = finite_difference(lambda t: attention(t, heads, params)[0].sum(), xa)
print("attention dx error:", max_relative_error(dxa, num_dxa))

# note: d/d(bk) is exactly zero. adding a constant to every key shifts each
# softmax row uniformly, and softmax is invariant to row shifts. both the
# analytic and the numeric gradient are pure floating-point noise there,
# which is why comparisons happen at tensor scale, not per element.
print("d/d(bk) magnitude:", np.abs(dparams["bk"]).max())

# --- the whole model, loss included ---------------------------------------

# check_model_gradients builds a float64 tiny model, draws a random batch
# with random masks, and probes a few coordinates of every parameter tensor.
for seed in range(3):
    err = check_model_gradients(seed)
    print(f"full-model check, seed {seed}: max relative error {err:.3e}")

# the same machinery is an operator command: `framesum gradcheck` runs 20
# seeds and exits nonzero if anything drifts past 1e-3.

# --- why this matters: one deliberate bug ---------------------------------

# scale a single gradient by 1.01 and watch the check light up
cfg = ModelConfig.tiny()
model = AutoencoderState.initialize(cfg, rng).astype(np.float64)
clips = rng.normal(size=(2, cfg.clip_len, cfg.input_dim))
plans = [MaskPlan(cfg.clip_len, [0, 2, 4]), MaskPlan(cfg.clip_len, [1, 3, 5])]

model.zero_grads()
model.loss_and_grad(clips, plans)
p = model.params["out_proj.w"]
analytic = p.grad.copy()

flat = p.value.reshape(-1)
numeric = np.zeros_like(flat)
for i in range(8):  # a handful of coordinates is enough to see it
    orig = flat[i]
    flat[i] = orig + 1e-5
    up = model.masked_loss(clips, plans)
    flat[i] = orig - 1e-5
    down = model.masked_loss(clips, plans)
    flat[i] = orig
    numeric[i] = (up - down) / 2e-5

honest = max_relative_error(analytic.reshape(-1)[:8], numeric[:8])
buggy = max_relative_error(analytic.reshape(-1)[:8] * 1.01, numeric[:8])
print(f"honest gradient: {honest:.2e}   after a 1% bug: {buggy:.2e}")
