"""Dense differentiable kernels: linear, layer norm, gelu, softmax,
multi-head self-attention, sinusoidal position table, Xavier init.

All forward functions accept (..., n, d) arrays, so a batch axis is optional.
Backward functions take the upstream gradient plus the forward cache and
return gradients for every input; parameter gradients are summed over all
leading (batch) axes. Dtype follows the inputs: float32 in production,
float64 inside gradient-check oracles.
"""

import math

import numpy as np
from scipy.special import erf

from .errors import ConfigurationError

INV_SQRT2 = 1.0 / math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# -------------------------- linear --------------------------


def linear(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """out[..., i, j] = sum_k x[..., i, k] * w[k, j] + b[j]."""
    if x.shape[-1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ConfigurationError(
            f"linear shapes do not conform: x{x.shape} w{w.shape} b{b.shape}"
        )
    return x @ w + b


def linear_backward(g: np.ndarray, x: np.ndarray, w: np.ndarray):
    """Gradients of linear w.r.t. (x, w, b) given upstream g (same shape as out)."""
    dx = g @ w.T
    gf = g.reshape(-1, g.shape[-1])
    xf = x.reshape(-1, x.shape[-1])
    dw = xf.T @ gf
    db = gf.sum(axis=0)
    return dx, dw, db


# -------------------------- layer norm --------------------------


def layer_norm(x: np.ndarray, gain: np.ndarray, shift: np.ndarray, eps: float = 1e-6):
    """Per-row normalization (population variance) then affine.

    Returns (out, cache) where cache feeds layer_norm_backward.
    """
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    sigma = np.sqrt(var + np.asarray(eps, dtype=x.dtype))
    xhat = (x - mu) / sigma
    return xhat * gain + shift, (xhat, sigma, gain)


def layer_norm_backward(g: np.ndarray, cache):
    """Returns (dx, dgain, dshift)."""
    xhat, sigma, gain = cache
    ghat = g * gain
    m1 = ghat.mean(axis=-1, keepdims=True)
    m2 = (ghat * xhat).mean(axis=-1, keepdims=True)
    dx = (ghat - m1 - xhat * m2) / sigma
    lead = tuple(range(g.ndim - 1))
    return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)


# -------------------------- gelu --------------------------


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact Gaussian-error-function gelu: x * Phi(x)."""
    return x * (0.5 * (1.0 + erf(x * np.asarray(INV_SQRT2, dtype=x.dtype))))


def gelu_backward(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """d gelu/dx = Phi(x) + x * phi(x)."""
    phi_cdf = 0.5 * (1.0 + erf(x * np.asarray(INV_SQRT2, dtype=x.dtype)))
    phi_pdf = np.exp(-0.5 * x * x) * np.asarray(INV_SQRT_2PI, dtype=x.dtype)
    return g * (phi_cdf + x * phi_pdf)


# -------------------------- softmax --------------------------


def softmax(x: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(g: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Backward through softmax given its output."""
    return out * (g - (g * out).sum(axis=-1, keepdims=True))


# -------------------------- multi-head self-attention --------------------------


def attention(x: np.ndarray, heads: int, params: dict):
    """Scaled dot-product self-attention over rows of x (..., n, d).

    params holds wq,bq,wk,bk,wv,bv,wo,bo (each d x d / d). No positional
    information is added here, so the map is permutation-equivariant.
    Returns (out, cache).
    """
    d = x.shape[-1]
    if d % heads != 0:
        raise ConfigurationError(f"model dim {d} not divisible by {heads} heads")
    dh = d // heads
    n = x.shape[-2]
    lead = x.shape[:-2]

    q = linear(x, params["wq"], params["bq"]).reshape(*lead, n, heads, dh)
    k = linear(x, params["wk"], params["bk"]).reshape(*lead, n, heads, dh)
    v = linear(x, params["wv"], params["bv"]).reshape(*lead, n, heads, dh)

    scale = 1.0 / math.sqrt(dh)
    scores = np.einsum("...ihk,...jhk->...hij", q, k) * np.asarray(scale, dtype=x.dtype)
    attn = softmax(scores)
    ctx = np.einsum("...hij,...jhk->...ihk", attn, v).reshape(*lead, n, d)
    out = linear(ctx, params["wo"], params["bo"])
    cache = (x, q, k, v, attn, ctx, heads, params)
    return out, cache


def attention_backward(g: np.ndarray, cache):
    """Returns (dx, dparams) with dparams keyed like params."""
    x, q, k, v, attn, ctx, heads, params = cache
    d = x.shape[-1]
    dh = d // heads
    n = x.shape[-2]
    lead = x.shape[:-2]
    scale = np.asarray(1.0 / math.sqrt(dh), dtype=x.dtype)

    dctx, dwo, dbo = linear_backward(g, ctx, params["wo"])
    dctx = dctx.reshape(*lead, n, heads, dh)

    dattn = np.einsum("...ihk,...jhk->...hij", dctx, v)
    dv = np.einsum("...hij,...ihk->...jhk", attn, dctx)
    dscores = softmax_backward(dattn, attn) * scale
    dq = np.einsum("...hij,...jhk->...ihk", dscores, k)
    dk = np.einsum("...hij,...ihk->...jhk", dscores, q)

    dq = dq.reshape(*lead, n, d)
    dk = dk.reshape(*lead, n, d)
    dv = dv.reshape(*lead, n, d)
    dxq, dwq, dbq = linear_backward(dq, x, params["wq"])
    dxk, dwk, dbk = linear_backward(dk, x, params["wk"])
    dxv, dwv, dbv = linear_backward(dv, x, params["wv"])
    dparams = {
        "wq": dwq, "bq": dbq, "wk": dwk, "bk": dbk,
        "wv": dwv, "bv": dbv, "wo": dwo, "bo": dbo,
    }
    return dxq + dxk + dxv, dparams


# -------------------------- position table & init --------------------------


def sinusoidal_positions(num_positions: int, dim: int, dtype=np.float32) -> np.ndarray:
    """PE[p, 2i] = sin(p / 10000^(2i/dim)), PE[p, 2i+1] = cos(same). dim must be even."""
    if dim % 2 != 0:
        raise ConfigurationError(f"positional embedding dim must be even, got {dim}")
    pos = np.arange(num_positions, dtype=np.float64)[:, None]
    i2 = np.arange(0, dim, 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, i2 / dim)
    pe = np.empty((num_positions, dim), dtype=np.float64)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe.astype(dtype)


def xavier_uniform(shape, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    """Uniform on [-b, b] with b = sqrt(6 / (fan_in + fan_out)); 2-D shapes only."""
    if len(shape) != 2:
        raise ConfigurationError(f"xavier init expects a 2-D shape, got {tuple(shape)}")
    bound = math.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)
