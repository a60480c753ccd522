"""Asymmetric masked autoencoder over per-frame feature sequences.

The encoder sees only unmasked frames (projected to enc_dim, plus sinusoidal
position codes at their original clip positions). Encoder outputs are
projected to dec_dim and interleaved with a single shared learnable mask
token to restore the original order; the decoder runs over the full-length
sequence and an output projection maps back to the input feature dimension.
The loss is mean squared error over masked frames only.

All forward/backward passes are hand-written numpy; see layers.py.
"""

from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from . import layers
from .errors import ConfigurationError, UsageError
from .optim import Parameter


# -------------------------- configuration --------------------------


@dataclass
class ModelConfig:
    clip_len: int = 30
    input_dim: int = 1024
    enc_depth: int = 12
    enc_heads: int = 12
    enc_dim: int = 768
    dec_depth: int = 4
    dec_heads: int = 6
    dec_dim: int = 384
    mlp_ratio: int = 4
    norm_targets: bool = False  # per-frame standardization of reconstruction targets

    def __post_init__(self):
        if self.clip_len < 2:
            raise ConfigurationError(f"clip_len must be >= 2, got {self.clip_len}")
        if self.enc_dim % self.enc_heads != 0:
            raise ConfigurationError(
                f"enc_dim {self.enc_dim} not divisible by enc_heads {self.enc_heads}"
            )
        if self.dec_dim % self.dec_heads != 0:
            raise ConfigurationError(
                f"dec_dim {self.dec_dim} not divisible by dec_heads {self.dec_heads}"
            )
        for label, dim in (("enc_dim", self.enc_dim), ("dec_dim", self.dec_dim)):
            if dim % 2 != 0:
                raise ConfigurationError(f"{label} must be even for sinusoidal embedding")

    @classmethod
    def large(cls, input_dim: int = 1024, **kw) -> "ModelConfig":
        """Bigger variant: 24x16-head encoder at 1024, 8x16-head decoder at 512."""
        return cls(
            input_dim=input_dim,
            enc_depth=24, enc_heads=16, enc_dim=1024,
            dec_depth=8, dec_heads=16, dec_dim=512,
            **kw,
        )

    @classmethod
    def tiny(cls, **kw) -> "ModelConfig":
        """Desk-scale config used by gradient checks and fast tests."""
        defaults = dict(
            clip_len=6, input_dim=8,
            enc_depth=1, enc_heads=2, enc_dim=8,
            dec_depth=1, dec_heads=2, dec_dim=4,
        )
        defaults.update(kw)
        return cls(**defaults)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = cls.__dataclass_fields__.keys()
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigurationError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


# -------------------------- mask plans --------------------------


@dataclass
class MaskPlan:
    """Which positions of a clip_len window are hidden. Index set semantics."""

    clip_len: int
    masked: np.ndarray

    def __post_init__(self):
        idx = np.sort(np.asarray(self.masked, dtype=np.int64))
        if idx.size == 0 or idx.size >= self.clip_len:
            raise UsageError(
                f"mask must hide between 1 and clip_len-1 frames, got {idx.size} of {self.clip_len}"
            )
        if idx[0] < 0 or idx[-1] >= self.clip_len:
            raise UsageError(f"mask index out of range [0, {self.clip_len})")
        if np.any(np.diff(idx) == 0):
            raise UsageError("duplicate mask indices")
        self.masked = idx

    @property
    def unmasked(self) -> np.ndarray:
        keep = np.ones(self.clip_len, dtype=bool)
        keep[self.masked] = False
        return np.nonzero(keep)[0]


def random_mask(clip_len: int, mask_ratio: float, rng: np.random.Generator) -> MaskPlan:
    """Hide round(mask_ratio * clip_len) positions, uniformly without replacement."""
    if not 0.0 < mask_ratio < 1.0:
        raise ConfigurationError(f"mask_ratio must lie in (0, 1), got {mask_ratio}")
    count = int(round(mask_ratio * clip_len))
    if count == 0 or count == clip_len:
        raise ConfigurationError(
            f"mask_ratio {mask_ratio} rounds to {count} masked frames at clip_len {clip_len}"
        )
    return MaskPlan(clip_len, rng.choice(clip_len, size=count, replace=False))


def single_mask(clip_len: int, target_index: int) -> MaskPlan:
    """Hide exactly one position."""
    if not 0 <= target_index < clip_len:
        raise UsageError(f"target index {target_index} outside [0, {clip_len})")
    return MaskPlan(clip_len, np.array([target_index]))


# -------------------------- parameter layout --------------------------


def _block_specs(prefix: str, dim: int, mlp_ratio: int):
    hidden = dim * mlp_ratio
    specs = [
        (f"{prefix}.ln1.gain", (dim,), "gain"),
        (f"{prefix}.ln1.shift", (dim,), "shift"),
    ]
    for nm in ("wq", "wk", "wv", "wo"):
        specs.append((f"{prefix}.attn.{nm}", (dim, dim), "weight"))
        specs.append((f"{prefix}.attn.{nm.replace('w', 'b')}", (dim,), "bias"))
    specs += [
        (f"{prefix}.ln2.gain", (dim,), "gain"),
        (f"{prefix}.ln2.shift", (dim,), "shift"),
        (f"{prefix}.mlp.fc1.w", (dim, hidden), "weight"),
        (f"{prefix}.mlp.fc1.b", (hidden,), "bias"),
        (f"{prefix}.mlp.fc2.w", (hidden, dim), "weight"),
        (f"{prefix}.mlp.fc2.b", (dim,), "bias"),
    ]
    return specs


def param_specs(config: ModelConfig):
    """Canonical (name, shape, kind) list; fixes init, optimizer, and checkpoint order."""
    specs = [
        ("in_proj.w", (config.input_dim, config.enc_dim), "weight"),
        ("in_proj.b", (config.enc_dim,), "bias"),
    ]
    for i in range(config.enc_depth):
        specs += _block_specs(f"enc.block{i}", config.enc_dim, config.mlp_ratio)
    specs += [
        ("enc.norm.gain", (config.enc_dim,), "gain"),
        ("enc.norm.shift", (config.enc_dim,), "shift"),
        ("enc2dec.w", (config.enc_dim, config.dec_dim), "weight"),
        ("enc2dec.b", (config.dec_dim,), "bias"),
        ("mask_token", (config.dec_dim,), "token"),
    ]
    for i in range(config.dec_depth):
        specs += _block_specs(f"dec.block{i}", config.dec_dim, config.mlp_ratio)
    specs += [
        ("dec.norm.gain", (config.dec_dim,), "gain"),
        ("dec.norm.shift", (config.dec_dim,), "shift"),
        ("out_proj.w", (config.dec_dim, config.input_dim), "weight"),
        ("out_proj.b", (config.input_dim,), "bias"),
    ]
    return specs


def parameter_count(config: ModelConfig) -> int:
    """Exact number of scalar learnables implied by the config."""
    return sum(int(np.prod(shape)) for _, shape, _ in param_specs(config))


# -------------------------- layer wrappers --------------------------
# Thin stateful views over the parameter dict; forward returns (out, cache),
# backward consumes the cache and accumulates into Parameter.grad.


class _Linear:
    def __init__(self, params, prefix):
        self.w = params[f"{prefix}.w"]
        self.b = params[f"{prefix}.b"]

    def forward(self, x):
        return layers.linear(x, self.w.value, self.b.value), x

    def backward(self, g, cache):
        dx, dw, db = layers.linear_backward(g, cache, self.w.value)
        self.w.grad += dw
        self.b.grad += db
        return dx


class _Norm:
    def __init__(self, params, prefix):
        self.gain = params[f"{prefix}.gain"]
        self.shift = params[f"{prefix}.shift"]

    def forward(self, x):
        return layers.layer_norm(x, self.gain.value, self.shift.value)

    def backward(self, g, cache):
        dx, dgain, dshift = layers.layer_norm_backward(g, cache)
        self.gain.grad += dgain
        self.shift.grad += dshift
        return dx


class _Attention:
    NAMES = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")

    def __init__(self, params, prefix, heads):
        self.heads = heads
        self.params = {nm: params[f"{prefix}.{nm}"] for nm in self.NAMES}

    def forward(self, x):
        raw = {nm: p.value for nm, p in self.params.items()}
        return layers.attention(x, self.heads, raw)

    def backward(self, g, cache):
        dx, dparams = layers.attention_backward(g, cache)
        for nm, dp in dparams.items():
            self.params[nm].grad += dp
        return dx


class _Mlp:
    def __init__(self, params, prefix):
        self.fc1 = _Linear(params, f"{prefix}.fc1")
        self.fc2 = _Linear(params, f"{prefix}.fc2")

    def forward(self, x):
        h, c1 = self.fc1.forward(x)
        a = layers.gelu(h)
        y, c2 = self.fc2.forward(a)
        return y, (c1, h, c2)

    def backward(self, g, cache):
        c1, h, c2 = cache
        da = self.fc2.backward(g, c2)
        dh = layers.gelu_backward(da, h)
        return self.fc1.backward(dh, c1)


class _Block:
    """Pre-norm transformer block: x + attn(ln1(x)), then + mlp(ln2(.))."""

    def __init__(self, params, prefix, heads):
        self.ln1 = _Norm(params, f"{prefix}.ln1")
        self.attn = _Attention(params, f"{prefix}.attn", heads)
        self.ln2 = _Norm(params, f"{prefix}.ln2")
        self.mlp = _Mlp(params, f"{prefix}.mlp")

    def forward(self, x):
        n1, cn1 = self.ln1.forward(x)
        a, ca = self.attn.forward(n1)
        x2 = x + a
        n2, cn2 = self.ln2.forward(x2)
        m, cm = self.mlp.forward(n2)
        return x2 + m, (cn1, ca, cn2, cm)

    def backward(self, g, cache):
        cn1, ca, cn2, cm = cache
        dx2 = g + self.ln2.backward(self.mlp.backward(g, cm), cn2)
        return dx2 + self.ln1.backward(self.attn.backward(dx2, ca), cn1)


# -------------------------- the autoencoder --------------------------


class AutoencoderState:
    """All learnable parameters plus fixed position tables for one config.

    Read-only during forward/scoring; gradient accumulation mutates the
    Parameter objects and must be serialized by the caller.
    """

    def __init__(self, config: ModelConfig, params: dict, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.params = params
        self._wire()

    def _wire(self):
        cfg, params = self.config, self.params
        self.in_proj = _Linear(params, "in_proj")
        self.enc_blocks = [
            _Block(params, f"enc.block{i}", cfg.enc_heads) for i in range(cfg.enc_depth)
        ]
        self.enc_norm = _Norm(params, "enc.norm")
        self.enc2dec = _Linear(params, "enc2dec")
        self.mask_token = params["mask_token"]
        self.dec_blocks = [
            _Block(params, f"dec.block{i}", cfg.dec_heads) for i in range(cfg.dec_depth)
        ]
        self.dec_norm = _Norm(params, "dec.norm")
        self.out_proj = _Linear(params, "out_proj")
        self.pe_enc = layers.sinusoidal_positions(cfg.clip_len, cfg.enc_dim, self.dtype)
        self.pe_dec = layers.sinusoidal_positions(cfg.clip_len, cfg.dec_dim, self.dtype)

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> "AutoencoderState":
        """Fresh model: Xavier-uniform weights, zero biases, unit norm gains,
        mask token from N(0, 0.02^2). Draw order is fixed by param_specs."""
        params = {}
        for name, shape, kind in param_specs(config):
            if kind == "weight":
                value = layers.xavier_uniform(shape, rng)
            elif kind == "gain":
                value = np.ones(shape, dtype=np.float32)
            elif kind == "token":
                value = rng.normal(0.0, 0.02, size=shape).astype(np.float32)
            else:  # bias, shift
                value = np.zeros(shape, dtype=np.float32)
            params[name] = Parameter(name, value)
        return cls(config, params)

    @classmethod
    def zeros(cls, config: ModelConfig) -> "AutoencoderState":
        params = {
            name: Parameter(name, np.zeros(shape, dtype=np.float32))
            for name, shape, _ in param_specs(config)
        }
        return cls(config, params)

    def parameters(self):
        """Parameters in canonical order."""
        return [self.params[name] for name, _, _ in param_specs(self.config)]

    def zero_grads(self):
        for p in self.parameters():
            p.zero_grad()

    def astype(self, dtype) -> "AutoencoderState":
        """Clone with converted parameter values (fresh grads/moments)."""
        params = {
            name: Parameter(name, p.value.astype(dtype))
            for name, p in self.params.items()
        }
        return AutoencoderState(self.config, params, dtype=dtype)

    # ---------------- forward / backward ----------------

    def _index_arrays(self, plans: Sequence[MaskPlan]):
        cfg = self.config
        counts = {p.masked.size for p in plans}
        if len(counts) != 1:
            raise UsageError("all mask plans in one batch must hide the same number of frames")
        for p in plans:
            if p.clip_len != cfg.clip_len:
                raise UsageError(f"plan clip_len {p.clip_len} != model clip_len {cfg.clip_len}")
        vis = np.stack([p.unmasked for p in plans])
        msk = np.stack([p.masked for p in plans])
        return vis, msk

    def _forward(self, clips: np.ndarray, vis: np.ndarray, msk: np.ndarray, keep: bool):
        """clips (B, L, D); vis (B, U); msk (B, M). Returns (recon, cache)."""
        cfg = self.config
        B, L, D = clips.shape
        if L != cfg.clip_len or D != cfg.input_dim:
            raise UsageError(
                f"clip shape {(L, D)} does not match config ({cfg.clip_len}, {cfg.input_dim})"
            )
        rows = np.arange(B)[:, None]

        xv = np.take_along_axis(clips, vis[:, :, None], axis=1)
        h, c_in = self.in_proj.forward(xv)
        h = h + self.pe_enc[vis]
        enc_caches = []
        for blk in self.enc_blocks:
            h, c = blk.forward(h)
            enc_caches.append(c if keep else None)
        h, c_enorm = self.enc_norm.forward(h)
        z, c_proj = self.enc2dec.forward(h)

        full = np.empty((B, L, cfg.dec_dim), dtype=z.dtype)
        full[rows, vis] = z
        full[rows, msk] = self.mask_token.value
        full = full + self.pe_dec

        d = full
        dec_caches = []
        for blk in self.dec_blocks:
            d, c = blk.forward(d)
            dec_caches.append(c if keep else None)
        d, c_dnorm = self.dec_norm.forward(d)
        recon, c_out = self.out_proj.forward(d)

        cache = None
        if keep:
            cache = (c_in, enc_caches, c_enorm, c_proj, dec_caches, c_dnorm, c_out, vis, msk)
        return recon, cache

    def _backward(self, drecon: np.ndarray, cache):
        c_in, enc_caches, c_enorm, c_proj, dec_caches, c_dnorm, c_out, vis, msk = cache
        B = drecon.shape[0]
        rows = np.arange(B)[:, None]

        g = self.out_proj.backward(drecon, c_out)
        g = self.dec_norm.backward(g, c_dnorm)
        for blk, c in zip(reversed(self.dec_blocks), reversed(dec_caches)):
            g = blk.backward(g, c)
        # position table is constant; split the scatter back into its sources
        self.mask_token.grad += g[rows, msk].sum(axis=(0, 1))
        gz = g[rows, vis]
        g = self.enc2dec.backward(gz, c_proj)
        g = self.enc_norm.backward(g, c_enorm)
        for blk, c in zip(reversed(self.enc_blocks), reversed(enc_caches)):
            g = blk.backward(g, c)
        self.in_proj.backward(g, c_in)

    def reconstruct_batch(self, clips: np.ndarray, plans: Sequence[MaskPlan]) -> np.ndarray:
        """Full-length reconstructions for a batch; no gradients."""
        clips = np.ascontiguousarray(clips, dtype=self.dtype)
        vis, msk = self._index_arrays(plans)
        recon, _ = self._forward(clips, vis, msk, keep=False)
        return recon

    def reconstruct(self, clip: np.ndarray, plan: MaskPlan) -> np.ndarray:
        """Reconstruction of one clip (clip_len x input_dim)."""
        return self.reconstruct_batch(clip[None], [plan])[0]

    def encode(self, clip: np.ndarray, plan: MaskPlan) -> np.ndarray:
        """Encoder output over unmasked frames only (U x enc_dim).

        Exposed so callers can verify that masked-frame content never
        reaches the encoder.
        """
        clip = np.ascontiguousarray(clip, dtype=self.dtype)[None]
        vis, _ = self._index_arrays([plan])
        xv = np.take_along_axis(clip, vis[:, :, None], axis=1)
        h, _ = self.in_proj.forward(xv)
        h = h + self.pe_enc[vis]
        for blk in self.enc_blocks:
            h, _ = blk.forward(h)
        h, _ = self.enc_norm.forward(h)
        return h[0]

    def masked_loss(self, clips: np.ndarray, plans: Sequence[MaskPlan]) -> float:
        """The training loss without any gradient work (forward only)."""
        clips = np.ascontiguousarray(clips, dtype=self.dtype)
        vis, msk = self._index_arrays(plans)
        rows = np.arange(clips.shape[0])[:, None]
        recon, _ = self._forward(clips, vis, msk, keep=False)
        targets = _loss_targets(clips, self.config)
        diff = recon[rows, msk] - targets[rows, msk]
        return float(np.mean(diff * diff))

    def loss_and_grad(self, clips: np.ndarray, plans: Sequence[MaskPlan]) -> float:
        """Masked-frames-only MSE over the batch; accumulates parameter grads.

        Loss = mean over samples of (mean over masked frames and feature dims
        of squared error). Gradient flows only through masked positions.
        """
        clips = np.ascontiguousarray(clips, dtype=self.dtype)
        vis, msk = self._index_arrays(plans)
        B, L, D = clips.shape
        M = msk.shape[1]
        rows = np.arange(B)[:, None]

        recon, cache = self._forward(clips, vis, msk, keep=True)
        targets = _loss_targets(clips, self.config)
        diff = recon[rows, msk] - targets[rows, msk]
        loss = float(np.mean(diff * diff))

        drecon = np.zeros_like(recon)
        drecon[rows, msk] = diff * np.asarray(2.0 / (B * M * D), dtype=diff.dtype)
        self._backward(drecon, cache)
        return loss


def _loss_targets(clips: np.ndarray, config: ModelConfig) -> np.ndarray:
    """Raw features by default; optional per-frame standardization."""
    if not config.norm_targets:
        return clips
    mu = clips.mean(axis=-1, keepdims=True)
    sd = clips.std(axis=-1, keepdims=True)
    return (clips - mu) / (sd + np.asarray(1e-6, dtype=clips.dtype))


def masked_mse(reconstruction: np.ndarray, clip: np.ndarray, plan: MaskPlan) -> float:
    """Mean over masked frames and feature dims of squared difference."""
    if reconstruction.shape != clip.shape:
        raise UsageError(
            f"reconstruction shape {reconstruction.shape} != clip shape {clip.shape}"
        )
    if plan.masked.size == 0:
        raise UsageError("empty mask")
    d = reconstruction[plan.masked] - clip[plan.masked]
    return float(np.mean(d * d))
