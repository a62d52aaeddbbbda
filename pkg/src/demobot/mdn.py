"""Mixture-of-isotropic-Gaussians output head.

The raw output layer is split into [m*c kernel centers | m width slots |
m mixing slots]. Widths go through exp, mixing coefficients through a
stabilized softmax, centers pass through unchanged. The loss is the negative
log likelihood of the target under the mixture, evaluated in log space, with
analytic gradients pushed back through the exp/softmax reparameterizations.

Two normalizer conventions are supported: "full" divides each kernel by
sigma^c so the density integrates to one in any dimension; "scalar" divides
by a single power of sigma regardless of dimension (the two coincide at
c = 1). The choice changes the width gradient and therefore training
dynamics, so it travels with the network spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIGMA_FLOOR = 1e-6
LOG_TWO_PI = math.log(2.0 * math.pi)


@dataclass
class MixtureParams:
    """Constrained mixture parameters: alphas on the simplex, sigmas > 0."""

    alphas: np.ndarray  # (m,)
    mus: np.ndarray     # (m, c)
    sigmas: np.ndarray  # (m,)

    @property
    def kernel_count(self) -> int:
        return self.alphas.shape[0]

    @property
    def dim(self) -> int:
        return self.mus.shape[1]

    def validate(self) -> None:
        if abs(float(self.alphas.sum()) - 1.0) > 1e-12:
            raise ValueError("mixing coefficients do not sum to 1")
        if np.any(self.alphas < 0.0):
            raise ValueError("negative mixing coefficient")
        if np.any(self.sigmas <= 0.0):
            raise ValueError("non-positive kernel width")
        if not np.all(np.isfinite(self.mus)):
            raise ValueError("non-finite kernel center")


def raw_width(m: int, c: int) -> int:
    return (c + 2) * m


def split_raw(raw: np.ndarray, m: int, c: int):
    """Partition raw activations into (mus, log-width slots, mixing slots)."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape[-1] != raw_width(m, c):
        raise ValueError(
            f"raw layer has width {raw.shape[-1]}, expected {(c + 2) * m}")
    mus = raw[..., :m * c].reshape(raw.shape[:-1] + (m, c))
    width_slots = raw[..., m * c:m * c + m]
    mix_slots = raw[..., m * c + m:]
    return mus, width_slots, mix_slots


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def split_activations(raw, m: int, c: int) -> MixtureParams:
    """Constrain one raw activation vector into MixtureParams."""
    mus, width_slots, mix_slots = split_raw(np.asarray(raw, dtype=float), m, c)
    if mus.ndim != 2:
        raise ValueError("split_activations expects a single raw vector")
    alphas = np.exp(_log_softmax(mix_slots))
    sigmas = np.maximum(np.exp(width_slots), SIGMA_FLOOR)
    params = MixtureParams(alphas=alphas, mus=mus, sigmas=sigmas)
    params.validate()
    return params


def kernel_density(y, mu, sigma: float, density_norm: str = "full") -> float:
    """Isotropic Gaussian kernel density at y."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    c = y.shape[0]
    k = c if density_norm == "full" else 1
    sq = float(np.sum((y - mu) ** 2))
    return math.exp(-0.5 * c * LOG_TWO_PI - k * math.log(sigma)
                    - sq / (2.0 * sigma * sigma))


def _log_kernels(mus, sigmas, y, density_norm: str):
    """log g_i(y) for every kernel; broadcast over leading axes."""
    c = mus.shape[-1]
    k = c if density_norm == "full" else 1
    sq = np.sum((y[..., None, :] - mus) ** 2, axis=-1)
    return (-0.5 * c * LOG_TWO_PI - k * np.log(sigmas)
            - sq / (2.0 * sigmas * sigmas))


def sequence_nll(raw: np.ndarray, targets: np.ndarray, m: int, c: int,
                 density_norm: str = "full"):
    """Negative log likelihood per element plus gradients w.r.t. raw.

    `raw` has shape (..., (c+2)m) and `targets` (..., c); returns
    (nll (...,), d_raw like raw). Everything is evaluated in log space, so
    targets far from every kernel stay finite.
    """
    mus, width_slots, mix_slots = split_raw(raw, m, c)
    targets = np.asarray(targets, dtype=float)
    sigmas = np.maximum(np.exp(width_slots), SIGMA_FLOOR)
    log_alphas = _log_softmax(mix_slots)
    alphas = np.exp(log_alphas)

    log_g = _log_kernels(mus, sigmas, targets, density_norm)
    joint = log_alphas + log_g
    top = joint.max(axis=-1, keepdims=True)
    lse = top + np.log(np.exp(joint - top).sum(axis=-1, keepdims=True))
    nll = -lse[..., 0]
    if not np.all(np.isfinite(nll)):
        raise FloatingPointError("mixture likelihood underflow")

    resp = np.exp(joint - lse)  # responsibilities, rows sum to 1
    k = c if density_norm == "full" else 1
    diff = mus - targets[..., None, :]
    inv_sq = 1.0 / (sigmas * sigmas)
    d_mus = resp[..., None] * diff * inv_sq[..., None]
    sq = np.sum(diff * diff, axis=-1)
    d_width = resp * (k - sq * inv_sq)
    d_mix = alphas - resp

    d_raw = np.concatenate(
        [d_mus.reshape(raw.shape[:-1] + (m * c,)), d_width, d_mix], axis=-1)
    return nll, d_raw


def nll_loss(params: MixtureParams, y, density_norm: str = "full"):
    """NLL of y under the mixture and its gradient w.r.t. raw activations.

    The gradient is expressed in the raw (pre-softmax, pre-exp) coordinates
    of split_activations, ordered [centers | widths | mixing].
    """
    params.validate()
    y = np.asarray(y, dtype=float)
    m, c = params.mus.shape
    log_g = _log_kernels(params.mus, params.sigmas, y, density_norm)
    joint = np.log(params.alphas) + log_g
    top = joint.max()
    lse = top + math.log(np.exp(joint - top).sum())
    if not math.isfinite(lse):
        raise FloatingPointError("mixture likelihood underflow")
    resp = np.exp(joint - lse)

    k = c if density_norm == "full" else 1
    diff = params.mus - y
    inv_sq = 1.0 / (params.sigmas ** 2)
    d_mus = resp[:, None] * diff * inv_sq[:, None]
    d_width = resp * (k - np.sum(diff * diff, axis=-1) * inv_sq)
    d_mix = params.alphas - resp
    grad = np.concatenate([d_mus.reshape(m * c), d_width, d_mix])
    return -float(lse), grad


def sample(params: MixtureParams, rng: np.random.Generator) -> np.ndarray:
    """Pick a kernel by mixing weight, then draw from it."""
    cum = np.cumsum(params.alphas)
    idx = min(int(np.searchsorted(cum, rng.random())), params.kernel_count - 1)
    return params.mus[idx] + params.sigmas[idx] * rng.standard_normal(params.dim)


def mixture_mode_mean(params: MixtureParams) -> np.ndarray:
    """Center of the kernel with the largest mixing weight."""
    return params.mus[int(np.argmax(params.alphas))].copy()


def mixture_mean(params: MixtureParams) -> np.ndarray:
    """Expected value of the mixture."""
    return params.alphas @ params.mus
