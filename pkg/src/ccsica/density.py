"""Gaussian Parzen-window density estimators.

Both estimators keep the self-term when evaluated at their own samples and
share a single bandwidth across dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
# rows of the evaluation/sample difference matrix processed per block
_BLOCK = 1024


def silverman_bandwidth(T: int) -> float:
    """Rule-of-thumb bandwidth ``1.06 * T**(-1/5)`` for unit-variance data."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return 1.06 * float(T) ** -0.2


def kernel_uni(u):
    """Standard normal pdf."""
    u = np.asarray(u, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * u * u)


def kernel_uni_deriv(u):
    """Derivative of :func:`kernel_uni`, ``-u * kernel_uni(u)``."""
    u = np.asarray(u, dtype=float)
    return -u * kernel_uni(u)


def kernel_multi(u) -> float | np.ndarray:
    """M-dimensional standard normal pdf; the last axis of ``u`` is the dimension."""
    u = np.asarray(u, dtype=float)
    m = u.shape[-1]
    return (2.0 * np.pi) ** (-0.5 * m) * np.exp(-0.5 * np.sum(u * u, axis=-1))


def _kernel_sums(y: np.ndarray, samples: np.ndarray, h: float, truncate: float | None, deriv: bool):
    # y: (n, M), samples: (T, M); returns per-row sums of kernel (or its derivative, M=1 only)
    out = np.empty(y.shape[0])
    m = samples.shape[1]
    norm = (2.0 * np.pi) ** (-0.5 * m)
    for start in range(0, y.shape[0], _BLOCK):
        blk = y[start:start + _BLOCK]
        d = (blk[:, None, :] - samples[None, :, :]) / h
        r2 = np.sum(d * d, axis=-1)
        k = norm * np.exp(-0.5 * r2)
        if deriv:
            k = -d[..., 0] * k
        if truncate is not None:
            k = np.where(r2 > truncate * truncate, 0.0, k)
        out[start:start + _BLOCK] = k.sum(axis=1)
    return out


@dataclass(frozen=True)
class ParzenUnivariate:
    """1-D Gaussian Parzen estimator.

    ``truncate`` optionally drops kernel terms with ``|u| > truncate``. The
    default (``None``) keeps every term.
    """

    samples: np.ndarray
    bandwidth: float
    truncate: float | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).ravel()
        if s.size < 1:
            raise ValueError("need at least one sample")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def n_samples(self) -> int:
        return self.samples.size

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1, 1)
        sums = _kernel_sums(flat, self.samples[:, None], self.bandwidth, self.truncate, False)
        vals = sums / (self.n_samples * self.bandwidth)
        return vals.reshape(y.shape) if y.ndim else float(vals[0])

    def pdf_deriv(self, y):
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1, 1)
        sums = _kernel_sums(flat, self.samples[:, None], self.bandwidth, self.truncate, True)
        vals = sums / (self.n_samples * self.bandwidth ** 2)
        return vals.reshape(y.shape) if y.ndim else float(vals[0])


@dataclass(frozen=True)
class ParzenMultivariate:
    """M-dimensional Gaussian Parzen estimator with an isotropic bandwidth.

    ``samples`` is laid out channels x time, like every signal matrix in the
    package.
    """

    samples: np.ndarray
    bandwidth: float
    truncate: float | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[None, :]
        if s.ndim != 2 or s.shape[1] < 1:
            raise ValueError("samples must be an (M, T) matrix")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def dim(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def pdf(self, y):
        """Density at one point (length-M vector) or at columns of an (M, n) matrix."""
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        pts = y[:, None] if single else y
        if pts.ndim != 2 or pts.shape[0] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got shape {y.shape}")
        sums = _kernel_sums(pts.T, self.samples.T, self.bandwidth, self.truncate, False)
        vals = sums / (self.n_samples * self.bandwidth ** self.dim)
        return float(vals[0]) if single else vals


def pdf_uni(model: ParzenUnivariate, y):
    return model.pdf(y)


def pdf_uni_deriv(model: ParzenUnivariate, y):
    return model.pdf_deriv(y)


def pdf_multi(model: ParzenMultivariate, y):
    return model.pdf(y)
