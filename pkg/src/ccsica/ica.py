"""Nonparametric CCS-ICA: whitening, contrast, analytic gradient, descent loop.

The joint density of the outputs is taken as ``p(x_t) / |det W|`` where
``p(x_t)`` is a multivariate Parzen estimate on the whitened mixtures,
computed once. The marginals are univariate Parzen estimates on each output
row, rebuilt for every ``W``. Both share one bandwidth.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import divergence as dv
from .density import INV_SQRT_2PI, ParzenMultivariate, silverman_bandwidth
from .errors import DivergenceError, RankDeficientError, SingularDemixerError
from .linalg import cofactor_matrix, determinant, normalize_rows, sym_eig

log = logging.getLogger(__name__)

SINGULAR_DET = 1e-12
RANK_RTOL = 1e-12
_BLOCK = 512


@dataclass(frozen=True)
class WhiteningTransform:
    mean: np.ndarray
    matrix: np.ndarray

    def apply(self, X) -> np.ndarray:
        return self.matrix @ (np.asarray(X, dtype=float) - self.mean[:, None])


@dataclass
class IcaConfig:
    """Optimizer settings for the gradient-descent loop."""

    alpha: float = -0.99999
    gamma: float = 0.3
    max_iter: int = 250
    epsilon: float = 1e-4
    bandwidth: float | None = None
    seed: int = 0
    objective: str = "ccs"
    backtrack: bool = True
    truncate: float | None = None

    def __post_init__(self):
        self.objective = dv.Kind(self.objective).value
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.truncate is not None and not self.truncate > 0:
            raise ValueError("truncate must be positive")


@dataclass
class IcaState:
    W: np.ndarray
    iteration: int = 0
    divergence_trace: list[float] = field(default_factory=list)
    whitening: WhiteningTransform | None = None
    converged: bool = False


class GradientTerms(NamedTuple):
    v1: float
    v2: float
    v3: float
    v1p: np.ndarray
    v2p: np.ndarray
    v3p: np.ndarray

    @property
    def gradient(self) -> np.ndarray:
        return self.v1p / self.v1 + self.v2p / self.v2 - 2.0 * self.v3p / self.v3


def center_whiten(X) -> tuple[np.ndarray, WhiteningTransform]:
    """Remove the channel means and whiten with ``Lambda^{-1/2} E^T``.

    Raises
    ------
    RankDeficientError
        If an eigenvalue of the covariance falls below ``1e-12 * lambda_max``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be an (M, T) matrix")
    M, T = X.shape
    if M < 2 or T <= M:
        raise ValueError(f"need M >= 2 channels and T > M samples, got {X.shape}")
    mean = X.mean(axis=1)
    Xc = X - mean[:, None]
    lam, E = sym_eig(Xc @ Xc.T / T)
    small = np.flatnonzero(lam < RANK_RTOL * lam[0])
    if small.size:
        raise RankDeficientError(
            f"covariance is rank deficient: eigen-direction {int(small[0])} of {M} "
            f"has eigenvalue {lam[small[0]]:.3g} (largest {lam[0]:.3g})"
        )
    V = E.T / np.sqrt(lam)[:, None]
    return V @ Xc, WhiteningTransform(mean, V)


def standardize(X) -> np.ndarray:
    """Center and scale each channel to unit variance without rotating."""
    X = np.asarray(X, dtype=float)
    Xc = X - X.mean(axis=1, keepdims=True)
    sd = np.sqrt(np.mean(Xc * Xc, axis=1, keepdims=True))
    if np.any(sd == 0):
        raise RankDeficientError("a channel has zero variance")
    return Xc / sd


def demix(X_w, W) -> np.ndarray:
    X_w = np.asarray(X_w, dtype=float)
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] != X_w.shape[0]:
        raise ValueError(f"W of shape {W.shape} cannot demix data of shape {X_w.shape}")
    return W @ X_w


class Contrast:
    """CCS (or CS) contrast of a demixing matrix on fixed whitened data.

    Builds the multivariate Parzen density of ``X_w`` once; ``value`` and
    ``terms`` then cost O(M T^2) and O(M^2 T^2) respectively.
    """

    def __init__(self, X_w, cfg: IcaConfig | None = None):
        cfg = cfg or IcaConfig()
        self.X = np.asarray(X_w, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X_w must be an (M, T) matrix")
        self.M, self.T = self.X.shape
        self.cfg = cfg
        self.h = cfg.bandwidth if cfg.bandwidth is not None else silverman_bandwidth(self.T)
        self.p_x = ParzenMultivariate(self.X, self.h, cfg.truncate).pdf(self.X)
        self._ccs = dv.Kind(cfg.objective) is dv.Kind.CCS

    def _f(self, t):
        return dv.f_convex(np.maximum(t, dv.T_FLOOR), self.cfg.alpha) if self._ccs else t

    def _fp(self, t):
        return dv.f_deriv(np.maximum(t, dv.T_FLOOR), self.cfg.alpha) if self._ccs else np.ones_like(t)

    def _det(self, W) -> float:
        det = determinant(W)
        if abs(det) < SINGULAR_DET:
            raise SingularDemixerError(f"|det W| = {abs(det):.3g} is below {SINGULAR_DET:g}")
        return det

    def _marginals(self, W, with_deriv: bool):
        """Per-output Parzen densities at every sample and, optionally, their W-derivatives.

        Returns ``q`` of shape (M, T) and ``dq`` of shape (M, T, M) with
        ``dq[m, t, l] = d q_m(t) / d W[m, l]``.
        """
        h, T, X = self.h, self.T, self.X
        trunc = self.cfg.truncate
        Y = W @ X
        q = np.empty((self.M, T))
        dq = np.empty((self.M, T, self.M)) if with_deriv else None
        for m in range(self.M):
            y = Y[m]
            for s in range(0, T, _BLOCK):
                U = (y[s:s + _BLOCK, None] - y[None, :]) / h
                K = INV_SQRT_2PI * np.exp(-0.5 * U * U)
                if trunc is not None:
                    K[np.abs(U) > trunc] = 0.0
                q[m, s:s + _BLOCK] = K.sum(axis=1)
                if with_deriv:
                    Kp = -U * K
                    a = Kp.sum(axis=1)
                    # sum_i K'(u_ti) (x_t - x_i)
                    dq[m, s:s + _BLOCK] = X[:, s:s + _BLOCK].T * a[:, None] - Kp @ X.T
        q /= T * h
        if with_deriv:
            dq /= T * h * h
        return q, dq

    def densities(self, W) -> tuple[np.ndarray, np.ndarray]:
        """The joint (``P_J``) and product-of-marginals (``Q_M``) vectors for ``W``."""
        W = np.asarray(W, dtype=float)
        det = self._det(W)
        q, _ = self._marginals(W, False)
        return self.p_x / abs(det), np.prod(q, axis=0)

    def value(self, W) -> float:
        pj, qm = self.densities(W)
        if self._ccs:
            return dv.ccs_div_samples(pj, qm, self.cfg.alpha)
        return dv.cs_div_samples(pj, qm)

    def terms(self, W) -> GradientTerms:
        W = np.asarray(W, dtype=float)
        det = self._det(W)
        C = cofactor_matrix(W)
        P = self.p_x / abs(det)
        q, dq = self._marginals(W, True)
        Q = np.prod(q, axis=0)
        fP, fQ = self._f(P), self._f(Q)
        dfP, dfQ = self._fp(P), self._fp(Q)
        v1, v2, v3 = float(fP @ fP), float(fQ @ fQ), float(fP @ fQ)

        # dP/dW[m, l] = -P * C[m, l] / det  (|det|^-2 * sign(det) folded in)
        a1 = float(2.0 * (fP * dfP) @ P)
        a3 = float((dfP * fQ) @ P)
        v1p = -a1 * C / det
        v3p = -a3 * C / det

        v2p = np.empty((self.M, self.M))
        v3q = np.empty((self.M, self.M))
        for m in range(self.M):
            others = np.prod(np.delete(q, m, axis=0), axis=0)
            dQ = others[:, None] * dq[m]  # (T, M): dQ(t)/dW[m, l]
            v2p[m] = 2.0 * (fQ * dfQ) @ dQ
            v3q[m] = (fP * dfQ) @ dQ
        return GradientTerms(v1, v2, v3, v1p, v2p, v3p + v3q)

    def gradient(self, W) -> np.ndarray:
        return self.terms(W).gradient


def contrast(X_w, W, cfg: IcaConfig | None = None) -> float:
    return Contrast(X_w, cfg).value(W)


def gradient(X_w, W, cfg: IcaConfig | None = None) -> np.ndarray:
    return Contrast(X_w, cfg).gradient(W)


def run(X, cfg: IcaConfig | None = None, callback=None) -> tuple[IcaState, np.ndarray]:
    """Separate the rows of ``X`` by gradient descent on the contrast.

    Starts from ``W = I`` on whitened data and takes steps
    ``W <- normalize_rows(W - gamma * grad)`` until the contrast changes by at
    most ``cfg.epsilon`` or ``cfg.max_iter`` updates are done. With
    ``cfg.backtrack`` a step that raises the contrast by more than 10% is
    retried with half the step size, at most 10 times.

    Returns
    -------
    state : IcaState
        Final ``W`` (acting on whitened data), the contrast after every update
        (entry 0 is the starting value) and the whitening transform.
    Y : ndarray, shape (M, T)
        ``W @ X_w``.
    """
    cfg = cfg or IcaConfig()
    X_w, wt = center_whiten(X)
    obj = Contrast(X_w, cfg)
    W = np.eye(obj.M)
    D = obj.value(W)
    state = IcaState(W=W, divergence_trace=[D], whitening=wt)
    if not np.isfinite(D):
        raise DivergenceError("contrast is not finite at the identity start")

    for k in range(1, cfg.max_iter + 1):
        G = obj.gradient(W)
        step = cfg.gamma
        for _ in range(11 if cfg.backtrack else 1):
            W_new = normalize_rows(W - step * G)
            try:
                D_new = obj.value(W_new)
            except SingularDemixerError:
                D_new = np.inf
            if not cfg.backtrack or D_new - D <= 0.1 * abs(D):
                break
            step *= 0.5
        if not np.isfinite(D_new):
            raise DivergenceError(
                f"contrast became non-finite at iteration {k} (step {step:g}); try a smaller gamma"
            )
        W = W_new
        state.W, state.iteration = W, k
        state.divergence_trace.append(D_new)
        if callback is not None:
            callback(state)
        done = abs(D_new - D) <= cfg.epsilon
        D = D_new
        if done:
            state.converged = True
            break
    log.debug("stopped after %d iterations, contrast %.6g", state.iteration, D)
    return state, demix(X_w, W)
