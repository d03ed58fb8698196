"""Convex Cauchy-Schwarz divergence and the plain Cauchy-Schwarz baseline.

The convex generator is

    f(t) = 4 / (1 - a**2) * [(1 - a)/2 + (1 + a)/2 * t - t**((1 + a)/2)]

which is evaluated through ``expm1`` in ``b = (1 + a)/2`` to keep it accurate
as ``a`` approaches +-1. Within ``LIMIT_TOL`` of +-1 the closed limit forms are
used instead:

    a -> +1 :  t log t - t + 1
    a -> -1 :  t - 1 - log t
"""
from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

LIMIT_TOL = 1e-6
T_FLOOR = 1e-300


class Kind(str, enum.Enum):
    CCS = "ccs"
    CS = "cs"


class DivergenceGeometry(NamedTuple):
    v_jj: float
    v_mm: float
    v_cc: float
    angle: float
    divergence: float


def _limit(alpha: float) -> int:
    if abs(alpha - 1.0) < LIMIT_TOL:
        return 1
    if abs(alpha + 1.0) < LIMIT_TOL:
        return -1
    return 0


def _check_nonneg(t: np.ndarray) -> None:
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("f is only defined for t >= 0")


def f_convex(t, alpha: float):
    """The convex generator f(t; alpha). Vanishes at t = 1 and is >= 0 elsewhere."""
    t = np.asarray(t, dtype=float)
    _check_nonneg(t)
    lim = _limit(alpha)
    if lim == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)) - t + 1.0, 1.0)
    elif lim == -1:
        tc = np.maximum(t, T_FLOOR)
        out = tc - 1.0 - np.log(tc)
    else:
        b = 0.5 * (1.0 + alpha)
        tc = np.maximum(t, T_FLOOR)
        lt = np.log(tc)
        if b > 0.5:
            # with c = 1 - b small, b(t-1) - t**b + 1 = -c(t-1) - t expm1(-c log t)
            c = 1.0 - b
            out = (-tc * np.expm1(-c * lt) / c - (tc - 1.0)) / b
        else:
            out = ((tc - 1.0) - np.expm1(b * lt) / b) / (1.0 - b)
        if b > 0:
            # 0**b = 0 exactly, the floor would otherwise leave a tiny residue
            out = np.where(t == 0, 1.0 / b, out)
    return out if out.ndim else float(out)


def f_deriv(t, alpha: float):
    """df/dt = 2/(1 - a) * [1 - t**((a - 1)/2)], with limits log t and 1 - 1/t."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(np.isnan(t)):
        raise ValueError("f' is only defined for t > 0")
    lim = _limit(alpha)
    if lim == 1:
        out = np.log(t)
    elif lim == -1:
        out = 1.0 - 1.0 / t
    else:
        b = 0.5 * (1.0 + alpha)
        out = -np.expm1((b - 1.0) * np.log(t)) / (1.0 - b)
    return out if out.ndim else float(out)


def _v_terms(fp: np.ndarray, fq: np.ndarray) -> tuple[float, float, float]:
    return float(fp @ fp), float(fq @ fq), float(fp @ fq)


def _log_ratio(v1: float, v2: float, v3: float) -> float:
    if v3 == 0.0:
        if v1 == 0.0 or v2 == 0.0:
            return 0.0
        return float("inf")
    # Cauchy-Schwarz makes this nonnegative; rounding can leave -1e-16
    val = np.log(v1) + np.log(v2) - 2.0 * np.log(v3)
    return float(max(val, 0.0))


def _transform(p, alpha: float | None):
    p = np.asarray(p, dtype=float).ravel()
    if alpha is None:
        _check_nonneg(p)
        return p
    return np.atleast_1d(f_convex(np.maximum(p, T_FLOOR), alpha))


def ccs_div_samples(pj, qm, alpha: float) -> float:
    """Convex CS divergence between two density vectors sampled at the same points."""
    pj = np.asarray(pj, dtype=float).ravel()
    qm = np.asarray(qm, dtype=float).ravel()
    if pj.shape != qm.shape or pj.size == 0:
        raise ValueError("pj and qm must be non-empty and of equal length")
    return _log_ratio(*_v_terms(_transform(pj, alpha), _transform(qm, alpha)))


def cs_div_samples(pj, qm) -> float:
    """Cauchy-Schwarz divergence, i.e. the same quotient with f = identity."""
    pj = np.asarray(pj, dtype=float).ravel()
    qm = np.asarray(qm, dtype=float).ravel()
    if pj.shape != qm.shape or pj.size == 0:
        raise ValueError("pj and qm must be non-empty and of equal length")
    return _log_ratio(*_v_terms(_transform(pj, None), _transform(qm, None)))


def divergence_geometry(pj, qm, alpha: float, kind: Kind | str = Kind.CCS) -> DivergenceGeometry:
    """V-terms, the angle between the transformed vectors, and the divergence.

    ``divergence == -2 * log(cos(angle))`` up to rounding.
    """
    kind = Kind(kind)
    fp = _transform(pj, alpha if kind is Kind.CCS else None)
    fq = _transform(qm, alpha if kind is Kind.CCS else None)
    if fp.shape != fq.shape:
        raise ValueError("pj and qm must have equal length")
    v1, v2, v3 = _v_terms(fp, fq)
    denom = np.sqrt(v1 * v2)
    cosang = 1.0 if denom == 0 else min(max(v3 / denom, 0.0), 1.0)
    return DivergenceGeometry(v1, v2, v3, float(np.arccos(cosang)), _log_ratio(v1, v2, v3))


def joint_from_marginals(p1, p2) -> np.ndarray:
    return np.outer(np.asarray(p1, dtype=float), np.asarray(p2, dtype=float))


def ccs_div_discrete(joint, alpha: float) -> float:
    """CCS divergence between a discrete joint table and the product of its marginals.

    Parameters
    ----------
    joint : array_like, shape (n, n)
        Nonnegative cell probabilities summing to one.
    """
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2:
        raise ValueError("joint must be a 2-D table")
    if np.any(joint < 0):
        raise ValueError("joint has negative cells")
    if abs(joint.sum() - 1.0) > 1e-12:
        raise ValueError(f"joint must sum to 1, sums to {joint.sum()!r}")
    prod = joint_from_marginals(joint.sum(axis=1), joint.sum(axis=0))
    fp = np.atleast_1d(f_convex(joint.ravel(), alpha))
    fq = np.atleast_1d(f_convex(prod.ravel(), alpha))
    return _log_ratio(*_v_terms(fp, fq))


def binary_sweep(p_aa, alpha: float, p1=(0.7, 0.3), p2=(0.5, 0.5)) -> np.ndarray:
    """Divergence versus p(A, A) for two binary variables with fixed marginals.

    The remaining cells follow from the marginals: ``p(B, A) = p2[0] - p(A, A)``,
    ``p(A, B) = p1[0] - p(A, A)`` and ``p(B, B) = p1[1] - p(B, A)``. Values of
    ``p(A, A)`` that force a negative cell give ``nan``.
    """
    p_aa = np.atleast_1d(np.asarray(p_aa, dtype=float))
    out = np.full(p_aa.shape, np.nan)
    for k, x in enumerate(p_aa):
        ba = p2[0] - x
        ab = p1[0] - x
        bb = p1[1] - ba
        cells = np.array([[x, ab], [ba, bb]])
        if np.any(cells < -1e-15):
            continue
        cells = np.maximum(cells, 0.0)
        cells /= cells.sum()
        out[k] = ccs_div_discrete(cells, alpha)
    return out
