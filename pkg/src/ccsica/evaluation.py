"""Separation quality metrics and the contrast landscape over 2x2 rotations."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SingularDemixerError
from .ica import Contrast, IcaConfig

SIR_CAP_DB = 300.0


class Alignment(NamedTuple):
    """``permutation[m]`` is the estimate matched to source ``m``; ``gains[m]`` its scale."""

    permutation: np.ndarray
    gains: np.ndarray


def kurtosis(s) -> float:
    """Excess kurtosis ``E[s^4] / E[s^2]^2 - 3`` of the mean-removed samples."""
    s = np.asarray(s, dtype=float).ravel()
    if s.size < 4:
        raise ValueError("kurtosis needs at least 4 samples")
    c = s - s.mean()
    m2 = np.mean(c * c)
    if m2 == 0:
        raise ValueError("kurtosis of a constant signal is undefined")
    return float(np.mean(c ** 4) / m2 ** 2 - 3.0)


def _check_pair(S, Y):
    S = np.atleast_2d(np.asarray(S, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if S.shape != Y.shape:
        raise ValueError(f"shape mismatch: sources {S.shape} vs estimates {Y.shape}")
    return S, Y


def align(S, Y, allow_silent: bool = False) -> Alignment:
    """Resolve the permutation and scale ambiguity of ``Y`` against ``S``.

    Sources and estimates are paired greedily by largest absolute
    correlation; each gain is the least-squares scale of the matched estimate
    onto its source. With ``allow_silent`` a zero-variance estimate is paired
    last with gain 0 instead of raising.
    """
    S, Y = _check_pair(S, Y)
    M = S.shape[0]
    Sc = S - S.mean(axis=1, keepdims=True)
    Yc = Y - Y.mean(axis=1, keepdims=True)
    sn = np.sqrt(np.sum(Sc * Sc, axis=1))
    yn = np.sqrt(np.sum(Yc * Yc, axis=1))
    if np.any(sn == 0) or (np.any(yn == 0) and not allow_silent):
        raise ValueError("cannot align a zero-variance channel")
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.nan_to_num(np.abs(Sc @ Yc.T) / np.outer(sn, yn), nan=0.0)

    perm = np.full(M, -1)
    taken = np.zeros(M, dtype=bool)
    for k in np.argsort(-corr, axis=None, kind="stable"):
        m, j = divmod(int(k), M)
        if perm[m] < 0 and not taken[j]:
            perm[m] = j
            taken[j] = True
    gains = np.zeros(M)
    for m in range(M):
        y = Y[perm[m]]
        e = y @ y
        if e > 0:
            gains[m] = (y @ S[m]) / e
    return Alignment(perm, gains)


def apply_alignment(Y, alignment: Alignment) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    return alignment.gains[:, None] * Y[alignment.permutation]


def sir_db(S, Y_aligned) -> float:
    """Signal-to-interference ratio in dB over all channels and samples.

    Returns ``SIR_CAP_DB`` when the error energy is below ``1e-30`` of the
    signal energy.
    """
    S, Y = _check_pair(S, Y_aligned)
    sig = float(np.sum(S * S))
    if sig == 0:
        raise ValueError("reference signals have zero energy")
    err = float(np.sum((Y - S) ** 2))
    if err < 1e-30 * sig:
        return SIR_CAP_DB
    return float(min(10.0 * np.log10(sig / err), SIR_CAP_DB))


def sir_per_source(S, Y_aligned) -> np.ndarray:
    S, Y = _check_pair(S, Y_aligned)
    return np.array([sir_db(S[m], Y[m]) for m in range(S.shape[0])])


def evaluate(S, Y, center: bool = True) -> dict:
    """Align ``Y`` to ``S`` and report SIR and kurtosis (JSON serializable).

    With ``center`` both sets are made zero-mean first. Demixed outputs come
    from centered mixtures and cannot carry the sources' sample mean.
    """
    S, Y = _check_pair(S, Y)
    if center:
        S = S - S.mean(axis=1, keepdims=True)
        Y = Y - Y.mean(axis=1, keepdims=True)
    al = align(S, Y, allow_silent=True)
    Ya = apply_alignment(Y, al)
    return {
        "permutation": al.permutation.tolist(),
        "gains": al.gains.tolist(),
        "sir_db": sir_per_source(S, Ya).tolist(),
        "sir_total_db": sir_db(S, Ya),
        "kurtosis_estimates": [_kurtosis_or_none(y) for y in Y],
        "kurtosis_sources": [kurtosis(s) for s in S],
    }


def _kurtosis_or_none(y):
    try:
        return kurtosis(y)
    except ValueError:
        return None


def polar_demixer(theta1: float, theta2: float) -> np.ndarray:
    """2x2 demixer whose rows are unit vectors at angles ``theta1`` and ``theta2``."""
    return np.array([[np.cos(theta1), np.sin(theta1)], [np.cos(theta2), np.sin(theta2)]])


@dataclass
class LandscapeGrid:
    """Contrast over a (theta1, theta2) grid. ``values[i, j]`` is at ``(theta1[i], theta2[j])``.

    Points where the demixer is singular hold ``nan`` and are flagged in
    ``singular``.
    """

    theta1: np.ndarray
    theta2: np.ndarray
    values: np.ndarray
    singular: np.ndarray
    alpha: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta1", "theta2", "divergence"])
            for i, t1 in enumerate(self.theta1):
                for j, t2 in enumerate(self.theta2):
                    w.writerow([f"{t1:.9g}", f"{t2:.9g}", f"{self.values[i, j]:.9g}"])

    @classmethod
    def from_csv(cls, path, alpha: float = float("nan")) -> "LandscapeGrid":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t1 = np.unique(data[:, 0])
        t2 = np.unique(data[:, 1])
        vals = data[:, 2].reshape(t1.size, t2.size)
        return cls(t1, t2, vals, np.isnan(vals), alpha)


def landscape(X_w, alpha: float, n: int = 65, bandwidth: float | None = None,
              objective: str = "ccs", workers: int = 1) -> LandscapeGrid:
    """Evaluate the contrast of ``polar_demixer(t1, t2)`` on an n x n grid over [0, pi]^2."""
    X_w = np.asarray(X_w, dtype=float)
    if X_w.ndim != 2 or X_w.shape[0] != 2:
        raise ValueError("the landscape is defined for two-channel data only")
    if n < 2:
        raise ValueError("grid needs at least 2 points per axis")
    obj = Contrast(X_w, IcaConfig(alpha=alpha, bandwidth=bandwidth, objective=objective))
    th = np.linspace(0.0, np.pi, n)

    def row(i):
        out = np.empty(n)
        for j in range(n):
            try:
                out[j] = obj.value(polar_demixer(th[i], th[j]))
            except SingularDemixerError:
                out[j] = np.nan
        return out

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(row, range(n)))
    else:
        rows = [row(i) for i in range(n)]
    vals = np.vstack(rows)
    return LandscapeGrid(th, th.copy(), vals, np.isnan(vals), alpha)


def landscape_minima(grid: LandscapeGrid, k: int = 4, radius: int = 1) -> list[tuple[int, int, float]]:
    """The ``k`` lowest grid values, skipping points within ``radius`` cells of one already taken.

    Returns ``(i, j, value)`` index triples, lowest first.
    """
    vals = np.where(grid.singular, np.inf, grid.values)
    picked: list[tuple[int, int, float]] = []
    for flat in np.argsort(vals, axis=None, kind="stable"):
        i, j = np.unravel_index(flat, vals.shape)
        if not np.isfinite(vals[i, j]):
            break
        if any(max(abs(i - a), abs(j - b)) <= radius for a, b, _ in picked):
            continue
        picked.append((int(i), int(j), float(vals[i, j])))
        if len(picked) == k:
            break
    return picked


def second_difference(values, i: int, j: int) -> float:
    """Sum of the discrete second differences along both grid axes at ``(i, j)``.

    Axes where ``(i, j)`` sits on the boundary are skipped.
    """
    v = np.asarray(values, dtype=float)
    total = 0.0
    if 0 < i < v.shape[0] - 1:
        total += v[i - 1, j] - 2 * v[i, j] + v[i + 1, j]
    if 0 < j < v.shape[1] - 1:
        total += v[i, j - 1] - 2 * v[i, j] + v[i, j + 1]
    return float(total)
