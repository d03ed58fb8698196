"""Seeded synthetic sources, mixing presets and noisy instantaneous mixing.

All randomness goes through ``numpy.random.default_rng(seed)`` (PCG64,
128-bit state), so a seed fully determines every generated array.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .linalg import determinant

SourceKind = Literal["uniform", "laplace"]


@dataclass(frozen=True)
class SourceSpec:
    kind: SourceKind
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "laplace"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @classmethod
    def parse(cls, text: str) -> "SourceSpec":
        """Parse ``"uniform:3"`` / ``"laplace:1"`` (``laplacian`` also accepted)."""
        kind, _, tau = text.strip().partition(":")
        kind = {"laplacian": "laplace"}.get(kind.lower(), kind.lower())
        return cls(kind, float(tau) if tau else 1.0)


@dataclass(frozen=True)
class MixSpec:
    A: np.ndarray
    snr_db: float | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("mixing matrix must be square")
        if determinant(A) == 0.0:
            raise ValueError("mixing matrix is singular")
        object.__setattr__(self, "A", A)


# mixing matrices given column by column as exact decimals
PRESET_2X2_COLUMNS = (("0.5", "0.6"), ("0.3", "0.4"))
PRESET_3X3_COLUMNS = (("0.8", "0.3", "-0.3"), ("0.2", "-0.8", "0.7"), ("0.3", "0.2", "0.3"))


def _from_columns(cols) -> np.ndarray:
    return np.array([[float(v) for v in col] for col in cols]).T


def preset_exact_determinant(cols) -> Fraction:
    """Exact rational determinant of a preset, from its decimal entries."""
    rows = [list(r) for r in zip(*[[Fraction(v) for v in col] for col in cols])]
    n = len(rows)
    det = Fraction(1)
    for k in range(n):
        p = next((i for i in range(k, n) if rows[i][k] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k:
            rows[k], rows[p] = rows[p], rows[k]
            det = -det
        det *= rows[k][k]
        for i in range(k + 1, n):
            r = rows[i][k] / rows[k][k]
            rows[i] = [a - r * b for a, b in zip(rows[i], rows[k])]
    return det


def preset_2x2(snr_db: float | None = None) -> MixSpec:
    return MixSpec(_from_columns(PRESET_2X2_COLUMNS), snr_db)


def preset_3x3(snr_db: float | None = None) -> MixSpec:
    # one matrix serves both the noiseless and the noisy setting
    return MixSpec(_from_columns(PRESET_3X3_COLUMNS), snr_db)


def gen_sources(specs: Sequence[SourceSpec], T: int, seed: int) -> np.ndarray:
    """Draw an (M, T) source matrix, one i.i.d. row per spec.

    Uniform rows use ``tau * (2u - 1)``; Laplacian rows use the inverse CDF
    ``-tau * sign(u - 1/2) * log(1 - 2|u - 1/2|)``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    S = np.empty((len(specs), T))
    for m, spec in enumerate(specs):
        u = rng.random(T)
        if spec.kind == "uniform":
            S[m] = spec.tau * (2.0 * u - 1.0)
        else:
            # u == 0 would map to -inf
            u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
            d = u - 0.5
            S[m] = -spec.tau * np.sign(d) * np.log1p(-2.0 * np.abs(d))
    return S


def mix(S, spec: MixSpec, seed: int = 0) -> tuple[np.ndarray, float]:
    """Return ``(X, sigma)`` with ``X = A @ S`` plus white Gaussian noise.

    ``sigma`` is chosen so total clean power over total noise power equals
    ``spec.snr_db``; it is 0 for noiseless mixing.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != spec.A.shape[1]:
        raise ValueError(f"sources of shape {S.shape} do not match A of shape {spec.A.shape}")
    X = spec.A @ S
    if spec.snr_db is None:
        return X, 0.0
    M, T = X.shape
    power = np.sum(X * X) / (M * T)
    sigma = float(np.sqrt(power / 10.0 ** (spec.snr_db / 10.0)))
    rng = np.random.default_rng(seed)
    return X + sigma * rng.standard_normal(X.shape), sigma


TWO_SOURCES = (SourceSpec("uniform", 3.0), SourceSpec("laplace", 1.0))
THREE_SOURCES = (SourceSpec("uniform", 3.0), SourceSpec("laplace", 1.0), SourceSpec("laplace", 2.0))

PRESETS = {
    "paper-identity": (TWO_SOURCES, lambda snr: MixSpec(np.eye(2), snr)),
    "paper-2x2": (TWO_SOURCES, preset_2x2),
    "paper-3x3": (THREE_SOURCES, preset_3x3),
}
