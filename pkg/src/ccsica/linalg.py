"""Small dense linear algebra for the M x M matrices used by the separator.

Everything here targets M in the 2..8 range: cyclic Jacobi for symmetric
eigenproblems, LU with partial pivoting for determinants, and cofactors by
explicit minors.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DegenerateDemixerError, NotSymmetricError

SYMMETRY_RTOL = 1e-9
JACOBI_MAX_SWEEPS = 100


class SymEig(NamedTuple):
    """Eigenvalues in descending order and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square(A) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def sym_eig(A) -> SymEig:
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Parameters
    ----------
    A : array_like, shape (M, M)
        Symmetric matrix. Asymmetry above ``1e-9`` relative raises
        :class:`NotSymmetricError`.

    Returns
    -------
    SymEig
        ``eigenvalues`` sorted descending (stable, so ties keep the order the
        sweeps left them in) and ``eigenvectors`` with orthonormal columns such
        that ``E @ diag(lam) @ E.T`` reproduces ``A``.
    """
    A = _as_square(A)
    n = A.shape[0]
    scale = np.max(np.abs(A))
    if scale > 0 and np.max(np.abs(A - A.T)) > SYMMETRY_RTOL * scale:
        raise NotSymmetricError("sym_eig requires a symmetric matrix")

    a = 0.5 * (A + A.T)
    v = np.eye(n)
    if scale == 0:
        return SymEig(np.zeros(n), v)

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # rotation angle zeroing a[p, q] (Golub & Van Loan, sym.schur2)
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError(f"Jacobi sweeps did not converge for a {n}x{n} matrix")

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return SymEig(lam[order], v[:, order])


def lu_factor(W) -> tuple[np.ndarray, np.ndarray, int]:
    """LU with partial pivoting. Returns packed LU, row permutation and its sign."""
    a = _as_square(W).copy()
    n = a.shape[0]
    perm = np.arange(n)
    sign = 1
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        if a[k, k] == 0.0:
            continue
        a[k + 1:, k] /= a[k, k]
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return a, perm, sign


def determinant(W) -> float:
    """Determinant via LU with partial pivoting. Singular input returns 0."""
    a, _, sign = lu_factor(W)
    return float(sign * np.prod(np.diag(a)))


def cofactor_matrix(W) -> np.ndarray:
    """Matrix of signed minors, ``C[m, l] = (-1)**(m + l) * minor(m, l)``.

    ``C[m, l]`` is the partial derivative of ``det(W)`` with respect to
    ``W[m, l]``.
    """
    W = _as_square(W)
    n = W.shape[0]
    if n == 1:
        return np.ones((1, 1))
    C = np.empty_like(W)
    for m in range(n):
        rows = np.delete(W, m, axis=0)
        for l in range(n):
            C[m, l] = (-1) ** (m + l) * determinant(np.delete(rows, l, axis=1))
    return C


def normalize_rows(W) -> np.ndarray:
    """Scale every row to unit Euclidean norm.

    Raises
    ------
    DegenerateDemixerError
        If any row is identically zero.
    """
    W = _as_square(W)
    norms = np.sqrt(np.sum(W * W, axis=1))
    bad = np.flatnonzero(norms == 0)
    if bad.size:
        raise DegenerateDemixerError(f"row {int(bad[0])} of the demixing matrix is zero")
    return W / norms[:, None]
