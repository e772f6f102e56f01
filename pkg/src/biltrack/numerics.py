"""Small dense matrix kernels: adjugate, SPD square root, symmetric eigen bounds.

All matrices here are small (state dimensions of a handful), so the kernels
favour robustness over asymptotics: the adjugate never divides by the
determinant when the matrix is close to singular.
"""

from __future__ import annotations

import numpy as np

from .errors import CertificateError, DimensionError

__all__ = ["adjugate", "determinant", "spd_sqrt", "sym_min_eig", "sym_max_eig"]

# Condition number beyond which det(m)*inv(m) is not trusted for the adjugate.
_ADJ_COND_LIMIT = 1e12
_SYM_RTOL = 1e-9


def _as_square(m: np.ndarray, who: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{who}: expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise DimensionError(f"{who}: empty matrix")
    return m


def _require_symmetric(m: np.ndarray, who: str) -> np.ndarray:
    m = _as_square(m, who)
    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > _SYM_RTOL * max(scale, 1.0):
        raise DimensionError(f"{who}: matrix is not symmetric")
    return 0.5 * (m + m.T)


def _cofactor_adjugate(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    adj = np.empty_like(m)
    rows = np.arange(n)
    for i in range(n):
        for j in range(n):
            minor = m[np.ix_(rows != i, rows != j)]
            # adj = transpose of the cofactor matrix
            adj[j, i] = (-1.0) ** (i + j) * np.linalg.det(minor)
    return adj


def adjugate(m: np.ndarray) -> np.ndarray:
    """Adjugate of a square matrix, satisfying adj(m) @ m = det(m) * I.

    Stays well defined at (near-)singular inputs: dimensions up to 3 use
    cofactors directly, larger ones fall back to cofactors whenever
    det(m) * inv(m) would be ill conditioned.
    """
    m = _as_square(m, "adjugate")
    n = m.shape[0]
    if n == 1:
        return np.array([[1.0]])
    if n == 2:
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    if n == 3:
        return _cofactor_adjugate(m)
    det = np.linalg.det(m)
    if det != 0.0 and np.isfinite(det):
        cond = np.linalg.cond(m)
        if np.isfinite(cond) and cond < _ADJ_COND_LIMIT:
            return det * np.linalg.inv(m)
    return _cofactor_adjugate(m)


def determinant(m: np.ndarray) -> float:
    """Determinant of a square matrix."""
    return float(np.linalg.det(_as_square(m, "determinant")))


def spd_sqrt(p: np.ndarray) -> np.ndarray:
    """Symmetric principal square root of an SPD matrix.

    Returns R with R @ R.T = p (R is itself symmetric PD); diagonal inputs
    yield the entrywise square root exactly.
    """
    p = _as_square(p, "spd_sqrt")
    scale = np.linalg.norm(p)
    if np.linalg.norm(p - p.T) > _SYM_RTOL * max(scale, 1.0):
        raise CertificateError("spd_sqrt: matrix is not symmetric")
    if np.count_nonzero(p - np.diag(np.diagonal(p))) == 0:
        diag = np.diagonal(p)
        if np.any(diag <= 0.0):
            raise CertificateError("spd_sqrt: matrix is not positive definite")
        return np.diag(np.sqrt(diag))
    w, v = np.linalg.eigh(0.5 * (p + p.T))
    if np.any(w <= 0.0):
        raise CertificateError("spd_sqrt: matrix is not positive definite")
    return (v * np.sqrt(w)) @ v.T


def sym_min_eig(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    m = _require_symmetric(m, "sym_min_eig")
    return float(np.linalg.eigvalsh(m)[0])


def sym_max_eig(m: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric matrix."""
    m = _require_symmetric(m, "sym_max_eig")
    return float(np.linalg.eigvalsh(m)[-1])
