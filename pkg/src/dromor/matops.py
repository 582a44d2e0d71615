"""Dense symmetric/general matrix primitives.

All routines are pure functions on numpy arrays: eigendecomposition with a
deterministic sign convention, PSD matrix square root, discrete Lyapunov
solving and spectral radius.  They carry the numerical contracts every other
module relies on, so the tolerances here are deliberately explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionError,
    InstabilityError,
    NotPsdError,
    NotSymmetricError,
)

#: Absolute asymmetry tolerated before a "symmetric" input is rejected.
SYMMETRY_ATOL = 1e-10

#: Eigenvalues above this (negative) floor are clipped to zero in PSD
#: square roots; below NOT_PSD_FLOOR the input is rejected outright.
PSD_CLIP = -1e-10
NOT_PSD_FLOOR = -1e-6


def as_symmetric(matrix, atol: float = SYMMETRY_ATOL) -> np.ndarray:
    """Validate symmetry of ``matrix`` within ``atol`` and return the
    symmetrized copy ``(M + M.T) / 2``."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    gap = np.max(np.abs(m - m.T)) if m.size else 0.0
    if gap > atol:
        raise NotSymmetricError(
            f"matrix is not symmetric: max |M - M^T| = {gap:.3e} > {atol:.1e}"
        )
    return (m + m.T) / 2.0


@dataclass(frozen=True)
class EigenPair:
    """Eigendecomposition of a symmetric matrix.

    ``values`` are sorted descending; ``vectors`` has the matching
    orthonormal eigenvectors as columns, each with its largest-magnitude
    entry made positive so repeated runs are bit-identical.
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.vectors @ np.diag(self.values) @ self.vectors.T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        if out[k, j] < 0:
            out[:, j] = -out[:, j]
    return out


def sym_eig(s) -> EigenPair:
    """Symmetric eigendecomposition with descending eigenvalues and a
    deterministic eigenvector sign convention."""
    m = as_symmetric(s)
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK cap
        raise ConvergenceError(f"symmetric eigensolver did not converge: {exc}")
    # stable descending sort keeps the solver's basis order on ties
    order = np.argsort(-values, kind="stable")
    return EigenPair(values=values[order], vectors=_fix_signs(vectors[:, order]))


def sqrtm_psd(s, clip: float = PSD_CLIP, floor: float = NOT_PSD_FLOOR) -> np.ndarray:
    """Symmetric PSD square root.

    Eigenvalues in ``[floor, 0)`` are clipped to zero (conic solvers leave
    noise at the PSD boundary); anything below ``floor`` raises
    :class:`NotPsdError`.
    """
    pair = sym_eig(s)
    lo = float(pair.values.min(initial=0.0))
    if lo < floor:
        raise NotPsdError(
            f"matrix is not PSD: smallest eigenvalue {lo:.3e} < {floor:.1e}"
        )
    vals = np.clip(pair.values, 0.0, None)
    root = (pair.vectors * np.sqrt(vals)) @ pair.vectors.T
    return (root + root.T) / 2.0


def spectral_radius(a) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def dlyap(a, w) -> np.ndarray:
    """Solve the discrete Lyapunov equation ``A P A^T - P + W = 0``.

    Requires ``spectral_radius(A) < 1`` and symmetric ``W``.  Solved by the
    Kronecker vectorization ``(I - A (x) A) vec(P) = vec(W)``, which is
    exact and simple at the dense sizes this package targets (n <= ~100).
    """
    a = np.asarray(a, dtype=float)
    w = as_symmetric(w)
    n = w.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"A has shape {a.shape}, W has shape {w.shape}")
    rho = spectral_radius(a)
    if rho >= 1.0:
        raise InstabilityError(
            f"discrete Lyapunov equation needs spectral radius < 1, got {rho:.6f}"
        )
    lhs = np.eye(n * n) - np.kron(a, a)
    p = np.linalg.solve(lhs, w.reshape(-1)).reshape(n, n)
    return (p + p.T) / 2.0
