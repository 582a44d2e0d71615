"""Balanced truncation baseline.

Standard square-root balanced truncation, with the controllability gramian
weighted by the nominal input covariance so the baseline consumes the same
problem data as the robust pipeline (with Q = I it is textbook BT).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, RankDeficiencyError
from .matops import as_symmetric, dlyap, sym_eig
from .reduction import DiscreteLtiSystem, ReducedModel

#: Hankel values below this are considered numerically unobservable or
#: uncontrollable directions.
HANKEL_FLOOR = 1e-10

#: Cholesky pivot floor before falling back to an eigen factorization.
CHOL_PIVOT = 1e-12


@dataclass(frozen=True)
class GramianPair:
    """Controllability (input weighted by a covariance) and observability
    gramians of a stable discrete-time system."""

    Wc: np.ndarray
    Wo: np.ndarray


def gramians(sys: DiscreteLtiSystem, q) -> GramianPair:
    """Solve ``A Wc A' - Wc + B Q B' = 0`` and ``A' Wo A - Wo + C'C = 0``."""
    sys.require_stable("gramian computation")
    q = as_symmetric(q, atol=1e-8)
    if q.shape != (sys.m, sys.m):
        raise DimensionError(f"Q has shape {q.shape}, input dim is {sys.m}")
    wc = dlyap(sys.A, sys.B @ q @ sys.B.T)
    wo = dlyap(sys.A.T, sys.C.T @ sys.C)
    return GramianPair(Wc=wc, Wo=wo)


def _psd_factor(w: np.ndarray) -> np.ndarray:
    """Lower-triangular-ish factor L with W = L L'; Cholesky when the pivots
    allow it, eigen factorization otherwise (singular gramians)."""
    try:
        l = np.linalg.cholesky(w + 0.0)
        if np.min(np.diag(l)) < CHOL_PIVOT:
            raise np.linalg.LinAlgError("pivot underflow")
        return l
    except np.linalg.LinAlgError:
        pair = sym_eig(w)
        vals = np.clip(pair.values, 0.0, None)
        return pair.vectors * np.sqrt(vals)


def balanced_truncation(sys: DiscreteLtiSystem, q, r: int) -> ReducedModel:
    """Square-root balanced truncation to order ``r``.

    The returned model carries the oblique projection matrices in the
    factor slots and is flagged ``mode="balanced"``, waiving the
    orthonormality invariants of the projection recovery.
    """
    if not 1 <= r <= sys.n:
        raise DimensionError(f"reduced order must satisfy 1 <= r <= n, got {r}")
    gram = gramians(sys, q)
    lc = _psd_factor(gram.Wc)
    lo = _psd_factor(gram.Wo)
    u, svals, vt = np.linalg.svd(lo.T @ lc)
    if svals.shape[0] < r or svals[r - 1] < HANKEL_FLOOR:
        raise RankDeficiencyError(
            f"Hankel value sigma_{r} = "
            f"{(svals[r-1] if svals.shape[0] >= r else 0.0):.3e} below "
            f"{HANKEL_FLOOR:.0e}; the order-{r} truncation is not supported "
            f"by the gramians"
        )
    if svals[min(r, svals.shape[0] - 1)] < HANKEL_FLOOR and r < sys.n:
        warnings.warn("truncating at a near-zero Hankel value", RuntimeWarning)
    s_root = np.sqrt(svals[:r])
    t_left = (u[:, :r] / s_root).T @ lo.T      # r x n
    t_right = lc @ vt[:r].T / s_root           # n x r
    a_hat = t_left @ sys.A @ t_right
    b_hat = t_left @ sys.B
    c_hat = sys.C @ t_right
    return ReducedModel(
        A_hat=a_hat, B_hat=b_hat, C_hat=c_hat,
        P1=None, P2=t_right, P3=np.eye(r), Z1=None,
        mode="balanced", hankel_values=svals.copy(),
    )


def balancing_transform(sys: DiscreteLtiSystem, q):
    """Full-order balancing state transform: returns (T, T_inv, sigma) with
    T Wc T' = T'^-1 Wo T^-1 = diag(sigma)."""
    gram = gramians(sys, q)
    lc = _psd_factor(gram.Wc)
    lo = _psd_factor(gram.Wo)
    u, svals, vt = np.linalg.svd(lo.T @ lc)
    if np.min(svals) < HANKEL_FLOOR:
        raise RankDeficiencyError(
            "system is not minimal enough for a full balancing transform"
        )
    s_root = np.sqrt(svals)
    t = (u / s_root).T @ lo.T
    t_inv = lc @ vt.T / s_root
    return t, t_inv, svals
