"""Independent oracles used to pin expected values before trusting the
package's solver paths.

Everything here is deliberately written from scratch (closed forms and
brute-force search) without calling into the package, so test expectations
do not inherit implementation bugs.
"""

from __future__ import annotations

import numpy as np


def beta_closed_form(q_bar: np.ndarray, rho2: float) -> float:
    """Candidate closed form for the worst-case trace increment over a
    Gelbrich ball: rho^2 + 2 rho sqrt(tr(Qbar)).

    Derivation sketch: the trace objective is maximized by inflating every
    direction proportionally, Q = (1 + s)^2-style scaling along Qbar^1/2,
    giving G(Q, Qbar) = rho exactly and tr(Q - Qbar) = rho^2 +
    2 rho sqrt(tr(Qbar)).  Validated against the grid searches below.
    """
    rho = float(np.sqrt(rho2))
    return rho2 + 2.0 * rho * float(np.sqrt(np.trace(np.atleast_2d(q_bar))))


def worst_case_grid_1d(q_bar: float, rho: float, q_max: float = 20.0,
                       points: int = 200001) -> float:
    """Brute-force max of q - q_bar over scalar q >= 0 with |sqrt(q) -
    sqrt(q_bar)| <= rho."""
    q = np.linspace(0.0, q_max, points)
    dist = np.abs(np.sqrt(q) - np.sqrt(q_bar))
    feasible = q[dist <= rho]
    return float(feasible.max() - q_bar)


def _gelbrich_sq_2x2(q_bar: np.ndarray, tr_q, det_q, tr_qbar_q):
    """Vectorized squared Gelbrich distance to a fixed 2x2 PSD center.

    Uses tr(sqrt(M)) = sqrt(tr(M) + 2 sqrt(det(M))) for 2x2 PSD M with
    M = Qbar^1/2 Q Qbar^1/2, so tr(M) = tr(Qbar Q) and det(M) =
    det(Qbar) det(Q).
    """
    tr_qbar = float(np.trace(q_bar))
    det_qbar = float(np.linalg.det(q_bar))
    inner = np.maximum(tr_qbar_q + 2.0 * np.sqrt(np.maximum(det_qbar * det_q, 0.0)), 0.0)
    return tr_q + tr_qbar - 2.0 * np.sqrt(inner)


def _grid_pass_2d(q_bar, rho, s1_range, s2_range, theta_range, points):
    s1_ax = np.linspace(*s1_range, points)
    s2_ax = np.linspace(*s2_range, points)
    th_ax = np.linspace(*theta_range, points)
    s1, s2, th = np.meshgrid(s1_ax, s2_ax, th_ax, indexing="ij")
    c, sn = np.cos(th), np.sin(th)
    # Q = R diag(s1, s2) R^T entries
    q11 = c * c * s1 + sn * sn * s2
    q22 = sn * sn * s1 + c * c * s2
    q12 = c * sn * (s1 - s2)
    tr_q = s1 + s2
    det_q = s1 * s2
    tr_qbar_q = q_bar[0, 0] * q11 + q_bar[1, 1] * q22 + 2.0 * q_bar[0, 1] * q12
    g2 = _gelbrich_sq_2x2(q_bar, tr_q, det_q, tr_qbar_q)
    obj = np.where(g2 <= rho * rho, tr_q, -np.inf)
    flat = obj.reshape(-1)
    top = np.argsort(flat)[-8:][::-1]
    centers = []
    for k in top:
        idx = np.unravel_index(int(k), obj.shape)
        centers.append(
            (float(s1_ax[idx[0]]), float(s2_ax[idx[1]]), float(th_ax[idx[2]]))
        )
    idx = np.unravel_index(int(top[0]), obj.shape)
    return float(obj[idx]) - float(np.trace(q_bar)), centers


def worst_case_grid_2d(q_bar: np.ndarray, rho: float, points: int = 100,
                       refinements: int = 5) -> float:
    """Brute-force max of tr(Q - Qbar) over Q = R(theta) diag(s1,s2)
    R(theta)^T inside the Gelbrich ball: coarse grid followed by local
    refinement passes, multi-started from the top coarse candidates (the
    parameterization has spurious local basins on the ball boundary)."""
    q_bar = np.asarray(q_bar, dtype=float)
    s_max = (np.sqrt(np.trace(q_bar)) + rho) ** 2 * 1.05
    full = [(0.0, s_max), (0.0, s_max), (0.0, np.pi)]
    best, starts = _grid_pass_2d(q_bar, rho, *full, points)
    for start in starts:
        ranges = full
        center = start
        for _ in range(refinements):
            new_ranges = []
            for (lo, hi), mid in zip(ranges, center):
                w = (hi - lo) * 3.0 / points
                new_ranges.append((max(lo, mid - w), min(hi, mid + w)))
            ranges = new_ranges
            val, cands = _grid_pass_2d(q_bar, rho, *ranges, points)
            best = max(best, val)
            center = cands[0]
    return best


def scalar_error_oracle() -> float:
    """Exact asymptotic error for the scalar pair (a=0.5, b=c=1, q=1)
    against (a_hat=0.25, b_hat=c_hat=1): closed-form Lyapunov blocks
    1/(1-0.25) + 1/(1-0.0625) - 2/(1-0.125) = 4/3 + 16/15 - 16/7 = 4/35."""
    return 4.0 / 35.0


def reduction_direct_search(a, b, c, q_eff, r: int, epsilon: float,
                            samples: int = 20000, seed: int = 0):
    """Randomized direct search over the reduction program's decision
    variables (P1 symmetric n x n, Z1 symmetric r x r, gamma).

    Returns the best feasible gamma found, or None when no sampled point
    satisfies the constraints.  Used as an independent check on the
    solver's feasibility verdict.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    q_eff = np.asarray(q_eff, float)
    n = a.shape[0]
    bqb = b @ q_eff @ b.T
    best = None
    for _ in range(samples):
        m1 = rng.standard_normal((n, n))
        p1 = m1 @ m1.T * rng.uniform(0.01, 10.0) + epsilon * np.eye(n)
        m2 = rng.standard_normal((r, r))
        z1 = m2 @ m2.T * rng.uniform(0.01, 10.0) + epsilon * np.eye(r)
        z = np.zeros((n, n))
        z[:r, :r] = z1
        if np.linalg.eigvalsh(p1 - z).min() < epsilon:
            continue
        psi1 = a @ p1 @ a.T - p1 + bqb
        psi23 = a @ z @ a.T - p1 + bqb
        psi = np.block([[psi1, psi23], [psi23.T, psi23]])
        psi = (psi + psi.T) / 2
        if np.linalg.eigvalsh(psi).max() > -epsilon:
            continue
        gamma = float(np.trace(c @ (p1 - z) @ c.T))
        if best is None or gamma < best:
            best = gamma
    return best
