"""Distributions and ambiguity sets.

Zero-mean Gaussian input specs, the 2-Wasserstein distance between
Gaussians, the Gelbrich distance between covariance matrices, membership
testing for a Gelbrich ball (closed form or via the auxiliary-variable SDP
reformulation), and the worst-case covariance-trace program that feeds the
robust reduction pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp
from .errors import DimensionError, NotPsdError
from .matops import as_symmetric, sqrtm_psd

#: Band around the ball boundary inside which the direct and SDP
#: membership modes are allowed to disagree.
BOUNDARY_BAND = 1e-6


def _check_psd(q: np.ndarray, what: str, floor: float = -1e-8) -> np.ndarray:
    lo = float(np.linalg.eigvalsh(q).min())
    if lo < floor:
        raise NotPsdError(f"{what} must be PSD; smallest eigenvalue {lo:.3e}")
    return q


@dataclass(frozen=True)
class GaussianSpec:
    """Zero-mean Gaussian input distribution with covariance ``covariance``."""

    covariance: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        q = _check_psd(as_symmetric(self.covariance), "covariance", floor=-1e-10)
        object.__setattr__(self, "covariance", q)
        mean = np.zeros(q.shape[0]) if self.mean is None else np.asarray(self.mean, float)
        if mean.shape != (q.shape[0],):
            raise DimensionError(
                f"mean has shape {mean.shape}, covariance is {q.shape}"
            )
        if np.any(mean != 0.0):
            raise ValueError("input distributions must have exactly zero mean")
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]


@dataclass(frozen=True)
class GelbrichBall:
    """Ball of covariances within Gelbrich distance ``sqrt(rho2)`` of
    ``center``; also stands in for the matching Wasserstein ball of
    zero-mean distributions."""

    center: np.ndarray
    rho2: float

    def __post_init__(self):
        q = _check_psd(as_symmetric(self.center), "ball center")
        object.__setattr__(self, "center", q)
        if self.rho2 < 0:
            raise ValueError(f"squared radius must be nonnegative, got {self.rho2}")
        object.__setattr__(self, "rho2", float(self.rho2))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def rho(self) -> float:
        return float(np.sqrt(self.rho2))


def gelbrich_distance(q1, q2) -> float:
    """Gelbrich distance ``sqrt(tr(Q1 + Q2 - 2 (Q2^1/2 Q1 Q2^1/2)^1/2))``."""
    q1 = _check_psd(as_symmetric(q1), "first covariance")
    q2 = _check_psd(as_symmetric(q2), "second covariance")
    if q1.shape != q2.shape:
        raise DimensionError(f"covariance shapes differ: {q1.shape} vs {q2.shape}")
    root2 = sqrtm_psd(q2)
    cross = sqrtm_psd(root2 @ q1 @ root2)
    arg = float(np.trace(q1) + np.trace(q2) - 2.0 * np.trace(cross))
    return float(np.sqrt(max(arg, 0.0)))


def wasserstein2_gaussian(g1: GaussianSpec, g2: GaussianSpec) -> float:
    """2-Wasserstein distance between two Gaussians (closed form).  With the
    zero means this package enforces, it coincides with the Gelbrich
    distance of the covariances."""
    if g1.dim != g2.dim:
        raise DimensionError(f"dimensions differ: {g1.dim} vs {g2.dim}")
    mean_gap = float(np.sum((g1.mean - g2.mean) ** 2))
    s1 = g1.covariance
    s2 = g2.covariance
    root1 = sqrtm_psd(s1)
    cross = sqrtm_psd(root1 @ s2 @ root1)
    arg = mean_gap + float(np.trace(s1) + np.trace(s2) - 2.0 * np.trace(cross))
    return float(np.sqrt(max(arg, 0.0)))


@dataclass(frozen=True)
class MembershipResult:
    inside: bool
    margin: float  # rho^2 - squared distance (or the SDP slack equivalent)
    mode: str
    report: sdp.SolveReport | None = None


def membership(ball: GelbrichBall, q, mode: str = "direct",
               solver: str | None = None) -> MembershipResult:
    """Test whether covariance ``q`` lies in ``ball``.

    ``direct`` evaluates the Gelbrich distance in closed form; ``sdp``
    solves the auxiliary-variable feasibility program.  Away from a
    ``BOUNDARY_BAND`` of the boundary the two modes agree.
    """
    q = _check_psd(as_symmetric(q), "candidate covariance")
    if q.shape[0] != ball.dim:
        raise DimensionError(
            f"covariance dim {q.shape[0]} does not match ball dim {ball.dim}"
        )
    if mode == "direct":
        g = gelbrich_distance(q, ball.center)
        margin = ball.rho2 - g * g
        return MembershipResult(margin >= 0.0, margin, "direct")
    if mode != "sdp":
        raise ValueError(f"unknown membership mode {mode!r}")

    m = ball.dim
    qbar = ball.center
    root = sqrtm_psd(qbar)
    q_delta = q - qbar

    prog = sdp.ConicProgram("gelbrich-membership")
    prog.add_sym_var("E_Q", m)
    prog.add_psd(sdp.var_expr("E_Q", m))
    prog.add_psd(
        sdp.block(
            [
                [
                    sdp.const_expr(root @ q_delta @ root + qbar @ qbar),
                    sdp.var_expr("E_Q", m),
                ],
                [sdp.var_expr("E_Q", m), sdp.const_expr(np.eye(m))],
            ]
        )
    )
    # slack objective: max over E_Q of rho^2 - tr(Q_delta + 2 Qbar - 2 E_Q)
    # equals the direct margin rho^2 - G(Q, Qbar)^2
    slack = (
        sdp.scalar_const(ball.rho2 - float(np.trace(q_delta) + 2.0 * np.trace(qbar)))
        + sdp.trace_of("E_Q", 2.0 * np.eye(m))
    )
    prog.maximize(slack)
    report, _values = prog.solve(solver=solver)
    margin = float(report.objective_value)
    return MembershipResult(margin >= 0.0, margin, "sdp", report)


@dataclass(frozen=True)
class WorstCaseResult:
    """Solution of the worst-case covariance-trace program: ``beta_star`` is
    the largest achievable ``tr(Q - Qbar)`` over the ball."""

    beta_star: float
    q_delta: np.ndarray
    e_q: np.ndarray
    report: sdp.SolveReport

    @property
    def worst_covariance(self) -> np.ndarray:
        return self.q_delta  # delta form; add the ball center to materialize


def worst_case_trace(ball: GelbrichBall, solver: str | None = None,
                     feas_tol: float = 1e-6) -> WorstCaseResult:
    """Maximize ``tr(Q_delta)`` over the SDP representation of the ball.

    Decision variables are both ``Q_delta`` and the auxiliary ``E_Q``; the
    constraint ``Qbar + Q_delta >= 0`` is added so ``Q_delta`` always
    parameterizes a genuine covariance.
    """
    m = ball.dim
    qbar = ball.center
    root = sqrtm_psd(qbar)

    prog = sdp.ConicProgram("worst-case-trace")
    prog.add_sym_var("Q_delta", m)
    prog.add_sym_var("E_Q", m)
    prog.add_psd(sdp.var_expr("E_Q", m))
    prog.add_psd(sdp.var_expr("Q_delta", m) + sdp.const_expr(qbar))
    prog.add_psd(
        sdp.block(
            [
                [
                    sdp.sandwich(root, "Q_delta", root)
                    + sdp.const_expr(qbar @ qbar),
                    sdp.var_expr("E_Q", m),
                ],
                [sdp.var_expr("E_Q", m), sdp.const_expr(np.eye(m))],
            ]
        )
    )
    prog.add_scalar_le(
        sdp.trace_of("Q_delta", np.eye(m))
        + sdp.trace_of("E_Q", -2.0 * np.eye(m))
        + sdp.scalar_const(2.0 * float(np.trace(qbar)) - ball.rho2)
    )
    prog.maximize(sdp.trace_of("Q_delta", np.eye(m)))

    report, values = prog.solve(solver=solver)
    q_delta = as_symmetric(values["Q_delta"], atol=1e-6)
    e_q = as_symmetric(values["E_Q"], atol=1e-6)
    beta = max(float(report.objective_value), 0.0)

    # sanity: the returned point must satisfy the ball feasibility contract
    trace_slack = ball.rho2 - float(
        np.trace(q_delta) + 2.0 * np.trace(qbar) - 2.0 * np.trace(e_q)
    )
    if trace_slack < -feas_tol:
        raise sdp.SolverFailure(
            f"worst-case solution violates the trace constraint by {-trace_slack:.3e}",
            report=report, stage="worst-case",
        )
    lo = float(np.linalg.eigvalsh(qbar + q_delta).min())
    if lo < -feas_tol:
        raise sdp.SolverFailure(
            f"worst-case covariance not PSD: eigenvalue {lo:.3e}",
            report=report, stage="worst-case",
        )
    return WorstCaseResult(beta, q_delta, e_q, report)


def sample_in_ball(ball: GelbrichBall, count: int, seed: int,
                   max_tries: int = 10000) -> list[np.ndarray]:
    """Draw PSD covariances inside ``ball`` by rejection sampling on the
    direct membership test.  Deterministic for a fixed seed."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    root = sqrtm_psd(ball.center)
    rho = ball.rho
    out: list[np.ndarray] = []
    tries = 0
    while len(out) < count and tries < max_tries:
        tries += 1
        e = rng.standard_normal((ball.dim, ball.dim))
        e = (e + e.T) / 2
        norm = float(np.linalg.norm(e))
        if norm > 0:
            # perturb the center's square root; scaling keeps most draws inside
            e = e * (rng.uniform(0.0, 1.05) * rho / norm)
        a = root + e
        q = a @ a.T
        if membership(ball, q, mode="direct").inside:
            out.append(as_symmetric(q))
    if len(out) < count:
        raise RuntimeError(
            f"rejection sampling produced {len(out)}/{count} covariances"
        )
    return out
