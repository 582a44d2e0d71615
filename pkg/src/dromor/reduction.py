"""Core reduction pipeline.

Builds the 2n x 2n stability/error block matrix, poses the convexified
reduction SDP, recovers the reduced model from its solution, and wires the
worst-case covariance step in front of it for the distributionally robust
variant.  Also provides the observability-staircase preprocessing the
structured convexification expects.

A note on solvability: the block matrix constraint demanded here,
``Psi < 0`` with ``Psi_11 - Psi_12 = A (P1 - Z) A^T`` and ``P1 - Z > 0``,
requires a positive semidefinite matrix to be negative definite.  It is
therefore infeasible for every system, and the solve entry points report
that infeasibility with full diagnostics instead of fabricating a model.
See the README for the two-line argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp
from .ambiguity import GelbrichBall, worst_case_trace
from .errors import (
    DimensionError,
    InfeasibleError,
    InstabilityError,
    RankDeficiencyError,
    SolverFailure,
    UnobservableError,
)
from .matops import as_symmetric, spectral_radius, sym_eig

#: Smallest admissible eigenvalue of the reduced factor at recovery.
Z1_FLOOR = 1e-9


@dataclass(frozen=True)
class DiscreteLtiSystem:
    """State-space triple (A, B, C) of a discrete-time LTI system."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=float)
        b = np.asarray(self.B, dtype=float)
        c = np.asarray(self.C, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"A must be square, got {a.shape}")
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise DimensionError(f"B has shape {b.shape}, A is {a.shape}")
        if c.ndim != 2 or c.shape[1] != a.shape[0]:
            raise DimensionError(f"C has shape {c.shape}, A is {a.shape}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def spectral_radius(self) -> float:
        return spectral_radius(self.A)

    def require_stable(self, what: str = "system") -> None:
        rho = self.spectral_radius()
        if rho >= 1.0:
            raise InstabilityError(
                f"{what} must be asymptotically stable; spectral radius {rho:.6f}"
            )

    def markov_parameters(self, count: int) -> np.ndarray:
        """Impulse-response matrices C A^k B for k = 0..count-1."""
        out = np.empty((count, self.p, self.m))
        ak_b = self.B.copy()
        for k in range(count):
            out[k] = self.C @ ak_b
            ak_b = self.A @ ak_b
        return out


@dataclass(frozen=True)
class ReducedModel:
    """Reduced triple plus the recovery factors that produced it.

    ``mode`` is "projection" for models recovered from the reduction SDP
    (P2 has orthonormal columns by construction) and "balanced" for the
    balanced-truncation baseline, where the factor invariants are waived
    and ``P2``/``P3`` hold the oblique projection matrices instead.
    """

    A_hat: np.ndarray
    B_hat: np.ndarray
    C_hat: np.ndarray
    P1: np.ndarray | None = None
    P2: np.ndarray | None = None
    P3: np.ndarray | None = None
    Z1: np.ndarray | None = None
    mode: str = "projection"
    hankel_values: np.ndarray | None = None

    @property
    def r(self) -> int:
        return self.A_hat.shape[0]

    def as_system(self) -> DiscreteLtiSystem:
        return DiscreteLtiSystem(self.A_hat, self.B_hat, self.C_hat)

    def spectral_radius(self) -> float:
        return spectral_radius(self.A_hat)


@dataclass(frozen=True)
class Certificate:
    """A-priori error certificate attached to a reduction.

    ``gamma_tilde_star`` bounds the asymptotic mean squared output error for
    any input covariance dominated by ``Q_eff``; ``psi_max_eig`` and
    ``trace_slack`` are the residual diagnostics of the block-matrix and
    trace constraints at the returned solution.  ``system`` is the triple
    the matrix inequalities were posed on (the staircase transform of the
    input when canonical preprocessing is enabled).
    """

    beta_star: float
    gamma_tilde_star: float
    Q_eff: np.ndarray
    P1: np.ndarray
    Z1: np.ndarray
    psi_max_eig: float
    trace_slack: float
    system: DiscreteLtiSystem
    epsilon: float = sdp.DEFAULT_EPSILON


@dataclass(frozen=True)
class AmbiguousReductionProblem:
    """Reduction request: system, input-covariance ambiguity ball, target
    order and strictness margin."""

    system: DiscreteLtiSystem
    ball: GelbrichBall
    r: int
    epsilon: float = sdp.DEFAULT_EPSILON

    def __post_init__(self):
        if not 1 <= self.r < self.system.n:
            raise DimensionError(
                f"reduced order must satisfy 1 <= r < n, got r={self.r}, "
                f"n={self.system.n}"
            )
        if self.ball.dim != self.system.m:
            raise DimensionError(
                f"ball dim {self.ball.dim} does not match input dim {self.system.m}"
            )
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def _embed(n: int, r: int) -> np.ndarray:
    s = np.zeros((n, r))
    s[:r, :r] = np.eye(r)
    return s


def build_psi(p1, z, q, sys: DiscreteLtiSystem) -> np.ndarray:
    """Assemble the 2n x 2n block matrix

        [[A P1 A' - P1 + B Q B',  A Z A' - P1 + B Q B'],
         [      (symmetric)    ,  A Z A' - P1 + B Q B']]
    """
    p1 = as_symmetric(p1, atol=1e-8)
    z = as_symmetric(z, atol=1e-8)
    q = as_symmetric(q, atol=1e-8)
    n = sys.n
    if p1.shape != (n, n) or z.shape != (n, n):
        raise DimensionError(
            f"P1 {p1.shape} and Z {z.shape} must both be {n} x {n}"
        )
    if q.shape != (sys.m, sys.m):
        raise DimensionError(f"Q has shape {q.shape}, input dim is {sys.m}")
    a, b = sys.A, sys.B
    bqb = b @ q @ b.T
    psi1 = a @ p1 @ a.T - p1 + bqb
    psi23 = a @ z @ a.T - p1 + bqb
    psi = np.block([[psi1, psi23], [psi23.T, psi23]])
    return (psi + psi.T) / 2


@dataclass(frozen=True)
class DromorSdpSolution:
    P1: np.ndarray
    Z1: np.ndarray
    gamma: float
    report: sdp.SolveReport


def _dromor_program(sys: DiscreteLtiSystem, q_eff: np.ndarray, r: int,
                    epsilon: float) -> sdp.ConicProgram:
    n, a, b, c = sys.n, sys.A, sys.B, sys.C
    s = _embed(n, r)
    bqb = b @ q_eff @ b.T

    prog = sdp.ConicProgram("reduction-step2")
    prog.add_sym_var("P1", n)
    prog.add_sym_var("Z1", r)
    prog.add_scalar_var("gamma")

    def z_expr(left, right):
        return sdp.sandwich(left @ s, "Z1", s.T @ right)

    # strict constraints, encoded with the epsilon margin
    prog.add_psd(sdp.strictify(sdp.MatConstraint(sdp.var_expr("P1", n), "psd"), epsilon).expr)
    prog.add_psd(sdp.strictify(sdp.MatConstraint(sdp.var_expr("Z1", r), "psd"), epsilon).expr)
    prog.add_psd(
        sdp.strictify(
            sdp.MatConstraint(sdp.var_expr("P1", n) - z_expr(np.eye(n), np.eye(n)), "psd"),
            epsilon,
        ).expr
    )

    psi1 = (
        sdp.sandwich(a, "P1", a.T)
        - sdp.var_expr("P1", n)
        + sdp.const_expr(bqb)
    )
    psi23 = z_expr(a, a.T) - sdp.var_expr("P1", n) + sdp.const_expr(bqb)
    psi = sdp.block([[psi1, psi23], [psi23.T, psi23]])
    prog.add_nsd(sdp.strictify(sdp.MatConstraint(psi, "nsd"), epsilon).expr)

    ctc = c.T @ c
    prog.add_scalar_le(
        sdp.trace_of("P1", ctc)
        - sdp.trace_of("Z1", s.T @ ctc @ s)
        - sdp.scalar_term("gamma")
    )
    prog.minimize(sdp.scalar_term("gamma"))
    return prog


def solve_dromor_sdp(prob: AmbiguousReductionProblem, q_eff,
                     solver: str | None = None) -> DromorSdpSolution:
    """Solve the convexified reduction SDP for an effective input covariance.

    Raises :class:`InfeasibleError` when the solver certifies infeasibility
    (which the block-matrix constraint forces for every system; see the
    module docstring) and :class:`SolverFailure` on numerical breakdown.
    """
    sys = prob.system
    sys.require_stable("reduction input")
    q_eff = as_symmetric(q_eff, atol=1e-8)
    if q_eff.shape != (sys.m, sys.m):
        raise DimensionError(f"Q_eff has shape {q_eff.shape}, input dim {sys.m}")

    prog = _dromor_program(sys, q_eff, prob.r, prob.epsilon)
    try:
        report, values = prog.solve(solver=solver)
    except InfeasibleError as exc:
        exc.stage = "dromor-sdp"
        raise
    except SolverFailure as exc:
        exc.stage = "dromor-sdp"
        raise
    return DromorSdpSolution(
        P1=values["P1"], Z1=values["Z1"], gamma=float(values["gamma"]), report=report
    )


def recover_reduced(p1, z1, sys: DiscreteLtiSystem, r: int) -> ReducedModel:
    """Recover the reduced triple from SDP factors.

    ``Z1 = U T U'`` (eigendecomposition, descending, deterministic signs),
    then ``P2 = [U; 0]``, ``P3 = T^-1`` and the reduced matrices follow by
    the oblique projection through ``P1``.
    """
    p1 = as_symmetric(p1, atol=1e-8)
    z1 = as_symmetric(z1, atol=1e-8)
    n = sys.n
    if p1.shape != (n, n):
        raise DimensionError(f"P1 has shape {p1.shape}, system order is {n}")
    if z1.shape != (r, r):
        raise DimensionError(f"Z1 has shape {z1.shape}, reduced order is {r}")
    pair = sym_eig(z1)
    if float(pair.values.min()) <= Z1_FLOOR:
        raise RankDeficiencyError(
            f"reduced factor is rank deficient: smallest eigenvalue "
            f"{float(pair.values.min()):.3e} <= {Z1_FLOOR:.0e}; the structured "
            f"rank-{r} premise failed"
        )
    lo_p1 = float(np.linalg.eigvalsh(p1).min())
    if lo_p1 <= Z1_FLOOR:
        raise RankDeficiencyError(
            f"P1 is not positive definite: smallest eigenvalue {lo_p1:.3e}"
        )
    u, t_vals = pair.vectors, pair.values
    p2 = np.vstack([u, np.zeros((n - r, r))])
    p3 = np.diag(1.0 / t_vals)
    p1_inv = np.linalg.inv(p1)
    p3_inv = np.diag(t_vals)
    a_hat = p2.T @ p1_inv @ sys.A @ p2 @ p3_inv
    b_hat = p2.T @ p1_inv @ sys.B
    c_hat = sys.C @ p2 @ p3_inv

    model = ReducedModel(
        A_hat=a_hat, B_hat=b_hat, C_hat=c_hat,
        P1=p1, P2=p2, P3=(p3 + p3.T) / 2, Z1=z1, mode="projection",
    )
    _verify_projection_model(model, r)
    return model


def _verify_projection_model(model: ReducedModel, r: int) -> None:
    rho = model.spectral_radius()
    if rho >= 1.0:
        raise InstabilityError(
            f"recovered reduced model is unstable: spectral radius {rho:.6f}"
        )
    gap = np.max(np.abs(model.P2.T @ model.P2 - np.eye(r)))
    if gap > 1e-10:
        raise RankDeficiencyError(
            f"recovery factor P2 lost orthonormality: |P2'P2 - I| = {gap:.3e}"
        )
    n = model.P2.shape[0]
    z_full = np.zeros((n, n))
    z_full[:r, :r] = model.Z1
    recon = model.P2 @ np.linalg.inv(model.P3) @ model.P2.T
    if np.max(np.abs(recon - z_full)) > 1e-7:
        raise RankDeficiencyError("factor reconstruction drifted beyond 1e-7")


def _certificate(sys: DiscreteLtiSystem, sol: DromorSdpSolution, q_eff,
                 beta_star: float, r: int, epsilon: float) -> Certificate:
    n = sys.n
    z_full = np.zeros((n, n))
    z_full[:r, :r] = sol.Z1
    psi = build_psi(sol.P1, z_full, q_eff, sys)
    psi_max = float(np.linalg.eigvalsh(psi).max())
    traced = float(np.trace(sys.C @ (sol.P1 - z_full) @ sys.C.T))
    return Certificate(
        beta_star=beta_star,
        gamma_tilde_star=sol.gamma,
        Q_eff=as_symmetric(q_eff, atol=1e-8),
        P1=sol.P1,
        Z1=sol.Z1,
        psi_max_eig=psi_max,
        trace_slack=sol.gamma - traced,
        system=sys,
        epsilon=epsilon,
    )


def reduce_certain(sys: DiscreteLtiSystem, q, r: int,
                   epsilon: float = sdp.DEFAULT_EPSILON,
                   canonical: bool = True,
                   solver: str | None = None) -> tuple[ReducedModel, Certificate]:
    """Reduction for a known input covariance ``q`` (no ambiguity;
    ``beta_star = 0``)."""
    q = as_symmetric(q, atol=1e-8)
    work = sys
    if canonical:
        work, _t = to_observable_canonical(sys)
    prob = AmbiguousReductionProblem(
        system=work, ball=GelbrichBall(q, 0.0), r=r, epsilon=epsilon
    )
    sol = solve_dromor_sdp(prob, q, solver=solver)
    model = recover_reduced(sol.P1, sol.Z1, work, r)
    cert = _certificate(work, sol, q, 0.0, r, epsilon)
    return model, cert


def reduce_robust(prob: AmbiguousReductionProblem, canonical: bool = True,
                  solver: str | None = None) -> tuple[ReducedModel, Certificate]:
    """Distributionally robust reduction: worst-case covariance trace first,
    then the reduction SDP with the inflated covariance ``Qbar + beta* I``."""
    try:
        worst = worst_case_trace(prob.ball, solver=solver)
    except SolverFailure as exc:
        exc.stage = exc.stage or "worst-case"
        raise
    q_eff = prob.ball.center + worst.beta_star * np.eye(prob.ball.dim)
    work = prob.system
    if canonical:
        work, _t = to_observable_canonical(prob.system)
        prob = AmbiguousReductionProblem(work, prob.ball, prob.r, prob.epsilon)
    sol = solve_dromor_sdp(prob, q_eff, solver=solver)
    model = recover_reduced(sol.P1, sol.Z1, work, prob.r)
    cert = _certificate(work, sol, q_eff, worst.beta_star, prob.r, prob.epsilon)
    return model, cert


def _controllable_staircase(a: np.ndarray, b: np.ndarray, tol: float):
    """Orthogonal staircase for (A, B): returns (U, ranks) with U'AU block
    Hessenberg and U'B = [B1; 0].  sum(ranks) < n means uncontrollable."""
    n = a.shape[0]
    u_total = np.eye(n)
    a_cur = a.copy()
    b_cur = b.copy()
    offset = 0
    ranks = []
    while offset < n:
        ub, svals, _vt = np.linalg.svd(b_cur)
        scale = max(1.0, float(svals[0]) if svals.size else 0.0)
        rk = int(np.sum(svals > tol * scale))
        if rk == 0:
            break
        # deterministic signs for the left singular vectors
        for j in range(ub.shape[1]):
            k = int(np.argmax(np.abs(ub[:, j])))
            if ub[k, j] < 0:
                ub[:, j] = -ub[:, j]
        g = np.eye(n)
        g[offset:, offset:] = ub
        u_total = u_total @ g
        a_cur = ub.T @ a_cur @ ub
        ranks.append(rk)
        offset += rk
        if offset >= n:
            break
        b_cur = a_cur[rk:, :rk]
        a_cur = a_cur[rk:, rk:]
    return u_total, ranks


def to_observable_canonical(sys: DiscreteLtiSystem, tol: float = 1e-8):
    """Transform to the observability staircase form.

    Returns ``(sys', T)`` with ``A' = T A T^-1``, ``B' = T B``,
    ``C' = C T^-1`` and ``T`` orthogonal; the observable block structure
    leads and ``C'`` is zero outside its leading columns.  Raises
    :class:`UnobservableError` when (A, C) is not observable.
    """
    if not np.any(sys.C):
        raise UnobservableError(
            "output map C is zero; the pair (A, C) is unobservable - "
            "pre-truncate the unobservable subspace first"
        )
    # observability of (A, C) is controllability of (A', C')
    u, ranks = _controllable_staircase(sys.A.T, sys.C.T, tol)
    if sum(ranks) < sys.n:
        raise UnobservableError(
            f"(A, C) is unobservable: staircase rank {sum(ranks)} < {sys.n}; "
            f"pre-truncate the unobservable subspace first"
        )
    t = u.T  # orthogonal, so T^-1 = U
    transformed = DiscreteLtiSystem(t @ sys.A @ u, t @ sys.B, sys.C @ u)
    return transformed, t
