"""Ground-truth machinery.

Exact asymptotic output-error via the augmented-system Lyapunov equation,
seed-deterministic Monte Carlo simulation of the error process, and
report-style certificate checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .matops import as_symmetric, dlyap, spectral_radius, sqrtm_psd
from .reduction import Certificate, DiscreteLtiSystem, ReducedModel

#: Fraction of the trajectory treated as the asymptotic tail.
TAIL_FRACTION = 0.2


def _as_system(model) -> DiscreteLtiSystem:
    if isinstance(model, ReducedModel):
        return model.as_system()
    if isinstance(model, DiscreteLtiSystem):
        return model
    raise TypeError(f"expected a system or reduced model, got {type(model)!r}")


@dataclass(frozen=True)
class AugmentedSystem:
    """Joint dynamics of an original/reduced pair: block-diagonal state
    matrix, stacked input matrix and differencing output map."""

    A_delta: np.ndarray
    B_delta: np.ndarray
    C_delta: np.ndarray

    @classmethod
    def build(cls, sys: DiscreteLtiSystem, red) -> "AugmentedSystem":
        hat = _as_system(red)
        if hat.m != sys.m:
            raise DimensionError(
                f"input dims differ: original {sys.m}, reduced {hat.m}"
            )
        if hat.p != sys.p:
            raise DimensionError(
                f"output dims differ: original {sys.p}, reduced {hat.p}"
            )
        n, r = sys.n, hat.n
        a_delta = np.zeros((n + r, n + r))
        a_delta[:n, :n] = sys.A
        a_delta[n:, n:] = hat.A
        b_delta = np.vstack([sys.B, hat.B])
        c_delta = np.hstack([sys.C, -hat.C])
        return cls(a_delta, b_delta, c_delta)

    def spectral_radius(self) -> float:
        return spectral_radius(self.A_delta)


def asymptotic_error_exact(sys: DiscreteLtiSystem, red, q) -> float:
    """Exact asymptotic mean squared output error
    ``lim_k E[(y_k - yhat_k)'(y_k - yhat_k)]`` for i.i.d. zero-mean inputs
    with covariance ``q``, via the augmented Lyapunov equation."""
    sys.require_stable("original system")
    _as_system(red).require_stable("reduced model")
    q = as_symmetric(q, atol=1e-8)
    aug = AugmentedSystem.build(sys, red)
    p_delta = dlyap(aug.A_delta, aug.B_delta @ q @ aug.B_delta.T)
    err = float(np.trace(aug.C_delta @ p_delta @ aug.C_delta.T))
    if err < -1e-10:
        raise ArithmeticError(f"negative error trace {err:.3e} beyond tolerance")
    return max(err, 0.0)


@dataclass(frozen=True)
class CertificateReport:
    """Residual diagnostics of a certificate, plus (when the true input
    covariance is supplied) the dominance test and the exact-error check.
    Report-only: the caller decides pass/fail."""

    psi_max_eig: float
    trace_slack: float
    reduced_spectral_radius: float
    gamma_tilde_star: float
    beta_star: float
    loewner_min_eig: float | None = None  # min eig of Q_eff - Q_true
    loewner_ok: bool | None = None
    exact_error: float | None = None
    bound_satisfied: bool | None = None

    @property
    def psi_negative(self) -> bool:
        return self.psi_max_eig < 0.0


def check_certificate(sys: DiscreteLtiSystem, red, cert: Certificate,
                      q_true=None, bound_tol: float = 1e-6) -> CertificateReport:
    """Recompute the certificate diagnostics and, if ``q_true`` is given,
    test covariance dominance ``Q_true <= Q_eff`` and the error bound."""
    from .reduction import build_psi

    n = cert.system.n
    r = cert.Z1.shape[0]
    z_full = np.zeros((n, n))
    z_full[:r, :r] = cert.Z1
    psi = build_psi(cert.P1, z_full, cert.Q_eff, cert.system)
    psi_max = float(np.linalg.eigvalsh(psi).max())
    traced = float(np.trace(cert.system.C @ (cert.P1 - z_full) @ cert.system.C.T))
    slack = cert.gamma_tilde_star - traced
    rho = spectral_radius(_as_system(red).A)

    loewner_min = loewner_ok = exact = bound_ok = None
    if q_true is not None:
        q_true = as_symmetric(q_true, atol=1e-8)
        loewner_min = float(np.linalg.eigvalsh(cert.Q_eff - q_true).min())
        loewner_ok = loewner_min >= -1e-9
        exact = asymptotic_error_exact(sys, red, q_true)
        bound_ok = exact <= cert.gamma_tilde_star + bound_tol * (
            1.0 + abs(cert.gamma_tilde_star)
        )
    return CertificateReport(
        psi_max_eig=psi_max,
        trace_slack=slack,
        reduced_spectral_radius=rho,
        gamma_tilde_star=cert.gamma_tilde_star,
        beta_star=cert.beta_star,
        loewner_min_eig=loewner_min,
        loewner_ok=loewner_ok,
        exact_error=exact,
        bound_satisfied=bound_ok,
    )


@dataclass(frozen=True)
class SimulationStats:
    """Ensemble statistics of the simulated error process."""

    steps: int
    trajectories: int
    seed: int
    empirical_error: np.ndarray  # per-step mean of |y - yhat|^2
    tail_mean: float
    tail_stderr: float


def simulate(sys: DiscreteLtiSystem, red, q, steps: int, trajectories: int,
             seed: int, return_outputs: bool = False):
    """Drive both systems with identical i.i.d. N(0, Q) inputs from zero
    initial state.

    Trajectory ``t`` draws from a counter-based generator keyed by
    ``seed ^ t``, so results are bit-identical for a fixed seed and
    independent of batching.  Returns :class:`SimulationStats`, plus the
    per-step mean outputs ``(y, yhat)`` when ``return_outputs`` is set.
    """
    sys.require_stable("original system")
    hat = _as_system(red)
    hat.require_stable("reduced model")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if trajectories < 1:
        raise ValueError(f"trajectories must be >= 1, got {trajectories}")
    q = as_symmetric(q, atol=1e-8)
    if q.shape != (sys.m, sys.m):
        raise DimensionError(f"Q has shape {q.shape}, input dim is {sys.m}")
    q_root = sqrtm_psd(q)

    # one substream per trajectory; drawn up front so the step loop can run
    # batched over all trajectories at once
    u = np.empty((trajectories, steps, sys.m))
    for t in range(trajectories):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed) ^ np.uint64(t)))
        u[t] = rng.standard_normal((steps, sys.m)) @ q_root.T

    sqerr = np.zeros((trajectories, steps))
    mean_y = np.zeros((steps, sys.p))
    mean_yhat = np.zeros((steps, sys.p))
    x = np.zeros((trajectories, sys.n))
    xh = np.zeros((trajectories, hat.n))
    for k in range(steps):
        y = x @ sys.C.T
        yh = xh @ hat.C.T
        d = y - yh
        sqerr[:, k] = np.einsum("ij,ij->i", d, d)
        if return_outputs:
            mean_y[k] = y.mean(axis=0)
            mean_yhat[k] = yh.mean(axis=0)
        x = x @ sys.A.T + u[:, k, :] @ sys.B.T
        xh = xh @ hat.A.T + u[:, k, :] @ hat.B.T

    per_step = sqerr.mean(axis=0)
    tail_start = steps - max(1, int(np.floor(TAIL_FRACTION * steps)))
    tail_by_traj = sqerr[:, tail_start:].mean(axis=1)
    tail_mean = float(tail_by_traj.mean())
    tail_stderr = (
        float(tail_by_traj.std(ddof=1) / np.sqrt(trajectories))
        if trajectories > 1 else float("inf")
    )
    stats = SimulationStats(
        steps=steps, trajectories=trajectories, seed=int(seed),
        empirical_error=per_step, tail_mean=tail_mean, tail_stderr=tail_stderr,
    )
    if return_outputs:
        return stats, mean_y, mean_yhat
    return stats
