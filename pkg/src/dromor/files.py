"""Problem/model JSON schemas and CSV emission.

Matrices travel as row-major nested JSON arrays (human-diffable, exact
decimal round-trip through Python's shortest-repr float formatting); CSV is
reserved for time series and summary tables, comma-separated with a header
row and LF line endings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ambiguity import GelbrichBall
from .errors import DromorError
from .reduction import (
    AmbiguousReductionProblem,
    Certificate,
    DiscreteLtiSystem,
    ReducedModel,
)


class ProblemFileError(DromorError, ValueError):
    """Raised when a problem or model file is malformed; the message names
    the offending field."""


@dataclass(frozen=True)
class ProblemFile:
    """Parsed problem file: system, ambiguity ball, reduction order,
    strictness margin and (optionally) the true input covariance."""

    problem: AmbiguousReductionProblem
    q_true: np.ndarray | None

    @property
    def system(self) -> DiscreteLtiSystem:
        return self.problem.system

    @property
    def ball(self) -> GelbrichBall:
        return self.problem.ball


def _matrix(data: dict, field: str, required: bool = True) -> np.ndarray | None:
    if field not in data:
        if required:
            raise ProblemFileError(f"missing required field {field!r}")
        return None
    try:
        m = np.asarray(data[field], dtype=float)
    except (TypeError, ValueError):
        raise ProblemFileError(f"field {field!r} is not a numeric array")
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ProblemFileError(f"field {field!r} must be a 2-D array")
    return m


def load_problem(path) -> ProblemFile:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"problem file is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ProblemFileError("problem file must be a JSON object")

    a = _matrix(data, "A")
    b = _matrix(data, "B")
    c = _matrix(data, "C")
    q_bar = _matrix(data, "Q_bar")
    for field in ("rho2", "r"):
        if field not in data:
            raise ProblemFileError(f"missing required field {field!r}")
    try:
        rho2 = float(data["rho2"])
    except (TypeError, ValueError):
        raise ProblemFileError("field 'rho2' must be a real number")
    if rho2 < 0:
        raise ProblemFileError("field 'rho2' must be nonnegative")
    try:
        r = int(data["r"])
    except (TypeError, ValueError):
        raise ProblemFileError("field 'r' must be an integer")
    epsilon = data.get("epsilon", 1e-6)
    try:
        epsilon = float(epsilon)
    except (TypeError, ValueError):
        raise ProblemFileError("field 'epsilon' must be a real number")
    q_true = _matrix(data, "Q_true", required=False)

    try:
        system = DiscreteLtiSystem(a, b, c)
    except DromorError as exc:
        raise ProblemFileError(f"fields 'A'/'B'/'C' are inconsistent: {exc}")
    try:
        ball = GelbrichBall(q_bar, rho2)
    except DromorError as exc:
        raise ProblemFileError(f"field 'Q_bar' is invalid: {exc}")
    except ValueError as exc:
        raise ProblemFileError(f"field 'rho2' is invalid: {exc}")
    try:
        problem = AmbiguousReductionProblem(system, ball, r, epsilon)
    except DromorError as exc:
        raise ProblemFileError(f"field 'r' is invalid: {exc}")
    except ValueError as exc:
        raise ProblemFileError(f"field 'epsilon' is invalid: {exc}")
    return ProblemFile(problem=problem, q_true=q_true)


def _tolist(m) -> list | None:
    return None if m is None else np.asarray(m, dtype=float).tolist()


def save_model(path, model: ReducedModel, cert: Certificate,
               canonical: bool) -> None:
    payload = {
        "A_hat": _tolist(model.A_hat),
        "B_hat": _tolist(model.B_hat),
        "C_hat": _tolist(model.C_hat),
        "P1": _tolist(model.P1),
        "P2": _tolist(model.P2),
        "P3": _tolist(model.P3),
        "Z1": _tolist(model.Z1),
        "certificate": {
            "beta_star": cert.beta_star,
            "gamma_tilde_star": cert.gamma_tilde_star,
            "psi_max_eig": cert.psi_max_eig,
            "trace_slack": cert.trace_slack,
            "epsilon": cert.epsilon,
            "Q_eff": _tolist(cert.Q_eff),
            "lmi_A": _tolist(cert.system.A),
            "lmi_B": _tolist(cert.system.B),
            "lmi_C": _tolist(cert.system.C),
            "canonical": bool(canonical),
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_model(path) -> tuple[ReducedModel, Certificate, bool]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"model file is not valid JSON: {exc}")
    a_hat = _matrix(data, "A_hat")
    b_hat = _matrix(data, "B_hat")
    c_hat = _matrix(data, "C_hat")
    p1 = _matrix(data, "P1", required=False)
    p2 = _matrix(data, "P2", required=False)
    p3 = _matrix(data, "P3", required=False)
    z1 = _matrix(data, "Z1", required=False)
    model = ReducedModel(
        A_hat=a_hat, B_hat=b_hat, C_hat=c_hat, P1=p1, P2=p2, P3=p3, Z1=z1,
        mode="projection" if z1 is not None else "balanced",
    )
    if "certificate" not in data:
        raise ProblemFileError("missing required field 'certificate'")
    cd = data["certificate"]
    for field in ("beta_star", "gamma_tilde_star", "psi_max_eig", "trace_slack"):
        if field not in cd:
            raise ProblemFileError(f"missing certificate field {field!r}")
    lmi_sys = DiscreteLtiSystem(
        _matrix(cd, "lmi_A"), _matrix(cd, "lmi_B"), _matrix(cd, "lmi_C")
    )
    cert = Certificate(
        beta_star=float(cd["beta_star"]),
        gamma_tilde_star=float(cd["gamma_tilde_star"]),
        Q_eff=_matrix(cd, "Q_eff"),
        P1=p1 if p1 is not None else np.zeros((lmi_sys.n, lmi_sys.n)),
        Z1=z1 if z1 is not None else np.zeros((a_hat.shape[0], a_hat.shape[0])),
        psi_max_eig=float(cd["psi_max_eig"]),
        trace_slack=float(cd["trace_slack"]),
        system=lmi_sys,
        epsilon=float(cd.get("epsilon", 1e-6)),
    )
    return model, cert, bool(cd.get("canonical", False))


def write_summary_csv(path, rows) -> None:
    """Summary table: one row per method with the exact error, certified
    bound (empty when none exists) and reduced spectral radius."""
    with open(path, "w", newline="\n") as fh:
        fh.write("method,exact_error,gamma_bound,spectral_radius\n")
        for method, err, bound, rho in rows:
            bound_s = "" if bound is None else repr(float(bound))
            fh.write(f"{method},{float(err)!r},{bound_s},{float(rho)!r}\n")


def write_steps_csv(path, series: dict[str, np.ndarray]) -> None:
    """Per-step mean-error time series, one column per labelled method."""
    labels = list(series)
    steps = len(next(iter(series.values())))
    with open(path, "w", newline="\n") as fh:
        fh.write("k," + ",".join(labels) + "\n")
        for k in range(steps):
            vals = ",".join(repr(float(series[l][k])) for l in labels)
            fh.write(f"{k},{vals}\n")


def write_trajectory_csv(path, y: np.ndarray, yhat: np.ndarray) -> None:
    """Output trajectory dump: k, y_1..y_p, yhat_1..yhat_p, sqerr."""
    p = y.shape[1]
    header = (
        "k,"
        + ",".join(f"y_{i+1}" for i in range(p))
        + ","
        + ",".join(f"yhat_{i+1}" for i in range(p))
        + ",sqerr\n"
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(header)
        for k in range(y.shape[0]):
            d = y[k] - yhat[k]
            cells = [str(k)]
            cells += [repr(float(v)) for v in y[k]]
            cells += [repr(float(v)) for v in yhat[k]]
            cells.append(repr(float(d @ d)))
            fh.write(",".join(cells) + "\n")
