"""Backend-neutral semidefinite-program builder and solve contract.

A :class:`ConicProgram` holds named symmetric matrix variables and scalar
variables, an affine trace objective, matrix constraints tagged PSD or NSD,
and scalar affine inequalities.  Affine matrix expressions are stored as an
explicit constant plus a list of ``L @ X @ R`` sandwich terms, which keeps
programs serializable: a program can be dumped to a human-readable text
format for solver triage and rebuilt from that dump exactly.

Solving is delegated to cvxpy; CLARABEL is the default backend with SCS as
the alternate.  The builder itself has no solver-specific state.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DromorError, InfeasibleError, SolverFailure

DEFAULT_EPSILON = 1e-6
DEFAULT_TOL = 1e-8

_SOLVER_ORDER = ("CLARABEL", "SCS")


def _mat(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def _compact(m) -> str:
    # whitespace-free JSON so dump lines split cleanly on spaces
    return json.dumps(np.asarray(m, dtype=float).tolist(), separators=(",", ":"))


@dataclass(frozen=True)
class Term:
    """One sandwich term ``left @ var @ right`` of an affine matrix expression."""

    left: np.ndarray
    var: str
    right: np.ndarray


class MatExpr:
    """Affine matrix-valued expression: constant + sum of sandwich terms."""

    def __init__(self, const, terms=()):
        self.const = _mat(const)
        self.terms = list(terms)
        for t in self.terms:
            if t.left.shape[0] != self.const.shape[0] or t.right.shape[1] != self.const.shape[1]:
                raise DimensionError(
                    f"term for {t.var!r} maps to shape "
                    f"({t.left.shape[0]}, {t.right.shape[1]}), expression has "
                    f"shape {self.const.shape}"
                )

    @property
    def shape(self):
        return self.const.shape

    def __add__(self, other: "MatExpr") -> "MatExpr":
        if self.shape != other.shape:
            raise DimensionError(f"cannot add shapes {self.shape} and {other.shape}")
        return MatExpr(self.const + other.const, self.terms + other.terms)

    def __sub__(self, other: "MatExpr") -> "MatExpr":
        return self + (-other)

    def __neg__(self) -> "MatExpr":
        return MatExpr(-self.const, [Term(-t.left, t.var, t.right) for t in self.terms])

    @property
    def T(self) -> "MatExpr":
        # valid for symmetric matrix variables only, which is all we declare
        return MatExpr(
            self.const.T, [Term(t.right.T, t.var, t.left.T) for t in self.terms]
        )


def const_expr(m) -> MatExpr:
    return MatExpr(_mat(m))


def sandwich(left, var: str, right) -> MatExpr:
    left = _mat(left)
    right = _mat(right)
    if left.shape[1] != right.shape[0]:
        raise DimensionError(
            f"sandwich dims disagree: left {left.shape}, right {right.shape}"
        )
    const = np.zeros((left.shape[0], right.shape[1]))
    return MatExpr(const, [Term(left, var, right)])


def var_expr(var: str, dim: int) -> MatExpr:
    eye = np.eye(dim)
    return sandwich(eye, var, eye)


def block(rows) -> MatExpr:
    """Assemble a block matrix of MatExpr entries (dims must tile)."""
    row_dims = [r[0].shape[0] for r in rows]
    col_dims = [e.shape[1] for e in rows[0]]
    for r in rows:
        if len(r) != len(col_dims):
            raise DimensionError("ragged block rows")
        for e, cd, rd in zip(r, col_dims, [r[0].shape[0]] * len(r)):
            if e.shape != (rd, cd):
                raise DimensionError(f"block entry shape {e.shape} != ({rd}, {cd})")
    total_r, total_c = sum(row_dims), sum(col_dims)
    roff = np.concatenate([[0], np.cumsum(row_dims)])
    coff = np.concatenate([[0], np.cumsum(col_dims)])
    const = np.zeros((total_r, total_c))
    terms = []
    for i, r in enumerate(rows):
        for j, e in enumerate(r):
            const[roff[i]:roff[i + 1], coff[j]:coff[j + 1]] = e.const
            emb_l = np.zeros((total_r, e.shape[0]))
            emb_l[roff[i]:roff[i + 1], :] = np.eye(e.shape[0])
            emb_r = np.zeros((e.shape[1], total_c))
            emb_r[:, coff[j]:coff[j + 1]] = np.eye(e.shape[1])
            for t in e.terms:
                terms.append(Term(emb_l @ t.left, t.var, t.right @ emb_r))
    return MatExpr(const, terms)


@dataclass
class ScalarExpr:
    """Affine scalar expression: const + sum tr(C_i X_i) + sum a_j s_j."""

    const: float = 0.0
    trace_terms: list = field(default_factory=list)  # (coeff matrix, var name)
    scalar_terms: list = field(default_factory=list)  # (coeff, var name)

    def __add__(self, other: "ScalarExpr") -> "ScalarExpr":
        return ScalarExpr(
            self.const + other.const,
            self.trace_terms + other.trace_terms,
            self.scalar_terms + other.scalar_terms,
        )

    def __neg__(self) -> "ScalarExpr":
        return ScalarExpr(
            -self.const,
            [(-c, v) for c, v in self.trace_terms],
            [(-a, v) for a, v in self.scalar_terms],
        )

    def __sub__(self, other: "ScalarExpr") -> "ScalarExpr":
        return self + (-other)


def trace_of(var: str, coeff) -> ScalarExpr:
    return ScalarExpr(0.0, [(_mat(coeff), var)], [])


def scalar_term(var: str, coeff: float = 1.0) -> ScalarExpr:
    return ScalarExpr(0.0, [], [(float(coeff), var)])


def scalar_const(value: float) -> ScalarExpr:
    return ScalarExpr(float(value), [], [])


@dataclass(frozen=True)
class MatConstraint:
    expr: MatExpr
    sense: str  # "psd" (expr >= 0) or "nsd" (expr <= 0)


@dataclass(frozen=True)
class ScalarConstraint:
    expr: ScalarExpr  # expr <= 0


def strictify(constraint: MatConstraint, epsilon: float = DEFAULT_EPSILON) -> MatConstraint:
    """Encode a strict definiteness constraint with an explicit margin:
    ``expr < 0`` becomes ``expr + eps*I <= 0`` and ``expr > 0`` becomes
    ``expr - eps*I >= 0``."""
    if not epsilon > 0:
        raise ValueError(f"strictness margin must be positive, got {epsilon}")
    d = constraint.expr.shape[0]
    if constraint.expr.shape[0] != constraint.expr.shape[1]:
        raise DimensionError("definiteness constraints need square expressions")
    eye = const_expr(np.eye(d) * epsilon)
    if constraint.sense == "nsd":
        return MatConstraint(constraint.expr + eye, "nsd")
    if constraint.sense == "psd":
        return MatConstraint(constraint.expr - eye, "psd")
    raise ValueError(f"unknown constraint sense {constraint.sense!r}")


@dataclass
class SolveReport:
    status: str  # optimal | infeasible | numerical-failure
    objective_value: float | None
    primal_residual: float
    solve_time: float
    iterations: int
    solver: str = ""


class ConicProgram:
    """Builder for a small SDP: declare variables, set a trace objective,
    add PSD/NSD block constraints and scalar inequalities, then solve."""

    def __init__(self, name: str = ""):
        self.name = name
        self.sym_vars: dict[str, int] = {}
        self.scalar_vars: list[str] = []
        self.sense = "min"
        self.objective = ScalarExpr()
        self.mat_constraints: list[MatConstraint] = []
        self.scalar_constraints: list[ScalarConstraint] = []

    # -- construction -----------------------------------------------------

    def add_sym_var(self, name: str, dim: int) -> str:
        if name in self.sym_vars or name in self.scalar_vars:
            raise ValueError(f"variable {name!r} already declared")
        if dim < 1:
            raise ValueError(f"variable dimension must be positive, got {dim}")
        self.sym_vars[name] = int(dim)
        return name

    def add_scalar_var(self, name: str) -> str:
        if name in self.sym_vars or name in self.scalar_vars:
            raise ValueError(f"variable {name!r} already declared")
        self.scalar_vars.append(name)
        return name

    def minimize(self, expr: ScalarExpr) -> None:
        self.sense, self.objective = "min", expr

    def maximize(self, expr: ScalarExpr) -> None:
        self.sense, self.objective = "max", expr

    def add_psd(self, expr: MatExpr) -> MatConstraint:
        con = MatConstraint(expr, "psd")
        self._check_declared(con)
        self.mat_constraints.append(con)
        return con

    def add_nsd(self, expr: MatExpr) -> MatConstraint:
        con = MatConstraint(expr, "nsd")
        self._check_declared(con)
        self.mat_constraints.append(con)
        return con

    def add_scalar_le(self, expr: ScalarExpr) -> ScalarConstraint:
        for _, v in expr.trace_terms:
            if v not in self.sym_vars:
                raise DromorError(f"constraint references undeclared variable {v!r}")
        for _, v in expr.scalar_terms:
            if v not in self.scalar_vars:
                raise DromorError(f"constraint references undeclared scalar {v!r}")
        con = ScalarConstraint(expr)
        self.scalar_constraints.append(con)
        return con

    def _check_declared(self, con: MatConstraint) -> None:
        for t in con.expr.terms:
            if t.var not in self.sym_vars:
                raise DromorError(f"constraint references undeclared variable {t.var!r}")

    # -- solving ----------------------------------------------------------

    def solve(self, tol: float = DEFAULT_TOL, solver: str | None = None):
        """Solve the program.  Returns ``(report, values)`` where ``values``
        maps variable names to numpy arrays / floats.  Raises
        :class:`InfeasibleError` on an infeasibility certificate and
        :class:`SolverFailure` when no backend produces a usable solution.
        """
        import cvxpy as cp

        cvars: dict[str, object] = {}
        for name, dim in self.sym_vars.items():
            cvars[name] = cp.Variable((dim, dim), symmetric=True, name=name)
        for name in self.scalar_vars:
            cvars[name] = cp.Variable(name=name)

        def compile_mat(expr: MatExpr):
            acc = cp.Constant(expr.const)
            for t in expr.terms:
                acc = acc + t.left @ cvars[t.var] @ t.right
            return (acc + acc.T) / 2

        def compile_scalar(expr: ScalarExpr):
            acc = cp.Constant(expr.const)
            for coeff, v in expr.trace_terms:
                acc = acc + cp.trace(coeff @ cvars[v])
            for coeff, v in expr.scalar_terms:
                acc = acc + coeff * cvars[v]
            return acc

        constraints = []
        for con in self.mat_constraints:
            e = compile_mat(con.expr)
            constraints.append(e >> 0 if con.sense == "psd" else e << 0)
        for con in self.scalar_constraints:
            constraints.append(compile_scalar(con.expr) <= 0)

        obj = compile_scalar(self.objective)
        problem = cp.Problem(
            cp.Minimize(obj) if self.sense == "min" else cp.Maximize(obj), constraints
        )

        solvers = (solver,) if solver else _SOLVER_ORDER
        last_report = None
        for backend in solvers:
            t0 = time.perf_counter()
            try:
                problem.solve(solver=backend)
            except cp.error.SolverError as exc:
                last_report = SolveReport(
                    "numerical-failure", None, np.inf, time.perf_counter() - t0, 0, backend
                )
                last_exc = str(exc)
                continue
            elapsed = time.perf_counter() - t0
            iters = 0
            if problem.solver_stats is not None and problem.solver_stats.num_iters:
                iters = int(problem.solver_stats.num_iters)
            if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
                report = SolveReport("infeasible", None, np.inf, elapsed, iters, backend)
                raise InfeasibleError(
                    f"program {self.name!r} is infeasible ({backend}, status "
                    f"{problem.status})",
                    report=report,
                )
            if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
                values = self._extract(cvars)
                residual = self._residual(values)
                report = SolveReport(
                    "optimal", float(problem.value), residual, elapsed, iters, backend
                )
                if residual > self._residual_scale() * tol * 100:
                    # grossly violated constraints: treat as a failed solve
                    last_report = SolveReport(
                        "numerical-failure", float(problem.value), residual,
                        elapsed, iters, backend,
                    )
                    last_exc = f"primal residual {residual:.3e} too large"
                    continue
                return report, values
            last_report = SolveReport(
                "numerical-failure", None, np.inf, elapsed, iters, backend
            )
            last_exc = f"status {problem.status}"
        raise SolverFailure(
            f"no backend solved program {self.name!r}: {last_exc}", report=last_report
        )

    def _extract(self, cvars):
        values = {}
        for name, dim in self.sym_vars.items():
            v = np.asarray(cvars[name].value, dtype=float).reshape(dim, dim)
            values[name] = (v + v.T) / 2
        for name in self.scalar_vars:
            values[name] = float(cvars[name].value)
        return values

    def _residual_scale(self) -> float:
        scale = 1.0
        for con in self.mat_constraints:
            scale = max(scale, float(np.max(np.abs(con.expr.const), initial=0.0)))
        return scale

    def eval_mat(self, expr: MatExpr, values) -> np.ndarray:
        out = expr.const.copy()
        for t in expr.terms:
            out = out + t.left @ values[t.var] @ t.right
        return (out + out.T) / 2

    def eval_scalar(self, expr: ScalarExpr, values) -> float:
        out = expr.const
        for coeff, v in expr.trace_terms:
            out += float(np.trace(coeff @ values[v]))
        for coeff, v in expr.scalar_terms:
            out += coeff * values[v]
        return float(out)

    def _residual(self, values) -> float:
        worst = 0.0
        for con in self.mat_constraints:
            eigs = np.linalg.eigvalsh(self.eval_mat(con.expr, values))
            violation = -eigs.min() if con.sense == "psd" else eigs.max()
            worst = max(worst, float(violation))
        for con in self.scalar_constraints:
            worst = max(worst, self.eval_scalar(con.expr, values))
        return worst

    # -- debug dump -------------------------------------------------------

    def dump(self) -> str:
        """Human-readable text dump (variable table + constraint blocks);
        exact enough to rebuild the program with :meth:`parse`."""
        lines = [f"conic-program v1 {self.name}"]
        lines.append(f"sense {self.sense}")
        for name, dim in self.sym_vars.items():
            lines.append(f"var sym {name} {dim}")
        for name in self.scalar_vars:
            lines.append(f"var scalar {name}")
        lines.extend(self._dump_scalar("objective", self.objective))
        for con in self.mat_constraints:
            lines.append(f"begin {con.sense}")
            lines.append(f"const {_compact(con.expr.const)}")
            for t in con.expr.terms:
                lines.append(f"term {t.var} {_compact(t.left)} {_compact(t.right)}")
            lines.append("end")
        for con in self.scalar_constraints:
            lines.append("begin scalar_le")
            lines.extend(self._dump_scalar("expr", con.expr))
            lines.append("end")
        return "\n".join(lines) + "\n"

    @staticmethod
    def _dump_scalar(tag: str, expr: ScalarExpr):
        out = [f"{tag} const {expr.const!r}"]
        for coeff, v in expr.trace_terms:
            out.append(f"{tag} trace {v} {_compact(coeff)}")
        for coeff, v in expr.scalar_terms:
            out.append(f"{tag} scalar {v} {coeff!r}")
        return out

    @classmethod
    def parse(cls, text: str) -> "ConicProgram":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split(maxsplit=2)
        if head[:2] != ["conic-program", "v1"]:
            raise DromorError("not a conic-program v1 dump")
        prog = cls(head[2] if len(head) > 2 else "")
        i = 1
        while i < len(lines):
            parts = lines[i].split(maxsplit=1)
            key = parts[0]
            if key == "sense":
                prog.sense = parts[1].strip()
            elif key == "var":
                kind, rest = parts[1].split(maxsplit=1)
                if kind == "sym":
                    name, dim = rest.split()
                    prog.add_sym_var(name, int(dim))
                else:
                    prog.add_scalar_var(rest.strip())
            elif key == "objective":
                prog.objective = prog.objective + cls._parse_scalar_line(parts[1])
            elif key == "begin":
                kind = parts[1].strip()
                i += 1
                if kind in ("psd", "nsd"):
                    const = None
                    terms = []
                    while lines[i].strip() != "end":
                        p = lines[i].split(maxsplit=3)
                        if p[0] == "const":
                            const = np.asarray(json.loads(p[1]), dtype=float)
                        else:
                            terms.append(
                                Term(
                                    np.asarray(json.loads(p[2]), dtype=float),
                                    p[1],
                                    np.asarray(json.loads(p[3]), dtype=float),
                                )
                            )
                        i += 1
                    expr = MatExpr(const, terms)
                    (prog.add_psd if kind == "psd" else prog.add_nsd)(expr)
                elif kind == "scalar_le":
                    expr = ScalarExpr()
                    while lines[i].strip() != "end":
                        p = lines[i].split(maxsplit=1)
                        expr = expr + cls._parse_scalar_line(p[1])
                        i += 1
                    prog.add_scalar_le(expr)
                else:
                    raise DromorError(f"unknown constraint kind {kind!r}")
            else:
                raise DromorError(f"unparseable dump line: {lines[i]!r}")
            i += 1
        return prog

    @staticmethod
    def _parse_scalar_line(rest: str) -> ScalarExpr:
        p = rest.split(maxsplit=2)
        if p[0] == "const":
            return scalar_const(float(p[1]))
        if p[0] == "trace":
            return trace_of(p[1], np.asarray(json.loads(p[2]), dtype=float))
        if p[0] == "scalar":
            return scalar_term(p[1], float(p[2]))
        raise DromorError(f"unparseable scalar term: {rest!r}")
