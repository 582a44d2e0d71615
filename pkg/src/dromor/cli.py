"""Command-line front end.

Subcommands mirror the pipeline stages: ``reduce`` (certain or robust),
``worst-case``, ``validate`` and ``compare``.  Problems and models travel
as JSON; time series and summary tables as CSV; report figures as PNG.

Exit codes: 0 success, 1 input error, 2 infeasibility certificate,
3 solver failure, 4 certified bound violated (validate/compare).
"""

from __future__ import annotations

import json
import sys as _sys

import click
import numpy as np

from . import files, plots
from .ambiguity import worst_case_trace
from .baselines import balanced_truncation
from .errors import DromorError, InfeasibleError, SolverFailure
from .reduction import reduce_certain, reduce_robust
from .validation import asymptotic_error_exact, check_certificate, simulate

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3
EXIT_BOUND_VIOLATED = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    _sys.exit(code)


def _matrix_json(m) -> list:
    return np.asarray(m, dtype=float).tolist()


@click.group()
@click.option("--tol", type=float, default=1e-8, show_default=True,
              help="Feasibility tolerance for conic solves.")
@click.option("--epsilon", type=float, default=None,
              help="Strictness margin for definiteness constraints "
                   "(overrides the problem file).")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for every random draw (no wall-clock entropy).")
@click.pass_context
def main(ctx, tol, epsilon, seed):
    """Distributionally robust model order reduction toolkit."""
    ctx.ensure_object(dict)
    ctx.obj.update(tol=tol, epsilon=epsilon, seed=seed)


def _load_problem_or_exit(path, epsilon_override):
    try:
        pf = files.load_problem(path)
    except files.ProblemFileError as exc:
        _fail(EXIT_INPUT, str(exc))
    if epsilon_override is not None:
        from .reduction import AmbiguousReductionProblem

        try:
            pf = files.ProblemFile(
                AmbiguousReductionProblem(
                    pf.system, pf.ball, pf.problem.r, epsilon_override
                ),
                pf.q_true,
            )
        except (DromorError, ValueError) as exc:
            _fail(EXIT_INPUT, f"invalid --epsilon: {exc}")
    return pf


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False, writable=True))
@click.option("--certain/--robust", "certain", default=False,
              help="Use the nominal covariance directly instead of the "
                   "worst-case inflated one.")
@click.option("--no-canonical", is_flag=True,
              help="Skip the observability-staircase preprocessing.")
@click.pass_context
def reduce(ctx, input_path, output_path, certain, no_canonical):
    """Reduce the system in INPUT_PATH and write the model JSON to
    OUTPUT_PATH."""
    pf = _load_problem_or_exit(input_path, ctx.obj["epsilon"])
    canonical = not no_canonical
    try:
        if certain:
            model, cert = reduce_certain(
                pf.system, pf.ball.center, pf.problem.r,
                epsilon=pf.problem.epsilon, canonical=canonical,
            )
        else:
            model, cert = reduce_robust(pf.problem, canonical=canonical)
    except InfeasibleError as exc:
        _fail(EXIT_INFEASIBLE, f"stage {exc.stage or '?'}: {exc}")
    except SolverFailure as exc:
        _fail(EXIT_SOLVER, f"stage {exc.stage or '?'}: {exc}")
    except DromorError as exc:
        _fail(EXIT_INPUT, str(exc))
    files.save_model(output_path, model, cert, canonical)
    click.echo(
        f"reduced order {model.r}, spectral radius "
        f"{model.spectral_radius():.6f}, beta* = {cert.beta_star:.6g}, "
        f"gamma~* = {cert.gamma_tilde_star:.6g}"
    )
    _sys.exit(EXIT_OK)


@main.command("worst-case")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
def worst_case(input_path):
    """Solve the worst-case covariance-trace program for the ball in
    INPUT_PATH and print beta*, Q_delta and E_Q as JSON."""
    try:
        pf = files.load_problem(input_path)
    except files.ProblemFileError as exc:
        _fail(EXIT_INPUT, str(exc))
    try:
        result = worst_case_trace(pf.ball)
    except InfeasibleError as exc:
        _fail(EXIT_INFEASIBLE, str(exc))
    except SolverFailure as exc:
        _fail(EXIT_SOLVER, str(exc))
    click.echo(json.dumps({
        "beta_star": result.beta_star,
        "Q_delta": _matrix_json(result.q_delta),
        "E_Q": _matrix_json(result.e_q),
    }, indent=2))
    _sys.exit(EXIT_OK)


def _resolve_q(tag, pf, cert):
    if tag == "true":
        if pf.q_true is None:
            _fail(EXIT_INPUT, "problem file has no 'Q_true' field")
        return pf.q_true, "Q_true"
    if tag == "eff":
        return cert.Q_eff, "Q_eff"
    try:
        with open(tag) as fh:
            data = json.load(fh)
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot read covariance file {tag!r}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_INPUT, f"covariance file {tag!r} is not valid JSON: {exc}")
    if isinstance(data, dict):
        data = data.get("Q")
        if data is None:
            _fail(EXIT_INPUT, f"covariance file {tag!r} has no 'Q' field")
    return np.asarray(data, dtype=float), tag


@main.command()
@click.argument("problem_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--q", "q_tag", default="true", show_default=True,
              help="Covariance to validate under: 'true', 'eff', or a JSON "
                   "file path.")
@click.option("--mc", default=None,
              help="Monte Carlo check as 'steps,trajectories[,seed]'.")
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), default=None,
              help="Render the per-step error figure to this PNG path.")
@click.option("--dump-csv", type=click.Path(dir_okay=False), default=None,
              help="Write the per-step mean-error CSV here (requires --mc).")
@click.pass_context
def validate(ctx, problem_path, model_path, q_tag, mc, plot_path, dump_csv):
    """Check a reduced model and its certificate against the exact error
    oracle (and optionally Monte Carlo)."""
    pf = _load_problem_or_exit(problem_path, None)
    try:
        model, cert, _canonical = files.load_model(model_path)
    except files.ProblemFileError as exc:
        _fail(EXIT_INPUT, str(exc))
    q, q_label = _resolve_q(q_tag, pf, cert)
    try:
        report = check_certificate(pf.system, model, cert, q_true=q)
    except DromorError as exc:
        _fail(EXIT_INPUT, str(exc))

    click.echo(f"covariance: {q_label}")
    click.echo(f"exact asymptotic error: {report.exact_error!r}")
    click.echo(f"gamma~* bound: {report.gamma_tilde_star!r}")
    click.echo(f"bound satisfied: {'yes' if report.bound_satisfied else 'no'}")
    click.echo(
        "covariance dominance Q <= Q_eff: "
        f"{'holds' if report.loewner_ok else 'violated'} "
        f"(min eig of Q_eff - Q = {report.loewner_min_eig:.6g})"
    )
    click.echo(f"psi max eigenvalue: {report.psi_max_eig:.6g}")
    click.echo(f"trace slack: {report.trace_slack:.6g}")
    click.echo(f"reduced spectral radius: {report.reduced_spectral_radius:.6f}")

    if mc is not None:
        parts = mc.split(",")
        if len(parts) not in (2, 3):
            _fail(EXIT_INPUT, "--mc must be 'steps,trajectories[,seed]'")
        try:
            steps, trajs = int(parts[0]), int(parts[1])
            seed = int(parts[2]) if len(parts) == 3 else ctx.obj["seed"]
        except ValueError:
            _fail(EXIT_INPUT, "--mc values must be integers")
        try:
            stats = simulate(pf.system, model, q, steps, trajs, seed)
        except DromorError as exc:
            _fail(EXIT_INPUT, str(exc))
        click.echo(
            f"monte carlo tail error: {stats.tail_mean!r} "
            f"+/- {stats.tail_stderr!r} "
            f"({trajs} trajectories x {steps} steps, seed {seed})"
        )
        if dump_csv:
            files.write_steps_csv(dump_csv, {"mean_sqerr": stats.empirical_error})
        if plot_path:
            bounds = {"gamma~*": cert.gamma_tilde_star} if report.bound_satisfied is not None else {}
            plots.save_error_figure(
                plot_path, {"reduced model": stats.empirical_error}, bounds
            )
    elif dump_csv or plot_path:
        _fail(EXIT_INPUT, "--dump-csv/--plot need --mc to produce a time series")

    _sys.exit(EXIT_OK if report.bound_satisfied else EXIT_BOUND_VIOLATED)


@main.command()
@click.argument("problem_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--baseline", default="bt", show_default=True,
              type=click.Choice(["bt"]), help="Baseline method.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), required=True,
              help="Summary CSV output path; the per-step series goes to "
                   "'<path>.steps.csv'.")
@click.option("--plot", "plot_prefix", default=None,
              help="Render report figures to '<prefix>_error.png' and "
                   "'<prefix>_outputs.png'.")
@click.option("--steps", type=int, default=500, show_default=True)
@click.option("--trajectories", type=int, default=2000, show_default=True)
@click.option("--no-canonical", is_flag=True)
@click.pass_context
def compare(ctx, problem_path, baseline, csv_path, plot_prefix, steps,
            trajectories, no_canonical):
    """Run the robust reduction and the balanced-truncation baseline, score
    both against the exact error under Q_true, and emit CSV (and figures)."""
    pf = _load_problem_or_exit(problem_path, ctx.obj["epsilon"])
    if pf.q_true is None:
        _fail(EXIT_INPUT, "compare requires a 'Q_true' field in the problem file")
    try:
        robust_model, cert = reduce_robust(
            pf.problem, canonical=not no_canonical
        )
    except InfeasibleError as exc:
        _fail(EXIT_INFEASIBLE, f"stage {exc.stage or '?'}: {exc}")
    except SolverFailure as exc:
        _fail(EXIT_SOLVER, f"stage {exc.stage or '?'}: {exc}")
    except DromorError as exc:
        _fail(EXIT_INPUT, str(exc))
    try:
        bt_model = balanced_truncation(pf.system, pf.ball.center, pf.problem.r)
    except DromorError as exc:
        _fail(EXIT_INPUT, f"balanced truncation failed: {exc}")

    q_true = pf.q_true
    err_dromor = asymptotic_error_exact(pf.system, robust_model, q_true)
    err_bt = asymptotic_error_exact(pf.system, bt_model, q_true)
    files.write_summary_csv(csv_path, [
        ("dromor", err_dromor, cert.gamma_tilde_star,
         robust_model.spectral_radius()),
        ("bt", err_bt, None, bt_model.spectral_radius()),
    ])

    seed = ctx.obj["seed"]
    stats_d, y_mean, yhat_d = simulate(
        pf.system, robust_model, q_true, steps, trajectories, seed,
        return_outputs=True,
    )
    stats_b, _, yhat_b = simulate(
        pf.system, bt_model, q_true, steps, trajectories, seed,
        return_outputs=True,
    )
    series = {"dromor": stats_d.empirical_error, "bt": stats_b.empirical_error}
    files.write_steps_csv(csv_path + ".steps.csv", series)
    if plot_prefix:
        plots.save_error_figure(
            f"{plot_prefix}_error.png", series,
            {"gamma~*": cert.gamma_tilde_star},
            title="Absolute approximation error",
        )
        plots.save_output_figure(
            f"{plot_prefix}_outputs.png", y_mean,
            {"dromor": yhat_d, "bt": yhat_b},
        )
    click.echo(
        f"dromor exact error {err_dromor!r} (bound {cert.gamma_tilde_star!r}); "
        f"bt exact error {err_bt!r}"
    )
    _sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
