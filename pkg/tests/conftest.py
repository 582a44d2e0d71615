import json

import numpy as np
import pytest

from dromor import AmbiguousReductionProblem, DiscreteLtiSystem, GelbrichBall

# 4x4 two-mass mechanical benchmark (zero-order-hold discretization)
BENCH_A = np.array([
    [0.82, -0.02, 0.17, 0.03],
    [-0.02, 0.82, 0.03, 0.17],
    [-0.08, -0.01, -0.01, -0.01],
    [-0.01, -0.08, -0.01, -0.02],
])
BENCH_B = np.array([
    [0.17, 0.03],
    [0.03, 0.17],
    [0.09, 0.02],
    [0.02, 0.09],
])
BENCH_C = np.array([[1.0, 0.0, 0.0, 0.0]])
BENCH_Q_BAR = np.diag([0.01, 1.0])
BENCH_RHO2 = 2.0
BENCH_Q_TRUE = np.diag([1.0, 0.01])
BENCH_R = 2


@pytest.fixture
def bench_system() -> DiscreteLtiSystem:
    return DiscreteLtiSystem(BENCH_A, BENCH_B, BENCH_C)


@pytest.fixture
def bench_ball() -> GelbrichBall:
    return GelbrichBall(BENCH_Q_BAR, BENCH_RHO2)


@pytest.fixture
def bench_problem(bench_system, bench_ball) -> AmbiguousReductionProblem:
    return AmbiguousReductionProblem(bench_system, bench_ball, BENCH_R)


def bench_problem_dict(**overrides) -> dict:
    data = {
        "A": BENCH_A.tolist(),
        "B": BENCH_B.tolist(),
        "C": BENCH_C.tolist(),
        "Q_bar": BENCH_Q_BAR.tolist(),
        "rho2": BENCH_RHO2,
        "r": BENCH_R,
        "Q_true": BENCH_Q_TRUE.tolist(),
    }
    data.update(overrides)
    return {k: v for k, v in data.items() if v is not None}


@pytest.fixture
def bench_problem_path(tmp_path):
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(bench_problem_dict()))
    return str(path)


def random_psd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    m = rng.standard_normal((n, n))
    return m @ m.T * (scale / n)


def random_stable_system(rng: np.random.Generator, n: int, m: int, p: int,
                         radius: float = 0.9) -> DiscreteLtiSystem:
    a = rng.standard_normal((n, n))
    rho = np.max(np.abs(np.linalg.eigvals(a)))
    a = a * (radius * rng.uniform(0.3, 1.0) / max(rho, 1e-12))
    b = rng.standard_normal((n, m))
    c = rng.standard_normal((p, n))
    return DiscreteLtiSystem(a, b, c)
