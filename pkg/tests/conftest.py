import numpy as np
import pytest

from dimwitness import Effect, Preparation, Scenario, StateVector


def random_ket(rng, d, real=False):
    v = rng.normal(size=d)
    if not real:
        v = v + 1j * rng.normal(size=d)
    return StateVector.normalized(v)


def random_mixed(rng, d, real=False, rank=2):
    w = rng.dirichlet(np.ones(rank))
    rho = sum(wi * random_ket(rng, d, real).projector() for wi in w)
    return Preparation((rho + rho.conj().T) / 2)


def random_effect(rng, d, real=False, rank=None):
    rank = int(rng.integers(1, d + 1)) if rank is None else rank
    a = rng.normal(size=(d, rank))
    if not real:
        a = a + 1j * rng.normal(size=(d, rank))
    q, _ = np.linalg.qr(a)
    return Effect([StateVector.normalized(q[:, c]) for c in range(rank)])


def random_scenario(rng, d, k, real=False, mixed=False):
    preps = [random_mixed(rng, d, real) if mixed and rng.random() < 0.5
             else Preparation.pure(random_ket(rng, d, real)) for _ in range(k + 1)]
    effects = [random_effect(rng, d, real) for _ in range(k)]
    return Scenario(preps, effects, field="real" if real else "complex")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary: tests/test_acceptance.py records one line per criterion
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
