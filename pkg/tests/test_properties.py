"""Property-based checks of witness invariants."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_effect, random_mixed, random_scenario
from dimwitness import (
    ClassicalModel,
    Effect,
    Preparation,
    ProbabilityMatrix,
    Scenario,
    StateVector,
    adjugate,
    build_probability_matrix,
    classical_probability_matrix,
    witness,
)
from dimwitness.stats import null_variance

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=4)
ks = st.integers(min_value=1, max_value=6)


def _w(s):
    return witness(build_probability_matrix(s))


def _random_unitary(rng, d, real=False):
    a = rng.normal(size=(d, d))
    if not real:
        a = a + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=dims, k=ks, lam=st.floats(0.0, 1.0))
def test_convexity_in_one_preparation(seed, d, k, lam):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, d, k, mixed=True)
    j = int(rng.integers(0, k + 1))
    xa, xb = random_mixed(rng, d, rank=1), random_mixed(rng, d, rank=2)
    mix = Preparation(lam * xa.matrix + (1 - lam) * xb.matrix)

    def with_prep(x):
        preps = list(s.preparations)
        preps[j] = x
        return Scenario(preps, s.effects)

    assert abs(_w(with_prep(mix)) - (lam * _w(with_prep(xa)) + (1 - lam) * _w(with_prep(xb)))) < 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=dims, k=st.integers(2, 6))
def test_antisymmetry(seed, d, k):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, d, k)
    a, b = rng.choice(k + 1, 2, replace=False)
    preps = list(s.preparations)
    preps[a], preps[b] = preps[b], preps[a]
    assert abs(_w(Scenario(preps, s.effects)) + _w(s)) < 1e-12
    a, b = rng.choice(k, 2, replace=False)
    effs = list(s.effects)
    effs[a], effs[b] = effs[b], effs[a]
    assert abs(_w(Scenario(s.preparations, effs)) + _w(s)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=dims, k=ks)
def test_unitary_invariance(seed, d, k):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, d, k, mixed=True)
    u = _random_unitary(rng, d)
    preps = [Preparation(u @ p.matrix @ u.conj().T) for p in s.preparations]
    effs = [Effect([StateVector.normalized(u @ c.amplitudes) for c in e.columns]) for e in s.effects]
    assert abs(_w(Scenario(preps, effs)) - _w(s)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=seeds, k=ks)
def test_adjugate_times_matrix(seed, k):
    rng = np.random.default_rng(seed)
    p = ProbabilityMatrix.from_rows(rng.random((k, k + 1)))
    adj = adjugate(p)
    w = witness(p)
    assert np.allclose(adj @ p.entries, w * np.eye(k + 1), atol=1e-12)
    assert np.allclose(p.entries @ adj, w * np.eye(k + 1), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, k=st.integers(2, 6))
def test_null_variance_relabeling(seed, k):
    rng = np.random.default_rng(seed)
    p = rng.random((k, k + 1))
    perm_r = rng.permutation(k)
    perm_c = rng.permutation(k + 1)
    v = null_variance(ProbabilityMatrix.from_rows(p), 1000)
    assert abs(null_variance(ProbabilityMatrix.from_rows(p[perm_r]), 1000) - v) <= 1e-12 * max(v, 1e-300)
    assert abs(null_variance(ProbabilityMatrix.from_rows(p[:, perm_c]), 1000) - v) <= 1e-12 * max(v, 1e-300)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=st.integers(1, 3), extra=st.integers(0, 2))
def test_classical_zero_at_threshold(seed, d, extra):
    rng = np.random.default_rng(seed)
    k = d + extra
    r = rng.dirichlet(np.ones(d), size=k + 1).T
    q = rng.random((k, d))
    assert abs(witness(classical_probability_matrix(ClassicalModel(r, q)))) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=st.integers(2, 3), extra=st.integers(0, 1))
def test_real_zero_at_threshold(seed, d, extra):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, d, d * (d + 1) // 2 + extra, real=True, mixed=True)
    assert abs(_w(s)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=st.integers(2, 3), extra=st.integers(0, 1))
def test_complex_zero_at_threshold(seed, d, extra):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, d, d * d + extra, mixed=True)
    assert abs(_w(s)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=st.integers(2, 3))
def test_generic_nonzero_below_threshold(seed, d):
    # one measurement short of the complex threshold the witness is generically nonzero
    rng = np.random.default_rng(seed)
    s = Scenario([Preparation.pure(StateVector.normalized(rng.normal(size=d) + 1j * rng.normal(size=d)))
                  for _ in range(d * d)],
                 [random_effect(rng, d, rank=1) for _ in range(d * d - 1)])
    assert abs(_w(s)) > 1e-9
