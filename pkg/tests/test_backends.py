"""The compiled kernels and the pure-Python fallback must agree bit for bit."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dimwitness import _pykernels
from dimwitness._backend import BACKEND
from dimwitness.optimizer import AngleParametrization

_kernels = pytest.importorskip("dimwitness._kernels")

CASES = [(2, 2, "real", 1), (2, 3, "complex", 1), (3, 4, "complex", 1), (4, 4, "complex", 2)]


def _engine(mod, params, angles):
    return mod.AnnealEngine(params.dim, params.k, *params.layout(), angles)


def test_compiled_backend_selected():
    assert BACKEND == "compiled"


@pytest.mark.parametrize("d,k,field,rank", CASES)
def test_anneal_stage_identical(d, k, field, rank):
    params = AngleParametrization.uniform(d, k, field, rank)
    rng = np.random.default_rng(d * 100 + k)
    angles = rng.random(params.n_angles) * 2 * np.pi
    py, c = _engine(_pykernels, params, angles), _engine(_kernels, params, angles)
    assert py.evaluate() == c.evaluate()
    assert np.array_equal(py.probability_matrix(), c.probability_matrix())
    for temperature, width in ((3e-3, np.pi), (7.5e-4, np.pi / 4), (1e-6, 1e-3)):
        steps = 10 * params.n_angles
        proposals, uniforms = rng.random(steps), rng.random(steps)
        assert py.run_stage(temperature, width, 10, proposals, uniforms) == \
            c.run_stage(temperature, width, 10, proposals, uniforms)
        assert py.best == c.best and py.current == c.current
        assert np.array_equal(py.angles, c.angles) and np.array_equal(py.best_angles, c.best_angles)


def test_lu_det_identical(rng):
    for n in range(1, 9):
        p = rng.random((n, n))
        p[-1] = 1.0
        assert _pykernels.lu_det(p) == _kernels.lu_det(p)


def test_bareiss_identical(rng):
    for n in range(1, 14):
        a = rng.integers(0, 2, (n, n)).astype(np.int64)
        assert _pykernels.bareiss_det(a) == _kernels.bareiss_det(a) == round(np.linalg.det(a))


def test_binary_stage_identical(rng):
    k = 7
    n = k + 1
    bits = rng.integers(0, 2, (k, n)).astype(np.int8)
    flips = rng.integers(0, k * n, 5000).astype(np.int64)
    uniforms = rng.random(5000)
    cur = abs(int(_pykernels.bareiss_det(np.vstack([bits, np.ones(n, np.int8)]).astype(np.int64))))
    out = []
    for mod in (_pykernels, _kernels):
        b, best_bits = bits.copy(), bits.copy()
        res = mod.binary_anneal_stage(b, cur, 0.5, flips, uniforms, best_bits, cur)
        out.append((res, b.tolist(), best_bits.tolist()))
    assert out[0] == out[1]


_SCRIPT = """
import json
from dimwitness._backend import BACKEND
from dimwitness.optimizer import AngleParametrization, AnnealSchedule, optimize
res = optimize(AngleParametrization.uniform(3, 4, "complex", 1), AnnealSchedule(sweeps_per_stage=10, seed=2),
               restarts=2)
print(json.dumps({"backend": BACKEND, "trace": res.trace, "values": res.restart_values, "value": res.value}))
"""


def _run_optimize(pure):
    env = dict(os.environ)
    env.pop("DIMWIT_PURE_PYTHON", None)
    if pure:
        env["DIMWIT_PURE_PYTHON"] = "1"
    proc = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def test_full_optimize_identical_across_backends():
    py, c = _run_optimize(True), _run_optimize(False)
    assert py.pop("backend") == "python" and c.pop("backend") == "compiled"
    assert py == c
