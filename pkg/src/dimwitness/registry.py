"""Catalog of closed-form extremal configurations and their witness values.

Every entry builds its Scenario from exact constants (square roots, roots of
unity, the golden ratio). Parameters defined only implicitly, as polynomial
roots or as maximizers of a low-dimensional family, are solved at build
time. Entries whose parameters are only known numerically are tagged
``numeric_only`` and compared at 1e-6.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field as dc_field
from importlib import resources
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .core import (
    Effect,
    Field,
    Preparation,
    Scenario,
    StateVector,
    build_probability_matrix,
    qubit_scenario,
    witness,
)
from .errors import StructuralError, UnknownEntryError

sqrt = math.sqrt
pi = math.pi


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    builder: Callable[[], Scenario]
    expected: float
    expected_expr: str
    provenance: str
    tolerance: float = 1e-9
    maximum: bool = False
    numeric_only: bool = False
    table_cells: tuple = ()
    notes: str = ""

    @property
    def tags(self) -> list[str]:
        out = []
        if self.maximum:
            out.append("MAXIMUM")
        if self.numeric_only:
            out.append("NUMERIC-ONLY")
        return out


@dataclass(frozen=True)
class RegistryTarget:
    """Best known |W_k| for a (k, d, field) cell without a stored configuration."""

    k: int
    dim: int
    field: Field
    value: float
    tolerance: float


@dataclass
class VerifyResult:
    name: str
    computed: float
    expected: float
    tolerance: float
    passed: bool
    checks: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "computed": self.computed, "expected": self.expected,
                "tolerance": self.tolerance, "passed": self.passed, "checks": self.checks}


# small builders

def basis(i: int, d: int) -> np.ndarray:
    """1-based basis ket |i> in dimension d."""
    v = np.zeros(d, dtype=complex)
    v[i - 1] = 1
    return v


def _ket(v) -> StateVector:
    return StateVector.normalized(v)


def _scenario(preps, effects, field=None) -> Scenario:
    """Kets for preparations; each effect is a list of mutually orthogonal kets."""
    return Scenario([Preparation.pure(_ket(x)) for x in preps],
                    [Effect([_ket(c) for c in cols]) for cols in effects], field=field)


def _sph(t, p):
    return math.cos(t), math.sin(t) * math.cos(p), math.sin(t) * math.sin(p)


def _abs_witness(s: Scenario) -> float:
    return abs(witness(build_probability_matrix(s)))


# entries

def qubit_triangle_k2() -> Scenario:
    xs = [(0, 0, 1), (sqrt(3) / 2, 0, -0.5), (-sqrt(3) / 2, 0, -0.5)]
    return qubit_scenario(xs, [(0, 0, 1), (1, 0, 0)])


def qubit_tetrahedron_k3() -> Scenario:
    t = 1 / sqrt(3)
    xs = [(t, t, t), (t, -t, -t), (-t, -t, t), (-t, t, -t)]
    return qubit_scenario(xs, [(1, 0, 0), (0, 1, 0), (0, 0, 1)])


def qutrit_k3() -> Scenario:
    e = lambda i: basis(i, 3)
    a, q = 0.993819, 0.996329
    b, r = sqrt(1 - a * a), sqrt(1 - q * q)
    ang = [2 * pi * j / 3 for j in (1, 2, 3)]
    xs = [a * math.cos(t) * e(1) + a * math.sin(t) * e(2) + b * e(3) for t in ang] + [e(3)]
    ys = [[q * math.cos(t) * e(1) + q * math.sin(t) * e(2) + r * e(3)] for t in ang]
    return _scenario(xs, ys)


def real_qutrit_k4() -> Scenario:
    e = lambda i: basis(i, 3)
    xs = [e(1), (-e(1) + sqrt(3) * e(2)) / 2, (-e(1) - sqrt(3) * e(2)) / 2,
          (-e(1) + sqrt(3) * e(3)) / 2, (-e(1) - sqrt(3) * e(3)) / 2]
    # a q = 1/2 and a^2 + q^2 = 9/8
    a2, q2 = (9 + sqrt(17)) / 16, (9 - sqrt(17)) / 16
    a, b, q, r = sqrt(a2), sqrt(1 - a2), sqrt(q2), sqrt(1 - q2)
    ys = [[a * e(1) + b * e(2)], [a * e(1) - b * e(2)], [q * e(1) + r * e(3)], [q * e(1) - r * e(3)]]
    return _scenario(xs, ys)


COMPLEX_QUTRIT_K4_PARAMS = (1.0344976834035169, 1.192034693774692, 1.034497686349827, 1.2690294742949266)


def complex_qutrit_k4() -> Scenario:
    e = lambda i: basis(i, 3)
    w = np.exp(2j * pi / 3)
    a, b, c = _sph(*COMPLEX_QUTRIT_K4_PARAMS[:2])
    q, r, s = _sph(*COMPLEX_QUTRIT_K4_PARAMS[2:])
    xs = [a * e(1) + b * w ** j * e(2) + c * w ** (2 * j) * e(3) for j in (1, 2, 3)] + [e(1), e(2)]
    ys = [[q * e(1) + w ** j * r * e(2) + w ** (2 * j) * s * e(3)] for j in (1, 2, 3)] + [[e(1)]]
    return _scenario(xs, ys)


def _ququart_k4(rank2: bool) -> Scenario:
    e = lambda i: basis(i, 4)
    signs = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    xs = [(s1 * e(1) + s2 * e(2) + s3 * e(3)) / sqrt(3) for s1, s2, s3 in signs] + [e(4)]
    ys = [[x, e(4)] if rank2 else [x] for x in xs[:4]]
    return _scenario(xs, ys)


def ququart_k4_rank1() -> Scenario:
    return _ququart_k4(False)


def ququart_k4_rank2() -> Scenario:
    return _ququart_k4(True)


def real_qutrit_icosahedron_k5() -> Scenario:
    e = lambda i: basis(i, 3)
    ket = lambda i: e(3 if i % 3 == 0 else i % 3)
    phi = (1 + sqrt(5)) / 2
    xs = [(ket(a) + (-1) ** b * phi * ket(a + 1)) / sqrt(phi + 2) for a in (0, 1, 2) for b in (1, 2)]
    alpha = sqrt((10 + sqrt(10)) / 15)
    ys = [[alpha * (math.cos(2 * pi * j / 5) * e(1) + math.sin(2 * pi * j / 5) * e(2))
           + sqrt(1 - alpha ** 2) * e(3)] for j in range(1, 6)]
    return _scenario(xs, ys)


COMPLEX_QUTRIT_K5_PARAMS = (
    5.094523181381385, 7.151140455059119, 5.012354516006106, 4.269064996109111,
    0.5404723121515894, 1.7614899581587833, 0.9375751977621416, 0.6667204898992867,
    1.046233491112602, 4.720118241321209,
)


def complex_qutrit_k5() -> Scenario:
    e = lambda i: basis(i, 3)
    t1, t2, f1, f2, g1, g2, q1, q2, r1, r2 = COMPLEX_QUTRIT_K5_PARAMS
    f, g, h = _sph(f1, f2)
    fp, gp, hp = _sph(g1, g2)
    q, r, s = _sph(q1, q2)
    qp, rp, sp = _sph(r1, r2)
    xs = [math.cos(t1) * e(1) + math.sin(t1) * e(2), math.cos(t2) * e(1) + math.sin(t2) * e(2),
          f * e(1) + g * e(2) + h * e(3), f * e(1) + g * e(2) - h * e(3),
          fp * e(1) + gp * e(2) + 1j * hp * e(3), fp * e(1) + gp * e(2) - 1j * hp * e(3)]
    ys = [[e(1)], [q * e(1) + r * e(2) + s * e(3)], [q * e(1) + r * e(2) - s * e(3)],
          [qp * e(1) + rp * e(2) + 1j * sp * e(3)], [qp * e(1) + rp * e(2) - 1j * sp * e(3)]]
    return _scenario(xs, ys)


def ququart_k5_rank2() -> Scenario:
    e = lambda i: basis(i, 4)
    a, b = sqrt((5 + sqrt(5)) / 10), sqrt((5 - sqrt(5)) / 10)
    c, s = math.cos(pi / 5), math.sin(pi / 5)
    xs = [a * e(1) + b * e(2), a * e(1) - b * e(2), a * e(3) + b * e(4), a * e(3) - b * e(4),
          (e(2) + e(4)) / sqrt(2), (e(2) - e(4)) / sqrt(2)]
    y = [(e(1) + e(2)) / sqrt(2), (e(1) + e(2)) / sqrt(2), e(1), s * e(2) + c * e(4), s * e(2) - c * e(4)]
    yp = [(e(3) + e(4)) / sqrt(2), (e(3) - e(4)) / sqrt(2), e(3), e(3), e(3)]
    return _scenario(xs, [[u, v] for u, v in zip(y, yp)])


def ququint_k5_5cell_rank1() -> Scenario:
    e = lambda i: basis(i, 5)
    r5 = sqrt(5)
    xs = [e(4), (r5 * (e(1) + e(2) + e(3)) - e(4)) / 4, (r5 * (e(1) - e(2) - e(3)) - e(4)) / 4,
          (r5 * (e(2) - e(3) - e(1)) - e(4)) / 4, (r5 * (e(3) - e(1) - e(2)) - e(4)) / 4, e(5)]
    return _scenario(xs, [[x] for x in xs[:5]])


def _bisect_root(f, lo, hi) -> float:
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


@functools.lru_cache(maxsize=None)
def ququint_k5_rank2_params() -> tuple[float, float]:
    """(b^2, q^2): largest root of 9315u^4 - 25668u^3 + 26409u^2 - 12032u + 2048 in (0,1)."""
    poly = np.polynomial.Polynomial([2048, -12032, 26409, -25668, 9315])
    roots = sorted(r.real for r in poly.roots() if abs(r.imag) < 1e-9 and 0 < r.real < 1)
    u0 = roots[-1]
    b2 = _bisect_root(poly, u0 - 1e-6, u0 + 1e-6)
    q2 = (8 - 12 * b2) ** 2 / ((8 - 12 * b2) ** 2 + 9 * b2 * (1 - b2))
    return b2, q2


def ququint_k5_rank2() -> Scenario:
    e = lambda i: basis(i, 5)
    b2, q2 = ququint_k5_rank2_params()
    a, b, q, r = sqrt(1 - b2), sqrt(b2), sqrt(q2), sqrt(1 - q2)
    ang = [2 * pi * j / 3 for j in (1, 2, 3)]
    xs = [a * e(1) + math.cos(t) * b * e(2) + math.sin(t) * b * e(3) for t in ang] + [e(4), e(5), e(1)]
    ys = [[q * e(1) - math.cos(t) * r * e(2) - math.sin(t) * r * e(3),
           math.sin(t) * e(2) - math.cos(t) * e(3)] for t in ang]
    ys += [[e(4), e(1)], [e(5), e(1)]]
    return _scenario(xs, ys)


def _d5_k6_family(a2: float, c2: float) -> Scenario:
    e = lambda i: basis(i, 5)
    a, b, c, d = sqrt(a2), sqrt(1 - a2), sqrt(c2), sqrt(1 - c2)
    xs = [a * e(1) + b * e(2), a * e(1) - b * e(2), a * e(1) + b * e(3), a * e(1) - b * e(3),
          a * e(1) + b * e(4), a * e(1) - b * e(4), e(5)]
    ys = [[c * e(1) + d * e(2), e(3)], [c * e(1) - d * e(2), e(3)],
          [c * e(1) + d * e(3), e(4)], [c * e(1) - d * e(3), e(4)],
          [c * e(1) + d * e(4), e(2)], [c * e(1) - d * e(4), e(2)]]
    return _scenario(xs, ys)


# coefficients in a (descending powers); a^2 is the preparation weight on |1>
_D5_K6_POLY = [8192, 0, -14336, 0, 11392, 0, -5088, 0, 1480, 0, -296, 0, 24, 0, 5, 0, -1]


@functools.lru_cache(maxsize=None)
def d5_k6_params() -> tuple[float, float]:
    poly = np.poly1d(_D5_K6_POLY)
    a = _bisect_root(poly, 0.5, 0.6)
    a2 = a * a
    res = minimize_scalar(lambda c2: -_abs_witness(_d5_k6_family(a2, c2)), bounds=(0.3, 0.7),
                          method="bounded", options={"xatol": 1e-12})
    return a2, float(res.x)


def d5_k6_rank2() -> Scenario:
    return _d5_k6_family(*d5_k6_params())


def _d6_k6_family(ta: float, tc: float) -> Scenario:
    e = lambda i: basis(i, 6)
    r3 = sqrt(3)
    a, b, c, d = math.cos(ta), math.sin(ta), math.cos(tc), math.sin(tc)

    def star(u, v, first, second):
        return [u * e(1) + v * e(first), u * e(1) + v / 2 * (-e(first) + r3 * e(second)),
                u * e(1) + v / 2 * (-e(first) - r3 * e(second))]

    xs = star(a, b, 2, 3) + star(a, b, 4, 5) + [e(6)]
    y = [e(3), (e(3) + r3 * e(2)) / 2, (e(3) - r3 * e(2)) / 2,
         e(5), (e(5) + r3 * e(4)) / 2, (e(5) - r3 * e(4)) / 2]
    yp = star(c, d, 2, 3) + star(c, d, 4, 5)
    return _scenario(xs, [[u, v, e(6)] for u, v in zip(y, yp)])


@functools.lru_cache(maxsize=None)
def d6_k6_params() -> tuple[float, float]:
    res = minimize(lambda v: -_abs_witness(_d6_k6_family(*v)), [2.06933219, 0.63761841],
                   method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
    return float(res.x[0]), float(res.x[1])


def d6_k6() -> Scenario:
    return _d6_k6_family(*d6_k6_params())


def _heptagon_parts():
    z = np.exp(2j * pi / 7)
    xi = 1j / (2 * sqrt(3))
    U = np.diag([1, z, z ** 2, z ** 4])
    M = np.array([[0.5, xi, xi, xi], [-xi, 0.5, xi, -xi], [-xi, -xi, 0.5, xi], [-xi, xi, -xi, 0.5]])
    return U, M


def d5_k7_heptagonal() -> Scenario:
    U, M = _heptagon_parts()
    evals, evecs = np.linalg.eigh(M)
    cols = evecs[:, evals > 0.5]  # M is a rank-2 projector

    def emb(v):
        w = np.zeros(5, dtype=complex)
        w[:4] = v
        return w

    powers = [np.linalg.matrix_power(U, j) for j in range(1, 8)]
    xs = [emb(Uj @ np.ones(4) / 2) for Uj in powers] + [basis(5, 5)]
    ys = [[emb(Uj @ cols[:, 0]), emb(Uj @ cols[:, 1])] for Uj in powers]
    return _scenario(xs, ys)


def complex_qutrit_k8() -> Scenario:
    e = lambda i: basis(i, 3)
    ket = lambda i: e(3 if i % 3 == 0 else i % 3)
    w = np.exp(2j * pi / 3)
    xs = [(ket(a) + w ** b * ket(a + 1)) / sqrt(2) for a in (0, 1, 2) for b in (1, 2, 3)]
    yp = [1j * sqrt(1 / 3) * e(1) + w ** j * sqrt(2 / 3) * e(2) for j in (1, 2, 3)] + [e(1)]
    yp = yp + [-v for v in yp]
    ys = [[sqrt(5 / 6) * v + sqrt(1 / 6) * e(3)] for v in yp]
    return _scenario(xs, ys)


def ququart_k9_example() -> Scenario:
    e = lambda i: basis(i, 4)
    xs = [e(1), e(2), e(3), e(4),
          np.array([1, 1, 1j, -1j]) / 2, np.array([1, 1, -1j, 1j]) / 2,
          np.array([1, 1j, 1, -1j]) / 2, np.array([1, 1j, -1, 1j]) / 2,
          np.array([1, 1, -1, -1]) / 2, np.array([1, -1, -1, 1]) / 2]
    return _scenario(xs, [[x] for x in xs[1:]])


def variance_saturating_k4() -> Scenario:
    r2 = sqrt(2)
    xs = [(0, 0, -1), (0, 0, -1), (2 * r2 / 3, 0, 1 / 3), (-r2 / 3, sqrt(2 / 3), 1 / 3),
          (-r2 / 3, -sqrt(2 / 3), 1 / 3)]
    ys = [(0, 0, 1), (1, 0, 0), (-0.5, sqrt(3) / 2, 0), (-0.5, -sqrt(3) / 2, 0)]
    return qubit_scenario(xs, ys)


def qubit_axes_test_k4() -> Scenario:
    xs = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, -1)]
    return qubit_scenario(xs, xs[:4])


def _both(k, d):
    return ((k, d, "real"), (k, d, "complex"))


_ENTRIES = [
    RegistryEntry("qubit_triangle_k2", qubit_triangle_k2, (3 / 4) ** 1.5, "(3/4)^(3/2)",
                  "qubit; preparations on an equilateral triangle of a great circle, effects along two "
                  "orthogonal axes in its plane", maximum=True, table_cells=_both(2, 2)),
    RegistryEntry("qubit_tetrahedron_k3", qubit_tetrahedron_k3, 2 * sqrt(3) / 9, "2*sqrt(3)/9",
                  "qubit; preparations on a regular tetrahedron, effects along the three axes",
                  maximum=True, table_cells=((3, 2, "complex"),)),
    RegistryEntry("qutrit_k3", qutrit_k3, 0.8447648009582842, "numeric maximum",
                  "qutrit; three preparations and three effects on cones around |3>, a=0.993819, q=0.996329",
                  tolerance=1e-6, maximum=True, numeric_only=True, table_cells=_both(3, 3),
                  notes="parameters given to six digits"),
    RegistryEntry("real_qutrit_k4", real_qutrit_k4, 27 * sqrt(2) / 64, "27*sqrt(2)/64",
                  "real qutrit; preparations at 120 degrees in two planes through |1>, effects a|1>+-b|2>, "
                  "q|1>+-r|3> with aq=1/2, a^2+q^2=9/8", maximum=True, table_cells=((4, 3, "real"),)),
    RegistryEntry("complex_qutrit_k4", complex_qutrit_k4, 0.6319201017558774, "numeric maximum",
                  "complex qutrit; cube-root-of-unity phases on two spheres of amplitudes",
                  tolerance=1e-6, maximum=True, numeric_only=True, table_cells=((4, 3, "complex"),)),
    RegistryEntry("ququart_k4_rank1", ququart_k4_rank1, 2 ** 11 / 3 ** 7, "2^11/3^7",
                  "d=4; tetrahedron of real states in span{|1>,|2>,|3>} plus |4>, rank-1 effects on the "
                  "tetrahedron states", maximum=True),
    RegistryEntry("ququart_k4_rank2", ququart_k4_rank2, 2 ** 12 / 3 ** 7, "2^12/3^7",
                  "d=4; as the rank-1 case with |4><4| added to every effect", maximum=True,
                  table_cells=_both(4, 4)),
    RegistryEntry("real_qutrit_icosahedron_k5", real_qutrit_icosahedron_k5,
                  (25 + 34 * sqrt(10)) * 2 ** 5 / (5 ** 3 * 3 ** 4), "(25+34*sqrt(10))*2^5/(5^3*3^4)",
                  "real qutrit; six icosahedron axes (golden ratio) as preparations, effects on a "
                  "pentagonal cone with alpha^2=(10+sqrt(10))/15", maximum=True,
                  table_cells=((5, 3, "real"),)),
    RegistryEntry("complex_qutrit_k5", complex_qutrit_k5, 0.457413503, "numeric maximum",
                  "complex qutrit; ten-parameter family with +-h|3> and +-ih|3> pairs, parameters stored "
                  "numerically", tolerance=1e-6, maximum=True, numeric_only=True,
                  table_cells=((5, 3, "complex"),)),
    RegistryEntry("ququart_k5_rank2", ququart_k5_rank2, (1 + 1 / sqrt(5)) ** 2.5 / sqrt(2),
                  "(1+1/sqrt(5))^(5/2)/sqrt(2)",
                  "d=4; pairs a|1>+-b|2>, a|3>+-b|4>, (|2>+-|4>)/sqrt2 with a^2=(5+sqrt5)/10, rank-2 effects "
                  "with pentagon angles", maximum=True, table_cells=_both(5, 4),
                  notes="the first preparation pair is a|1>+-b|2>; with |3> in place of |2> the "
                        "determinant vanishes identically"),
    RegistryEntry("ququint_k5_5cell_rank1", ququint_k5_5cell_rank1, 5 ** 5 * 3 ** 4 / 2 ** 18,
                  "5^5*3^4/2^18",
                  "d=5; five preparations on a 5-cell (regular 4-simplex) in span{|1>..|4>} plus |5>, "
                  "effects on the same states"),
    RegistryEntry("ququint_k5_rank2", ququint_k5_rank2, 3.144615108566082,
                  "largest root of 9315u^4-25668u^3+26409u^2-12032u+2048 (u=b^2)",
                  "d=5; triangle of states around |1>, rank-2 effects, |4>,|5>,|1> completions",
                  maximum=True, table_cells=_both(5, 5),
                  notes="effect phases use cos(2 pi j/3); q^2=(8-12b^2)^2/((8-12b^2)^2+9b^2(1-b^2))"),
    RegistryEntry("d5_k6_rank2", d5_k6_rank2, 3.3984718576415207,
                  "a = root of a degree-16 polynomial, a^2 = 0.3016492773799042",
                  "d=5; pairs a|1>+-b|m> for m=2,3,4 plus |5>, rank-2 effects c|1>+-d|m> with a cyclic "
                  "partner; c maximized at fixed a", maximum=True, table_cells=_both(6, 5)),
    RegistryEntry("d6_k6", d6_k6, 5.0467662420644475, "two-parameter numeric maximum",
                  "d=6; two triangles of states around |1> in the planes (|2>,|3>) and (|4>,|5>) plus |6>, "
                  "rank-3 effects including |6><6|", maximum=True, table_cells=_both(6, 6),
                  notes="the second and third preparations use +-sqrt(3)|3>; both angles are "
                        "maximized at build time"),
    RegistryEntry("d5_k7_heptagonal", d5_k7_heptagonal, 7 ** 7 / (2 ** 13 * 3 ** 3), "7^7/(2^13*3^3)",
                  "d=5; heptagonal orbit U^j(1,1,1,1)/2 with U=diag(1,z,z^2,z^4), z=exp(2 pi i/7), rank-2 "
                  "effects U^j M U^-j with xi=i/(2 sqrt 3), plus |5>", maximum=True,
                  table_cells=((7, 5, "complex"),)),
    RegistryEntry("complex_qutrit_k8", complex_qutrit_k8, 5 ** 5 / (3 ** 4 * 2 ** 8), "5^5/(3^4*2^8)",
                  "complex qutrit; nine states (|a>+w^b|a+1>)/sqrt2, effects sqrt(5/6)y'+sqrt(1/6)|3>",
                  maximum=True, table_cells=((8, 3, "complex"),)),
    RegistryEntry("ququart_k9_example", ququart_k9_example, 1 / 8, "1/8",
                  "d=4; computational basis, four phase states, two real Hadamard states; effects "
                  "Y_j = X_(j+1); an example value, not the maximum",
                  notes="the four phase states are (1,1,i,-i)/2, (1,1,-i,i)/2, (1,i,1,-i)/2, (1,i,-1,i)/2; "
                        "a full Fourier basis next to the computational basis makes the preparations "
                        "linearly dependent and the witness zero"),
    RegistryEntry("variance_saturating_k4", variance_saturating_k4, 0.0, "0",
                  "qubit; configuration saturating the null-variance bound 1/(6N)"),
    RegistryEntry("qubit_axes_test_k4", qubit_axes_test_k4, 0.0, "0",
                  "qubit; preparations +-x, y, +-z, effects on the first four; null variance 1/(16N)"),
]

_BY_NAME = {e.name: e for e in _ENTRIES}


def list_entries() -> list[str]:
    return [e.name for e in _ENTRIES]


def entry(name: str) -> RegistryEntry:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise UnknownEntryError(name) from None


def build(name: str) -> Scenario:
    return entry(name).builder()


def heptagon_checks(s: Scenario | None = None) -> dict:
    """Overlap and probability-table structure of the heptagonal configuration."""
    s = s or d5_k7_heptagonal()
    kets = np.array([p.vector.amplitudes for p in s.preparations])
    overlaps = np.abs(kets.conj() @ kets.T) ** 2
    allowed = np.array([1.0, 1 / 8, 0.0])
    overlap_err = float(np.abs(overlaps[..., None] - allowed).min(axis=-1).max())
    off = overlaps[:7, :7][~np.eye(7, dtype=bool)]
    p = build_probability_matrix(s).entries
    hi, lo = 0.5 + sqrt(7) / (4 * sqrt(3)), 0.5 - sqrt(7) / (4 * sqrt(3))
    want = np.empty((7, 7))
    for j in range(7):
        for i in range(7):
            want[j, i] = 0.5 if i == j else (hi if (j - i) % 7 in (1, 2, 4) else lo)
    table_err = float(max(np.abs(p[:7, :7] - want).max(), np.abs(p[:7, 7]).max()))
    return {"overlap_max_error": overlap_err,
            "offdiagonal_overlaps_are_1_8": bool(np.all(np.abs(off - 1 / 8) < 1e-12)),
            "probability_table_max_error": table_err,
            "passed": overlap_err < 1e-12 and table_err < 1e-12}


def verify(name: str) -> VerifyResult:
    e = entry(name)
    s = e.builder()
    computed = _abs_witness(s)
    passed = abs(computed - e.expected) < e.tolerance
    checks = {}
    if name == "d5_k7_heptagonal":
        checks = heptagon_checks(s)
        passed = passed and checks["passed"]
    return VerifyResult(name, computed, e.expected, e.tolerance, bool(passed), checks)


def verify_all() -> list[VerifyResult]:
    return [verify(n) for n in list_entries()]


# quantum maxima table

@functools.lru_cache(maxsize=None)
def _table3() -> dict:
    with resources.files("dimwitness").joinpath("data/table3.json").open() as fh:
        doc = json.load(fh)
    if doc.get("format") != "dimwitness.table3" or doc.get("version") != 1:
        raise StructuralError("unsupported quantum-maxima data file")
    return doc


def table3_value(k: int, d: int, field: Field | str, corrected: bool = True) -> float:
    """Two-digit tabulated maximum (with documented corrections applied by default)."""
    fld = Field.parse(field).value
    doc = _table3()
    if corrected:
        for c in doc["corrections"]:
            if (c["k"], c["d"], c["field"]) == (k, d, fld):
                return float(c["value"])
    for c in doc["cells"]:
        if (c["k"], c["d"], c["field"]) == (k, d, fld):
            return float(c["value"])
    raise StructuralError(f"no tabulated value for k={k}, d={d}, {fld}")


def rounding_exceptions() -> set:
    return {(c["k"], c["d"], c["field"]) for c in _table3()["rounding_exceptions"]}


def table3_cells() -> list[dict]:
    return list(_table3()["cells"])


def targets() -> list[RegistryTarget]:
    """Value-only optimizer targets: the most precise known value of each tabulated cell."""
    out = []
    for c in _table3()["cells"]:
        if "precise" in c:
            out.append(RegistryTarget(c["k"], c["d"], Field.parse(c["field"]), float(c["precise"]), 1e-6))
        else:
            out.append(RegistryTarget(c["k"], c["d"], Field.parse(c["field"]),
                                      table3_value(c["k"], c["d"], c["field"]), 5e-3))
    return out


def target(k: int, d: int, field: Field | str) -> RegistryTarget:
    fld = Field.parse(field)
    for t in targets():
        if (t.k, t.dim, t.field) == (k, d, fld):
            return t
    raise UnknownEntryError(f"k={k}, d={d}, {fld.value}")


def export_catalog() -> dict:
    """JSON-ready catalog of all entries and targets."""
    return {
        "format": "dimwitness.registry",
        "version": 1,
        "entries": [
            {"name": e.name, "expected": e.expected, "expected_expr": e.expected_expr,
             "provenance": e.provenance, "tolerance": e.tolerance, "tags": e.tags,
             "table_cells": [list(c) for c in e.table_cells], "notes": e.notes}
            for e in _ENTRIES
        ],
        "targets": [{"k": t.k, "d": t.dim, "field": t.field.value, "value": t.value,
                     "tolerance": t.tolerance} for t in targets()],
    }
