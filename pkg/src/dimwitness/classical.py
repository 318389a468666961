"""Classical register models and the maximal {0,1}-determinant problem."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ._backend import kernels
from .core import STRUCT_TOL, ProbabilityMatrix, hadamard_bound
from .errors import CapabilityError, StructuralError

# |det| maxima over k x (k+1) bit matrices with the ones row appended
CLASSICAL_MAXIMA = {1: 1, 2: 1, 3: 2, 4: 3, 5: 5, 6: 9, 7: 32, 8: 56, 9: 144}


@dataclass(frozen=True, eq=False)
class ClassicalModel:
    """A d-state register: ``r[a, j]`` = P(state a | preparation j), ``q[i, a]`` = P(yes | a, measurement i)."""

    r: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        q = np.array(self.q, dtype=float)
        if r.ndim != 2 or q.ndim != 2:
            raise StructuralError("r and q must be matrices")
        if q.shape[1] != r.shape[0]:
            raise StructuralError(f"q has {q.shape[1]} register columns, r has {r.shape[0]} rows")
        if r.shape[1] != q.shape[0] + 1:
            raise StructuralError("r needs k + 1 columns for k measurements")
        if r.min() < -STRUCT_TOL or np.abs(r.sum(axis=0) - 1).max() > STRUCT_TOL:
            raise StructuralError("r must be column-stochastic")
        if q.min() < -STRUCT_TOL or q.max() > 1 + STRUCT_TOL:
            raise StructuralError("q entries must lie in [0, 1]")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "q", q)

    @property
    def d(self) -> int:
        return self.r.shape[0]

    @property
    def k(self) -> int:
        return self.q.shape[0]

    @classmethod
    def deterministic(cls, bits) -> "ClassicalModel":
        """Register of size k+1, preparation j sends state j, measurement i reads bit (i, j)."""
        bits = np.asarray(bits, dtype=float)
        k = bits.shape[0]
        return cls(np.eye(k + 1), bits)


def classical_probability_matrix(model: ClassicalModel) -> ProbabilityMatrix:
    p = np.clip(model.q @ model.r, 0.0, 1.0)
    return ProbabilityMatrix.from_rows(p)


@dataclass(frozen=True, eq=False)
class BinaryWitnessMatrix:
    """k x (k+1) bit matrix; the all-ones row is implicit."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.array(self.bits)
        if b.ndim != 2 or b.shape[1] != b.shape[0] + 1:
            raise StructuralError(f"binary witness matrix must be k x (k+1), got {b.shape}")
        if not np.isin(b, (0, 1)).all():
            raise StructuralError("entries must be exactly 0 or 1")
        b = b.astype(np.int8)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def k(self) -> int:
        return self.bits.shape[0]

    def full(self) -> np.ndarray:
        return np.vstack([self.bits, np.ones(self.k + 1, dtype=np.int8)]).astype(np.int64)

    def determinant(self) -> int:
        return int(kernels.bareiss_det(self.full()))

    def rows(self) -> list[str]:
        return ["".join(str(int(v)) for v in row) for row in self.bits]

    @classmethod
    def from_rows(cls, rows) -> "BinaryWitnessMatrix":
        return cls(np.array([[int(c) for c in r] for r in rows], dtype=np.int8))


def exhaustive_binary_max(k: int) -> tuple[int, BinaryWitnessMatrix]:
    """Exact maximum of |det| for k <= 4.

    Row order only flips the sign and repeated rows give zero, so it is
    enough to scan sets of distinct rows. Candidates are screened with a
    batched float determinant and the winner is confirmed exactly.
    """
    if not 1 <= k <= 4:
        raise CapabilityError(f"exhaustive search supports 1 <= k <= 4, got k={k}")
    n = k + 1
    all_rows = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)
    combos = np.array(list(itertools.combinations(range(len(all_rows)), k)))
    mats = np.ones((len(combos), n, n))
    mats[:, :k, :] = all_rows[combos]
    dets = np.abs(np.linalg.det(mats))
    best = int(np.argmax(np.round(dets)))
    winner = BinaryWitnessMatrix(all_rows[combos[best]])
    value = abs(winner.determinant())
    if value != int(round(dets[best])):
        raise ArithmeticError("float screening and exact determinant disagree")
    return value, winner


def _load_table2() -> dict:
    with resources.files("dimwitness").joinpath("data/table2.json").open() as fh:
        doc = json.load(fh)
    if doc.get("format") != "dimwitness.table2" or doc.get("version") != 1:
        raise StructuralError("unsupported extremal-matrix data file")
    return {e["k"]: e for e in doc["entries"]}


def extremal_matrix(k: int) -> BinaryWitnessMatrix:
    """Stored extremal binary matrix for 1 <= k <= 9."""
    table = _load_table2()
    if k not in table:
        raise StructuralError(f"no stored extremal matrix for k={k}")
    return BinaryWitnessMatrix.from_rows(table[k]["rows"])


def verify_table2(k: int) -> tuple[int, int]:
    """(|det| of the stored matrix, tabulated maximum)."""
    table = _load_table2()
    if k not in table:
        raise StructuralError(f"no stored extremal matrix for k={k}")
    return abs(extremal_matrix(k).determinant()), int(table[k]["maximum"])


@dataclass(frozen=True)
class BinaryAnnealSchedule:
    """Cooling schedule for bit-flip annealing.

    Temperatures are in units of the Hadamard bound; one sweep is k(k+1)
    flips.
    """

    t0: float = 0.1
    ratio: float = 0.85
    stages: int = 40
    sweeps_per_stage: int = 20

    def __post_init__(self):
        if not 0 < self.ratio < 1 or self.t0 <= 0 or self.stages < 1 or self.sweeps_per_stage < 1:
            raise StructuralError("invalid binary annealing schedule")


def _binary_anneal_once(k: int, schedule: BinaryAnnealSchedule, rng: np.random.Generator):
    n = k + 1
    bits = rng.integers(0, 2, (k, n)).astype(np.int8)
    cur = abs(int(kernels.bareiss_det(np.vstack([bits, np.ones(n, np.int8)]))))
    best, best_bits = cur, bits.copy()
    scale = hadamard_bound(k)
    temp = schedule.t0
    steps = schedule.sweeps_per_stage * k * n
    for _ in range(schedule.stages):
        flips = rng.integers(0, k * n, steps).astype(np.int64)
        uniforms = rng.random(steps)
        cur, best = kernels.binary_anneal_stage(bits, cur, temp * scale, flips, uniforms, best_bits, best)
        temp *= schedule.ratio
    return int(best), best_bits


def binary_anneal_max(k: int, schedule: BinaryAnnealSchedule | None = None,
                      restarts: int = 20, seed: int = 0) -> tuple[int, BinaryWitnessMatrix]:
    """Best |det| found by bit-flip Metropolis over ``restarts`` independent runs."""
    if not 1 <= k <= 12:
        raise CapabilityError(f"binary annealing supports 1 <= k <= 12, got k={k}")
    schedule = schedule or BinaryAnnealSchedule()
    best, best_bits = -1, None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        val, bits = _binary_anneal_once(k, schedule, np.random.default_rng(child))
        if val > best:
            best, best_bits = val, bits
    return best, BinaryWitnessMatrix(best_bits)
