"""Simulated-annealing maximization of |W_k| over gauge-fixed pure-state scenarios.

Preparations use a staircase gauge: preparation ``j < d`` lives in the span
of the first ``j + 1`` basis vectors, with its last nonzero component real
and non-phased; the remaining preparations and every free effect column are
general rays (first component real). Each ray is parametrized by polar
angles on the hypersphere plus relative phases.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from ._backend import BACKEND, kernels
from .core import (
    Effect,
    Field,
    Preparation,
    Scenario,
    StateVector,
    build_probability_matrix,
    gram_schmidt,
    hadamard_bound,
    witness,
)
from .errors import DegenerateInputError, NumericIntegrityError, StructuralError

TIE_TOL = 1e-6


@dataclass(frozen=True)
class AngleParametrization:
    """Angle layout for ``k + 1`` preparations and ``k`` effects in dimension ``dim``.

    ``ranks[i]`` is the number of free projector columns of effect ``i``;
    ``fixed_blocks[i]`` lists basis indices whose projectors are added to it.
    """

    dim: int
    k: int
    field: Field = Field.COMPLEX
    ranks: tuple = ()
    fixed_blocks: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "field", Field.parse(self.field))
        if self.dim < 1 or self.k < 1:
            raise StructuralError("dim and k must be positive")
        ranks = tuple(int(r) for r in self.ranks) if self.ranks else (1,) * self.k
        fixed = tuple(tuple(sorted(int(b) for b in fb)) for fb in self.fixed_blocks) \
            if self.fixed_blocks else ((),) * self.k
        if len(ranks) != self.k or len(fixed) != self.k:
            raise StructuralError(f"rank profile and fixed blocks need {self.k} entries")
        for r, fb in zip(ranks, fixed):
            if r < 0 or any(not 0 <= b < self.dim for b in fb) or len(set(fb)) != len(fb):
                raise StructuralError("invalid rank or fixed block index")
            if r + len(fb) > self.dim:
                raise StructuralError(f"effect rank {r} + {len(fb)} fixed exceeds dimension {self.dim}")
            if r + len(fb) == 0:
                raise StructuralError("an effect needs at least one column")
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "fixed_blocks", fixed)

    @classmethod
    def uniform(cls, dim: int, k: int, field: Field | str = Field.COMPLEX, rank: int = 1):
        return cls(dim, k, Field.parse(field), (rank,) * k)

    def _nphase(self, support: int, general: bool) -> int:
        if self.field is Field.REAL:
            return 0
        return support - 1 if general else max(0, support - 2)

    def layout(self):
        """Block table ``(kind, owner, support, offset, nphase)`` plus per-effect bookkeeping.

        ``kind`` is 0 for a preparation and 1 for an effect column.
        """
        d = self.dim
        blocks, off = [], 0
        for j in range(self.k + 1):
            general = j >= d
            support = d if general else j + 1
            nph = self._nphase(support, general)
            blocks.append((0, j, support, off, nph))
            off += support - 1 + nph
        eff_first, eff_nfree = [], []
        for i, r in enumerate(self.ranks):
            eff_first.append(len(blocks))
            eff_nfree.append(r)
            nph = self._nphase(d, True)
            for _ in range(r):
                blocks.append((1, i, d, off, nph))
                off += d - 1 + nph
        angle_block = np.empty(off, dtype=np.int64)
        for b, (_, _, s, o, nph) in enumerate(blocks):
            angle_block[o:o + s - 1 + nph] = b
        fixed = np.zeros((self.k, d), dtype=np.int8)
        for i, fb in enumerate(self.fixed_blocks):
            fixed[i, list(fb)] = 1
        return (np.array(blocks, dtype=np.int64).reshape(-1, 5), angle_block,
                np.array(eff_first, dtype=np.int64), np.array(eff_nfree, dtype=np.int64), fixed)

    @property
    def n_angles(self) -> int:
        return int(self.layout()[1].size)

    def block_vectors(self, angles) -> list[np.ndarray]:
        angles = np.asarray(angles, dtype=float)
        blocks = self.layout()[0]
        if angles.size != self.n_angles:
            raise StructuralError(f"expected {self.n_angles} angles, got {angles.size}")
        out = []
        for _, _, s, off, nph in blocks:
            v = np.zeros(self.dim, dtype=complex)
            run = 1.0
            for q in range(s - 1):
                v[q] = run * math.cos(angles[off + q])
                run *= math.sin(angles[off + q])
            v[s - 1] = run
            for q in range(nph):
                th = angles[off + s - 1 + q]
                v[q + 1] *= complex(math.cos(th), math.sin(th))
            out.append(v)
        return out

    def decode(self, angles) -> Scenario:
        """Scenario for an angle vector (effect columns orthonormalized in order)."""
        vecs = self.block_vectors(angles)
        real = self.field is Field.REAL
        fld = self.field
        preps = [Preparation.pure(StateVector(v.real if real else v, fld)) for v in vecs[:self.k + 1]]
        effects, b = [], self.k + 1
        basis = np.eye(self.dim)
        for r, fb in zip(self.ranks, self.fixed_blocks):
            cols = [basis[m] for m in fb] + vecs[b:b + r]
            b += r
            effects.append(Effect(gram_schmidt(cols)))
        return Scenario(preps, effects, field=fld)

    def engine(self, angles):
        blocks, angle_block, eff_first, eff_nfree, fixed = self.layout()
        return kernels.AnnealEngine(self.dim, self.k, blocks, angle_block, eff_first,
                                    eff_nfree, fixed, np.asarray(angles, dtype=float))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "k": self.k, "field": self.field.value,
                "ranks": list(self.ranks), "fixed_blocks": [list(f) for f in self.fixed_blocks]}

    @classmethod
    def from_dict(cls, doc: dict) -> "AngleParametrization":
        return cls(int(doc["dim"]), int(doc["k"]), Field.parse(doc["field"]),
                   tuple(doc["ranks"]), tuple(tuple(f) for f in doc["fixed_blocks"]))


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling ``T_{s+1} = ratio * T_s``.

    The proposal half-width at stage ``s`` is ``pi * T_s / t0`` radians, so
    the domain shrinks with the temperature. Annealing stops once the
    relative width ``T_s / t0`` drops below ``precision`` (or after
    ``max_stages``). ``t0`` is measured in units of |W_k|.
    """

    t0: float = 3e-3
    ratio: float = 0.25
    precision: float = 1e-9
    sweeps_per_stage: int = 200
    max_stages: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise StructuralError("cooling ratio must lie in (0, 1)")
        if self.precision <= 0 or self.t0 <= 0 or self.sweeps_per_stage < 1:
            raise StructuralError("t0, precision and sweeps_per_stage must be positive")
        # smallest s with ratio**s < precision
        derived = 0
        while self.ratio ** derived >= self.precision:
            derived += 1
        derived = max(derived, 1)
        if self.max_stages is None:
            object.__setattr__(self, "max_stages", derived)
        elif self.max_stages < 1:
            raise StructuralError("max_stages must be positive")

    def temperatures(self) -> list[float]:
        temps = []
        for s in range(self.max_stages):
            if self.ratio ** s < self.precision:
                break
            temps.append(self.t0 * self.ratio ** s)
        return temps

    def width(self, temperature: float) -> float:
        return math.pi * temperature / self.t0

    def to_dict(self) -> dict:
        return {"t0": self.t0, "ratio": self.ratio, "precision": self.precision,
                "sweeps_per_stage": self.sweeps_per_stage, "max_stages": self.max_stages,
                "seed": self.seed}


@dataclass(eq=False)
class OptimizationResult:
    best_value: float
    best_scenario: Scenario
    best_angles: np.ndarray
    trace: list
    evaluations: int
    seed: object
    parametrization: AngleParametrization
    refined_value: float | None = None
    refined_scenario: Scenario | None = None
    restart_values: list = dc_field(default_factory=list)

    @property
    def value(self) -> float:
        return self.best_value if self.refined_value is None else max(self.best_value, self.refined_value)

    @property
    def scenario(self) -> Scenario:
        if self.refined_value is not None and self.refined_value >= self.best_value:
            return self.refined_scenario
        return self.best_scenario


def _random_start(params: AngleParametrization, rng: np.random.Generator):
    for _ in range(100):
        angles = rng.random(params.n_angles) * 2 * math.pi
        try:
            return angles, params.engine(angles)
        except ArithmeticError:
            continue
    raise DegenerateInputError("could not draw a nondegenerate starting point")


def anneal(params: AngleParametrization, schedule: AnnealSchedule | None = None,
           seed=None, angles0=None) -> OptimizationResult:
    """One Metropolis run on ``-|W_k|``.

    ``seed`` may be an int or a ``SeedSequence``; it defaults to
    ``schedule.seed``. All randomness comes from one generator in a fixed
    order: starting angles, then per stage the proposal and acceptance
    uniforms.
    """
    schedule = schedule or AnnealSchedule()
    seed = schedule.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    if angles0 is None:
        _, eng = _random_start(params, rng)
    else:
        eng = params.engine(np.asarray(angles0, dtype=float))
    n = params.n_angles
    steps = schedule.sweeps_per_stage * n
    trace = []
    for temp in schedule.temperatures():
        width = schedule.width(temp)
        proposals = rng.random(steps)
        uniforms = rng.random(steps)
        eng.run_stage(temp, width, schedule.sweeps_per_stage, proposals, uniforms)
        if eng.nonfinite:
            raise NumericIntegrityError("non-finite objective during annealing")
        trace.append(float(eng.best))
    best_angles = eng.best_angles
    scenario = params.decode(best_angles)
    value = abs(witness(build_probability_matrix(scenario)))
    if value > hadamard_bound(params.k) + 1e-9:
        raise NumericIntegrityError("annealing result exceeds the Hadamard bound")
    return OptimizationResult(value, scenario, best_angles, trace, int(eng.evaluations),
                              _seed_repr(seed), params)


def _seed_repr(seed):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": int(seed.entropy), "spawn_key": [int(v) for v in seed.spawn_key]}
    return seed


# Local coordinate refinement

class _LocalModel:
    """Mutable kets and columns of a scenario with cached probability matrix."""

    def __init__(self, s: Scenario):
        self.s = s
        self.real = s.field is Field.REAL
        self.kets = [p.vector.amplitudes.copy() if p.vector is not None else None for p in s.preparations]
        self.cols = [[c.amplitudes.copy() for c in e.columns] if e.columns is not None else None
                     for e in s.effects]
        self.X = np.array([p.matrix for p in s.preparations])
        self.Y = np.array([e.matrix for e in s.effects])
        self.p = np.ones((s.k + 1, s.k + 1))
        self.p[:s.k] = np.einsum("iab,jba->ij", self.Y, self.X).real

    def coordinates(self):
        d = self.s.dim
        dirs = [1.0] if self.real else [1.0, 1j]
        out = []
        for j, v in enumerate(self.kets):
            if v is not None:
                out += [("x", j, 0, q, z) for q in range(d) for z in dirs]
        for i, cols in enumerate(self.cols):
            if cols is not None:
                out += [("y", i, c, q, z) for c in range(len(cols)) for q in range(d) for z in dirs]
        return out

    def value(self) -> float:
        return abs(float(np.linalg.det(self.p)))

    def trial(self, coord, h):
        """Apply a move, returning an undo token (or None if degenerate)."""
        kind, idx, c, q, z = coord
        if kind == "x":
            old = (self.kets[idx], self.X[idx].copy(), self.p[:-1, idx].copy())
            v = self.kets[idx].copy()
            v[q] += h * z
            v /= math.sqrt(np.vdot(v, v).real)
            self.kets[idx] = v
            self.X[idx] = np.outer(v, v.conj())
            self.p[:-1, idx] = np.einsum("iab,ba->i", self.Y, self.X[idx]).real
            return old
        cols = [w.copy() for w in self.cols[idx]]
        cols[c][q] += h * z
        ortho = _orthonormalize(cols)
        if ortho is None:
            return None
        old = (self.cols[idx], self.Y[idx].copy(), self.p[idx].copy())
        self.cols[idx] = ortho
        B = np.array(ortho)
        self.Y[idx] = B.T @ B.conj()
        self.p[idx, :] = np.einsum("ab,jba->j", self.Y[idx], self.X).real
        return old

    def undo(self, coord, token):
        kind, idx = coord[0], coord[1]
        if kind == "x":
            self.kets[idx], self.X[idx], self.p[:-1, idx] = token
        else:
            self.cols[idx], self.Y[idx], self.p[idx] = token

    def scenario(self) -> Scenario:
        fld = self.s.field
        preps = [Preparation.pure(StateVector(v.real if self.real else v, fld)) if v is not None else p
                 for v, p in zip(self.kets, self.s.preparations)]
        effects = [Effect([StateVector(w.real if self.real else w, fld) for w in cols])
                   if cols is not None else e for cols, e in zip(self.cols, self.s.effects)]
        return Scenario(preps, effects, field=fld)


def _orthonormalize(cols):
    out = []
    for w in cols:
        w = w / math.sqrt(np.vdot(w, w).real)
        for _ in range(2):
            for q in out:
                w = w - np.vdot(q, w) * q
        nrm = math.sqrt(np.vdot(w, w).real)
        if nrm < 1e-8:
            return None
        out.append(w / nrm)
    return out


def refine(scenario: Scenario, step0: float = 1e-2, tol: float = 1e-9,
           max_passes: int = 8) -> Scenario:
    """Coordinate-wise finite-difference ascent of |W_k|.

    Every ket and effect column is nudged along each real (and, for complex
    scenarios, imaginary) basis direction by +-step and renormalized; moves
    that increase |W_k| are kept. After a pass with gains the same moves are
    replayed once as a pattern step. The step halves when a pass brings no
    gain or after ``max_passes`` passes, and the search ends below ``tol``.
    The objective never decreases; mixed preparations and raw-matrix
    effects are held fixed.
    """
    model = _LocalModel(scenario)
    coords = model.coordinates()
    best = start = model.value()
    step = step0

    def gain(val):
        # ignore rounding-level changes on flat directions
        return val > best + 1e-14 * max(1.0, best)

    while step >= tol:
        for _ in range(max_passes):
            moves = []
            for coord in coords:
                for h in (step, -step):
                    token = model.trial(coord, h)
                    if token is None:
                        continue
                    val = model.value()
                    if gain(val):
                        best = val
                        moves.append((coord, h))
                        break
                    model.undo(coord, token)
            if not moves:
                break
            # pattern step: repeat the successful moves while they keep paying off
            for _ in range(64):
                undo = []
                for coord, h in moves:
                    token = model.trial(coord, h)
                    if token is not None:
                        undo.append((coord, token))
                val = model.value()
                if gain(val):
                    best = val
                    continue
                for coord, token in reversed(undo):
                    model.undo(coord, token)
                break
        step /= 2
    if best <= start:
        return scenario
    return model.scenario()


def _run_restart(args):
    params, schedule, seed_seq = args
    return anneal(params, schedule, seed=seed_seq)


def optimize(params: AngleParametrization, schedule: AnnealSchedule | None = None,
             restarts: int = 8, jobs: int = 1, do_refine: bool = True) -> OptimizationResult:
    """Best of ``restarts`` independent anneal runs, then ``refine`` on the winner.

    Restart ``r`` uses child ``r`` of ``SeedSequence(schedule.seed)``, so the
    outcome does not depend on ``jobs``.
    """
    schedule = schedule or AnnealSchedule()
    if restarts < 1:
        raise StructuralError("restarts must be positive")
    children = np.random.SeedSequence(schedule.seed).spawn(restarts)
    tasks = [(params, schedule, c) for c in children]
    if jobs > 1 and restarts > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_restart, tasks))
    else:
        results = [_run_restart(t) for t in tasks]
    values = [r.best_value for r in results]
    best = results[int(np.argmax(values))]
    if do_refine:
        refined = refine(best.best_scenario)
        best.refined_scenario = refined
        best.refined_value = abs(witness(build_probability_matrix(refined)))
    best.restart_values = values
    best.evaluations = sum(r.evaluations for r in results)
    best.seed = schedule.seed
    return best


@dataclass(eq=False)
class RankSweepResult:
    results: dict
    best_rank: int
    ties: list

    @property
    def best(self) -> OptimizationResult:
        return self.results[self.best_rank]


def admissible_ranks(dim: int) -> list[int]:
    return list(range(1, max(1, dim // 2) + 1))


def rank_sweep(dim: int, k: int, field: Field | str = Field.COMPLEX,
               schedule: AnnealSchedule | None = None, restarts: int = 8, jobs: int = 1,
               do_refine: bool = True) -> RankSweepResult:
    """Optimize every uniform rank profile ``t = 1..floor(d/2)``; report the best and ties."""
    if dim > 6 or k > 9:
        raise StructuralError("rank sweeps are supported for d <= 6 and k <= 9")
    results = {}
    for t in admissible_ranks(dim):
        params = AngleParametrization.uniform(dim, k, field, t)
        results[t] = optimize(params, schedule, restarts=restarts, jobs=jobs, do_refine=do_refine)
    top = max(r.value for r in results.values())
    ties = [t for t, r in results.items() if top - r.value <= TIE_TOL]
    return RankSweepResult(results, ties[0], ties)


__all__ = [
    "AngleParametrization", "AnnealSchedule", "OptimizationResult", "RankSweepResult",
    "anneal", "refine", "optimize", "rank_sweep", "admissible_ranks", "BACKEND",
]
