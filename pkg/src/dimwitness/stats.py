"""Detection of an excess dimension from finite-shot witness estimates.

Under the null hypothesis the true witness vanishes, so the estimate
``det(N_ij / N)`` fluctuates around zero with a variance predicted from the
probabilities and the adjugate (or, one measurement beyond the threshold,
from the second-order minors). A squared estimate far above that variance
rules the assumed dimension out; a small one proves nothing.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .core import (
    STRUCT_TOL,
    Effect,
    Preparation,
    ProbabilityMatrix,
    Scenario,
    StateVector,
    adjugate,
    build_probability_matrix,
)
from .errors import StructuralError


def _entries(pm) -> np.ndarray:
    if isinstance(pm, Scenario):
        pm = build_probability_matrix(pm)
    if isinstance(pm, ProbabilityMatrix):
        return pm.entries
    return ProbabilityMatrix(pm).entries


@dataclass(frozen=True, eq=False)
class PerturbedScenario:
    """Clean probability matrix ``p0`` plus a deviation ``delta_p`` (last row zero)."""

    base: ProbabilityMatrix
    delta_p: np.ndarray

    def __post_init__(self):
        base = self.base
        if isinstance(base, Scenario):
            base = build_probability_matrix(base)
        elif not isinstance(base, ProbabilityMatrix):
            base = ProbabilityMatrix(base)
        dp = np.array(self.delta_p, dtype=float)
        if dp.shape != base.entries.shape:
            raise StructuralError(f"delta_p shape {dp.shape} does not match {base.entries.shape}")
        if np.any(dp[-1] != 0):
            raise StructuralError("the always-yes row of delta_p must be zero")
        total = base.entries + dp
        if total.min() < -STRUCT_TOL or total.max() > 1 + STRUCT_TOL:
            raise StructuralError("p0 + delta_p leaves [0, 1]")
        dp.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "delta_p", dp)

    @property
    def perturbed(self) -> np.ndarray:
        return self.base.entries + self.delta_p


def first_order_witness(ps: PerturbedScenario) -> float:
    """``Tr(delta_p Adj p0)``: the leading term when every ``p0`` witness vanishes."""
    return float(np.sum(ps.delta_p * adjugate(ps.base).T))


def _pair_terms(p: np.ndarray):
    """Index arrays ``i, i2, j, j2`` and coefficients ``sign * minor`` for i < i2, j < j2."""
    n = p.shape[0]
    k = n - 1
    idx, coef = [], []
    for i, i2 in itertools.combinations(range(k), 2):
        rows = np.setdiff1d(np.arange(n), [i, i2])
        for j, j2 in itertools.combinations(range(n), 2):
            cols = np.setdiff1d(np.arange(n), [j, j2])
            m = np.linalg.det(p[np.ix_(rows, cols)]) if n > 2 else 1.0
            idx.append((i, i2, j, j2))
            coef.append((-1) ** (i + j + i2 + j2) * m)
    if not idx:
        return (np.zeros(0, dtype=int),) * 4 + (np.zeros(0),)
    i, i2, j, j2 = np.array(idx).T
    return i, i2, j, j2, np.array(coef)


def second_order_form(pm, delta_p) -> np.ndarray | float:
    """Second-order witness term for ``delta_p`` of shape ``(n, n)`` or ``(..., n, n)``.

    No range check is applied, so unphysical (e.g. Gaussian) deviations are accepted.
    """
    p = _entries(pm)
    dp = np.asarray(delta_p, dtype=float)
    if dp.shape[-2:] != p.shape:
        raise StructuralError(f"delta_p must end in shape {p.shape}, got {dp.shape}")
    i, i2, j, j2, c = _pair_terms(p)
    # j < j2 here; the reversed pair carries sgn = -1
    terms = dp[..., i, j] * dp[..., i2, j2] - dp[..., i, j2] * dp[..., i2, j]
    out = terms @ c
    return float(out) if out.ndim == 0 else out


def second_order_witness(ps: PerturbedScenario) -> float:
    """Sum over ``i < i'`` and ``j != j'`` of ``sgn(j'-j) dp_ij dp_i'j' M (-1)^(i+j+i'+j')``.

    ``M`` is the minor of ``p0`` without rows ``i, i'`` and columns ``j, j'``.
    """
    return second_order_form(ps.base, ps.delta_p)


def null_variance(pm, N):
    """Predicted variance of the witness estimate at ``N`` shots per cell.

    ``sum_ij p_ij (1 - p_ij) Adj_ji^2 / N``; ``N`` may be an array.
    """
    p = _entries(pm)
    adj = adjugate(p)
    s = float(np.sum(p * (1 - p) * adj.T ** 2))
    return s / np.asarray(N, dtype=float) if np.ndim(N) else s / float(N)


def null_variance_second(pm, N):
    """Second-order variance ``sum p p' (1-p)(1-p') M^2 / N^2`` over ``i < i'``, ``j != j'``."""
    p = _entries(pm)
    v = p * (1 - p)
    i, i2, j, j2, c = _pair_terms(p)
    s = float(np.sum(c * c * (v[i, j] * v[i2, j2] + v[i, j2] * v[i2, j])))
    n2 = np.asarray(N, dtype=float) ** 2
    return s / n2 if np.ndim(N) else s / float(n2)


@dataclass(frozen=True, eq=False)
class ShotData:
    """Outcome-1 counts ``counts[..., i, j]`` out of ``N`` shots (always-yes row implicit)."""

    N: int
    counts: np.ndarray
    seed: object = None

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if int(self.N) < 1:
            raise StructuralError("N must be positive")
        if c.ndim < 2 or c.shape[-1] != c.shape[-2] + 1:
            raise StructuralError(f"counts must be k x (k+1), got {c.shape}")
        if c.min(initial=0) < 0 or c.max(initial=0) > self.N:
            raise StructuralError("counts must lie in [0, N]")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "N", int(self.N))

    @property
    def k(self) -> int:
        return self.counts.shape[-2]

    def estimate(self) -> np.ndarray:
        """Estimated probability matrices ``N_ij / N`` with the ones row appended."""
        p = self.counts / self.N
        ones = np.ones(p.shape[:-2] + (1, p.shape[-1]))
        return np.concatenate([p, ones], axis=-2)

    def witness(self):
        w = np.linalg.det(self.estimate())
        return float(w) if np.ndim(w) == 0 else w


def cell_uniforms(seed: int, i: int, j: int, trials: int, first_trial: int = 0) -> np.ndarray:
    """Uniforms for cell (i, j), trials ``first_trial .. first_trial + trials - 1``.

    Each cell owns the substream ``SeedSequence(seed, spawn_key=(i, j))``; trial
    ``t`` always takes its ``t``-th draw, so any split of the trials across
    workers gives the same numbers.
    """
    bitgen = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i, j)))
    if first_trial:
        bitgen.advance(first_trial)
    return np.random.Generator(bitgen).random(trials)


def simulate_shots(source, N: int, seed: int, trials: int | None = None, first_trial: int = 0) -> ShotData:
    """Binomial counts per cell by inverse-CDF sampling.

    ``source`` is a Scenario or a probability matrix. With ``trials=None``
    the counts are a single k x (k+1) table; otherwise they have a leading
    trial axis.
    """
    p = _entries(source)
    if int(N) < 1:
        raise StructuralError("N must be positive")
    k = p.shape[0] - 1
    T = 1 if trials is None else int(trials)
    counts = np.empty((T, k, k + 1), dtype=np.int64)
    for i in range(k):
        for j in range(k + 1):
            u = cell_uniforms(seed, i, j, T, first_trial)
            draws = binom.ppf(u, N, p[i, j])
            counts[:, i, j] = np.clip(np.nan_to_num(draws, nan=0.0), 0, N).astype(np.int64)
    return ShotData(N, counts[0] if trials is None else counts, seed)


class Verdict(enum.Enum):
    CONSISTENT = "CONSISTENT"
    EXCESS_DIMENSION = "EXCESS_DIMENSION"


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    z_score: float
    threshold: float
    witness_hat: float
    variance: float

    def to_dict(self) -> dict:
        return {"witness_hat": self.witness_hat, "variance": self.variance, "z": self.z_score,
                "threshold": self.threshold, "verdict": self.verdict.value}


def decide(w_hat: float, variance: float, z: float = 5.0) -> Decision:
    """EXCESS_DIMENSION when ``w_hat^2 > z^2 variance``; otherwise CONSISTENT.

    CONSISTENT only means the data do not rule the assumed dimension out.
    """
    if not variance > 0:
        raise StructuralError("variance must be positive")
    score = abs(w_hat) / float(np.sqrt(variance))
    verdict = Verdict.EXCESS_DIMENSION if w_hat * w_hat > z * z * variance else Verdict.CONSISTENT
    return Decision(verdict, float(score), float(z), float(w_hat), float(variance))


def detect(shots: ShotData, z: float = 5.0, order: int = 1, model=None) -> Decision:
    """Decide from one table of counts.

    The variance comes from ``model`` (a Scenario or probability matrix for
    the assumed-dimension prediction) when given, else from the estimated
    probabilities themselves.
    """
    if shots.counts.ndim != 2:
        raise StructuralError("detect takes a single table of counts; use detect_trials for batches")
    p = shots.estimate() if model is None else _entries(model)
    var = null_variance(p, shots.N) if order == 1 else null_variance_second(p, shots.N)
    return decide(shots.witness(), var, z)


def _adjugate_stack(p: np.ndarray) -> np.ndarray:
    n = p.shape[-1]
    adj = np.empty_like(p)
    idx = np.arange(n)
    for i in range(n):
        for j in range(n):
            sub = p[..., idx != i, :][..., idx != j]
            adj[..., j, i] = (-1) ** (i + j) * (np.linalg.det(sub) if n > 1 else 1.0)
    return adj


def detect_trials(shots: ShotData, z: float = 5.0, model=None) -> dict:
    """First-order decision for every trial of a batch; returns arrays keyed like ``Decision.to_dict``."""
    p_hat = shots.estimate()
    if p_hat.ndim == 2:
        p_hat = p_hat[None]
    w = np.linalg.det(p_hat)
    if model is None:
        adj = _adjugate_stack(p_hat)
        var = np.sum(p_hat * (1 - p_hat) * np.swapaxes(adj, -1, -2) ** 2, axis=(-1, -2)) / shots.N
    else:
        var = np.full(w.shape, null_variance(model, shots.N))
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(var > 0, np.abs(w) / np.sqrt(var), np.where(w == 0, 0.0, np.inf))
    excess = w * w > z * z * var
    return {"witness_hat": w, "variance": var, "z": score, "excess": excess}


# physical deviations

def _pad(v: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros(d, dtype=complex)
    out[:v.size] = v
    return out


def embed_leakage(s: Scenario, delta: float, phases_x=None, phases_y=None) -> Scenario:
    """Embed a pure-state scenario into one extra level.

    Each ket becomes ``sqrt(1 - delta^2)|v> + delta e^{i phase}|d+1>``; for
    rank > 1 effects only the first column leaks and the others are padded.
    """
    d = s.dim
    if not 0 <= delta < 1:
        raise StructuralError("delta must lie in [0, 1)")
    phases_x = np.zeros(len(s.preparations)) if phases_x is None else np.asarray(phases_x, float)
    phases_y = np.zeros(s.k) if phases_y is None else np.asarray(phases_y, float)
    extra = np.zeros(d + 1, dtype=complex)
    extra[d] = 1
    c = np.sqrt(1 - delta ** 2)
    preps = []
    for p, ph in zip(s.preparations, phases_x):
        if p.vector is None:
            raise StructuralError("leakage embedding needs pure preparations")
        v = c * _pad(p.vector.amplitudes, d + 1) + delta * np.exp(1j * ph) * extra
        preps.append(Preparation.pure(StateVector.normalized(v)))
    effects = []
    for e, ph in zip(s.effects, phases_y):
        if e.columns is None:
            raise StructuralError("leakage embedding needs projector effects")
        cols = [_pad(col.amplitudes, d + 1) for col in e.columns]
        cols[0] = c * cols[0] + delta * np.exp(1j * ph) * extra
        effects.append(Effect([StateVector.normalized(v) for v in cols]))
    return Scenario(preps, effects)


def physical_delta_p(s: Scenario, x_primes, y_primes) -> np.ndarray:
    """``delta p_ij = Tr(dY_i dX_j)`` with ``dX = |x'><x| + |x><x'|``, ``dY = |y'><y| + |y><y'|``.

    ``x_primes`` / ``y_primes`` are deviation kets in a space of dimension at
    least ``d`` (kets of the scenario are zero-padded); rank-1 effects only.
    """
    x_primes = [np.asarray(v, dtype=complex) for v in x_primes]
    y_primes = [np.asarray(v, dtype=complex) for v in y_primes]
    D = max(v.size for v in x_primes + y_primes)
    if len(x_primes) != len(s.preparations) or len(y_primes) != s.k:
        raise StructuralError("one deviation ket per preparation and per effect")
    xs = [_pad(p.vector.amplitudes, D) for p in s.preparations]
    ys = []
    for e in s.effects:
        if e.columns is None or len(e.columns) != 1:
            raise StructuralError("physical deviations need rank-1 effects")
        ys.append(_pad(e.columns[0].amplitudes, D))
    dX = [np.outer(_pad(xp, D), x.conj()) + np.outer(x, _pad(xp, D).conj()) for x, xp in zip(xs, x_primes)]
    dY = [np.outer(_pad(yp, D), y.conj()) + np.outer(y, _pad(yp, D).conj()) for y, yp in zip(ys, y_primes)]
    k = s.k
    dp = np.zeros((k + 1, k + 1))
    for i in range(k):
        for j in range(k + 1):
            dp[i, j] = np.trace(dY[i] @ dX[j]).real
    return dp
