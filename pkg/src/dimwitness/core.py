"""Domain types and exact evaluation of the determinant witness.

Conventions used throughout the package:

* rows of a probability matrix are measurements ``i``, columns are
  preparations ``j``; the last row is the always-yes measurement (all ones);
* a scenario with ``k`` effects carries exactly ``k + 1`` preparations;
* indices in the Python API are 0-based.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    InvalidBlochVectorError,
    NumericIntegrityError,
    StructuralError,
)

STRUCT_TOL = 1e-12
SPECTRAL_TOL = 1e-10
GS_THRESHOLD = 1e-8


class Field(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @classmethod
    def parse(cls, value: "Field | str") -> "Field":
        if isinstance(value, Field):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise StructuralError(f"unknown field {value!r}; expected 'real' or 'complex'") from None


class Model(enum.Enum):
    CLASSICAL = "classical"
    REAL = "real"
    COMPLEX = "complex"


def _is_real(a: np.ndarray) -> bool:
    return not np.any(np.imag(a))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitude vector tagged with the field it lives in."""

    amplitudes: np.ndarray
    field: Field = Field.COMPLEX

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise StructuralError("state vector needs at least one component")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > STRUCT_TOL:
            raise StructuralError(f"state vector norm {norm!r} differs from 1")
        fld = Field.parse(self.field)
        if fld is Field.REAL and not _is_real(amps):
            raise StructuralError("REAL state vector with nonzero imaginary part")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "field", fld)

    @classmethod
    def normalized(cls, amplitudes, field: Field | str | None = None) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm < GS_THRESHOLD:
            raise DegenerateInputError("cannot normalize a (near) zero vector")
        if field is None:
            field = Field.REAL if _is_real(amps) else Field.COMPLEX
        return cls(amps / norm, field)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


class Preparation:
    """Density matrix of a prepared state; keeps the ket when the state is pure."""

    __slots__ = ("matrix", "vector")

    def __init__(self, matrix, vector: StateVector | None = None):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructuralError(f"preparation must be a square matrix, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > STRUCT_TOL:
            raise StructuralError("preparation matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > STRUCT_TOL:
            raise StructuralError(f"preparation trace {tr!r} differs from 1")
        if np.linalg.eigvalsh(m).min() < -SPECTRAL_TOL:
            raise StructuralError("preparation matrix is not positive semidefinite")
        m.setflags(write=False)
        self.matrix = m
        self.vector = vector

    @classmethod
    def pure(cls, state) -> "Preparation":
        if not isinstance(state, StateVector):
            state = StateVector.normalized(state)
        return cls(state.projector(), state)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return _is_real(self.matrix)

    def __repr__(self):
        kind = "pure" if self.vector is not None else "mixed"
        return f"Preparation(dim={self.dim}, {kind})"


class Effect:
    """Measurement operator ``0 <= Y <= 1``.

    Normally a projector onto an orthonormal column set.  ``from_matrix``
    accepts an arbitrary Hermitian operator with spectrum in [0, 1]; such
    effects have ``columns = None``.
    """

    __slots__ = ("matrix", "columns")

    def __init__(self, columns: Sequence[StateVector], dim: int | None = None):
        cols = tuple(c if isinstance(c, StateVector) else StateVector.normalized(c) for c in columns)
        if not cols and dim is None:
            raise StructuralError("a rank-0 effect needs an explicit dimension")
        d = cols[0].dim if cols else int(dim)
        if any(c.dim != d for c in cols):
            raise StructuralError("effect columns have different dimensions")
        if len(cols) > d:
            raise StructuralError(f"rank {len(cols)} exceeds dimension {d}")
        if cols:
            basis = np.array([c.amplitudes for c in cols])
            gram = basis.conj() @ basis.T
            if np.abs(gram - np.eye(len(cols))).max() > SPECTRAL_TOL:
                raise StructuralError("effect columns are not orthonormal")
            mat = basis.T @ basis.conj()
        else:
            mat = np.zeros((d, d), dtype=complex)
        mat.setflags(write=False)
        self.matrix = mat
        self.columns = cols

    @classmethod
    def projector(cls, *vectors) -> "Effect":
        return cls(list(vectors))

    @classmethod
    def from_matrix(cls, matrix) -> "Effect":
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructuralError(f"effect must be a square matrix, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > STRUCT_TOL:
            raise StructuralError("effect matrix is not Hermitian")
        ev = np.linalg.eigvalsh(m)
        if ev.min() < -SPECTRAL_TOL or ev.max() > 1 + SPECTRAL_TOL:
            raise StructuralError("effect eigenvalues outside [0, 1]")
        obj = cls.__new__(cls)
        m.setflags(write=False)
        obj.matrix = m
        obj.columns = None
        return obj

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        if self.columns is not None:
            return len(self.columns)
        return int(np.sum(np.linalg.eigvalsh(self.matrix) > SPECTRAL_TOL))

    @property
    def is_real(self) -> bool:
        return _is_real(self.matrix)

    def __repr__(self):
        kind = f"rank={len(self.columns)}" if self.columns is not None else "raw"
        return f"Effect(dim={self.dim}, {kind})"


class Scenario:
    """``k + 1`` preparations and ``k`` effects on a ``d``-level system."""

    __slots__ = ("dim", "field", "preparations", "effects")

    def __init__(self, preparations: Sequence[Preparation], effects: Sequence[Effect],
                 field: Field | str | None = None, dim: int | None = None):
        preps = tuple(preparations)
        effs = tuple(effects)
        if len(preps) != len(effs) + 1:
            raise StructuralError(
                f"{len(effs)} effects need exactly {len(effs) + 1} preparations, got {len(preps)}")
        d = preps[0].dim if dim is None else int(dim)
        if any(p.dim != d for p in preps) or any(e.dim != d for e in effs):
            raise StructuralError("preparations and effects must share one dimension")
        all_real = all(p.is_real for p in preps) and all(e.is_real for e in effs)
        if field is None:
            fld = Field.REAL if all_real else Field.COMPLEX
        else:
            fld = Field.parse(field)
            if fld is Field.REAL and not all_real:
                raise StructuralError("REAL scenario contains complex entries")
        self.dim = d
        self.field = fld
        self.preparations = preps
        self.effects = effs

    @classmethod
    def from_vectors(cls, preparations: Iterable, effects: Iterable, field=None) -> "Scenario":
        """Build from kets; each effect is a ket or a sequence of kets (projector columns)."""
        preps = [p if isinstance(p, Preparation) else Preparation.pure(p) for p in preparations]
        effs = []
        for e in effects:
            if isinstance(e, Effect):
                effs.append(e)
                continue
            arr = e.amplitudes if isinstance(e, StateVector) else e
            if isinstance(arr, np.ndarray) and arr.ndim == 1:
                effs.append(Effect([e]))
            elif isinstance(e, (list, tuple)) and e and np.ndim(e[0]) == 0:
                effs.append(Effect([e]))
            else:
                effs.append(Effect(list(e)))
        return cls(preps, effs, field=field)

    @property
    def k(self) -> int:
        return len(self.effects)

    def __repr__(self):
        return f"Scenario(dim={self.dim}, field={self.field.value}, k={self.k})"


class ProbabilityMatrix:
    """(k+1) x (k+1) outcome probabilities with the always-yes last row."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        p = np.array(entries, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
            raise StructuralError(f"probability matrix must be square (k+1)x(k+1), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise NumericIntegrityError("probability matrix has non-finite entries")
        if p.min() < -STRUCT_TOL or p.max() > 1 + STRUCT_TOL:
            raise StructuralError("probability entries outside [0, 1]")
        if np.any(p[-1] != 1.0):
            raise StructuralError("last row of a probability matrix must be all ones")
        p.setflags(write=False)
        self.entries = p

    @classmethod
    def from_rows(cls, rows) -> "ProbabilityMatrix":
        """Append the always-yes row to a k x (k+1) block."""
        rows = np.asarray(rows, dtype=float)
        return cls(np.vstack([rows, np.ones(rows.shape[1])]))

    @property
    def k(self) -> int:
        return self.entries.shape[0] - 1

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self):
        return f"ProbabilityMatrix(k={self.k})"


@dataclass(frozen=True, eq=False)
class WitnessReport:
    witness: float
    probability_matrix: ProbabilityMatrix
    scenario_digest: str
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        bound = hadamard_bound(self.probability_matrix.k)
        if abs(self.witness) > bound + 1e-9:
            raise NumericIntegrityError(f"|W| = {abs(self.witness)} exceeds the Hadamard bound {bound}")


def _matrix(pm) -> np.ndarray:
    return pm.entries if isinstance(pm, ProbabilityMatrix) else np.asarray(pm, dtype=float)


def hadamard_bound(k: int) -> float:
    """Largest determinant of a (k+1)x(k+1) matrix with entries in [0,1] and a ones row."""
    if k < 1:
        raise StructuralError("k must be at least 1")
    return (k + 1) ** ((k + 1) / 2) / 2 ** k


def _check_probability(value: complex) -> float:
    if abs(value.imag) > SPECTRAL_TOL:
        raise NumericIntegrityError(f"trace has imaginary part {value.imag!r}")
    re = value.real
    if not math.isfinite(re) or re < -SPECTRAL_TOL or re > 1 + SPECTRAL_TOL:
        raise NumericIntegrityError(f"probability {re!r} outside [0, 1]")
    return min(1.0, max(0.0, re))


def probability(prep: Preparation, eff: Effect) -> float:
    """Outcome-1 probability ``Tr(Y X)``."""
    if prep.dim != eff.dim:
        raise StructuralError(f"dimension mismatch: preparation {prep.dim}, effect {eff.dim}")
    value = complex(np.sum(eff.matrix.T * prep.matrix))
    return _check_probability(value)


def build_probability_matrix(s: Scenario) -> ProbabilityMatrix:
    k = s.k
    ys = np.array([e.matrix for e in s.effects]).reshape(k, s.dim, s.dim)
    xs = np.array([p.matrix for p in s.preparations])
    raw = np.einsum("iab,jba->ij", ys, xs)
    if np.abs(raw.imag).max(initial=0.0) > SPECTRAL_TOL:
        raise NumericIntegrityError("trace with nonzero imaginary part in probability matrix")
    re = raw.real
    if not np.all(np.isfinite(re)) or re.min(initial=0.0) < -SPECTRAL_TOL or re.max(initial=0.0) > 1 + SPECTRAL_TOL:
        raise NumericIntegrityError("probability outside [0, 1]")
    p = np.ones((k + 1, k + 1))
    p[:k] = np.clip(re, 0.0, 1.0)
    return ProbabilityMatrix(p)


def witness(pm) -> float:
    """The witness ``det p`` (LU with partial pivoting)."""
    return float(np.linalg.det(_matrix(pm)))


def reduce_columns(pm) -> np.ndarray:
    """k x k matrix ``p_ij - p_i,k+1`` with the same determinant as ``pm``."""
    p = _matrix(pm)
    k = p.shape[0] - 1
    return p[:k, :k] - p[:k, k:k + 1]


def _delete(p: np.ndarray, rows, cols) -> np.ndarray:
    keep_r = np.setdiff1d(np.arange(p.shape[0]), rows)
    keep_c = np.setdiff1d(np.arange(p.shape[1]), cols)
    return p[np.ix_(keep_r, keep_c)]


def minor(pm, rows: Sequence[int], cols: Sequence[int]) -> float:
    """Determinant of ``pm`` with the given rows and columns removed.

    An empty remainder has determinant 1.
    """
    p = _matrix(pm)
    n = p.shape[0]
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols):
        raise StructuralError("remove as many rows as columns")
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise StructuralError("repeated row or column index")
    for idx in rows + cols:
        if not 0 <= idx < n:
            raise StructuralError(f"index {idx} out of range for a {n}x{n} matrix")
    if len(rows) == n:
        return 1.0
    return float(np.linalg.det(_delete(p, rows, cols)))


def adjugate(pm) -> np.ndarray:
    """Transpose of the cofactor matrix, so that ``adj(p) @ p = det(p) * I``."""
    p = _matrix(pm)
    n = p.shape[0]
    if n == 1:
        return np.ones((1, 1))
    adj = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            adj[j, i] = (-1) ** (i + j) * np.linalg.det(_delete(p, [i], [j]))
    return adj


def gram_schmidt(vectors: Sequence) -> list[StateVector]:
    """Orthonormalize in order; the first vector keeps its direction.

    Raises DegenerateInputError when a vector has residual norm below 1e-8
    after projecting out its predecessors.
    """
    arrs = [v.amplitudes if isinstance(v, StateVector) else np.asarray(v, dtype=complex) for v in vectors]
    if not arrs:
        return []
    real = all(_is_real(a) for a in arrs)
    out: list[np.ndarray] = []
    for a in arrs:
        w = np.array(a, dtype=complex)
        norm0 = np.linalg.norm(w)
        if norm0 == 0:
            raise DegenerateInputError("zero vector in Gram-Schmidt input")
        w = w / norm0
        # two passes keep orthogonality at machine precision
        for _ in range(2):
            for q in out:
                w = w - np.vdot(q, w) * q
        norm = np.linalg.norm(w)
        if norm < GS_THRESHOLD:
            raise DegenerateInputError(f"linearly dependent input (residual norm {norm:.3g})")
        w = w / norm
        if real:
            w = w.real.astype(complex)
        out.append(w)
    fld = Field.REAL if real else Field.COMPLEX
    return [StateVector(w, fld) for w in out]


# Pauli matrices in the |1>, |2> basis.
SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


def _bloch_ket(v) -> np.ndarray:
    x, y, z = (float(c) for c in v)
    if 1 + z <= 1e-300:
        return np.array([0, 1], dtype=complex)
    a = math.sqrt((1 + z) / 2)
    b = complex(x, y) / (2 * a)
    ket = np.array([a, b], dtype=complex)
    return ket / np.linalg.norm(ket)


def _bloch_check(v) -> tuple[np.ndarray, float]:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (3,):
        raise StructuralError("Bloch vector must have three components")
    r = float(np.linalg.norm(v))
    if r > 1 + STRUCT_TOL:
        raise InvalidBlochVectorError(f"Bloch vector length {r!r} exceeds 1")
    return v, r


def bloch_state(v) -> Preparation:
    """Qubit preparation ``(1 + v . sigma) / 2``; pure when ``|v| = 1``."""
    v, r = _bloch_check(v)
    if abs(r - 1) <= STRUCT_TOL:
        return Preparation.pure(StateVector.normalized(_bloch_ket(v / r)))
    return Preparation((np.eye(2) + np.einsum("a,abc->bc", v, SIGMA)) / 2)


def bloch_effect(v) -> Effect:
    """Qubit effect ``(1 + v . sigma) / 2``; a rank-1 projector when ``|v| = 1``."""
    v, r = _bloch_check(v)
    if abs(r - 1) <= STRUCT_TOL:
        return Effect([StateVector.normalized(_bloch_ket(v / r))])
    return Effect.from_matrix((np.eye(2) + np.einsum("a,abc->bc", v, SIGMA)) / 2)


def bloch_vector(op) -> np.ndarray:
    """Bloch vector of a qubit preparation or a rank-1 qubit effect."""
    m = op.matrix
    if m.shape != (2, 2):
        raise StructuralError("Bloch vectors exist only for d = 2")
    return np.real(np.einsum("abc,cb->a", SIGMA, m))


def qubit_scenario(xs, ys) -> Scenario:
    """Qubit scenario from Bloch vectors of preparations ``xs`` and effects ``ys``."""
    return Scenario([bloch_state(x) for x in xs], [bloch_effect(y) for y in ys])


def qubit_witness_closed_form(s: Scenario, k: int | None = None) -> float:
    """Triangle-area (k=2) or tetrahedron-volume (k=3) form of the qubit witness."""
    if s.dim != 2:
        raise StructuralError("closed form needs a qubit scenario")
    k = s.k if k is None else k
    if k != s.k or k not in (2, 3):
        raise StructuralError("closed form exists only for k = 2 or 3")
    if any(e.rank != 1 for e in s.effects):
        raise StructuralError("closed form needs rank-1 effects")
    xs = [bloch_vector(p) for p in s.preparations]
    ys = [bloch_vector(e) for e in s.effects]
    if k == 2:
        return float(np.dot(np.cross(xs[0] - xs[2], xs[1] - xs[2]), np.cross(ys[0], ys[1])) / 4)
    dx = np.array([xs[0] - xs[3], xs[1] - xs[3], xs[2] - xs[3]])
    return float(np.linalg.det(dx) * np.linalg.det(np.array(ys)) / 8)


def minimal_counts(d: int, model: Model | str) -> tuple[int, int]:
    """Smallest ``k`` (and ``m = k + 1``) at which every dimension-``d`` witness vanishes."""
    if d < 1:
        raise StructuralError("dimension must be positive")
    model = model if isinstance(model, Model) else Model(str(model).lower())
    if model is Model.CLASSICAL:
        k = d
    elif model is Model.REAL:
        k = d * (d + 1) // 2
    else:
        k = d * d
    return k, k + 1


def evaluate(s: Scenario, metadata: dict | None = None) -> WitnessReport:
    from .io import scenario_digest

    pm = build_probability_matrix(s)
    return WitnessReport(witness(pm), pm, scenario_digest(s), dict(metadata or {}))
