"""Determinant dimension witnesses for prepare-and-measure scenarios."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .classical import (
    BinaryWitnessMatrix,
    ClassicalModel,
    binary_anneal_max,
    classical_probability_matrix,
    exhaustive_binary_max,
    extremal_matrix,
    verify_table2,
)
from .core import (
    Effect,
    Field,
    Model,
    Preparation,
    ProbabilityMatrix,
    Scenario,
    StateVector,
    WitnessReport,
    adjugate,
    bloch_effect,
    bloch_state,
    build_probability_matrix,
    evaluate,
    gram_schmidt,
    hadamard_bound,
    minimal_counts,
    minor,
    qubit_scenario,
    witness,
)
from .errors import (
    CapabilityError,
    DegenerateInputError,
    InvalidBlochVectorError,
    NumericIntegrityError,
    StructuralError,
    UnknownEntryError,
    WitnessError,
)
from .io import load_scenario, save_scenario, scenario_digest
from .optimizer import AngleParametrization, AnnealSchedule, anneal, optimize, rank_sweep, refine
from .stats import (
    PerturbedScenario,
    ShotData,
    Verdict,
    decide,
    first_order_witness,
    null_variance,
    null_variance_second,
    second_order_form,
    second_order_witness,
    simulate_shots,
)
