"""Critical visibility of two-particle correlations under local hidden variables."""
from .formats import load_fixture, parse_matrix, read_result, write_result
from .lp import (
    BellWitness,
    LhvModel,
    LpProblem,
    SolveResult,
    extend_model,
    solve,
    solve_column_generation,
    solve_dense,
    verify_model,
    verify_witness,
)
from .predictions import (
    PredictionMatrix,
    SettingsSpec,
    build_prediction_matrix,
    correlation,
    fold_angles,
    joint_probability,
)
from .strategies import StrategyPair, canonicalize, enumerate_canonical, strategy_column

__version__ = "0.1.0"
