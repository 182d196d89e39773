"""Min tensor norms of unitary tuples, word moments and direct-sum experiments."""
from .linalg import (
    ParseError,
    ShapeError,
    UnitaryTuple,
    ValidationError,
    adjoint,
    check_unitary,
    conjugate,
    multiply,
    normalized_trace,
)
from .ensembles import EnsembleSpec, load_tuple, sample, sample_haar, sample_permutation_complement
from .superop import (
    BimultiplicationOperator,
    NormEstimate,
    SolverParams,
    dense_norm_oracle,
    min_norm,
    tracial_witness,
)
from .words import Word, convergence_report, distance, moment, moment_table, reduce
from .harness import build_direct_sum, direct_sum_min_norm, estimate_cn, ratio_report

__version__ = "0.1.0"
