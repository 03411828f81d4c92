"""Forward (OOMP) and backward (BOOMP) optimized orthogonal matching pursuit."""

from .backward import (
    BackwardConfig,
    Criterion,
    DeletionStep,
    DeletionTrace,
    boomp_run,
    deletion_residual,
    downdate_coefficients,
    select_deletion_index,
)
from .core import (
    Atom,
    AtomMeta,
    Decomposition,
    DependentAtom,
    Dictionary,
    DimensionMismatch,
    EmptyDecomposition,
    EmptySpec,
    Exhausted,
    IllConditioned,
    IndexOutOfRange,
    Infeasible,
    PursuitError,
    Signal,
    backward_downdate_duals,
    compute_coefficients,
    forward_update_duals,
    orthogonalize_next,
    reconstruct,
)
from .dictgen import ChirpSpec, MexHatSpec, build_mexhat_dictionary, chirp, mexican_hat
from .forward import ForwardConfig, oomp_run, select_forward_atom
from .oracle import OracleSolution, best_single_deletion, least_squares_projection

__version__ = "0.1.0"
