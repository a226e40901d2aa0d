"""branchspec: semiclassical spectral toolkit for non-selfadjoint
operators at a branching level."""

__version__ = "0.1.0"

from .quantization import (  # noqa: F401
    ActionModel,
    BSBranch,
    Regime,
    SemiclassicalParams,
    bohr_sommerfeld_solve,
    choose_regime,
    eval_G,
    quantization_residual,
    term_set,
)
from .transition import exact_matrix, renormalize  # noqa: F401
