"""emap: diagnostics for cross-modal interaction use in two-input classifiers.

The core object is the score grid -- a model's outputs over every
text x visual cross-pairing of an evaluation set -- and its closed-form
least-squares projection onto the additive family ``f_T(t) + f_V(v)``.
Comparing a model's paired predictions with the projected ones isolates how
much of its performance depends on genuine cross-modal interaction.
"""

__version__ = "0.1.0"

from .data import PairedDataset
from .grid import (
    AdditiveDecomposition,
    ScoreGrid,
    build_grid,
    emap_decompose,
    emap_predictions,
    projection_loss,
)
from .oracle import (
    StationarityReport,
    check_hessian,
    check_stationarity,
    solve_exact,
    verify_projection,
)

__all__ = [
    "__version__",
    "PairedDataset",
    "ScoreGrid",
    "AdditiveDecomposition",
    "build_grid",
    "emap_decompose",
    "emap_predictions",
    "projection_loss",
    "StationarityReport",
    "solve_exact",
    "check_stationarity",
    "check_hessian",
    "verify_projection",
]
