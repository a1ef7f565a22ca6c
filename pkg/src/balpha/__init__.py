"""balpha: control synthesis laboratory for filtered Burgers transport."""

__version__ = "0.1.0"

from .errors import ConfigError, ConvergenceError, SolverError
from .filtering import AlphaParam
from .grids import (
    Field,
    Grid1D,
    NormReport,
    SpaceTimeField,
    TimeGrid,
    make_grid,
    make_time_grid,
)

__all__ = [
    "AlphaParam",
    "ConfigError",
    "ConvergenceError",
    "Field",
    "Grid1D",
    "NormReport",
    "SolverError",
    "SpaceTimeField",
    "TimeGrid",
    "make_grid",
    "make_time_grid",
    "__version__",
]
