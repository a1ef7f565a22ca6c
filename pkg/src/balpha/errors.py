"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 2, SolverError -> 3,
monitor flags (reported, not raised) -> 4, ConvergenceError -> 5.
"""


class ConfigError(ValueError):
    """Invalid run configuration or inconsistent grids/parameters."""


class SolverError(RuntimeError):
    """A numerical solve failed (step rejection exhausted, flow refusal)."""


class ConvergenceError(SolverError):
    """An iteration did not converge within its budget."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
