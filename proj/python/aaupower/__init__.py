"""AAU power model, Gaussian MLP estimator and analytical distillation."""

from ._aaupower import *  # noqa: F401,F403
from ._aaupower import (
    ConvergenceError,
    InvalidInput,
    SchemaError,
    SingularSystem,
)

__version__ = "0.1.0"
