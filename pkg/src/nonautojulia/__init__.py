"""Non-autonomous quadratic Julia sets: construction, inverse-branch systems, dimension and thinness."""
from .errors import (BranchIndexOutOfRange, BudgetExceeded, ConfigParseError, DegenerateInput,
                     DomainViolation, HorizonExceeded, IoFailure, JuliaError, MeshTooCoarse,
                     NonfiniteParameter, PreconditionError, ZeroLengthSpec)
from .seqcore import SURVIVED, Kind, ParamSpec, checkpoint, survival_test, validate

__version__ = "0.1.0"

__all__ = [
    "BranchIndexOutOfRange", "BudgetExceeded", "ConfigParseError", "DegenerateInput",
    "DomainViolation", "HorizonExceeded", "IoFailure", "JuliaError", "Kind", "MeshTooCoarse",
    "NonfiniteParameter", "ParamSpec", "PreconditionError", "SURVIVED", "ZeroLengthSpec",
    "__version__", "checkpoint", "survival_test", "validate",
]
