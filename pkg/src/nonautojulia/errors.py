"""Exception types shared across the package."""


class JuliaError(Exception):
    """Base class for every error raised by this package."""


class NonfiniteParameter(JuliaError, ValueError):
    pass


class ZeroLengthSpec(JuliaError, ValueError):
    pass


class HorizonExceeded(JuliaError, IndexError):
    pass


class DomainViolation(JuliaError, ValueError):
    pass


class BranchIndexOutOfRange(JuliaError, IndexError):
    pass


class BudgetExceeded(JuliaError, RuntimeError):
    def __init__(self, count, budget):
        super().__init__(f"enumeration of {count} items exceeds budget {budget}")
        self.count = count
        self.budget = budget


class DegenerateInput(JuliaError, ValueError):
    pass


class MeshTooCoarse(JuliaError, RuntimeError):
    def __init__(self, clearance, spacing):
        super().__init__(
            f"clearance {clearance:.3e} below 10x mesh spacing {spacing:.3e}; result untrusted")
        self.clearance = clearance
        self.spacing = spacing


class PreconditionError(JuliaError, ValueError):
    def __init__(self, name, bound):
        super().__init__(f"{name}: {bound}")
        self.name = name
        self.bound = bound


class ConfigParseError(JuliaError, ValueError):
    pass


class IoFailure(JuliaError, OSError):
    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path
