"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class CavityPressError(Exception):
    """Base class for every error raised by cavitypress."""


class PreconditionError(CavityPressError, ValueError):
    """An operation was called outside its domain."""


class InsufficientCollarError(PreconditionError):
    def __init__(self, required_radius, message=None):
        self.required_radius = required_radius
        super().__init__(message or f"collar does not cover all interacting shapes; need radius {required_radius}")


class ZeroProbabilityError(PreconditionError):
    def __init__(self, message, n=None):
        self.n = n
        super().__init__(message)


class ReducibleError(PreconditionError):
    """Transfer structure is not irreducible, so Perron data is not unique."""


class ResourceBudgetError(CavityPressError):
    def __init__(self, needed, budget, what="states"):
        self.needed = needed
        self.budget = budget
        super().__init__(f"{what} budget exceeded: {needed} > {budget}")


class InvariantViolation(CavityPressError, AssertionError):
    """A bound that must hold on every entry failed."""


class NonConvergenceError(CavityPressError):
    """A net or series failed its Cauchy test at the requested tolerance."""

    def __init__(self, message, defect=None):
        self.defect = defect
        super().__init__(message)


class SpecParseError(CavityPressError):
    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = ""
        if line is not None:
            where = f"{path or '<spec>'}:{line}:{column or 1}: "
        super().__init__(where + message)
