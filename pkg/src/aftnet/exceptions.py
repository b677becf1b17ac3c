"""Exception hierarchy shared across the package."""


class AFTNetError(Exception):
    """Base class for all errors raised by :mod:`aftnet`."""


class DimensionMismatchError(AFTNetError, ValueError):
    def __init__(self, what, expected, got):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected size {expected}, got {got}")


class DegenerateScaleError(AFTNetError):
    """Intercept-only scale fit collapsed towards sigma = 0."""


class ConvergenceError(AFTNetError):
    def __init__(self, message, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class StepCollapseError(AFTNetError):
    """Backtracking inflated the step parameter past its bound."""


class InfeasibleFoldError(AFTNetError):
    pass


class NullProblemError(AFTNetError):
    """The likelihood gradient at the origin vanishes, so lambda_max = 0."""


class NoComparablePairsError(AFTNetError, ValueError):
    pass


class ParseError(AFTNetError, ValueError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        loc = ""
        if row is not None or column is not None:
            loc = f" at (row={row}, column={column!r})"
        super().__init__(f"{message}{loc}")
