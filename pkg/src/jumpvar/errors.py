"""Exception types raised across the package."""


class JumpVarError(ValueError):
    """Base class for all domain errors."""


class DataError(JumpVarError):
    """Malformed or inconsistent input data."""


class DegenerateSeriesError(JumpVarError):
    """A series has no usable variation (e.g. constant differences)."""


class NotPositiveDefiniteError(JumpVarError):
    """Cholesky factorisation met a non-positive pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix not positive definite: pivot {pivot} = {value:.6g}")


class SupportError(JumpVarError):
    """A jump loading violates 1 + gamma > 0 on the jump-law support."""


class ConvergenceError(JumpVarError):
    """Quadrature refinement did not reach the requested tolerance."""


class SingularDesignError(JumpVarError):
    """Regression design matrix is rank deficient."""


class PipelineError(JumpVarError):
    """Wraps a module error with stage, asset and date context."""

    def __init__(self, stage, cause, asset=None, date=None):
        self.stage = stage
        self.asset = asset
        self.date = date
        self.cause = cause
        where = [f"stage={stage}"]
        if asset is not None:
            where.append(f"asset={asset}")
        if date is not None:
            where.append(f"date={date}")
        super().__init__(f"[{' '.join(where)}] {type(cause).__name__}: {cause}")
