"""Exception types shared across the package."""


class EvaluationError(ArithmeticError):
    """A nonlinearity or functional evaluation produced a non-finite value."""

    def __init__(self, message, k=None, y=None, u=None):
        super().__init__(message)
        self.k, self.y, self.u = k, y, u

    def __str__(self):
        ctx = ", ".join(f"{n}={v!r}" for n, v in (("k", self.k), ("y", self.y), ("u", self.u))
                        if v is not None)
        base = super().__str__()
        return f"{base} ({ctx})" if ctx else base


class ConstructionError(RuntimeError):
    """An assembled operator failed its self-check."""


class NumericError(RuntimeError):
    """A linear algebra routine failed."""


class ConvergenceError(RuntimeError):
    """No multistart branch reached the gradient tolerance."""

    def __init__(self, message, best_x=None, best_value=None, best_grad_norm=None,
                 lowest_value=None):
        super().__init__(message)
        self.best_x = best_x
        self.best_value = best_value
        self.best_grad_norm = best_grad_norm
        self.lowest_value = best_value if lowest_value is None else lowest_value


class OracleSizeError(ValueError):
    """The brute-force oracle refuses grids beyond its size guard."""
