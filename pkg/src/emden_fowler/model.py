"""Problem data for the discrete Emden-Fowler boundary value problem.

Index conventions: the coefficient ``p`` lives on ``0..T+1`` and is stored so
that ``p[k]`` is p(k).  Everything defined on ``1..T`` (``q``, ``g``, the
nonlinearity weights, the unknown ``x`` and the parameter ``u``) is stored as a
length-``T`` array where position ``k - 1`` holds the value at ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .errors import EvaluationError

GROWTH_CLASSES = ("A2", "A3", "A4", "A5", "A6", "A7")

QUAD_ABS_TOL = 1e-10


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    T: int


@dataclass(frozen=True)
class Periodic:
    """x(0) = x(T) and p(0) dx(0) = p(T) dx(T)."""


@dataclass(frozen=True)
class Mixed:
    """x(0) + alpha1 x(1) = A1 and x(T+1) + beta1 x(T) = B1."""

    alpha1: float = 0.0
    beta1: float = 0.0
    A1: float = 0.0
    B1: float = 0.0


BoundarySpec = Union[Periodic, Mixed]


@dataclass(frozen=True)
class Coefficients:
    p: np.ndarray
    q: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        for name in ("p", "q", "g"):
            object.__setattr__(self, name, _frozen(np.atleast_1d(getattr(self, name))))


@dataclass(frozen=True)
class Parameter:
    """A parameter u on 1..T together with the radius M of the ball it lives in."""

    values: np.ndarray
    M: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.atleast_1d(self.values)))
        if not self.M > 0:
            raise ValueError(f"parameter bound M must be positive, got {self.M}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("parameter values must be finite")
        excess = self.sup_norm() - self.M
        if excess > 1e-12 * max(1.0, self.M):
            raise ValueError(
                f"L_M bound violated: max|u(k)| = {self.sup_norm():.17g} > M = {self.M:.17g}"
            )

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @classmethod
    def constant(cls, T: int, value: float, M: float) -> "Parameter":
        return cls(np.full(T, float(value)), M)


@dataclass(frozen=True)
class GrowthDeclaration:
    """Growth class claimed for a custom nonlinearity, with its constants."""

    cls: str
    epsilon1: float
    epsilon2: float
    r: float
    B: float = 1.0

    def __post_init__(self):
        if self.cls not in GROWTH_CLASSES:
            raise ValueError(f"unknown growth class {self.cls!r}")


@dataclass(frozen=True)
class PowerModulated:
    """f(k, y, u) = (c0 + c1 u) gamma(k) sign(y) |y|^(r-1) + offset."""

    r: float
    gamma: np.ndarray
    c0: float = 0.0
    c1: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", _frozen(np.atleast_1d(self.gamma)))

    def weight(self, u):
        return (self.c0 + self.c1 * np.asarray(u, dtype=float)) * self.gamma

    def f(self, y, u):
        y = np.asarray(y, dtype=float)
        return self.weight(u) * np.sign(y) * np.abs(y) ** (self.r - 1.0) + self.offset

    def F(self, y, u):
        y = np.asarray(y, dtype=float)
        return self.weight(u) * np.abs(y) ** self.r / self.r + self.offset * y

    def df_dy(self, y, u):
        y = np.asarray(y, dtype=float)
        w = self.weight(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = w * (self.r - 1.0) * np.abs(y) ** (self.r - 2.0)
        return np.where(w == 0, 0.0, d)

    def f_at(self, k: int, y: float, u: float) -> float:
        w = (self.c0 + self.c1 * u) * self.gamma[k - 1]
        return float(w * np.sign(y) * abs(y) ** (self.r - 1.0) + self.offset)

    def F_at(self, k: int, y: float, u: float) -> float:
        w = (self.c0 + self.c1 * u) * self.gamma[k - 1]
        return float(w * abs(y) ** self.r / self.r + self.offset * y)


@dataclass(frozen=True)
class Custom:
    """User-supplied f(k, y, u) with an optional antiderivative F(k, y, u).

    Both callables take a 1-based index ``k`` and scalars.  Without ``F`` the
    antiderivative is integrated numerically from 0 to y.
    """

    f_func: Callable[[int, float, float], float]
    F_func: Optional[Callable[[int, float, float], float]] = None
    growth: Optional[GrowthDeclaration] = None
    name: str = "custom"

    def f_at(self, k: int, y: float, u: float) -> float:
        return float(self.f_func(k, float(y), float(u)))

    def F_at(self, k: int, y: float, u: float) -> float:
        if self.F_func is not None:
            return float(self.F_func(k, float(y), float(u)))
        if y == 0.0:
            return 0.0
        # quad appends a warning message to its output when it gives up
        result = integrate.quad(
            lambda t: self.f_func(k, t, u), 0.0, float(y),
            epsabs=QUAD_ABS_TOL, epsrel=1e-13, limit=200, full_output=1,
        )
        val, abserr = result[0], result[1]
        if len(result) > 3 and abserr > QUAD_ABS_TOL * max(1.0, abs(val)):
            raise EvaluationError("antiderivative quadrature did not converge", k=k, y=y, u=u)
        return float(val)

    def _map(self, method, y, u):
        y = np.asarray(y, dtype=float)
        u = np.broadcast_to(np.asarray(u, dtype=float), y.shape[-1:])
        out = np.empty_like(y)
        for idx in np.ndindex(y.shape):
            k = idx[-1] + 1
            out[idx] = method(k, y[idx], u[idx[-1]])
        return out

    def f(self, y, u):
        return self._map(self.f_at, y, u)

    def F(self, y, u):
        return self._map(self.F_at, y, u)

    def df_dy(self, y, u):
        y = np.asarray(y, dtype=float)
        h = 1e-6 * (1.0 + np.abs(y))
        return (self.f(y + h, u) - self.f(y - h, u)) / (2 * h)


Nonlinearity = Union[PowerModulated, Custom]


def power_family(T: int, r: float, c0: float = 0.0, c1: float = 1.0,
                 offset: float = 0.0, gamma=1.0) -> PowerModulated:
    return PowerModulated(r=r, gamma=np.broadcast_to(np.asarray(gamma, float), (T,)),
                          c0=c0, c1=c1, offset=offset)


def zero_family(T: int) -> PowerModulated:
    """f == 0, expressed as a power family with vanishing modulation."""
    return power_family(T, r=2.0, c0=0.0, c1=0.0)


@dataclass(frozen=True)
class ProblemInstance:
    grid: Grid
    boundary: BoundarySpec
    coefficients: Coefficients
    nonlinearity: Nonlinearity
    M: float = 1.0

    @property
    def T(self) -> int:
        return self.grid.T

    @property
    def is_mixed(self) -> bool:
        return isinstance(self.boundary, Mixed)


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    index: Optional[int] = None

    def __str__(self):
        where = self.field if self.index is None else f"{self.field}[{self.index}]"
        return f"{where}: {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)


def _check_sequence(out, name, arr, length, first_index):
    if arr.shape != (length,):
        out.append(Violation(name, f"expected {length} entries, got {arr.size}"))
        return
    for i in np.flatnonzero(~np.isfinite(arr)):
        out.append(Violation(name, "entry is not finite", index=int(i) + first_index))


def validate_problem(instance: ProblemInstance) -> ValidationReport:
    """Collect every violated invariant of ``instance``; empty means valid."""
    out: list[Violation] = []
    T = instance.grid.T
    if not isinstance(T, (int, np.integer)) or T < 3:
        out.append(Violation("Grid.T", f"Grid.T ≥ 3 violated (got {T})"))
        T = int(T) if isinstance(T, (int, np.integer)) else 0
    if not instance.M > 0:
        out.append(Violation("M", f"parameter bound must be positive (got {instance.M})"))

    c = instance.coefficients
    _check_sequence(out, "Coefficients.p", c.p, T + 2, 0)
    _check_sequence(out, "Coefficients.q", c.q, T, 1)
    _check_sequence(out, "Coefficients.g", c.g, T, 1)
    if c.g.size and np.all(c.g == 0):
        out.append(Violation("Coefficients.g", "g vanishes identically, A1 requires g(k1) != 0"))

    b = instance.boundary
    if isinstance(b, Mixed):
        for name in ("alpha1", "beta1", "A1", "B1"):
            if not np.isfinite(getattr(b, name)):
                out.append(Violation(f"Mixed.{name}", "boundary constant is not finite"))
    elif not isinstance(b, Periodic):
        out.append(Violation("BoundarySpec", f"unknown boundary variant {type(b).__name__}"))

    nl = instance.nonlinearity
    if isinstance(nl, PowerModulated):
        if not (np.isfinite(nl.r) and nl.r > 1):
            out.append(Violation("PowerModulated.r", f"exponent must exceed 1 (got {nl.r})"))
        _check_sequence(out, "PowerModulated.gamma", nl.gamma, T, 1)
        for name in ("c0", "c1", "offset"):
            if not np.isfinite(getattr(nl, name)):
                out.append(Violation(f"PowerModulated.{name}", "coefficient is not finite"))
    elif isinstance(nl, Custom):
        if not callable(nl.f_func):
            out.append(Violation("Custom.f", "evaluator is not callable"))
    else:
        out.append(Violation("Nonlinearity", f"unknown family {type(nl).__name__}"))
    return ValidationReport(out)


def _check_args(instance, k, u):
    if not 1 <= k <= instance.T:
        raise EvaluationError(f"index k={k} outside [1, {instance.T}]", k=k, u=u)
    if abs(u) > instance.M * (1 + 1e-12):
        raise EvaluationError(f"|u| = {abs(u)} exceeds M = {instance.M}", k=k, u=u)


def evaluate_f(instance: ProblemInstance, k: int, y: float, u: float) -> float:
    _check_args(instance, k, u)
    val = instance.nonlinearity.f_at(k, y, u)
    if not np.isfinite(val):
        raise EvaluationError("f is not finite", k=k, y=y, u=u)
    return val


def evaluate_F(instance: ProblemInstance, k: int, y: float, u: float) -> float:
    _check_args(instance, k, u)
    val = instance.nonlinearity.F_at(k, y, u)
    if not np.isfinite(val):
        raise EvaluationError("F is not finite", k=k, y=y, u=u)
    return val


def boundary_extend(instance: ProblemInstance, x) -> np.ndarray:
    """Extend ``x`` on 1..T to 0..T+1 using the boundary conditions.

    Periodic: x(0) = x(T), and x(T+1) is fixed by the flux condition
    p(0) dx(0) = p(T) dx(T); it reduces to the wrap x(T+1) = x(1) whenever
    p(0) = p(T) (or p(T) = 0, where the flux condition does not pin it).
    Works on stacks of vectors along the last axis.
    """
    x = np.asarray(x, dtype=float)
    T = instance.T
    if x.shape[-1] != T:
        raise ValueError(f"expected {T} interior values, got {x.shape[-1]}")
    b = instance.boundary
    if isinstance(b, Mixed):
        left = b.A1 - b.alpha1 * x[..., 0]
        right = b.B1 - b.beta1 * x[..., -1]
    else:
        p = instance.coefficients.p
        left = x[..., -1]
        if p[T] == p[0] or p[T] == 0:
            right = x[..., 0]
        else:
            right = x[..., -1] + (p[0] / p[T]) * (x[..., 0] - x[..., -1])
    return np.concatenate([left[..., None], x, right[..., None]], axis=-1)
