"""Quadratic-form matrices of the action functionals and their spectra."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConstructionError, NumericError
from .model import Coefficients, Grid, Mixed, ProblemInstance, boundary_extend

SYMMETRY_TOL = 1e-12
TOL_DEF = 1e-9


@dataclass(frozen=True)
class QuadraticOperator:
    """``0.5 <A x, x> + <shift, x>``, the quadratic part of an action functional."""

    matrix: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        s = np.array(self.shift, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or s.shape != (A.shape[0],):
            raise ValueError("operator needs a square matrix and a matching shift")
        if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("operator matrix is not symmetric")
        A.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "shift", s)

    @property
    def T(self) -> int:
        return self.matrix.shape[0]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        Ax = x @ self.matrix  # symmetric, so x A == A x
        return 0.5 * np.sum(Ax * x, axis=-1) + x @ self.shift

    def gradient(self, x):
        return np.asarray(x, dtype=float) @ self.matrix + self.shift

    def negated(self) -> "QuadraticOperator":
        return QuadraticOperator(-self.matrix, -self.shift)


@dataclass(frozen=True)
class SpectralReport:
    lambda_min: float
    lambda_max: float
    definiteness: str  # PositiveDefinite | NegativeDefinite | Indefinite | Singular
    operator_norm: float
    a: Optional[float] = None
    b: Optional[float] = None

    @property
    def positive_definite(self) -> bool:
        return self.definiteness == "PositiveDefinite"

    @property
    def negative_definite(self) -> bool:
        return self.definiteness == "NegativeDefinite"


def build_periodic_operator(coefficients: Coefficients, grid: Grid) -> QuadraticOperator:
    """M + Q for the periodic problem, shift zero.

    M is the cyclic second-difference matrix weighted by p(0..T-1), with the
    corner entries -p(0) closing the cycle; Q = diag(-q).
    """
    T = grid.T
    p = np.asarray(coefficients.p, dtype=float)
    q = np.asarray(coefficients.q, dtype=float)
    # edge weights of the cycle 1-2-...-T-1: edge (k, k+1) carries p(k), edge (T, 1) carries p(0)
    w = np.concatenate([p[1:T], p[:1]])
    M = np.zeros((T, T))
    for k in range(T):
        j = (k + 1) % T
        M[k, k] += w[k]
        M[j, j] += w[k]
        M[k, j] -= w[k]
        M[j, k] -= w[k]
    return QuadraticOperator(M - np.diag(q), np.zeros(T))


def _mixed_residual_linear(coefficients, boundary, T, x):
    """Delta(p(k-1) Delta x(k-1)) + q(k) x(k) on extended x, for f = g = 0."""
    p = np.asarray(coefficients.p, dtype=float)
    q = np.asarray(coefficients.q, dtype=float)
    xt = np.concatenate([[boundary.A1 - boundary.alpha1 * x[0]], x,
                         [boundary.B1 - boundary.beta1 * x[-1]]])
    k = np.arange(1, T + 1)
    return p[k] * (xt[k + 1] - xt[k]) - p[k - 1] * (xt[k] - xt[k - 1]) + q * xt[k]


def build_mixed_operator(coefficients: Coefficients, boundary: Mixed, grid: Grid,
                         check: bool = True) -> QuadraticOperator:
    """Operator of the mixed problem, assembled column by column from its residual.

    The residual's affine part is ``L x + s``; the returned operator is
    ``matrix = L`` and ``shift = s``, so the functional's gradient reproduces
    the residual (see :mod:`emden_fowler.functional` for the load sign).
    """
    if not isinstance(boundary, Mixed):
        raise TypeError("build_mixed_operator needs a Mixed boundary")
    T = grid.T
    zero = np.zeros(T)
    shift = _mixed_residual_linear(coefficients, boundary, T, zero)
    L = np.empty((T, T))
    for j in range(T):
        e = np.zeros(T)
        e[j] = 1.0
        L[:, j] = _mixed_residual_linear(coefficients, boundary, T, e) - shift
    if not (np.all(np.isfinite(L)) and np.all(np.isfinite(shift))):
        raise ConstructionError("assembled mixed operator has non-finite entries")
    asym = np.max(np.abs(L - L.T))
    if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(L))):
        raise ConstructionError(f"assembled mixed operator is not symmetric ({asym:.3e})")
    op = QuadraticOperator(0.5 * (L + L.T), shift)
    if check:
        _gradient_self_check(op)
    return op


def _gradient_self_check(op: QuadraticOperator, trials: int = 3, seed: int = 0):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        x = rng.normal(size=op.T)
        h = 1e-5
        fd = np.array([(op.value(x + h * e) - op.value(x - h * e)) / (2 * h)
                       for e in np.eye(op.T)])
        an = op.gradient(x)
        err = np.linalg.norm(fd - an) / max(1.0, np.linalg.norm(an))
        if err > 1e-6:
            raise ConstructionError(f"gradient self-check failed (relative error {err:.3e})")


def build_operator(instance: ProblemInstance) -> QuadraticOperator:
    if instance.is_mixed:
        return build_mixed_operator(instance.coefficients, instance.boundary, instance.grid)
    return build_periodic_operator(instance.coefficients, instance.grid)


def linear_residual(instance: ProblemInstance, x) -> np.ndarray:
    """Delta(p(k-1) Delta x(k-1)) + q(k) x(k) on the boundary extension of x."""
    xt = boundary_extend(instance, x)
    p = instance.coefficients.p
    T = instance.T
    k = np.arange(1, T + 1)
    return (p[k] * (xt[..., k + 1] - xt[..., k]) - p[k - 1] * (xt[..., k] - xt[..., k - 1])
            + instance.coefficients.q * xt[..., k])


def spectral_report(operator: QuadraticOperator, tol_def: float = TOL_DEF) -> SpectralReport:
    try:
        eig = np.linalg.eigvalsh(operator.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigen-decomposition failed: {exc}") from exc
    if not np.all(np.isfinite(eig)):
        raise NumericError("eigenvalues are not finite")
    lo, hi = float(eig[0]), float(eig[-1])
    norm = max(abs(lo), abs(hi))
    if lo > tol_def:
        return SpectralReport(lo, hi, "PositiveDefinite", norm, a=lo)
    if hi < -tol_def:
        return SpectralReport(lo, hi, "NegativeDefinite", norm, b=-hi)
    if np.min(np.abs(eig)) <= tol_def:
        return SpectralReport(lo, hi, "Singular", norm)
    return SpectralReport(lo, hi, "Indefinite", norm)
