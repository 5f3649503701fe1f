"""Multistart minimization of the oriented action functional.

Each branch runs a descent method: a damped Newton step whenever the local
Hessian ``A - diag(df/dy)`` (oriented) is positive definite, steepest descent
otherwise, both with Armijo backtracking.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .errors import ConvergenceError, EvaluationError, OracleSizeError
from .functional import (
    ActionContext,
    action_gradient,
    action_hessian,
    action_value,
    equation_residual,
)
from .operators import spectral_report

ARMIJO_C = 1e-4
SHRINK = 0.5
CLUSTER_TOL = 1e-6
RESIDUAL_TOL = 1e-8
GLOBAL_SLACK = 1e-9
ROUNDOFF = 1e-12
CURVATURE_CAP = 1e8
KINK_RATIO = 10.0
DIVERGED = 1e100


@dataclass(frozen=True)
class SolveConfig:
    grad_tol: float = 1e-10
    max_iters: int = 10_000
    multistart_count: int = 16
    start_radius: float = 10.0
    seed: int = 0

    def __post_init__(self):
        for name in ("grad_tol", "max_iters", "multistart_count", "start_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SolveConfig.{name} must be positive")
        if not self.grad_tol < 1e-4:
            raise ValueError("SolveConfig.grad_tol must be below 1e-4")
        if self.seed < 0:
            raise ValueError("SolveConfig.seed must be nonnegative")


@dataclass
class LocalResult:
    x: np.ndarray
    value: float
    grad_norm: float
    converged: bool
    iterations: int


@dataclass
class SolveReport:
    x_star: np.ndarray
    J_star: float
    grad_norm: float
    residual_norm: float
    starts_converged: int
    starts_total: int
    distinct_minima: list  # [(x, J), ...]
    orientation: str
    start_values: list = field(default_factory=list)
    branch_values: list = field(default_factory=list)  # final J of every branch, converged or not

    @property
    def lowest_value(self) -> float:
        """Smallest J seen anywhere; a point above it cannot be a global minimizer."""
        return float(min([self.J_star, *self.start_values, *self.branch_values]))


def _inf_norm(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def _newton_direction(context, x, u, grad):
    """Newton step, or None when the local Hessian is not positive definite.

    Where f has unbounded slope at y = 0 (|y|^(r-1) with r < 2) Newton
    overshoots across zero by a factor of two.  Coordinates whose curvature is
    dominated by f therefore stop at zero instead of crossing it, and a
    coordinate sitting exactly at such a kink leaves it by ``-grad / cap``.
    """
    H = action_hessian(context, x, u)
    diag = np.diag(H)
    scale = 1.0 + np.max(np.abs(context.operator.matrix))
    stiff = ~np.isfinite(diag) | (np.abs(diag) > CURVATURE_CAP * scale)
    if np.any(diag[stiff] < 0):
        return None
    d = np.zeros_like(x)
    free = ~stiff
    if np.any(free):
        try:
            c = linalg.cho_factor(H[np.ix_(free, free)], check_finite=False)
        except linalg.LinAlgError:
            return None
        d[free] = linalg.cho_solve(c, -grad[free], check_finite=False)
    at_kink = stiff & (x == 0)
    d[at_kink] = -grad[at_kink] / (CURVATURE_CAP * scale)
    moving = stiff & ~at_kink
    d[moving] = -grad[moving] / diag[moving]
    kinked = (x != 0) & (np.abs(diag) > KINK_RATIO * scale)
    crossing = kinked & (np.sign(x + d) == -np.sign(x))
    d[crossing] = -x[crossing]
    return d if np.all(np.isfinite(d)) else None


def _backtrack(context, x, u, value, grad, d):
    slope = float(grad @ d)
    if slope >= 0:
        return None
    t = 1.0
    while t > 1e-18:
        xn = x + t * d
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                vn = action_value(context, xn, u)
        except EvaluationError:
            vn = np.inf  # overflow counts as a rejected trial
        if vn <= value + ARMIJO_C * t * slope:
            return xn, vn
        t *= SHRINK
    return None


def local_descent(context: ActionContext, u, x0, grad_tol: float = 1e-10,
                  max_iters: int = 10_000) -> LocalResult:
    """Descend from ``x0`` until the oriented gradient's sup-norm is below ``grad_tol``."""
    x = np.array(x0, dtype=float)
    value = action_value(context, x, u)
    grad = action_gradient(context, x, u)
    for it in range(max_iters):
        gn = _inf_norm(grad)
        if gn <= grad_tol:
            return LocalResult(x, value, gn, True, it)
        if not np.isfinite(gn) or _inf_norm(x) > DIVERGED:
            break
        step = None
        d = _newton_direction(context, x, u, grad)
        if d is not None:
            if -float(grad @ d) <= ROUNDOFF * (1.0 + abs(value)):
                # J no longer resolves the predicted decrease; the gradient still does
                xn = x + d
                with np.errstate(over="ignore", invalid="ignore"):
                    gn_new = _inf_norm(action_gradient(context, xn, u))
                if gn_new < gn:
                    step = xn, action_value(context, xn, u)
            if step is None:
                step = _backtrack(context, x, u, value, grad, d)
        if step is None:
            step = _backtrack(context, x, u, value, grad, -grad)
        if step is None:
            break
        x, value = step
        with np.errstate(over="ignore", invalid="ignore"):
            grad = action_gradient(context, x, u)
    gn = _inf_norm(grad)
    return LocalResult(x, value, gn, bool(gn <= grad_tol), max_iters)


def start_points(context: ActionContext, config: SolveConfig, warm_starts=()) -> list:
    """Origin, the quadratic-part solve (when A is nonsingular), warm starts, random ball points."""
    T = context.T
    starts = [np.zeros(T)]
    A = context.operator.matrix
    if spectral_report(context.operator).definiteness in ("PositiveDefinite", "NegativeDefinite",
                                                          "Indefinite"):
        starts.append(-np.linalg.solve(A, context.load + context.operator.shift))
    n_random = max(0, config.multistart_count - len(starts))
    starts.extend(np.array(w, dtype=float) for w in warm_starts)
    rng = np.random.default_rng(config.seed)
    for _ in range(n_random):
        d = rng.normal(size=T)
        d /= np.linalg.norm(d)
        starts.append(config.start_radius * rng.uniform() ** (1.0 / T) * d)
    return starts


def _clusters(results, tol=CLUSTER_TOL):
    reps = []
    for r in sorted(results, key=lambda r: r.value):
        if all(np.linalg.norm(r.x - x) > tol for x, _ in reps):
            reps.append((r.x.copy(), r.value))
    return reps


def minimize_action(context: ActionContext, u, config: SolveConfig = SolveConfig(),
                    warm_starts: Sequence = ()) -> SolveReport:
    """Best stationary point over the multistart set.

    Raises :class:`ConvergenceError` when no branch reaches ``config.grad_tol``.
    """
    starts = start_points(context, config, warm_starts)
    start_values = [action_value(context, s, u) for s in starts]
    results = [local_descent(context, u, s, config.grad_tol, config.max_iters) for s in starts]
    converged = [r for r in results if r.converged]
    branch_values = [r.value for r in results]
    if not converged:
        best = min(results, key=lambda r: (r.grad_norm, r.value))
        raise ConvergenceError(
            f"no start reached grad_tol={config.grad_tol:g} in {config.max_iters} iterations",
            best_x=best.x, best_value=best.value, best_grad_norm=best.grad_norm,
            lowest_value=float(min(start_values + branch_values)))
    best = min(converged, key=lambda r: r.value)
    res = equation_residual(context.instance, best.x, u)
    return SolveReport(
        x_star=best.x,
        J_star=best.value,
        grad_norm=best.grad_norm,
        residual_norm=_inf_norm(res),
        starts_converged=len(converged),
        starts_total=len(starts),
        distinct_minima=_clusters(converged),
        orientation=context.orientation.name,
        start_values=start_values,
        branch_values=branch_values,
    )


@dataclass(frozen=True)
class VuCertificate:
    is_critical: bool
    is_global_candidate: bool
    gap_to_best_start: float
    grad_norm: float
    residual_norm: float
    value: float


def verify_membership(context: ActionContext, u, x, config: SolveConfig = SolveConfig(),
                      reference: Optional[SolveReport] = None) -> VuCertificate:
    """Critical-point test plus comparison against the best multistart value."""
    x = np.asarray(x, dtype=float)
    gn = _inf_norm(action_gradient(context, x, u))
    rn = _inf_norm(equation_residual(context.instance, x, u))
    value = action_value(context, x, u)
    if reference is None:
        try:
            best = minimize_action(context, u, config, warm_starts=[x]).lowest_value
        except ConvergenceError as exc:
            best = exc.lowest_value
    else:
        best = reference.lowest_value
    gap = value - best
    return VuCertificate(
        is_critical=bool(gn <= config.grad_tol and rn <= RESIDUAL_TOL),
        is_global_candidate=bool(value <= best + GLOBAL_SLACK),
        gap_to_best_start=float(gap),
        grad_norm=gn,
        residual_norm=rn,
        value=value,
    )


@dataclass(frozen=True)
class OracleResult:
    x: np.ndarray
    value: float
    step: float


def brute_force_oracle(context: ActionContext, u, box_halfwidth: float,
                       steps_per_axis: int) -> OracleResult:
    """Exhaustive grid minimum of the oriented functional over [-h, h]^T.

    Ties resolve to the lexicographically first grid point.
    """
    T = context.T
    if T > 4 or steps_per_axis > 201 or steps_per_axis < 2:
        raise OracleSizeError(f"oracle limited to T <= 4 and 2..201 steps (got T={T}, "
                              f"steps={steps_per_axis})")
    axis = np.linspace(-box_halfwidth, box_halfwidth, steps_per_axis)
    tail = np.array(np.meshgrid(axis, axis, indexing="ij")).reshape(2, -1).T
    best_val, best_x = np.inf, None
    for lead in itertools.product(axis, repeat=T - 2):
        pts = np.hstack([np.broadcast_to(lead, (tail.shape[0], T - 2)), tail])
        vals = action_value(context, pts, u)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_x = float(vals[i]), pts[i].copy()
    return OracleResult(best_x, best_val, float(axis[1] - axis[0]))
