"""Action functional, its gradient, the equation residual, and growth probes.

For either boundary type the functional has the form

    J(x, u) = 0.5 <A x, x> + <shift, x> - sum_k F(k, x(k), u(k)) + <load, x>

where ``load = g`` for the periodic problem and ``load = -g`` for the mixed
one.  With these signs the gradient equals ``-residual`` (periodic) and
``+residual`` (mixed), so critical points and solutions coincide exactly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import EvaluationError
from .model import (
    Custom,
    Parameter,
    PowerModulated,
    ProblemInstance,
)
from .operators import (
    QuadraticOperator,
    SpectralReport,
    build_operator,
    linear_residual,
    spectral_report,
)

N_DIRECTIONS = 64
PROBE_SEED = 20240601


class Orientation(enum.Enum):
    MINIMIZE = 1
    MAXIMIZE_NEGATED = -1

    @property
    def sign(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class ActionContext:
    instance: ProblemInstance
    operator: QuadraticOperator
    orientation: Orientation = Orientation.MINIMIZE

    @property
    def sign(self) -> float:
        return self.orientation.sign

    @property
    def T(self) -> int:
        return self.instance.T

    @property
    def load(self) -> np.ndarray:
        g = np.asarray(self.instance.coefficients.g, dtype=float)
        return -g if self.instance.is_mixed else g

    @property
    def residual_sign(self) -> float:
        """Sign s with  residual = s * (unoriented gradient)."""
        return 1.0 if self.instance.is_mixed else -1.0

    def negated(self) -> "ActionContext":
        flipped = (Orientation.MINIMIZE if self.orientation is Orientation.MAXIMIZE_NEGATED
                   else Orientation.MAXIMIZE_NEGATED)
        return ActionContext(self.instance, self.operator, flipped)


def _u_values(context_or_instance, u) -> np.ndarray:
    inst = getattr(context_or_instance, "instance", context_or_instance)
    vals = u.values if isinstance(u, Parameter) else np.asarray(u, dtype=float)
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (inst.T,))
    if np.max(np.abs(vals)) > inst.M * (1 + 1e-12):
        raise EvaluationError(f"parameter leaves the ball of radius M = {inst.M}")
    return vals


def make_context(instance: ProblemInstance, u=None, orientation: Optional[Orientation] = None,
                 radii: Optional[Sequence[float]] = None) -> ActionContext:
    """Build the action context, choosing the orientation by a coercivity probe.

    The probe runs at ``u`` (zero when omitted); an anti-coercive functional is
    negated so that minimization applies.
    """
    op = build_operator(instance)
    ctx = ActionContext(instance, op, orientation or Orientation.MINIMIZE)
    if orientation is not None:
        return ctx
    u = np.zeros(instance.T) if u is None else u
    evidence = coercivity_probe(ctx, u, radii or default_radii())
    if evidence.direction == "AntiCoercive":
        return ctx.negated()
    return ctx


def action_value(context: ActionContext, x, u):
    """Oriented action value; ``x`` may be a stack of vectors along the last axis."""
    x = np.asarray(x, dtype=float)
    uv = _u_values(context, u)
    nl = context.instance.nonlinearity
    val = context.operator.value(x) - np.sum(nl.F(x, uv), axis=-1) + x @ context.load
    val = context.sign * val
    if np.ndim(val) == 0:
        if not np.isfinite(val):
            raise EvaluationError("action value is not finite")
        return float(val)
    return val


def action_gradient(context: ActionContext, x, u) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    uv = _u_values(context, u)
    grad = (context.operator.gradient(x) - context.instance.nonlinearity.f(x, uv)
            + context.load)
    if not np.all(np.isfinite(grad)):
        raise EvaluationError("gradient is not finite")
    return context.sign * grad


def action_hessian(context: ActionContext, x, u) -> np.ndarray:
    """A minus diag(df/dy), oriented; may contain inf where f is not differentiable."""
    uv = _u_values(context, u)
    d = context.instance.nonlinearity.df_dy(np.asarray(x, dtype=float), uv)
    return context.sign * (context.operator.matrix - np.diag(d))


def equation_residual(instance: ProblemInstance, x, u) -> np.ndarray:
    """Left side minus right side of the difference equation at every k in 1..T."""
    uv = _u_values(instance, u)
    fx = instance.nonlinearity.f(np.asarray(x, dtype=float), uv)
    g = instance.coefficients.g
    lin = linear_residual(instance, x)
    if instance.is_mixed:
        res = lin - fx - g
    else:
        res = lin + fx - g
    if not np.all(np.isfinite(res)):
        raise EvaluationError("residual is not finite")
    return res


def holder_constant(T: int, r: float) -> float:
    """Smallest c with sum |y_k|^r <= c |y|^r on R^T (Euclidean |y|)."""
    return float(T) ** max(0.0, 1.0 - r / 2.0)


# --------------------------------------------------------------------- growth


@dataclass(frozen=True)
class GrowthProbeGrid:
    B: Optional[float] = None
    y_max_factor: float = 1e3
    n_u: int = 9

    def y_values(self, B: float) -> np.ndarray:
        mags = [B * 2.0 ** j for j in range(64) if B * 2.0 ** j < self.y_max_factor * B]
        mags.append(self.y_max_factor * B)
        mags = np.asarray(mags)
        return np.concatenate([-mags[::-1], mags])


@dataclass(frozen=True)
class GrowthVerdict:
    """Growth class of f with its constants.

    ``window`` is the admissible epsilon1 interval as printed for A4-A7;
    ``corrected_window`` accounts for the 1/2 in the quadratic term and the
    Holder factor.  ``margin`` / ``corrected_margin`` are the distances of
    epsilon1 to the right ends of those windows.  For A2/A3 the margin is the
    distance of r to 2.
    """

    cls: str
    epsilon1: float
    epsilon2: float
    B: float
    r: float
    margin: float
    window: Optional[tuple] = None
    corrected_window: Optional[tuple] = None
    corrected_margin: Optional[float] = None
    reason: str = ""


def _r2_class(instance, spectral: SpectralReport):
    pos, neg = ("A6", "A7") if instance.is_mixed else ("A4", "A5")
    if spectral.positive_definite:
        return pos, spectral.a
    if spectral.negative_definite:
        return neg, spectral.b
    return None, None


def _sample_inequality(instance, cls, eps1, eps2, r, B, grid: GrowthProbeGrid) -> bool:
    """Check the growth inequality on the (k, y, u) probe grid.

    Bounds above (A2, A4-A7) are checked two-sided on |f|; the lower bound of
    A3 is checked on sign(y) f.  Both forms transfer to the antiderivative on
    either side of zero, which is what the coercivity estimates use.
    """
    ys = grid.y_values(B)
    us = np.linspace(-instance.M, instance.M, grid.n_u)
    nl = instance.nonlinearity
    for k in range(1, instance.T + 1):
        for u in us:
            for y in ys:
                fv = nl.f_at(k, y, u)
                bound = eps1 * abs(y) ** (r - 1.0) + eps2
                if cls == "A3":
                    ok = np.sign(y) * fv >= bound - 1e-9 * max(1.0, abs(bound))
                else:
                    ok = abs(fv) <= bound + 1e-9 * max(1.0, abs(bound))
                if not ok:
                    return False
    return True


def growth_verdict(instance: ProblemInstance, samples: Optional[GrowthProbeGrid] = None,
                   spectral: Optional[SpectralReport] = None) -> GrowthVerdict:
    """Classify the growth of f.

    Power families are classified exactly from (r, c0, c1, gamma, offset, M).
    Custom families are checked against their declared constants on a sampled
    grid and reported ``Unverified`` on any failing sample.
    """
    grid = samples or GrowthProbeGrid()
    if spectral is None:
        spectral = spectral_report(build_operator(instance))
    nl = instance.nonlinearity
    T = instance.T

    if isinstance(nl, PowerModulated):
        r = nl.r
        gmax = float(np.max(np.abs(nl.gamma)))
        k_max = (abs(nl.c0) + abs(nl.c1) * instance.M) * gmax
        B = grid.B or 1.0
        if r < 2:
            return GrowthVerdict("A2", k_max, abs(nl.offset), B, r, 2.0 - r)
        if r > 2:
            # smallest weight (c0 + c1 u) gamma(k) over the ball; linear in u
            w = np.minimum((nl.c0 + nl.c1 * instance.M) * nl.gamma,
                           (nl.c0 - nl.c1 * instance.M) * nl.gamma)
            k_min = float(np.min(w))
            if k_min > 0:
                return GrowthVerdict("A3", k_min, -abs(nl.offset), B, r, r - 2.0)
            return GrowthVerdict("Unverified", k_min, -abs(nl.offset), B, r, r - 2.0,
                                 reason="weight (c0 + c1 u) gamma(k) is not positive on the ball")
        return _r2_verdict(instance, spectral, k_max, abs(nl.offset), B, T)

    if isinstance(nl, Custom):
        decl = nl.growth
        if decl is None:
            return GrowthVerdict("Unverified", np.nan, np.nan, np.nan, np.nan, np.nan,
                                 reason="no growth class declared")
        B = grid.B or decl.B
        if not _sample_inequality(instance, decl.cls, decl.epsilon1, decl.epsilon2, decl.r, B, grid):
            return GrowthVerdict("Unverified", decl.epsilon1, decl.epsilon2, B, decl.r, np.nan,
                                 reason=f"declared class {decl.cls} fails on the probe grid")
        if decl.cls == "A2" and 1 < decl.r < 2:
            return GrowthVerdict("A2", decl.epsilon1, decl.epsilon2, B, decl.r, 2.0 - decl.r)
        if decl.cls == "A3" and decl.r > 2:
            return GrowthVerdict("A3", decl.epsilon1, decl.epsilon2, B, decl.r, decl.r - 2.0)
        if decl.cls in ("A4", "A5", "A6", "A7") and decl.r == 2:
            v = _r2_verdict(instance, spectral, decl.epsilon1, decl.epsilon2, B, T)
            if v.cls != decl.cls:
                return GrowthVerdict("Unverified", v.epsilon1, v.epsilon2, B, 2.0, v.margin,
                                     v.window, v.corrected_window, v.corrected_margin,
                                     reason=f"declared {decl.cls}, operator gives {v.cls}")
            return v
        return GrowthVerdict("Unverified", decl.epsilon1, decl.epsilon2, B, decl.r, np.nan,
                             reason=f"exponent r={decl.r} inconsistent with class {decl.cls}")
    raise TypeError(f"unknown nonlinearity {type(nl).__name__}")


def _r2_verdict(instance, spectral, eps1, eps2, B, T):
    cls, const = _r2_class(instance, spectral)
    if cls is None:
        return GrowthVerdict("Unverified", eps1, eps2, B, 2.0, np.nan,
                             reason=f"operator is {spectral.definiteness}")
    window = (0.0, 2.0 * const)
    corrected = (0.0, const / holder_constant(T, 2.0))
    margin = window[1] - eps1
    # eps1 = 0 (f bounded) sits inside every admissible positive window
    verdict_cls = cls if 0 <= eps1 < window[1] else "Unverified"
    reason = "" if verdict_cls == cls else f"epsilon1 = {eps1:.6g} outside {window}"
    return GrowthVerdict(verdict_cls, eps1, eps2, B, 2.0, margin, window, corrected,
                         corrected[1] - eps1, reason)


# ----------------------------------------------------------------- coercivity


def default_radii() -> tuple:
    return tuple(2.0 ** j for j in range(-2, 13))


def sphere_directions(T: int, n: int = N_DIRECTIONS, seed: int = PROBE_SEED) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, T))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _principal_directions(context: ActionContext, u) -> np.ndarray:
    """+- eigenvectors of the quadratic part that dominates J at large radius.

    For a power family with r = 2 the nonlinearity contributes -w(k) x(k)^2 / 2,
    so the eigenvectors of A - diag(w) are used; otherwise those of A.  Random
    directions alone can miss a narrow cone where the quadratic form is negative.
    """
    Q = context.operator.matrix
    nl = context.instance.nonlinearity
    if isinstance(nl, PowerModulated) and nl.r == 2:
        Q = Q - np.diag(nl.weight(_u_values(context, u)))
    _, vecs = np.linalg.eigh(Q)
    return np.vstack([vecs.T, -vecs.T])


@dataclass(frozen=True)
class CoercivityEvidence:
    direction: str  # Coercive | AntiCoercive | Inconclusive
    table: tuple  # (radius, min over sphere, max over sphere)
    value_at_zero: float


def coercivity_probe(context: ActionContext, u, radii: Sequence[float] = None,
                     n_directions: int = N_DIRECTIONS, seed: int = PROBE_SEED) -> CoercivityEvidence:
    """Sample the oriented functional on spheres |x| = radius.

    The sample directions are ``n_directions`` seeded random unit vectors plus
    the principal directions of the dominant quadratic part.  Coercive when, over the upper half of the radii, sphere minima are
    increasing and exceed J(0) + 1; anti-coercive is the mirror statement for
    sphere maxima.
    """
    radii = np.asarray(default_radii() if radii is None else radii, dtype=float)
    if radii.size < 3 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive, increasing, with at least 3 entries")
    dirs = np.vstack([sphere_directions(context.T, n_directions, seed),
                      _principal_directions(context, u)])
    j0 = action_value(context, np.zeros(context.T), u)
    rows = []
    for rad in radii:
        vals = action_value(context, rad * dirs, u)
        rows.append((float(rad), float(np.min(vals)), float(np.max(vals))))
    table = np.array(rows)
    top = table[len(table) // 2:]
    mins, maxs = top[:, 1], top[:, 2]
    if np.all(np.diff(mins) > 0) and np.all(mins > j0 + 1):
        direction = "Coercive"
    elif np.all(np.diff(maxs) < 0) and np.all(maxs < j0 - 1):
        direction = "AntiCoercive"
    else:
        direction = "Inconclusive"
    return CoercivityEvidence(direction, tuple(rows), j0)


def fit_coercivity_constants(evidence: CoercivityEvidence):
    """Least-squares fit of sphere minima to a R^mu + b over the upper half of radii.

    Returns (a, mu, b, rms residual); diagnostic only.
    """
    table = np.asarray(evidence.table)
    top = table[len(table) // 2:]
    R, m = top[:, 0], top[:, 1]

    def resid(theta):
        log_a, mu, b = theta
        return (np.exp(log_a) * R ** mu + b - m) / np.maximum(1.0, np.abs(m))

    guess_mu = 2.0
    guess_a = max(m[-1] / R[-1] ** guess_mu, 1e-6) if m[-1] > 0 else 1e-6
    sol = optimize.least_squares(resid, [np.log(guess_a), guess_mu, 0.0])
    log_a, mu, b = sol.x
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return float(np.exp(log_a)), float(mu), float(b), rms


def coercivity_radius(context: ActionContext, u=None) -> float:
    """Radius beyond which the oriented functional exceeds J(0) = 0.

    Analytic bound for power families on an oriented operator with positive
    smallest eigenvalue a:
        J >= a/2 |x|^2 - (K/r) c |x|^r - (|offset| sqrt(T) + |shift| + |g|) |x|
    with K the largest weight over the ball and c the Holder constant.
    """
    inst = context.instance
    nl = inst.nonlinearity
    if not isinstance(nl, PowerModulated):
        raise TypeError("analytic coercivity radius needs a power family")
    oriented = spectral_report(QuadraticOperator(context.sign * context.operator.matrix,
                                                 context.operator.shift))
    if not oriented.positive_definite:
        raise ValueError("oriented operator is not positive definite")
    a = oriented.a
    T = inst.T
    K = (abs(nl.c0) + abs(nl.c1) * inst.M) * float(np.max(np.abs(nl.gamma)))
    c = holder_constant(T, nl.r)
    lin = (abs(nl.offset) * np.sqrt(T) + np.linalg.norm(context.operator.shift)
           + np.linalg.norm(inst.coefficients.g))

    def bound(R):
        return 0.5 * a * R ** 2 - K / nl.r * c * R ** nl.r - lin * R

    if nl.r > 2 or (nl.r == 2 and K / 2 * c >= 0.5 * a):
        raise ValueError("power growth is not dominated by the quadratic part")
    hi = 1.0
    while bound(hi) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("coercivity radius search diverged")
    if bound(1e-12) > 0:
        return 0.0
    return float(optimize.brentq(bound, 1e-12, hi, xtol=1e-12))


# -------------------------------------------------------------- derivative bound


def gateaux_bound_probe(context: ActionContext, d: float, u_samples, points_per_axis: int = 5,
                        floor: float = 2.0 ** -10, max_points: int = 4096,
                        seed: int = PROBE_SEED) -> float:
    """Largest gradient norm over sampled x in the box [-d, d]^T and u in u_samples.

    The sample set is the union of a base pattern scaled by d, d/2, d/4, ...
    down to ``floor``, so the set at d is contained in the set at 2d and the
    returned value is nondecreasing in d.
    """
    if not d > 0:
        raise ValueError("d must be positive")
    T = context.T
    axis = np.linspace(-1.0, 1.0, points_per_axis)
    if points_per_axis ** T <= max_points:
        base = np.array(np.meshgrid(*([axis] * T), indexing="ij")).reshape(T, -1).T
    else:
        rng = np.random.default_rng(seed)
        base = rng.uniform(-1.0, 1.0, size=(max_points, T))
        base = np.vstack([base, np.ones(T), -np.ones(T), np.zeros(T)])
    scales = [d]
    while scales[-1] / 2 >= floor:
        scales.append(scales[-1] / 2)
    us = list(u_samples)
    if not us:
        raise ValueError("need at least one parameter sample")
    best = 0.0
    for s in scales:
        pts = s * base
        for u in us:
            norms = np.linalg.norm(action_gradient(context, pts, u), axis=1)
            best = max(best, float(np.max(norms)))
    return best
