"""Minimizers along a convergent parameter sequence and certification of their limit."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .errors import ConvergenceError
from .functional import (
    ActionContext,
    action_value,
    coercivity_probe,
    default_radii,
    fit_coercivity_constants,
    gateaux_bound_probe,
)
from .model import Parameter
from .solver import (
    SolveConfig,
    SolveReport,
    local_descent,
    minimize_action,
    verify_membership,
)

ALPHA_SLACK = 1e-12
LIMIT_SLACK = 1e-6


@dataclass(frozen=True)
class AffineHomotopy:
    """u_n = u_bar + v / n."""

    u_bar: np.ndarray
    v: np.ndarray
    M: float

    def __post_init__(self):
        ub = np.asarray(self.u_bar, dtype=float)
        v = np.broadcast_to(np.asarray(self.v, dtype=float), ub.shape).copy()
        object.__setattr__(self, "u_bar", ub)
        object.__setattr__(self, "v", v)
        # every u_n is a convex combination of u_bar and u_bar + v
        Parameter(ub, self.M)
        Parameter(ub + v, self.M)

    def term(self, n: int) -> Parameter:
        return Parameter(self.u_bar + self.v / n, self.M)

    @property
    def limit(self) -> Parameter:
        return Parameter(self.u_bar, self.M)


@dataclass(frozen=True)
class ExplicitSequence:
    values: tuple
    u_bar: np.ndarray
    M: float

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(np.asarray(v, dtype=float) for v in self.values))
        object.__setattr__(self, "u_bar", np.asarray(self.u_bar, dtype=float))
        for v in self.values:
            Parameter(v, self.M)
        Parameter(self.u_bar, self.M)

    def term(self, n: int) -> Parameter:
        return Parameter(self.values[n - 1], self.M)

    @property
    def limit(self) -> Parameter:
        return Parameter(self.u_bar, self.M)


ParameterSequence = Union[AffineHomotopy, ExplicitSequence]


def extract_convergent_subsequence(points, tol_cluster: float = 1e-4):
    """Largest single-linkage cluster in the tail half of ``points``.

    Returns the cluster's indices into ``points`` (ascending) and its last
    element.  Equal-size clusters are broken in favour of the one reaching
    furthest into the list.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise ValueError("cannot extract a subsequence from an empty list")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    start = pts.shape[0] // 2
    tail = pts[start:]
    if tail.shape[0] == 1:
        labels = np.zeros(1, dtype=int)
    else:
        adj = squareform(pdist(tail)) <= tol_cluster
        _, labels = connected_components(adj, directed=False)
    best = max(set(labels), key=lambda c: (np.sum(labels == c), np.flatnonzero(labels == c)[-1]))
    idx = [start + int(i) for i in np.flatnonzero(labels == best)]
    return idx, pts[idx[-1]].copy()


@dataclass(frozen=True)
class Certification:
    limit_is_critical: bool
    limit_is_minimizer_candidate: bool
    gap: float
    value_at_limit: float
    independent_minimum: float
    grad_norm: float
    residual_norm: float


def certify_limit(context: ActionContext, x_bar, u_bar, config: SolveConfig = SolveConfig()
                  ) -> Certification:
    """Check that x_bar is critical at u_bar and no better minimizer exists among fresh starts."""
    cert = verify_membership(context, u_bar, x_bar, config,
                             reference=_independent_solve(context, u_bar, config))
    best = cert.value - cert.gap_to_best_start
    return Certification(
        limit_is_critical=cert.is_critical,
        limit_is_minimizer_candidate=bool(cert.value <= best + LIMIT_SLACK),
        gap=cert.gap_to_best_start,
        value_at_limit=cert.value,
        independent_minimum=best,
        grad_norm=cert.grad_norm,
        residual_norm=cert.residual_norm,
    )


def _independent_solve(context, u_bar, config):
    try:
        return minimize_action(context, u_bar, config)
    except ConvergenceError as exc:
        return SolveReport(exc.best_x, exc.best_value, exc.best_grad_norm, np.inf, 0, 0, [],
                           context.orientation.name, branch_values=[exc.lowest_value])


@dataclass
class StudyRecord:
    n: int
    u_digest: str
    x: Optional[np.ndarray]
    J: float
    grad_norm: float
    residual_norm: float
    ok: bool
    dist_to_limit: float = np.nan
    error: str = ""


@dataclass
class StudyReport:
    records: list
    uniform_bound_c: float
    alpha: float
    alpha_holds: bool
    subsequence_indices: list  # values of n
    representative: Optional[np.ndarray]
    x_bar: Optional[np.ndarray]
    certification: Optional[Certification]
    convergence_rate_table: list  # (n, |u_n - u_bar|_C, |x_n - x_bar|, ratio, |dJ|, mean-value bound)
    lipschitz_constant: float
    coercivity_fit: tuple  # (a, mu, b, rms)
    gateaux_bound: float
    orientation: str
    status: str  # certified | inconclusive | partial
    failures: list = field(default_factory=list)


def u_digest(u: Parameter) -> str:
    return hashlib.sha256(np.ascontiguousarray(u.values, dtype="<f8").tobytes()).hexdigest()[:16]


def run_study(context: ActionContext, sequence: ParameterSequence, N: int,
              config: SolveConfig = SolveConfig(), tol_cluster: float = 1e-4,
              radii=None) -> StudyReport:
    """Solve at u_1..u_N, bound and cluster the minimizers, certify the limit."""
    if N < 8:
        raise ValueError("a study needs N >= 8")
    u_bar = sequence.limit
    evidence = coercivity_probe(context, u_bar, radii or default_radii())
    if evidence.direction != "Coercive":
        raise ValueError(f"oriented functional is {evidence.direction} at the limit parameter; "
                         "negate the context or change the problem")

    records, failures = [], []
    prev = None
    zero = np.zeros(context.T)
    alpha = -np.inf
    for n in range(1, N + 1):
        u_n = sequence.term(n)
        alpha = max(alpha, action_value(context, zero, u_n))
        try:
            rep = minimize_action(context, u_n, config, warm_starts=() if prev is None else [prev])
        except ConvergenceError as exc:
            records.append(StudyRecord(n, u_digest(u_n), None, np.nan, exc.best_grad_norm or np.nan,
                                       np.nan, False, error=str(exc)))
            failures.append(n)
            continue
        prev = rep.x_star
        records.append(StudyRecord(n, u_digest(u_n), rep.x_star, rep.J_star, rep.grad_norm,
                                   rep.residual_norm, True))

    good = [r for r in records if r.ok]
    fit = fit_coercivity_constants(evidence)
    orientation = context.orientation.name
    if not good:
        return StudyReport(records, np.nan, alpha, bool(alpha <= ALPHA_SLACK), [], None, None,
                           None, [], np.nan, fit, np.nan, orientation, "partial", failures)

    c = max(float(np.linalg.norm(r.x)) for r in good)
    idx, representative = extract_convergent_subsequence([r.x for r in good], tol_cluster)
    sub_n = [good[i].n for i in idx]

    # the cluster representative approximates the limit; polish it at u_bar
    polished = local_descent(context, u_bar, representative, config.grad_tol, config.max_iters)
    x_bar = polished.x if polished.converged else representative
    cert = certify_limit(context, x_bar, u_bar, config)

    d = max(c, float(np.max(np.abs(x_bar))), max(float(np.max(np.abs(r.x))) for r in good))
    samples = [sequence.term(n) for n in sorted({1, N // 2, N})] + [u_bar]
    gbound = gateaux_bound_probe(context, d, samples)

    table = []
    for r in good:
        r.dist_to_limit = float(np.linalg.norm(r.x - x_bar))
    tail = [r for r in good if r.n > N // 2]
    for r in tail:
        du = float(np.max(np.abs(sequence.term(r.n).values - u_bar.values)))
        ratio = r.dist_to_limit / du if du > 0 else np.nan
        dJ = abs(action_value(context, r.x, sequence.term(r.n))
                 - action_value(context, x_bar, sequence.term(r.n)))
        table.append((r.n, du, r.dist_to_limit, ratio, dJ, gbound * r.dist_to_limit))
    ratios = [row[3] for row in table if np.isfinite(row[3])]
    lip = max(ratios) if ratios else np.nan

    if failures:
        status = "partial"
    elif cert.limit_is_critical and cert.limit_is_minimizer_candidate:
        status = "certified"
    else:
        status = "inconclusive"
    alpha = float(alpha) + 0.0
    return StudyReport(records, c, alpha, bool(alpha <= ALPHA_SLACK), sub_n, representative,
                       x_bar, cert, table, lip, fit, gbound, orientation, status, failures)
