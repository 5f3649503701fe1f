import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emden_fowler.fixtures import (
    QUADRATIC_SOLUTION,
    linear_family,
    mixed_instance,
    periodic_instance,
    random_instance,
    sublinear_family,
    superlinear_family,
)
from emden_fowler.functional import (
    GrowthProbeGrid,
    Orientation,
    action_gradient,
    action_hessian,
    action_value,
    coercivity_probe,
    coercivity_radius,
    equation_residual,
    fit_coercivity_constants,
    gateaux_bound_probe,
    growth_verdict,
    holder_constant,
    make_context,
)
from emden_fowler.model import (
    Coefficients,
    Custom,
    Grid,
    GrowthDeclaration,
    Periodic,
    ProblemInstance,
    power_family,
    zero_family,
)
from emden_fowler.operators import build_operator, spectral_report

U0 = np.zeros(3)


def fd_gradient(ctx, x, u, h=1e-5):
    return np.array([(action_value(ctx, x + h * e, u) - action_value(ctx, x - h * e, u)) / (2 * h)
                     for e in np.eye(x.size)])


def test_value_at_origin_is_zero():
    ctx = make_context(periodic_instance(nonlinearity=sublinear_family()))
    assert action_value(ctx, U0, np.full(3, 0.7)) == 0.0


def test_value_example():
    ctx = make_context(periodic_instance())
    assert action_value(ctx, np.array([1.0, 0, 0]), U0) == pytest.approx(2.5, abs=1e-14)


@given(st.floats(0.01, 100.0), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_pure_quadratic_is_homogeneous(t, x):
    inst = ProblemInstance(Grid(3), Periodic(), Coefficients(np.ones(5), -np.ones(3), np.zeros(3)),
                           zero_family(3))
    ctx = make_context(inst, orientation=Orientation.MINIMIZE)
    x = np.array(x)
    assert action_value(ctx, t * x, U0) == pytest.approx(t * t * action_value(ctx, x, U0),
                                                         rel=1e-12, abs=1e-12)


def test_gradient_at_origin_is_load():
    ctx = make_context(periodic_instance(nonlinearity=sublinear_family()))
    np.testing.assert_array_equal(action_gradient(ctx, U0, np.ones(3)), [1.0, 0, 0])


def test_quadratic_solution_is_critical():
    inst = periodic_instance()
    ctx = make_context(inst)
    # Sherman-Morrison on 4I - 11^T:  x = -(I/4 + 11^T/4) g
    g = np.array([1.0, 0, 0])
    closed = -(g / 4 + np.ones(3) * g.sum() / 4)
    np.testing.assert_allclose(closed, QUADRATIC_SOLUTION)
    np.testing.assert_allclose(action_gradient(ctx, closed, U0), 0.0, atol=1e-15)
    np.testing.assert_allclose(equation_residual(inst, closed, U0), 0.0, atol=1e-12)


def test_zero_is_not_a_solution():
    res = equation_residual(periodic_instance(), U0, U0)
    assert res[0] == -1.0 and np.all(res[1:] == 0)


@given(st.integers(0, 10_000))
def test_gradient_equals_residual_up_to_sign(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    ctx = make_context(inst, orientation=Orientation.MINIMIZE)
    x = rng.normal(size=inst.T)
    u = rng.uniform(-inst.M, inst.M, inst.T)
    res = equation_residual(inst, x, u)
    np.testing.assert_allclose(action_gradient(ctx, x, u), ctx.residual_sign * res,
                               atol=1e-10, rtol=1e-12)
    neg = ctx.negated()
    np.testing.assert_allclose(action_gradient(neg, x, u), -action_gradient(ctx, x, u))


@given(st.integers(0, 10_000))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    ctx = make_context(inst, orientation=Orientation.MINIMIZE)
    x = rng.choice([-1, 1], inst.T) * rng.uniform(0.3, 2.0, inst.T)
    u = rng.uniform(-inst.M, inst.M, inst.T)
    an = action_gradient(ctx, x, u)
    err = np.max(np.abs(fd_gradient(ctx, x, u) - an)) / max(1.0, np.max(np.abs(an)))
    assert err <= 1e-6


@given(st.integers(0, 10_000))
def test_hessian_matches_gradient_differences(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, family="superlinear")
    ctx = make_context(inst, orientation=Orientation.MINIMIZE)
    x = rng.uniform(0.5, 1.5, inst.T)
    u = rng.uniform(-inst.M, inst.M, inst.T)
    h = 1e-6
    fd = np.column_stack([(action_gradient(ctx, x + h * e, u) - action_gradient(ctx, x - h * e, u))
                          / (2 * h) for e in np.eye(inst.T)])
    np.testing.assert_allclose(action_hessian(ctx, x, u), fd, rtol=1e-5, atol=1e-5)


def test_mixed_gradient_reproduces_residual():
    inst = mixed_instance(nonlinearity=sublinear_family())
    ctx = make_context(inst, orientation=Orientation.MINIMIZE)
    x = np.array([0.3, -0.2, 0.9])
    np.testing.assert_allclose(action_gradient(ctx, x, np.ones(3) * 0.5),
                               equation_residual(inst, x, np.ones(3) * 0.5), atol=1e-14)


def test_batched_value_matches_single(rng):
    ctx = make_context(periodic_instance(nonlinearity=sublinear_family()))
    xs = rng.normal(size=(6, 3))
    np.testing.assert_allclose(action_value(ctx, xs, np.ones(3)),
                               [action_value(ctx, x, np.ones(3)) for x in xs])


def test_parameter_outside_ball_rejected():
    ctx = make_context(periodic_instance(nonlinearity=sublinear_family()))
    with pytest.raises(ArithmeticError):
        action_value(ctx, U0, np.full(3, 2.0))


# --------------------------------------------------------------------- growth


def test_sublinear_verdict():
    v = growth_verdict(periodic_instance(nonlinearity=sublinear_family()))
    assert (v.cls, v.epsilon1, v.epsilon2, v.B) == ("A2", 1.0, 0.0, 1.0)
    assert v.margin == pytest.approx(0.5)


def test_superlinear_verdict_uses_smallest_weight():
    inst = periodic_instance(nonlinearity=power_family(3, 3.0, c0=1.0, c1=0.5, offset=-1.0))
    v = growth_verdict(inst)
    assert v.cls == "A3"
    assert v.epsilon1 == pytest.approx(0.5) and v.epsilon2 == pytest.approx(-1.0)


def test_superlinear_with_sign_changing_weight_is_unverified():
    inst = periodic_instance(nonlinearity=power_family(3, 3.0, c0=0.0, c1=1.0))
    assert growth_verdict(inst).cls == "Unverified"


def test_r2_window_on_fixture():
    inside = growth_verdict(periodic_instance(nonlinearity=linear_family(eps1=0.25)))
    assert inside.cls == "A4"
    assert inside.window == (0.0, pytest.approx(2.0))
    assert inside.corrected_window == (0.0, pytest.approx(1.0))
    assert inside.margin == pytest.approx(1.75) and inside.corrected_margin == pytest.approx(0.75)
    outside = growth_verdict(periodic_instance(nonlinearity=linear_family(eps1=2.0)))
    assert outside.cls == "Unverified" and "outside" in outside.reason


def test_r2_classes_follow_definiteness():
    neg = periodic_instance(q=5.0, nonlinearity=linear_family(eps1=0.1))
    assert spectral_report(build_operator(neg)).definiteness == "NegativeDefinite"
    assert growth_verdict(neg).cls == "A5"
    mixed = mixed_instance(nonlinearity=linear_family(eps1=0.1))
    assert growth_verdict(mixed).cls == "A7"
    mixed_pd = mixed_instance(q=5.0, nonlinearity=linear_family(eps1=0.1))
    assert growth_verdict(mixed_pd).cls == "A6"
    singular = periodic_instance(q=0.0, nonlinearity=linear_family(eps1=0.1))
    assert growth_verdict(singular).cls == "Unverified"


def test_custom_declaration_checked_on_grid():
    good = Custom(lambda k, y, u: 0.5 * u * np.sign(y) * np.sqrt(abs(y)),
                  growth=GrowthDeclaration("A2", 0.5, 0.0, 1.5))
    v = growth_verdict(periodic_instance(nonlinearity=good), GrowthProbeGrid(n_u=5))
    assert v.cls == "A2"
    bad = Custom(lambda k, y, u: y,
                 growth=GrowthDeclaration("A2", 0.5, 0.0, 1.5))
    v = growth_verdict(periodic_instance(nonlinearity=bad), GrowthProbeGrid(n_u=5))
    assert v.cls == "Unverified" and "fails" in v.reason
    undeclared = Custom(lambda k, y, u: y)
    assert growth_verdict(periodic_instance(nonlinearity=undeclared)).cls == "Unverified"


@given(st.integers(3, 8), st.floats(1.05, 4.0), st.integers(0, 1000))
def test_holder_constant_bounds_power_sums(T, r, seed):
    y = np.random.default_rng(seed).normal(size=T)
    c = holder_constant(T, r)
    assert np.sum(np.abs(y) ** r) <= c * np.linalg.norm(y) ** r * (1 + 1e-12)
    # attained by the constant vector when r <= 2
    if r <= 2:
        ones = np.ones(T)
        assert np.sum(ones) == pytest.approx(c * np.linalg.norm(ones) ** r)


# ----------------------------------------------------------------- coercivity


def test_probe_directions():
    base = make_context(periodic_instance(nonlinearity=sublinear_family()),
                        orientation=Orientation.MINIMIZE)
    assert coercivity_probe(base, np.ones(3)).direction == "Coercive"
    assert coercivity_probe(base.negated(), np.ones(3)).direction == "AntiCoercive"
    for inst in (periodic_instance(nonlinearity=superlinear_family()),
                 periodic_instance(q=0.0, nonlinearity=superlinear_family()),
                 mixed_instance(nonlinearity=superlinear_family())):
        ctx = make_context(inst, orientation=Orientation.MINIMIZE)
        assert coercivity_probe(ctx, U0).direction == "AntiCoercive"


def test_probe_inconclusive_on_indefinite_quadratic():
    inst = ProblemInstance(Grid(3), Periodic(),
                           Coefficients(np.ones(5), np.array([-1.0, 5.0, -1.0]), np.ones(3)),
                           zero_family(3))
    ctx = make_context(inst, orientation=Orientation.MINIMIZE)
    assert coercivity_probe(ctx, U0).direction == "Inconclusive"


def test_make_context_negates_anticoercive():
    ctx = make_context(periodic_instance(q=0.0, nonlinearity=superlinear_family()))
    assert ctx.orientation is Orientation.MAXIMIZE_NEGATED
    assert make_context(periodic_instance()).orientation is Orientation.MINIMIZE


def test_coercivity_fit_recovers_quadratic():
    ctx = make_context(periodic_instance())
    a, mu, b, rms = fit_coercivity_constants(coercivity_probe(ctx, U0))
    assert mu == pytest.approx(2.0, abs=0.05)
    assert a > 0


def test_coercivity_radius_bounds_sublevel_set(rng):
    ctx = make_context(periodic_instance(nonlinearity=sublinear_family()))
    R = coercivity_radius(ctx, np.ones(3))
    d = rng.normal(size=(500, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    for scale in (1.0001, 1.5, 4.0):
        assert np.all(action_value(ctx, scale * R * d, np.ones(3)) > 0)


# ----------------------------------------------------------- derivative bound


def test_gateaux_bound_of_pure_quadratic():
    inst = ProblemInstance(Grid(3), Periodic(), Coefficients(np.ones(5), -np.ones(3), np.zeros(3)),
                           zero_family(3))
    ctx = make_context(inst, orientation=Orientation.MINIMIZE)
    d = 1.5
    bound = gateaux_bound_probe(ctx, d, [U0])
    norm = spectral_report(ctx.operator).operator_norm
    # (1, -1, 0) d is sampled and lies in the top eigenspace; the largest sampled |x| is d sqrt(3)
    assert norm * d * np.sqrt(2) * (1 - 1e-12) <= bound <= norm * d * np.sqrt(3)


def test_gateaux_bound_superlinear_is_finite_and_monotone():
    ctx = make_context(periodic_instance(nonlinearity=superlinear_family()))
    b2 = gateaux_bound_probe(ctx, 2.0, [U0])
    b4 = gateaux_bound_probe(ctx, 4.0, [U0])
    assert np.isfinite(b2) and b2 <= b4
    for d, probe in ((2.0, b2), (4.0, b4)):
        axis = np.linspace(-d, d, 41)
        pts = np.array(np.meshgrid(axis, axis, axis, indexing="ij")).reshape(3, -1).T
        dense = np.max(np.linalg.norm(action_gradient(ctx, pts, U0), axis=1))
        # the probe samples a subset of the box, and misses little of its maximum
        assert probe <= dense * (1 + 1e-12)
        assert probe >= 0.99 * dense


@given(st.floats(0.01, 50.0), st.integers(0, 1000))
def test_gateaux_bound_nondecreasing(d, seed):
    inst = random_instance(np.random.default_rng(seed), family="sublinear")
    ctx = make_context(inst, orientation=Orientation.MINIMIZE)
    us = [np.zeros(inst.T)]
    assert gateaux_bound_probe(ctx, d, us) <= gateaux_bound_probe(ctx, 2 * d, us)
