import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emden_fowler import operators
from emden_fowler.errors import ConstructionError
from emden_fowler.fixtures import mixed_instance, periodic_instance, random_instance
from emden_fowler.model import Coefficients, Grid, Mixed, boundary_extend
from emden_fowler.operators import (
    QuadraticOperator,
    build_mixed_operator,
    build_operator,
    build_periodic_operator,
    linear_residual,
    spectral_report,
)


def residual_by_rows(inst, x):
    """Delta(p(k-1) Delta x(k-1)) + q(k) x(k), one row at a time."""
    e = boundary_extend(inst, x)
    p, q = inst.coefficients.p, inst.coefficients.q
    out = []
    for k in range(1, inst.T + 1):
        out.append(p[k] * (e[k + 1] - e[k]) - p[k - 1] * (e[k] - e[k - 1]) + q[k - 1] * e[k])
    return np.array(out)


def test_periodic_fixture_matrix():
    op = build_operator(periodic_instance())
    expected = np.array([[3.0, -1, -1], [-1, 3, -1], [-1, -1, 3]])
    np.testing.assert_allclose(op.matrix, expected, atol=1e-15)
    np.testing.assert_array_equal(op.shift, 0.0)


def test_periodic_laplacian_kills_constants():
    op = build_operator(periodic_instance(q=0.0))
    np.testing.assert_allclose(op.matrix.sum(axis=1), 0.0, atol=1e-15)


def test_periodic_corner_weight_uses_p0():
    p = np.array([2.0, 1.0, 1.0, 1.0, 5.0])
    coeffs = Coefficients(p, np.zeros(3), np.array([1.0, 0, 0]))
    op = build_periodic_operator(coeffs, Grid(3))
    assert op.matrix[0, 2] == -2.0 and op.matrix[2, 2] == 1.0 + 2.0


def test_dirichlet_matrix_by_rows():
    inst = mixed_instance(A1=0.0, g=(1.0, 0, 0))
    op = build_operator(inst)
    eye = np.eye(3)
    by_rows = np.column_stack([residual_by_rows(inst, eye[j]) for j in range(3)])
    np.testing.assert_allclose(op.matrix, by_rows, atol=1e-15)
    np.testing.assert_allclose(op.matrix, [[-2, 1, 0], [1, -2, 1], [0, 1, -2]], atol=1e-15)
    assert abs(np.linalg.det(op.matrix)) > 1e-12
    np.testing.assert_array_equal(op.shift, 0.0)


def test_mixed_shift_has_single_entry():
    op = build_operator(mixed_instance())
    assert np.count_nonzero(op.shift) == 1 and op.shift[0] != 0


def test_mixed_builder_rejects_bad_assembly(monkeypatch):
    coeffs = Coefficients(np.ones(5), np.zeros(3), np.array([1.0, 0, 0]))
    with pytest.raises(ConstructionError):
        build_mixed_operator(coeffs, Mixed(alpha1=np.nan), Grid(3))

    def lopsided(coefficients, boundary, T, x):
        return np.array([x[0] + 2 * x[1], x[1], x[2]])

    monkeypatch.setattr(operators, "_mixed_residual_linear", lopsided)
    with pytest.raises(ConstructionError, match="not symmetric"):
        build_mixed_operator(coeffs, Mixed(), Grid(3))


def test_operator_requires_symmetry():
    with pytest.raises(ValueError):
        QuadraticOperator(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2))


def test_spectral_examples():
    rep = spectral_report(build_operator(periodic_instance()))
    assert rep.lambda_min == pytest.approx(1.0) and rep.lambda_max == pytest.approx(4.0)
    assert rep.definiteness == "PositiveDefinite" and rep.a == pytest.approx(1.0)
    assert rep.operator_norm == pytest.approx(4.0)
    neg = spectral_report(build_operator(periodic_instance()).negated())
    assert neg.definiteness == "NegativeDefinite" and neg.b == pytest.approx(1.0)
    sing = spectral_report(build_operator(periodic_instance(q=0.0)))
    assert sing.definiteness == "Singular" and abs(sing.lambda_min) < 1e-12


def test_indefinite_classification():
    op = QuadraticOperator(np.diag([1.0, -1.0, 2.0]), np.zeros(3))
    assert spectral_report(op).definiteness == "Indefinite"


def test_circulant_eigenvalues():
    # periodic Laplacian on T points has eigenvalues 2 - 2 cos(2 pi j / T)
    T = 7
    rep_eigs = np.linalg.eigvalsh(build_operator(periodic_instance(T=T, q=0.0, g=1.0)).matrix)
    expected = np.sort(2 - 2 * np.cos(2 * np.pi * np.arange(T) / T))
    np.testing.assert_allclose(rep_eigs, expected, atol=1e-12)


@given(st.integers(0, 10_000))
def test_matrix_and_shift_reproduce_residual(seed):
    inst = random_instance(np.random.default_rng(seed))
    op = build_operator(inst)
    x = np.random.default_rng(seed + 1).normal(size=inst.T)
    np.testing.assert_allclose(op.matrix, op.matrix.T, atol=1e-12)
    by_rows = residual_by_rows(inst, x)
    np.testing.assert_allclose(linear_residual(inst, x), by_rows, atol=1e-11)
    if inst.is_mixed:
        np.testing.assert_allclose(op.matrix @ x + op.shift, by_rows, atol=1e-11)
    else:
        np.testing.assert_allclose(-(op.matrix @ x), by_rows, atol=1e-11)


@given(st.integers(0, 10_000))
def test_quadratic_gradient_matches_differences(seed):
    rng = np.random.default_rng(seed)
    op = build_operator(random_instance(rng))
    x = rng.normal(size=op.matrix.shape[0])
    h = 1e-6
    fd = np.array([(op.value(x + h * e) - op.value(x - h * e)) / (2 * h)
                   for e in np.eye(x.size)])
    np.testing.assert_allclose(op.gradient(x), fd, rtol=1e-6, atol=1e-6)


def test_batched_value(rng):
    op = build_operator(periodic_instance())
    xs = rng.normal(size=(5, 3))
    np.testing.assert_allclose(op.value(xs), [op.value(x) for x in xs])
