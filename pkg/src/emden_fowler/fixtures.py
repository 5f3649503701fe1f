"""Small reference problems used by the tests, the scripts and the docs."""
from __future__ import annotations

import numpy as np

from .model import (
    Coefficients,
    Custom,
    Grid,
    Mixed,
    Periodic,
    ProblemInstance,
    power_family,
    zero_family,
)


def periodic_instance(T=3, p=1.0, q=-1.0, g=(1.0, 0.0, 0.0), nonlinearity=None, M=1.0):
    """Periodic problem; with the defaults A = 4I - 11^T (eigenvalues 1, 4, 4)."""
    coeffs = Coefficients(
        p=np.broadcast_to(np.asarray(p, float), (T + 2,)),
        q=np.broadcast_to(np.asarray(q, float), (T,)),
        g=np.broadcast_to(np.asarray(g, float), (T,)),
    )
    return ProblemInstance(Grid(T), Periodic(), coeffs, nonlinearity or zero_family(T), M)


def mixed_instance(T=3, p=1.0, q=0.0, g=(0.0, 0.0, 1.0), alpha1=0.0, beta1=0.0, A1=1.0, B1=0.0,
                   nonlinearity=None, M=1.0):
    """Mixed problem; defaults give the Dirichlet second difference with x(0) = 1."""
    coeffs = Coefficients(
        p=np.broadcast_to(np.asarray(p, float), (T + 2,)),
        q=np.broadcast_to(np.asarray(q, float), (T,)),
        g=np.broadcast_to(np.asarray(g, float), (T,)),
    )
    return ProblemInstance(Grid(T), Mixed(alpha1, beta1, A1, B1), coeffs,
                           nonlinearity or zero_family(T), M)


def sublinear_family(T=3):
    """f = u sign(y) |y|^(1/2): growth class A2 with epsilon1 = M."""
    return power_family(T, r=1.5, c0=0.0, c1=1.0)


def superlinear_family(T=3):
    """f = sign(y) y^2: growth class A3 with epsilon1 = 1."""
    return power_family(T, r=3.0, c0=1.0, c1=0.0)


def linear_family(T=3, eps1=0.25):
    """f = eps1 y: the r = 2 family with weight eps1."""
    return power_family(T, r=2.0, c0=eps1, c1=0.0)


FAMILIES = ("sublinear", "superlinear", "linear", "zero", "custom")


def _custom_family():
    # f = u sin(y) + y^3 / 4 with F left to quadrature
    return Custom(lambda k, y, u: u * np.sin(y) + 0.25 * y ** 3, name="sin_cubic")


def random_instance(rng: np.random.Generator, boundary: str = None, family: str = None,
                    T: int = None) -> ProblemInstance:
    """Random valid instance: p > 0, g with at least one nonzero entry."""
    T = T or int(rng.integers(3, 7))
    boundary = boundary or rng.choice(["periodic", "mixed"])
    family = family or rng.choice(FAMILIES)
    p = rng.uniform(0.5, 2.0, T + 2)
    q = rng.uniform(-2.0, 2.0, T)
    g = rng.uniform(-1.0, 1.0, T)
    g[rng.integers(T)] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
    M = float(rng.uniform(0.5, 2.0))
    gamma = rng.uniform(0.5, 1.5, T)
    if family == "sublinear":
        nl = power_family(T, float(rng.uniform(1.1, 1.9)), float(rng.uniform(-1, 1)),
                          float(rng.uniform(-1, 1)), float(rng.uniform(-0.5, 0.5)), gamma)
    elif family == "superlinear":
        nl = power_family(T, float(rng.uniform(2.1, 4.0)), float(rng.uniform(0.5, 1.5)),
                          float(rng.uniform(-0.2, 0.2)), 0.0, gamma)
    elif family == "linear":
        nl = power_family(T, 2.0, float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.2, 0.2)),
                          0.0, gamma)
    elif family == "custom":
        nl = _custom_family()
    else:
        nl = zero_family(T)
    coeffs = Coefficients(p, q, g)
    if boundary == "mixed":
        b = Mixed(*(float(v) for v in rng.uniform(-1.0, 1.0, 4)))
        return ProblemInstance(Grid(T), b, coeffs, nl, M)
    return ProblemInstance(Grid(T), Periodic(), coeffs, nl, M)


QUADRATIC_SOLUTION = np.array([-0.5, -0.25, -0.25])
QUADRATIC_VALUE = -0.25
