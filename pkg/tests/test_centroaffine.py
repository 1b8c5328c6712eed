import numpy as np
import pytest
import sympy as sp

import oracles
from moebiusflat.centroaffine import (
    CentroAffineImmersion,
    adapted_conserved_check,
    decompose,
    gauss_curvature,
    gauss_curvature_max,
    immersion_from_frame,
    unimodular_transform,
)
from moebiusflat.deform import integrate_frame
from moebiusflat.errors import CentroAffineError, MoebiusError
from moebiusflat.fields import Grid, MatrixField

SX, SY = oracles.x, oracles.y
SPHERE = ["cos(x)*cos(y)", "sin(x)*cos(y)", "sin(y)"]
HYPERBOLOID = ["cosh(y)*cos(x)", "cosh(y)*sin(x)", "sinh(y)"]
SPHERE_GRID = Grid(61, 61, 0.1, 0.1, 0.01, 0.01)


def test_tzitzeica_metric(tzitzeica, grid):
    ref, _ = oracles.centro_affine_metric([sp.exp(SX), sp.exp(SY), sp.exp(-SX - SY)])
    assert ref == sp.Matrix([[sp.Rational(2, 3), sp.Rational(1, 3)], [sp.Rational(1, 3), sp.Rational(2, 3)]])
    data = decompose(tzitzeica)
    np.testing.assert_allclose(data.g.values, oracles.on_grid(ref, grid), atol=1e-10)
    assert gauss_curvature_max(data.g) < 1e-8
    assert data.chebyshev_norm() < 1e-8
    assert data.symmetry_residual() < 1e-10
    assert not data.is_hyperbolic()


@pytest.mark.parametrize("exprs,grid", [(HYPERBOLOID, Grid.spanning(41, 41)), (SPHERE, SPHERE_GRID)])
def test_metric_matches_oracle(exprs, grid):
    ref, _ = oracles.centro_affine_metric([sp.sympify(e) for e in exprs])
    data = decompose(CentroAffineImmersion.from_exprs(exprs, grid))
    np.testing.assert_allclose(data.g.values, oracles.on_grid(ref, grid), atol=1e-10)


def test_sphere_is_negative_round_metric():
    data = decompose(CentroAffineImmersion.from_exprs(SPHERE, SPHERE_GRID))
    K = gauss_curvature(data.g)
    # g is minus the round metric, so its curvature is -1
    assert (K + 1.0).max_abs(ring=4) < 1e-5
    assert data.chebyshev_norm() < 1e-10


def test_hyperboloid_flags():
    data = decompose(CentroAffineImmersion.from_exprs(HYPERBOLOID, Grid.spanning(41, 41)))
    assert data.is_hyperbolic()
    assert data.symmetry_residual() < 1e-10


def test_linear_equivariance(tzitzeica):
    A = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, -1.0], [1.0, 0.0, 3.0]])
    base = decompose(tzitzeica)
    moved = decompose(unimodular_transform(tzitzeica, A))
    assert (base.g - moved.g).max_abs() < 1e-10
    np.testing.assert_allclose(base.h, moved.h, atol=1e-9)
    sampled = CentroAffineImmersion.from_values(tzitzeica.grid, tzitzeica.r.values)
    np.testing.assert_allclose(unimodular_transform(sampled, A).r.values, tzitzeica.r.values @ A.T)


def test_sampled_immersion_uses_finite_differences(tzitzeica):
    sampled = CentroAffineImmersion.from_values(tzitzeica.grid, tzitzeica.r.values)
    data = decompose(sampled)
    assert not data.exact_derivatives
    assert (data.g - decompose(tzitzeica).g).max_abs(ring=2) < 1e-6
    assert gauss_curvature_max(data.g) < 1e-5


def test_adapted_conservation(tzitzeica):
    assert adapted_conserved_check(tzitzeica, require_hyperbolic=False) < 1e-12
    assert adapted_conserved_check(tzitzeica, 0.1, require_hyperbolic=False) > 1e-2
    hyp = CentroAffineImmersion.from_exprs(HYPERBOLOID, Grid.spanning(41, 41))
    assert adapted_conserved_check(hyp) < 1e-12
    assert adapted_conserved_check(hyp, 0.1) > 1e-2
    with pytest.raises(CentroAffineError):
        adapted_conserved_check(tzitzeica)


def test_immersion_from_integrated_frame(e2):
    frame = integrate_frame(e2)
    imm, p_var = immersion_from_frame(frame, e2)
    assert p_var < 1e-10
    data = decompose(imm)
    ref = np.broadcast_to([[0.0, 1.0], [1.0, 0.0]], data.g.values[5:-5, 5:-5].shape)
    np.testing.assert_allclose(data.g.values[5:-5, 5:-5], ref, atol=1e-6)
    assert adapted_conserved_check(imm, data=data) < 1e-8


def test_degenerate_inputs(grid):
    cone = CentroAffineImmersion.from_exprs(["x", "y", "0"], grid)
    with pytest.raises(CentroAffineError):
        decompose(cone)
    with pytest.raises(CentroAffineError):
        CentroAffineImmersion.from_exprs(["x", "y"], grid)
    with pytest.raises(MoebiusError):
        gauss_curvature(MatrixField.zeros(grid, 2))
