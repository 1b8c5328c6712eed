import numpy as np
import pytest

from moebiusflat.bgg import (
    QuadraticDifferential,
    boundary,
    boundary_squared,
    cotton_york_matrix,
    cotton_york_residual,
    cup_residual,
    cup_residual_formula,
    normal_correction,
    normality_residual,
    quabla_contract,
    solve_psi,
)
from moebiusflat.connection import ConnectionForm
from moebiusflat.fields import Grid, MatrixField
from moebiusflat.wilczynski import WilczynskiData

G = Grid.spanning(21, 21)
RAMP = ("2*y + 1", "1/(2*y + 1)", "2*x^2", "2*x/(2*y + 1)")


def test_boundary_squares_to_zero():
    rng = np.random.default_rng(5)
    for _ in range(20):
        alpha = MatrixField(G, values=rng.normal(size=G.shape + (4, 4)))
        assert boundary_squared(alpha).max_abs() <= 1e-13


def test_boundary_of_identity_vanishes():
    one = boundary(MatrixField.identity(G))
    assert max(one.x.max_abs(), one.y.max_abs()) == 0.0


@pytest.mark.parametrize("ab", [(1, 1), ("x", "y^2"), ("x*y", "sin(x)")])
def test_psi_solves_quabla_equation(ab):
    w = WilczynskiData.build(G, *RAMP)
    q = QuadraticDifferential.of(w, *ab)
    psi = solve_psi(w, q)
    assert quabla_contract(w, q, psi) < 1e-11


def test_normality(e2):
    w = WilczynskiData.build(G, *RAMP)
    assert normality_residual(e2) < 1e-12
    assert normality_residual(w) < 1e-10
    zero = ConnectionForm(MatrixField.zeros(e2.grid), MatrixField.zeros(e2.grid))
    assert normality_residual(e2, Q=zero) > 0.1
    # swapping the two legs breaks it as well
    Q = normal_correction(e2)
    assert normality_residual(e2, Q=ConnectionForm(Q.y, Q.x)) > 0.1


def test_cotton_york_matrix_matches_scalar_residuals():
    w = WilczynskiData.build(G, *RAMP)
    q = QuadraticDifferential.of(w, "x*y", "x + y^2")
    r1, r2 = cotton_york_residual(w, q)
    m1, m2 = cotton_york_matrix(w, q)
    assert r1.max_abs() > 0.1
    assert (m1 - r1 * 0.5).max_abs() < 1e-10
    assert (m2 + r2 * 0.5).max_abs() < 1e-10


def test_cup_residual_expansion():
    w = WilczynskiData.build(G, *RAMP)
    q = QuadraticDifferential.of(w, "x^2", "y*x")
    assert (cup_residual(w, q) - cup_residual_formula(w, q)).max_abs() < 1e-10


def test_e3_is_moebius_flat(e3):
    r1, r2 = cotton_york_residual(e3)
    assert max(r1.max_abs(), r2.max_abs(), cup_residual(e3).max_abs()) < 1e-12
