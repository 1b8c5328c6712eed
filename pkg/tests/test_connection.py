import numpy as np
import pytest
import sympy as sp
from scipy.linalg import expm

import oracles
from moebiusflat.connection import (
    MAX_AD_TERMS,
    ConnectionForm,
    MetricField,
    curvature,
    envelope_checks,
    exp_nilpotent,
    exp_nilpotent_field,
    gauge,
    log_derivative_gauge,
    split_contracts,
)
from moebiusflat.errors import MetricError, NilpotencyError
from moebiusflat.fields import Grid, MatrixField
from moebiusflat.wilczynski import WilczynskiData, build_connection, lie_quadric_metric, split_lie_quadric

G = Grid.spanning(31, 31)
SX, SY = oracles.x, oracles.y


def _expr_matrix(rows):
    return MatrixField.from_entries(G, [[str(e).replace("**", "^") for e in r] for r in rows])


def _random_poly_matrix(rng):
    monos = [1, SX, SY, SX * SY, SX**2]
    return sp.Matrix(4, 4, lambda i, j: sum(int(rng.integers(-2, 3)) * m for m in monos))


def test_curvature_matches_sympy():
    rng = np.random.default_rng(11)
    ax, ay = _random_poly_matrix(rng), _random_poly_matrix(rng)
    om = ConnectionForm(_expr_matrix(ax.tolist()), _expr_matrix(ay.tolist()))
    ref = oracles.on_grid(oracles.curvature(ax, ay), G)
    np.testing.assert_allclose(curvature(om).values, ref, atol=1e-10)


def test_split_properties_on_nonconstant_data(ramp):
    w = WilczynskiData.build(G, *(f.expr for f in ramp.as_tuple()))
    d, n = split_lie_quadric(w)
    sym, comp = split_contracts(d, n, lie_quadric_metric(w))
    assert sym < 1e-12 and comp < 1e-12
    assert ((d + n).x - build_connection(w).x).max_abs() < 1e-14


def test_split_matches_sympy_oracle():
    b, c, V, W = 2 * SY + 1, 1 / (2 * SY + 1), 2 * SX**2, 2 * SX / (2 * SY + 1)
    ox, oy = oracles.frame_matrices(b, c, V, W)
    nx, ny = oracles.split(ox, oy, oracles.lie_quadric(b, c))
    w = WilczynskiData.build(G, "2*y + 1", "1/(2*y + 1)", "2*x^2", "2*x/(2*y + 1)")
    _, n = split_lie_quadric(w)
    np.testing.assert_allclose(n.x.values, oracles.on_grid(nx, G), atol=1e-11)
    np.testing.assert_allclose(n.y.values, oracles.on_grid(ny, G), atol=1e-11)


def test_metric_validation():
    with pytest.raises(MetricError):
        MetricField(MatrixField.constant(G, np.triu(np.ones((4, 4)))))
    with pytest.raises(MetricError):
        MetricField(MatrixField.constant(G, np.diag([1.0, 1.0, 1.0, 0.0]))).inverse()


def test_gauge_conjugates_curvature():
    w = WilczynskiData.build(G, V="y")
    om = build_connection(w)
    phi = MatrixField.from_entries(G, [[1, "x", 0, 0], [0, 1, 0, "y"], [0, 0, 1, 0], ["x*y", 0, 0, 1]])
    # in the column convention the new frame is F phi^-1, so curvature goes to phi R phi^-1
    om2 = gauge(phi, om)
    lhs = curvature(om2)
    rhs = phi @ curvature(om) @ phi.inverse()
    assert (lhs - rhs).max_abs() < 1e-11
    assert curvature(om).max_abs() == pytest.approx(1.0)


def test_exp_nilpotent_matches_expm():
    rng = np.random.default_rng(2)
    m = np.triu(rng.normal(size=(4, 4)), 1)
    np.testing.assert_allclose(exp_nilpotent(m), expm(m), atol=1e-13)
    with pytest.raises(NilpotencyError):
        exp_nilpotent(np.eye(4))


def _upper_field():
    return MatrixField.from_entries(G, [[0, "x", "y^2", "x*y"], [0, 0, "sin(x)", 1], [0, 0, 0, "y"], [0, 0, 0, 0]])


def test_log_derivative_series_equals_gauge_by_exponential(e3):
    w = WilczynskiData.build(G, *(f.expr for f in e3.as_tuple()))
    om = build_connection(w)
    tau = _upper_field()
    via_series = log_derivative_gauge(tau, om)
    via_gauge = gauge(exp_nilpotent_field(tau), om)
    assert (via_series - via_gauge).max_abs() < 1e-11


def test_series_for_principal_nilpotent():
    tau = MatrixField.constant(G, np.diag([1.0, 1.0, 1.0], 1))
    e41 = np.zeros((4, 4))
    e41[3, 0] = 1.0
    om = ConnectionForm(MatrixField.constant(G, e41), MatrixField.zeros(G))
    ref = gauge(exp_nilpotent_field(tau), om)
    assert MAX_AD_TERMS == 7
    assert (log_derivative_gauge(tau, om) - ref).max_abs() < 1e-12
    with pytest.raises(NilpotencyError):
        log_derivative_gauge(tau, om, max_terms=3)


def test_envelope_checks(e3, quadric):
    d, n = split_lie_quadric(e3)
    rep = envelope_checks(n, lie_quadric_metric(e3), d)
    assert rep.enveloped and rep.unimodular
    assert int(rep.kernel_rank.max()) == 0
    d, n = split_lie_quadric(quadric)
    rep = envelope_checks(n, lie_quadric_metric(quadric), d)
    assert int(rep.kernel_rank.min()) == 2
    assert rep.Dg_flat
