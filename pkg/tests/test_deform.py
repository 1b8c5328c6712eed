import numpy as np
import pytest
from scipy.linalg import expm

from moebiusflat.deform import (
    darboux_cubic,
    deform_surface,
    integrate_frame,
    max_difference,
)
from moebiusflat.errors import IntegrationError, MoebiusError
from moebiusflat.fields import Grid
from moebiusflat.wilczynski import WilczynskiData, build_connection

SMALL = Grid.spanning(41, 41)


def test_constant_connection_matches_matrix_exponential(e2):
    # F(x, y) = expm(x Ox + y Oy) when the two matrices commute
    om = build_connection(e2)
    ox, oy = om.x.values[0, 0], om.y.values[0, 0]
    assert np.abs(ox @ oy - oy @ ox).max() < 1e-14
    F = integrate_frame(e2).F.values
    g = e2.grid
    for i, j in [(0, 0), (100, 0), (37, 81), (100, 100)]:
        ref = expm(g.xs[i] * ox + g.ys[j] * oy)
        np.testing.assert_allclose(F[j, i], ref, rtol=1e-10, atol=1e-10)


def test_initial_frame_and_path_residual(e3):
    M = np.array([[1.0, 2, 0, 0], [0, 1, 0, 0], [0, 0, 2, 1], [0, 0, 0, 1]])
    fr = integrate_frame(e3, initial=M)
    np.testing.assert_allclose(fr.F.values[0, 0], M, atol=1e-12)
    assert fr.path_residual < 1e-12
    assert fr.lift.shape == (4,)


def test_incompatible_data_rejected(grid):
    with pytest.raises(IntegrationError):
        integrate_frame(WilczynskiData.build(grid, V="y"))


def test_bad_arguments(e2):
    with pytest.raises(MoebiusError):
        integrate_frame(e2, method="euler")
    with pytest.raises(MoebiusError):
        integrate_frame(e2, initial=np.zeros((4, 4)))
    with pytest.raises(MoebiusError):
        integrate_frame(e2, initial=np.eye(3))


def test_rk4_stepper_is_available():
    w = WilczynskiData.build(SMALL, 1, 1)
    a = integrate_frame(w, method="rk4").F.values
    b = integrate_frame(w).F.values
    assert np.abs(a - b).max() / np.abs(b).max() < 1e-7


def test_round_trip_e2(e2):
    res = deform_surface(e2, 2.0)
    assert max_difference(res.extracted, WilczynskiData.build(e2.grid, 2, 2)) < 1e-6
    assert res.t == 2.0 and res.path_residual < 1e-10


def test_identity_deformation(e3, ramp):
    for w in (e3, ramp):
        assert max_difference(deform_surface(w, 1.0).extracted, w) < 1e-7


def test_permutability(e2):
    step = deform_surface(e2, 2.0).extracted
    twice = deform_surface(step, 3.0).extracted
    once = deform_surface(e2, 6.0).extracted
    assert max_difference(twice, once) < 1e-6


def test_darboux_cubic_scales(e3):
    res = deform_surface(e3, 3.0)
    beta, gamma = darboux_cubic(res.extracted)
    assert (beta - e3.beta * 3.0).max_abs() < 1e-6
    assert (gamma - e3.gamma * 3.0).max_abs() < 1e-6


def test_negative_parameter(e2):
    res = deform_surface(e2, -1.0)
    assert max_difference(res.extracted, WilczynskiData.build(e2.grid, -1, -1)) < 1e-6


def test_max_difference_accepts_constants(e2):
    assert max_difference(e2, e2) == 0.0
