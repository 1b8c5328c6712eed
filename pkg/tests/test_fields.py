import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moebiusflat.errors import GridError, MoebiusError
from moebiusflat.fields import (
    Grid,
    MatrixField,
    OneForm,
    ScalarField,
    SingularError,
    VectorField,
    commutator,
    finite_difference,
    wedge_bracket,
)


def test_grid_defaults_and_layout():
    g = Grid()
    assert (g.nx, g.ny, g.dx, g.dy) == (101, 101, 0.01, 0.01)
    X, Y = g.mesh
    assert X.shape == (101, 101)
    assert X[0, 1] == pytest.approx(0.01) and Y[1, 0] == pytest.approx(0.01)


def test_grid_too_small():
    with pytest.raises(GridError) as info:
        Grid(4, 10)
    assert info.value.code == "grid-too-small"


@pytest.mark.parametrize("order,expected", [(2, 2), (4, 4), (6, 6)])
def test_stencil_convergence_rate(order, expected):
    errs = []
    for n in (41, 81):
        xs = np.linspace(0, 1, n)
        h = xs[1] - xs[0]
        d = finite_difference(np.sin(3 * xs), h, 0, order)
        errs.append(np.abs(d - 3 * np.cos(3 * xs)).max())
    rate = np.log2(errs[0] / errs[1])
    assert rate > expected - 0.6


@pytest.mark.parametrize("order", [4, 6])
def test_stencil_exact_on_polynomials(order):
    xs = np.linspace(0, 1, 30)
    h = xs[1] - xs[0]
    d = finite_difference(xs**order, h, 0, order)
    np.testing.assert_allclose(d, order * xs ** (order - 1), atol=1e-9)


def test_invalid_order():
    with pytest.raises(MoebiusError):
        finite_difference(np.zeros(10), 0.1, 0, 3)


def test_exact_and_sampled_derivatives_agree(grid):
    f = ScalarField.from_expr(grid, "sin(x)*exp(y)")
    s = ScalarField.from_values(grid, f.values)
    assert (f.dx() - s.dx()).max_abs(ring=0) < 1e-7
    assert (f.dy().dx() - s.dy().dx()).max_abs(ring=0) < 1e-5


def test_max_abs_ring_defaults(grid):
    f = ScalarField.from_values(grid, np.zeros(grid.shape))
    v = np.zeros(grid.shape)
    v[0, 0] = 1.0
    g = ScalarField.from_values(grid, v)
    assert g.max_abs() == 0.0  # boundary ring ignored for sampled data
    assert g.max_abs(ring=0) == 1.0
    assert f.max_abs() == 0.0


def test_matrix_algebra_matches_numpy(small_grid):
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    A = MatrixField.constant(small_grid, a)
    B = MatrixField.constant(small_grid, b)
    np.testing.assert_allclose((A @ B).values[3, 4], a @ b, atol=1e-13)
    np.testing.assert_allclose(commutator(A, B).values[0, 0], a @ b - b @ a, atol=1e-13)
    np.testing.assert_allclose(A.det().values[2, 2], np.linalg.det(a), rtol=1e-12)
    np.testing.assert_allclose(A.inverse().values[1, 1], np.linalg.inv(a), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(A.T.values[0, 0], a.T)
    v = VectorField.from_entries(small_grid, [1, 2, 3, 4])
    np.testing.assert_allclose((A @ v).values[0, 0], a @ [1, 2, 3, 4], atol=1e-13)


def test_singular_matrix_reports_node(small_grid):
    m = MatrixField.from_entries(small_grid, [["x", 0], [0, 1]])
    with pytest.raises(SingularError) as info:
        m.inverse()
    assert info.value.code == "singular"
    assert "(i=0" in str(info.value)


def test_grid_mismatch(small_grid, grid):
    with pytest.raises(GridError):
        ScalarField.constant(small_grid, 1.0) + ScalarField.from_values(grid, np.zeros(grid.shape))


def test_wedge_bracket_definition(small_grid):
    rng = np.random.default_rng(5)
    m = [MatrixField.constant(small_grid, rng.normal(size=(4, 4))) for _ in range(4)]
    w, e = OneForm(m[0], m[1]), OneForm(m[2], m[3])
    ref = commutator(m[0], m[3]) - commutator(m[1], m[2])
    assert (wedge_bracket(w, e) - ref).max_abs() < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_scalar_broadcast_into_matrix(c1, c2):
    g = Grid.spanning(7, 7)
    s = ScalarField.from_expr(g, "x + 2*y")
    m = MatrixField.identity(g) * s * c1 + c2
    assert m.values[3, 2, 1, 1] == pytest.approx(c1 * (g.xs[2] + 2 * g.ys[3]) + c2)


def test_sample_sampled_field_is_cubic_accurate(grid):
    f = ScalarField.from_expr(grid, "sin(2*x)*cos(y)")
    s = ScalarField.from_values(grid, f.values)
    px, py = np.array([0.123, 0.555]), np.array([0.777, 0.031])
    np.testing.assert_allclose(s.sample(px, py), f.sample(px, py), atol=1e-7)
