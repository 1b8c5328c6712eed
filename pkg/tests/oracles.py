"""Independent reference computations built on sympy.

Nothing here imports the package under test; every helper works from the
scalar system written out by hand.
"""

import numpy as np
import sympy as sp

x, y = sp.symbols("x y")


def frame_matrices(beta, gamma, V, W):
    """Derivative matrices of the frame ``(s, s_x, s_y, s_xy)``.

    Column ``j`` holds the coefficients of the derivative of the ``j``-th
    frame vector, using ``s_xx = beta s_y + (V - beta_y)/2 s`` and
    ``s_yy = gamma s_x + (W - gamma_x)/2 s``.
    """
    beta, gamma, V, W = (sp.sympify(e) for e in (beta, gamma, V, W))
    P = (V - sp.diff(beta, y)) / 2
    Q = (W - sp.diff(gamma, x)) / 2
    s_xx = sp.Matrix([P, 0, beta, 0])
    s_yy = sp.Matrix([Q, gamma, 0, 0])

    def basis_derivative(i, var):
        if var == x:
            if i == 0:
                return sp.Matrix([0, 1, 0, 0])
            if i == 1:
                return s_xx
            if i == 2:
                return sp.Matrix([0, 0, 0, 1])
            # s_xxy = d/dy of s_xx
            return s_xx.diff(y) + s_xx[2] * s_yy + s_xx[0] * sp.Matrix([0, 0, 1, 0])
        if i == 0:
            return sp.Matrix([0, 0, 1, 0])
        if i == 1:
            return sp.Matrix([0, 0, 0, 1])
        if i == 2:
            return s_yy
        return s_yy.diff(x) + s_yy[1] * s_xx + s_yy[0] * sp.Matrix([0, 1, 0, 0])

    ox = sp.Matrix.hstack(*(basis_derivative(i, x) for i in range(4)))
    oy = sp.Matrix.hstack(*(basis_derivative(i, y) for i in range(4)))
    return sp.simplify(ox), sp.simplify(oy)


def curvature(ox, oy):
    return sp.simplify(oy.diff(x) - ox.diff(y) + ox * oy - oy * ox)


def lie_quadric(beta, gamma):
    bc = sp.sympify(beta) * sp.sympify(gamma)
    return sp.Matrix([[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, bc]])


def split(ox, oy, G):
    Gi = G.inv()
    n = [(o + Gi * o.T * G - Gi * G.diff(v)) / 2 for o, v in ((ox, x), (oy, y))]
    return [sp.simplify(m) for m in n]


def on_grid(expr, grid):
    """Evaluate a sympy scalar or matrix at the grid nodes."""
    X, Y = grid.mesh
    if not isinstance(expr, sp.MatrixBase):
        f = sp.lambdify((x, y), expr, "numpy")
        return np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    out = np.empty(X.shape + expr.shape)
    for i in range(expr.shape[0]):
        for j in range(expr.shape[1]):
            out[..., i, j] = on_grid(expr[i, j], grid)
    return out


def centro_affine_metric(r):
    """``g_ij``: the ``r``-coefficient of ``r_ij`` in the basis ``(r_u, r_v, r)``."""
    r = sp.Matrix(r)
    ru, rv = r.diff(x), r.diff(y)
    M = sp.Matrix.hstack(ru, rv, r)
    g = sp.zeros(2, 2)
    conn = [[None, None], [None, None]]
    for i, a in enumerate((x, y)):
        for j, b in enumerate((x, y)):
            c = sp.simplify(M.LUsolve(r.diff(a).diff(b)))
            g[i, j] = c[2]
            conn[i][j] = (c[0], c[1])
    return sp.simplify(g), conn
