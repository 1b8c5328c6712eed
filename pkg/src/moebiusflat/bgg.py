"""Surface-case BGG calculus in the hat frame.

The soldering elements ``eps1 = E12 + E34`` and ``eps2 = E13 + E24`` act on
matrix-valued forms by commutator.  The boundary operator on a two-form
with ``dx^dy`` component ``alpha`` is ``(-[eps2, alpha], [eps1, alpha])`` and
on a one-form ``phi`` it is ``[eps1, phi_x] + [eps2, phi_y]``.  Since the two
elements commute, ``boundary_one(boundary(alpha)) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .connection import ConnectionForm, curvature
from .errors import QuablaError
from .fields import MatrixField, OneForm, ScalarField, commutator, wedge_bracket
from .wilczynski import E14, EPS1, EPS2, _scalar, moebius_chi_psi, split_hat

__all__ = [
    "EPS1",
    "EPS2",
    "QuadraticDifferential",
    "boundary",
    "boundary_one",
    "cotton_york_matrix",
    "cotton_york_residual",
    "cup_residual_formula",
    "quabla_contract",
    "boundary_squared",
    "cup_residual",
    "normal_correction",
    "normality_residual",
    "quabla",
    "solve_psi",
]


@dataclass(frozen=True)
class QuadraticDifferential:
    """``q = a eps1 (x) eps1 + b eps2 (x) eps2``; trace-free by construction."""

    a: ScalarField
    b: ScalarField

    @classmethod
    def of(cls, w, a=None, b=None):
        a = w.a if a is None else a
        b = w.b if b is None else b
        order = w.beta.order
        return cls(_scalar(w.grid, 0 if a is None else a, order), _scalar(w.grid, 0 if b is None else b, order))

    def one_form(self):
        """As a matrix one-form: ``q_x = a eps1``, ``q_y = b eps2``."""
        g = self.a.grid
        return OneForm(MatrixField.constant(g, EPS1) * self.a, MatrixField.constant(g, EPS2) * self.b)


def _eps(grid):
    return MatrixField.constant(grid, EPS1), MatrixField.constant(grid, EPS2)


def boundary(alpha):
    """Boundary of a two-form given by its ``dx^dy`` component."""
    e1, e2 = _eps(alpha.grid)
    return OneForm(-commutator(e2, alpha), commutator(e1, alpha))


def boundary_one(phi):
    """Boundary of a one-form: a section."""
    e1, e2 = _eps(phi.grid)
    return commutator(e1, phi.x) + commutator(e2, phi.y)


def quabla(phi, d):
    """``(d^D boundary + boundary d^D)`` on a one-form, with ``d`` the connection ``D``."""
    d = d if isinstance(d, ConnectionForm) else ConnectionForm(d.x, d.y)
    first = boundary(d.d_form(phi))
    second = d.d_section(boundary_one(phi))
    return first + second


def _as_q(w, q):
    if q is None:
        return QuadraticDifferential.of(w)
    if isinstance(q, QuadraticDifferential):
        return q
    a, b = q
    return QuadraticDifferential.of(w, a, b)


def solve_psi(w, q=None, tol=1e-10, verify=True):
    """Closed-form ``psi = (beta b dx + gamma a dy) E14`` with its verification contract.

    The contract checks ``quabla(psi) + boundary([N ^ q]) = 0``; failure
    raises ``quabla-mismatch``.
    """
    q = _as_q(w, q)
    g = w.grid
    e14 = MatrixField.constant(g, E14)
    psi = ConnectionForm(e14 * (w.beta * q.b), e14 * (w.gamma * q.a))
    if verify:
        res = quabla_contract(w, q, psi)
        if res > tol:
            raise QuablaError(detail=f"quabla residual {res:.3g} exceeds {tol:.3g}")
    return psi


def quabla_contract(w, q, psi):
    q = _as_q(w, q)
    d, n = split_hat(w)
    lhs = quabla(psi, d) + boundary(wedge_bracket(n, q.one_form()))
    return lhs.max_abs()


def normal_correction(w):
    """``Q`` with ``Q_x = (beta gamma/2) eps2`` and ``Q_y = (beta gamma/2) eps1``.

    This is the choice for which the boundary of the curvature of
    ``D_hat - Q`` vanishes.
    """
    e1, e2 = _eps(w.grid)
    half = w.beta * w.gamma * 0.5
    return ConnectionForm(e2 * half, e1 * half)


def normality_residual(w, Q=None):
    """Max-norm of ``boundary(R^{D_hat - Q})``."""
    d, _ = split_hat(w)
    Q = normal_correction(w) if Q is None else Q
    return boundary(curvature(d - Q)).max_abs()


def cotton_york_residual(w, q=None):
    """``(2a_y - 2 beta gamma_x - beta_x gamma, 2b_x - 2 beta_y gamma - beta gamma_y)``."""
    q = _as_q(w, q)
    be, ga = w.beta, w.gamma
    r1 = q.a.dy() * 2.0 - be * ga.dx() * 2.0 - be.dx() * ga
    r2 = q.b.dx() * 2.0 - be.dy() * ga * 2.0 - be * ga.dy()
    return r1, r2


def cotton_york_matrix(w, q=None):
    """The ``eps1`` and ``eps2`` coefficients of ``R^{D_hat - chi}``, ``chi = Q + q``.

    On compatible data they equal ``r1/2`` and ``-r2/2`` for the scalar
    residuals ``(r1, r2)`` of :func:`cotton_york_residual`.
    """
    q = _as_q(w, q)
    d, _ = split_hat(w)
    chi, _ = moebius_chi_psi(w, q.a, q.b)
    r = curvature(d - chi)
    return r.entry(0, 1), r.entry(0, 2)


def cup_residual(w, q=None):
    """The ``(1,4)`` entry of ``d^{D_hat} psi + [N ^ q]``.

    Expands to ``2 gamma_x a + gamma a_x - 2 beta_y b - beta b_y``.
    """
    q = _as_q(w, q)
    d, n = split_hat(w)
    psi = solve_psi(w, q, verify=False)
    total = d.d_form(psi) + wedge_bracket(n, q.one_form())
    return total.entry(0, 3)


def cup_residual_formula(w, q=None):
    q = _as_q(w, q)
    be, ga, a, b = w.beta, w.gamma, q.a, q.b
    return ga.dx() * a * 2.0 + ga * a.dx() - be.dy() * b * 2.0 - be * b.dy()


def boundary_squared(alpha):
    return boundary_one(boundary(alpha))
