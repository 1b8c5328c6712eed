"""Quadratic polynomial conserved quantities and the flat centro-affine test.

A quantity ``q(t) = v0 + t v1 + t^2 v2`` (coefficient columns in the frame
``(sigma, sigma_x, sigma_y, sigma_xy)``) is conserved by the family

    d_t = D + t (N + d alpha) + (t^2 - 1) chi + (t^3 - t) psi

when ``d_t q(t) = 0`` identically in ``t``.  Both sides are polynomials, so the
check is done coefficient by coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .connection import ConnectionForm
from .errors import MissingDataError, MoebiusError
from .fields import MatrixField, ScalarField, VectorField
from .wilczynski import (
    WilczynskiData,
    _scalar,
    canonical_chi_psi_tau,
    compatibility_residual,
    moebius_chi_psi,
    split_lie_quadric,
)


@dataclass(frozen=True)
class PolyConservedQuantity:
    v0: VectorField
    v1: VectorField
    v2: VectorField
    a: ScalarField | None = None
    b: ScalarField | None = None
    c: ScalarField | None = None

    @property
    def coefficients(self):
        return (self.v0, self.v1, self.v2)

    def shape_residual(self):
        """How far ``v0`` is from the hat column and ``v2`` from the sigma column.

        ``v0`` must be a multiple of ``(beta gamma, 0, 0, -2)``, which we
        check through its middle entries; ``v2`` must vanish off the first entry.
        """
        r0 = max(self.v0.entry(1).max_abs(), self.v0.entry(2).max_abs())
        r2 = max(self.v2.entry(i).max_abs() for i in (1, 2, 3))
        return max(r0, r2)


def _vec(entries):
    return VectorField.from_scalars(entries[0].grid, entries)


def build_from_potential(alpha, w):
    """The quantity attached to a potential ``alpha``: ``a = 2 alpha_x``, ``b = 2 alpha_y``, ``c = -2 alpha_xy``."""
    g = w.grid
    alpha = _scalar(g, alpha, w.beta.order)
    ax, ay = alpha.dx(), alpha.dy()
    a, b, c = ax * 2.0, ay * 2.0, ax.dy() * -2.0
    zero = ScalarField.constant(g, 0.0, w.beta.order)
    v0 = _vec([w.beta * w.gamma, zero, zero, ScalarField.constant(g, -2.0, w.beta.order)])
    v1 = _vec([c, b, a, zero])
    v2 = _vec([a * b * 0.5 + 1.0, zero, zero, zero])
    return PolyConservedQuantity(v0, v1, v2, a, b, c)


@dataclass
class FamilyPieces:
    """``d_t = C0 + t C1 + t^2 C2 + t^3 C3`` split into its parts."""

    D: ConnectionForm
    N: ConnectionForm
    dalpha: ConnectionForm
    chi: ConnectionForm
    psi: ConnectionForm
    coeffs: list = field(default_factory=list)


def family_pieces(w, alpha, chi=None, psi=None, chi_mode="canonical"):
    """Pieces of the gauged family.

    ``chi_mode="canonical"`` uses ``chi``, ``psi`` with ``(a, b) = (V/2, W/2)``;
    ``chi_mode="potential"`` uses ``(a, b) = (2 alpha_x, 2 alpha_y)``.
    Explicit ``chi``/``psi`` override both.
    """
    g = w.grid
    alpha = _scalar(g, alpha, w.beta.order)
    d, n = split_lie_quadric(w)
    if chi is None or psi is None:
        if chi_mode == "canonical":
            c2, p2, _ = canonical_chi_psi_tau(w)
        elif chi_mode == "potential":
            c2, p2 = moebius_chi_psi(w, alpha.dx() * 2.0, alpha.dy() * 2.0)
        else:
            raise MoebiusError("invalid-mode", f"unknown chi mode {chi_mode!r}")
        chi = chi if chi is not None else c2
        psi = psi if psi is not None else p2
    ident = MatrixField.identity(g)
    da = ConnectionForm(ident * alpha.dx(), ident * alpha.dy())
    pieces = FamilyPieces(d, n, da, chi, psi)
    pieces.coeffs = [d - chi, n + da - psi, chi, psi]
    return pieces


def _apply(m, v):
    return m @ v


def coefficient_fields(q, pieces):
    """``[(x-part, y-part)]`` for the six powers ``t^0 .. t^5`` of ``d_t q(t)``."""
    vs = q.coefficients
    out = []
    for k in range(6):
        comps = []
        for axis_i, axis in enumerate(("x", "y")):
            total = None
            if k < 3:
                total = vs[k].derivative(axis)
            for i, C in enumerate(pieces.coeffs):
                j = k - i
                if 0 <= j < 3:
                    term = _apply(C.x if axis_i == 0 else C.y, vs[j])
                    total = term if total is None else total + term
            comps.append(total)
        out.append(tuple(comps))
    return out


def six_equations(q, pieces):
    """The six coefficient equations written out separately (one per power of t).

    They coincide with :func:`coefficient_fields` and serve as a diagnostic.
    """
    v0, v1, v2 = q.coefficients
    res = []
    for axis_i, axis in enumerate(("x", "y")):
        pick = (lambda f: f.x) if axis_i == 0 else (lambda f: f.y)
        D, N, da, chi, psi = (pick(f) for f in (pieces.D, pieces.N, pieces.dalpha, pieces.chi, pieces.psi))
        dv = [v.derivative(axis) for v in (v0, v1, v2)]
        res.append([
            dv[0] + D @ v0 - chi @ v0,
            dv[1] + D @ v1 + N @ v0 + da @ v0 - chi @ v1 - psi @ v0,
            dv[2] + D @ v2 + N @ v1 + da @ v1 + chi @ v0 - chi @ v2 - psi @ v1,
            N @ v2 + da @ v2 + chi @ v1 + psi @ v0 - psi @ v2,
            chi @ v2 + psi @ v1,
            psi @ v2,
        ])
    return list(zip(*res))


def reduced_equations(q, pieces):
    """The three equations left once the kernel terms are discarded."""
    v0, v1, v2 = q.coefficients
    res = []
    for axis_i, axis in enumerate(("x", "y")):
        pick = (lambda f: f.x) if axis_i == 0 else (lambda f: f.y)
        D, N, da, chi, psi = (pick(f) for f in (pieces.D, pieces.N, pieces.dalpha, pieces.chi, pieces.psi))
        res.append([
            v1.derivative(axis) + D @ v1 + N @ v0 + da @ v0 - chi @ v1 - psi @ v0,
            v2.derivative(axis) + D @ v2 + N @ v1 + da @ v1 + chi @ v0,
            da @ v2 + chi @ v1 + psi @ v0 - psi @ v2,
        ])
    return list(zip(*res))


def conservation_residual(q, w, chi=None, psi=None, alpha=None, chi_mode="canonical", detail=False):
    """Max-norm over all ``t``-coefficients of ``d_t q(t)``.

    ``alpha`` defaults to ``w.alpha``.  With ``detail=True`` returns a dict
    holding the per-power maxima and the reduced-system maxima too.
    """
    alpha = w.alpha if alpha is None else alpha
    if alpha is None:
        raise MissingDataError(detail="a potential alpha is required")
    pieces = family_pieces(w, alpha, chi, psi, chi_mode)
    coeffs = coefficient_fields(q, pieces)
    per_power = [max(a.max_abs(), b.max_abs()) for a, b in coeffs]
    total = max(per_power)
    if not detail:
        return total
    return {
        "residual": total,
        "per_power": per_power,
        "six": [max(a.max_abs(), b.max_abs()) for a, b in six_equations(q, pieces)],
        "reduced": [max(a.max_abs(), b.max_abs()) for a, b in reduced_equations(q, pieces)],
    }


FLAT_KEYS = ("beta_y", "gamma_x", "V", "W", "unit")


def flat_centro_affine_fields(alpha, w, unit=1.0):
    """Residual fields of the five flat-centro-affine equations.

    ``beta_y = 2 alpha_xx``, ``gamma_x = 2 alpha_yy``,
    ``V = 2 (beta alpha_y + alpha_x^2)``, ``W = 2 (gamma alpha_x + alpha_y^2)``
    and ``unit = beta gamma - 4 alpha_x alpha_y``.  ``unit`` is 1 for the
    original surface and ``t^2`` after a spectral deformation by ``t``.
    """
    alpha = _scalar(w.grid, alpha, w.beta.order)
    ax, ay = alpha.dx(), alpha.dy()
    be, ga = w.beta, w.gamma
    return {
        "beta_y": be.dy() - ax.dx() * 2.0,
        "gamma_x": ga.dx() - ay.dy() * 2.0,
        "V": w.V - (be * ay + ax * ax) * 2.0,
        "W": w.W - (ga * ax + ay * ay) * 2.0,
        "unit": be * ga - ax * ay * 4.0 - float(unit),
    }


def flat_centro_affine_residuals(alpha, w, unit=1.0):
    """Max-norms of the five equations, keyed by :data:`FLAT_KEYS`."""
    return {k: f.max_abs() for k, f in flat_centro_affine_fields(alpha, w, unit).items()}


theorem1_residuals = flat_centro_affine_residuals  # name kept for API compatibility


@dataclass
class EquivalenceReport:
    equations: dict
    conservation: float
    compatibility: float
    gauss_curvature: float | None
    tol: float
    curvature_tol: float = 1e-6

    @property
    def equations_pass(self):
        return all(v < self.tol for v in self.equations.values())

    @property
    def conservation_pass(self):
        return self.conservation < self.tol

    @property
    def curvature_pass(self):
        return None if self.gauss_curvature is None else self.gauss_curvature < self.curvature_tol

    @property
    def flat_centro_affine(self):
        ok = self.equations_pass and self.conservation_pass
        return ok if self.curvature_pass is None else ok and self.curvature_pass


def equivalence_check(w, alpha=None, immersion=None, tol=1e-8, curvature_tol=1e-6):
    """Residuals of the five flat centro-affine equations, conservation residual and, optionally, the curvature of ``g_hat``.

    ``immersion`` is a :class:`~moebiusflat.centroaffine.CentroAffineImmersion`.
    """
    alpha = w.alpha if alpha is None else alpha
    if alpha is None:
        raise MissingDataError(detail="a potential alpha is required")
    t1 = flat_centro_affine_residuals(alpha, w)
    q = build_from_potential(alpha, w)
    cons = conservation_residual(q, w, alpha=alpha)
    compat = compatibility_residual(w)
    K = None
    if immersion is not None:
        from .centroaffine import decompose, gauss_curvature

        K = gauss_curvature(decompose(immersion).g).max_abs()
    return EquivalenceReport(t1, cons, compat, K, tol, curvature_tol)


__all__ = [
    "EquivalenceReport",
    "PolyConservedQuantity",
    "FLAT_KEYS",
    "WilczynskiData",
    "build_from_potential",
    "coefficient_fields",
    "conservation_residual",
    "equivalence_check",
    "family_pieces",
    "reduced_equations",
    "six_equations",
    "flat_centro_affine_fields",
    "flat_centro_affine_residuals",
    "theorem1_residuals",
]
