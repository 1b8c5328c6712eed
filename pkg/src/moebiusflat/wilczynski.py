"""The Wilczynski frame system of a surface in projective 3-space.

In asymptotic coordinates a lift ``sigma`` of the surface satisfies

    sigma_xx = beta sigma_y + (V - beta_y)/2 sigma
    sigma_yy = gamma sigma_x + (W - gamma_x)/2 sigma

and the frame ``(sigma, sigma_x, sigma_y, sigma_xy)`` obeys a first-order
system whose connection form is built here, together with the Lie-quadric
metric, its split into metric and symmetric parts, the spectral family and
the residuals of the flatness conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .connection import (
    ConnectionForm,
    MetricField,
    curvature,
    default_tolerance,
    gauge,
    metric_split,
)
from .errors import FrameError, MissingDataError, MoebiusError
from .expr import X, Y, as_expr
from .fields import Grid, MatrixField, ScalarField, VectorField

EPS1 = np.zeros((4, 4))
EPS1[0, 1] = EPS1[2, 3] = 1.0
EPS2 = np.zeros((4, 4))
EPS2[0, 2] = EPS2[1, 3] = 1.0
E14 = np.zeros((4, 4))
E14[0, 3] = 1.0
# Lie-quadric metric on the hat frame (constant)
J = np.array([[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]], dtype=float)


def _scalar(grid, value, order=4):
    if value is None:
        return None
    if isinstance(value, ScalarField):
        if value.grid != grid:
            raise MoebiusError("grid-mismatch", "coefficient fields live on different grids")
        return value
    if isinstance(value, np.ndarray) and value.ndim == 2:
        return ScalarField.from_values(grid, value, order=order)
    return ScalarField.from_expr(grid, as_expr(value), order=order)


@dataclass(frozen=True)
class WilczynskiData:
    """Coefficients ``(beta, gamma, V, W)`` with optional ``a``, ``b``, ``alpha``."""

    beta: ScalarField
    gamma: ScalarField
    V: ScalarField
    W: ScalarField
    a: ScalarField | None = None
    b: ScalarField | None = None
    alpha: ScalarField | None = None

    @classmethod
    def build(cls, grid=None, beta=0, gamma=0, V=0, W=0, a=None, b=None, alpha=None, order=4):
        """Accepts expressions, strings, numbers, node arrays or ScalarFields."""
        grid = grid if grid is not None else Grid()
        s = lambda v: _scalar(grid, v, order)  # noqa: E731
        return cls(s(beta), s(gamma), s(V), s(W), s(a), s(b), s(alpha))

    @property
    def grid(self):
        return self.beta.grid

    @property
    def is_exact(self):
        return all(f.is_exact for f in (self.beta, self.gamma, self.V, self.W))

    def with_quadratic(self, a, b):
        return replace(self, a=_scalar(self.grid, a, self.beta.order), b=_scalar(self.grid, b, self.beta.order))

    def with_alpha(self, alpha):
        return replace(self, alpha=_scalar(self.grid, alpha, self.beta.order))

    def scaled(self, t):
        """The spectral insertion ``(t beta, t gamma, t^2 V, t^2 W)``; a, b scale by ``t^2``."""
        t = float(t)
        sq = lambda f: None if f is None else f * (t * t)  # noqa: E731
        return WilczynskiData(self.beta * t, self.gamma * t, self.V * (t * t), self.W * (t * t),
                              sq(self.a), sq(self.b), None if self.alpha is None else self.alpha * t)

    def reparametrize(self, lam, mu):
        """Coefficients in the coordinates ``X = lam x``, ``Y = mu y`` (lam, mu > 0).

        Quadratic-differential components pick up ``1/lam^2`` and ``1/mu^2``.
        """
        lam, mu = float(lam), float(mu)
        if lam <= 0 or mu <= 0:
            raise MoebiusError("invalid-scale", "reparametrization factors must be positive")
        if not all(f.is_exact for f in self._fields()):
            raise MoebiusError("unsupported", "reparametrization needs expression-backed data")
        g = self.grid
        grid = Grid(g.nx, g.ny, g.x0 * lam, g.y0 * mu, g.dx * lam, g.dy * mu)
        sub = {"x": X * (1.0 / lam), "y": Y * (1.0 / mu)}

        def conv(f, factor):
            if f is None:
                return None
            return ScalarField(grid, exprs=(f.expr * factor).substitute(sub), order=f.order)

        return WilczynskiData(
            conv(self.beta, mu / lam**2), conv(self.gamma, lam / mu**2),
            conv(self.V, 1 / lam**2), conv(self.W, 1 / mu**2),
            conv(self.a, 1 / lam**2), conv(self.b, 1 / mu**2), conv(self.alpha, 1.0),
        )

    def _fields(self):
        return [f for f in (self.beta, self.gamma, self.V, self.W, self.a, self.b, self.alpha) if f is not None]

    def as_tuple(self):
        return (self.beta, self.gamma, self.V, self.W)


def _matrix(grid, rows):
    return MatrixField.from_scalars(grid, rows)


def build_connection(w):
    """Connection form of the frame system in coefficient-column convention."""
    g = w.grid
    b, c, V, W = w.as_tuple()
    by, cx = b.dy(), c.dx()
    zero = ScalarField.constant(g, 0.0, b.order)
    one = ScalarField.constant(g, 1.0, b.order)
    ax = [
        [zero, one, zero, zero],
        [(V - by) * 0.5, zero, b, zero],
        [zero, zero, zero, one],
        [(b * W - b * cx + V.dy() - by.dy()) * 0.5, b * c, (V + by) * 0.5, zero],
    ]
    ay = [
        [zero, zero, one, zero],
        [zero, zero, zero, one],
        [(W - cx) * 0.5, c, zero, zero],
        [(c * V - c * by + W.dx() - cx.dx()) * 0.5, (W + cx) * 0.5, b * c, zero],
    ]
    return ConnectionForm.from_row_acting(_matrix(g, ax), _matrix(g, ay))


def compatibility_residual(w, ring=None):
    """Max-norm of the curvature of the frame system."""
    return curvature(build_connection(w)).max_abs(ring)


def lie_quadric_metric(w):
    g = w.grid
    bc = w.beta * w.gamma
    rows = [[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, None]]
    s = [[bc if v is None else ScalarField.constant(g, v, bc.order) for v in r] for r in rows]
    return MetricField(_matrix(g, s))


def split_lie_quadric(w):
    """``(D, N)`` from splitting the frame connection against the Lie-quadric metric."""
    return metric_split(build_connection(w), lie_quadric_metric(w))


def explicit_n(w):
    """Closed-form symmetric part of the Lie-quadric split."""
    g = w.grid
    b, c, V, W = w.as_tuple()
    by, cx = b.dy(), c.dx()
    z = ScalarField.constant(g, 0.0, b.order)
    nx14 = (V.dy() - by.dy() + b * W - b * cx * 2.0 - c * b.dx()) * 0.5
    ny14 = (W.dx() - cx.dx() + c * V - c * by * 2.0 - b * c.dy()) * 0.5
    nx = [[z, by * -0.5, z, nx14], [z, z, z, z], [z, b, z, by * 0.5], [z, z, z, z]]
    ny = [[z, z, cx * -0.5, ny14], [z, z, c, cx * 0.5], [z, z, z, z], [z, z, z, z]]
    return ConnectionForm(_matrix(g, nx), _matrix(g, ny))


def _const(grid, m, order=4):
    return MatrixField.constant(grid, m, order)


def moebius_chi_psi(w, a, b):
    """The pair ``(chi, psi)`` attached to a quadratic differential ``(a, b)``."""
    g = w.grid
    a = _scalar(g, a, w.beta.order)
    b = _scalar(g, b, w.beta.order)
    half_bc = w.beta * w.gamma * 0.5
    e1, e2, e14 = _const(g, EPS1), _const(g, EPS2), _const(g, E14)
    chi = ConnectionForm(e1 * a + e2 * half_bc, e1 * half_bc + e2 * b)
    psi = ConnectionForm(e14 * (w.beta * b), e14 * (w.gamma * a))
    return chi, psi


def tau_field(w):
    return _const(w.grid, E14) * (w.beta * w.gamma * 0.5)


def canonical_chi_psi_tau(w, a=None, b=None):
    """Canonical ``(chi, psi, tau)``; ``chi`` and ``psi`` use ``(V/2, W/2)`` unless given."""
    a = w.V * 0.5 if a is None else a
    b = w.W * 0.5 if b is None else b
    chi, psi = moebius_chi_psi(w, a, b)
    return chi, psi, tau_field(w)


def spectral_connection(w, t, route="insertion"):
    """The member ``d_t`` of the spectral family.

    ``insertion`` builds the frame system of ``(t beta, t gamma, t^2 V, t^2 W)``;
    ``assembled`` sums ``D + tN + (t^2-1)(chi + D tau) + (t^3-t) psi`` in the
    original frame, where ``D tau = d tau + [D, tau]``.
    """
    t = float(t)
    if route == "insertion":
        return build_connection(w.scaled(t))
    if route != "assembled":
        raise MoebiusError("invalid-route", f"unknown route {route!r}")
    d, n = split_lie_quadric(w)
    chi, psi, tau = canonical_chi_psi_tau(w)
    s, u = t * t - 1.0, t**3 - t
    parts = []
    for axis, dd, nn, ch, ps in zip(("x", "y"), d, n, chi, psi):
        dtau = tau.derivative(axis) + dd @ tau - tau @ dd
        parts.append(dd + nn * t + (ch + dtau) * s + ps * u)
    return ConnectionForm(*parts)


def tau_removed_family(w, t):
    """``D + tN + (t^2-1) chi + (t^3-t) psi`` with the canonical ``chi``, ``psi``."""
    d, n = split_lie_quadric(w)
    chi, psi, _ = canonical_chi_psi_tau(w)
    s, u = t * t - 1.0, t**3 - t
    return ConnectionForm(*(dd + nn * t + ch * s + ps * u for dd, nn, ch, ps in zip(d, n, chi, psi)))


# -- hat frame ---------------------------------------------------------------

def hat_gauge(w):
    """``exp(tau) = I + tau`` taking coefficients in the sigma frame to the hat frame."""
    return MatrixField.identity(w.grid) + tau_field(w)


def hat_connection(w):
    """Frame connection written in the hat frame ``(sigma, sigma_x, sigma_y, sigma_xy - bc/2 sigma)``."""
    return gauge(hat_gauge(w), build_connection(w))


def split_hat(w):
    """``(D_hat, N)``: split of the hat-frame connection against the constant metric ``J``."""
    return metric_split(hat_connection(w), MetricField(_const(w.grid, J)))


def moebius_family(w, t, a=None, b=None, chi=None, psi=None):
    """``D_hat + tN + (t^2-1) chi + (t^3-t) psi`` in the hat frame.

    With a quadratic differential ``(a, b)`` the one-forms default to the
    normal correction plus ``q`` and the matching ``psi``.
    """
    d, n = split_hat(w)
    if chi is None or psi is None:
        if a is None:
            a, b = w.a, w.b
        if a is None or b is None:
            raise MissingDataError(detail="quadratic differential (a, b) required")
        c2, p2 = moebius_chi_psi(w, a, b)
        chi = chi if chi is not None else c2
        psi = psi if psi is not None else p2
    s, u = t * t - 1.0, t**3 - t
    return ConnectionForm(*(dd + nn * t + ch * s + ps * u for dd, nn, ch, ps in zip(d, n, chi, psi)))


# -- residuals -----------------------------------------------------------------

@dataclass(frozen=True)
class MoebiusResiduals:
    r_a: float
    r_b: float
    r_c: float
    r_classical: float
    sign: str

    def as_dict(self):
        return {"r_a": self.r_a, "r_b": self.r_b, "r_c": self.r_c, "r_classical": self.r_classical}

    def passed(self, tol):
        return all(v < tol for v in self.as_dict().values())


def moebius_flat_fields(w, sign="intro", a=None, b=None):
    """The four residual fields ``(r_a, r_b, r_c, r_classical)``.

    ``sign="intro"`` uses ``2 beta_y b - beta b_y - 2 gamma_x a + gamma a_x``;
    ``sign="derived"`` uses ``2 beta_y b + beta b_y - 2 gamma_x a - gamma a_x``,
    the form produced by expanding the cup-product condition directly.
    """
    a = w.a if a is None else _scalar(w.grid, a, w.beta.order)
    b = w.b if b is None else _scalar(w.grid, b, w.beta.order)
    if a is None or b is None:
        raise MissingDataError(detail="quadratic differential components a and b are required")
    be, ga = w.beta, w.gamma
    by, gx = be.dy(), ga.dx()
    if sign == "intro":
        ra = by * b * 2.0 - be * b.dy() - gx * a * 2.0 + ga * a.dx()
    elif sign == "derived":
        ra = by * b * 2.0 + be * b.dy() - gx * a * 2.0 - ga * a.dx()
    else:
        raise MoebiusError("invalid-sign", f"sign must be 'intro' or 'derived', got {sign!r}")
    rb = b.dx() * 2.0 - ga * by * 2.0 - be * ga.dy()
    rc = a.dy() * 2.0 - be * gx * 2.0 - ga * be.dx()
    rcl = by.dy().dy() - gx.dx().dx()
    return ra, rb, rc, rcl


def moebius_flat_residuals(w, sign="intro", a=None, b=None, ring=None):
    fields_ = moebius_flat_fields(w, sign, a, b)
    vals = [f.max_abs(ring) for f in fields_]
    return MoebiusResiduals(*vals, sign=sign)


# -- frames and extraction -------------------------------------------------------

def _frame_from_lift(sigma):
    sx, sy = sigma.dx(), sigma.dy()
    cols = [sigma, sx, sy, sx.dy()]
    return _stack_columns(cols)


def _stack_columns(cols):
    g = cols[0].grid
    if all(c.is_exact for c in cols):
        arr = np.empty((4, 4), dtype=object)
        for j, c in enumerate(cols):
            arr[:, j] = c.exprs
        return MatrixField(g, exprs=arr, order=cols[0].order)
    return MatrixField(g, values=np.stack([c.values for c in cols], axis=-1), order=cols[0].order)


@dataclass
class SurfaceFrame:
    """Frame matrix with columns ``(sigma, sigma_x, sigma_y, sigma_xy)``.

    ``meta["conditioned"]``, when present, is ``M F`` for a constant ``M``
    chosen to keep the matrices well conditioned; the invariants do not see
    ``M``, so extraction prefers it.
    """

    F: MatrixField
    path_residual: float | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_lift(cls, sigma):
        """Differentiate a lift (a VectorField of length 4) into its frame."""
        if sigma.shape != (4,):
            raise FrameError("invalid-lift", f"lift must have 4 components, got {sigma.shape}")
        return cls(_frame_from_lift(sigma), meta={"lift": sigma})

    @property
    def grid(self):
        return self.F.grid

    @property
    def lift(self):
        lift = self.meta.get("lift")
        return lift if lift is not None else self.F.column(0)

    def det(self):
        return self.F.det()

    def column_residual(self):
        """How far the columns are from ``(s, s_x, s_y, s_xy)`` of the first column."""
        s = self.F.column(0)
        res = [
            (self.F.column(1) - s.dx()).max_abs(),
            (self.F.column(2) - s.dy()).max_abs(),
            (self.F.column(3) - self.F.column(1).dy()).max_abs(),
        ]
        scale = max(1.0, self.F.max_abs(ring=0))
        return max(res) / scale

    def normalized(self):
        """Rescale the lift so the frame determinant is identically 1."""
        d = self.det()
        dv = d.values
        if np.any(dv == 0) or (np.any(dv > 0) and np.any(dv < 0)):
            raise FrameError(detail="determinant vanishes or changes sign")
        sign = 1.0 if np.all(dv > 0) else -1.0
        sigma = self.lift
        factor = (d * sign) ** -0.25 if d.is_exact else ScalarField.from_values(d.grid, np.abs(dv) ** -0.25, d.order)
        new = sigma * factor
        if not new.is_exact and sigma.is_exact:
            new = VectorField(sigma.grid, values=new.values, order=sigma.order)
        return SurfaceFrame.from_lift(new)


@dataclass
class HatFrame:
    """Frame with columns ``(sigma, sigma_x, sigma_y, sigma_xy - beta gamma/2 sigma)``."""

    F: MatrixField

    @classmethod
    def from_surface(cls, frame, w):
        half = w.beta * w.gamma * 0.5
        cols = [frame.F.column(j) for j in range(4)]
        cols[3] = cols[3] - cols[0] * half
        return cls(_stack_columns(cols))


def _solve(Fv, rhs):
    return np.linalg.solve(Fv, rhs[..., None])[..., 0]


def _check_frame(Fv, grid, max_cond=1e13):
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(Fv)
    bad = ~np.isfinite(cond) | (cond > max_cond)
    if np.any(bad):
        j, i = (int(k) for k in np.argwhere(bad)[0])
        raise FrameError(detail=f"det(sigma, sigma_x, sigma_y, sigma_xy) vanishes at node (i={i}, j={j})")


def _assemble(grid, order, c, cp, cx, cpy, dr_y, dqp_x):
    """Invariants from the second-derivative coefficients of a general lift.

    ``c`` and ``cp`` hold the coefficients of ``sigma_xx`` and ``sigma_yy`` on
    ``(sigma, sigma_x, sigma_y, sigma_xy)``.
    """
    p, q, r = c[..., 0], c[..., 1], c[..., 2]
    pp, qp, rp = cp[..., 0], cp[..., 1], cp[..., 2]
    P = p + q**2 / 4 + r * rp / 2 - cx / 2
    Pp = pp + rp**2 / 4 + q * qp / 2 - cpy / 2
    beta, gamma = r, qp
    V = 2 * P + dr_y
    W = 2 * Pp + dqp_x
    mk = lambda v: ScalarField.from_values(grid, v, order)  # noqa: E731
    return WilczynskiData(mk(beta), mk(gamma), mk(V), mk(W))


def extract_from_immersion(sigma, tol=None):
    """Recover ``(beta, gamma, V, W)`` from a lift in asymptotic coordinates.

    ``sigma`` may be a 4-component VectorField (exact or sampled) or a
    :class:`SurfaceFrame`.  The lift need not be normalized: the invariants
    are assembled from the unnormalized coefficients, which is equivalent to
    rescaling to unit frame determinant first.
    """
    if isinstance(sigma, SurfaceFrame):
        return _extract_from_frame(sigma.meta.get("conditioned", sigma.F), tol)
    if not isinstance(sigma, VectorField) or sigma.shape != (4,):
        raise FrameError("invalid-lift", "expected a 4-component VectorField or SurfaceFrame")
    if not sigma.is_exact:
        return _extract_from_frame(_frame_from_lift(sigma), tol)
    g, order = sigma.grid, sigma.order
    sx, sy = sigma.dx(), sigma.dy()
    sxy = sx.dy()
    sxx, syy = sx.dx(), sy.dy()
    F = _stack_columns([sigma, sx, sy, sxy])
    Fv = F.values
    _check_frame(Fv, g)
    c = _solve(Fv, sxx.values)
    cp = _solve(Fv, syy.values)
    Fx, Fy = F.dx().values, F.dy().values
    c_x = _solve(Fv, sxx.dx().values - np.einsum("...ij,...j->...i", Fx, c))
    c_y = _solve(Fv, sxx.dy().values - np.einsum("...ij,...j->...i", Fy, c))
    cp_x = _solve(Fv, syy.dx().values - np.einsum("...ij,...j->...i", Fx, cp))
    cp_y = _solve(Fv, syy.dy().values - np.einsum("...ij,...j->...i", Fy, cp))
    _check_asymptotic(c, cp, 1e-8 if tol is None else tol)
    data = _assemble(g, order, c, cp, c_x[..., 1], cp_y[..., 2], c_y[..., 2], cp_x[..., 1])
    return data


def _check_asymptotic(c, cp, tol, ring=0):
    s = np.abs(c[..., 3])
    sp = np.abs(cp[..., 3])
    if ring:
        s, sp = s[ring:-ring, ring:-ring], sp[ring:-ring, ring:-ring]
    worst = max(float(s.max()), float(sp.max()))
    if worst > tol:
        raise MoebiusError("coordinates-not-asymptotic", f"sigma_xy coefficient reaches {worst:.3g}")


def _extract_from_frame(F, tol=None):
    g, order = F.grid, F.order
    Fv = F.values
    _check_frame(Fv, g)
    Fi = np.linalg.inv(Fv)
    ox = Fi @ F.dx().values
    oy = Fi @ F.dy().values
    c, cp = ox[..., :, 1], oy[..., :, 2]
    if tol is None:
        tol = 1e4 * default_tolerance(F)
    _check_asymptotic(c, cp, tol, ring=2)
    fd = lambda v, axis: ScalarField.from_values(g, v, order).derivative(axis).values  # noqa: E731
    return _assemble(g, order, c, cp, fd(c[..., 1], "x"), fd(cp[..., 2], "y"),
                     fd(c[..., 2], "y"), fd(cp[..., 1], "x"))
