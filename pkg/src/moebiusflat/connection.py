"""Connections as matrix one-forms on the trivial rank-4 bundle.

Matrices act on coefficient columns: a section ``s = F u`` of the frame
``F`` is differentiated as ``d u + Omega u``.  A row-acting system
``d psi = A psi`` for a frame ``psi`` therefore corresponds to ``Omega = A^T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import MetricError, MoebiusError, NilpotencyError
from .fields import Grid, MatrixField, OneForm, SingularError, commutator

CONVENTION = "coefficient-column"
EXACT_TOL = 1e-10
MAX_AD_TERMS = 7  # ad(tau) on gl(4) is nilpotent of index at most 7


def default_tolerance(field):
    """Flatness tolerance for a field: fixed for exact data, ``50 h^order`` otherwise."""
    if field.is_exact:
        return EXACT_TOL
    g = field.grid
    return 50.0 * max(g.dx, g.dy) ** field.order


class ConnectionForm(OneForm):
    """``Omega_x dx + Omega_y dy`` in the coefficient-column convention."""

    convention = CONVENTION

    @classmethod
    def from_row_acting(cls, ax, ay):
        """Ingest a row-acting pair ``d psi = A psi`` by transposing."""
        return cls(ax.T, ay.T)

    @classmethod
    def zero(cls, grid, n=4):
        z = MatrixField.zeros(grid, n)
        return cls(z, z)

    @classmethod
    def constant(cls, grid, mx, my):
        return cls(MatrixField.constant(grid, mx), MatrixField.constant(grid, my))

    def curvature(self):
        return curvature(self)

    def covariant(self, section):
        """``d u + Omega u`` for a vector field ``u``; returns the pair of components."""
        return (section.dx() + self.x @ section, section.dy() + self.y @ section)

    def d_form(self, phi):
        """Exterior covariant derivative of a one-form: the ``dx^dy`` component."""
        return (
            phi.y.dx() - phi.x.dy()
            + commutator(self.x, phi.y) - commutator(self.y, phi.x)
        )

    def d_section(self, s):
        """Covariant derivative of an endomorphism-valued section (adjoint action)."""
        return OneForm(s.dx() + commutator(self.x, s), s.dy() + commutator(self.y, s))


def curvature(omega):
    """``d_x Omega_y - d_y Omega_x + [Omega_x, Omega_y]``."""
    return omega.y.dx() - omega.x.dy() + commutator(omega.x, omega.y)


class MetricField:
    """Gram matrix of a bilinear form on the bundle, written in the frame."""

    def __init__(self, G, tol=1e-12):
        if not isinstance(G, MatrixField) or G.shape[0] != G.shape[1]:
            raise MetricError("invalid-metric", "metric must be a square MatrixField")
        asym = (G - G.T).max_abs(ring=0)
        if asym > tol * max(1.0, G.max_abs(ring=0)):
            raise MetricError("asymmetric-metric", f"G - G^T reaches {asym:.3g}")
        self.G = G

    @property
    def grid(self):
        return self.G.grid

    def inverse(self):
        try:
            return self.G.inverse(what="metric")
        except SingularError as err:
            raise MetricError(detail=err.detail) from None

    def det(self):
        return self.G.det()


def metric_split(omega, metric):
    """Split ``Omega = Omega_D + Omega_N`` with ``D`` metric and ``N`` symmetric.

    ``Omega_N = (Omega + G^-1 Omega^T G - G^-1 dG) / 2`` per axis.
    """
    G = metric.G if isinstance(metric, MetricField) else MetricField(metric).G
    Gi = (metric if isinstance(metric, MetricField) else MetricField(metric)).inverse()
    parts = []
    for axis in ("x", "y"):
        om = omega.component(axis)
        parts.append((om + Gi @ om.T @ G - Gi @ G.derivative(axis)) * 0.5)
    n = ConnectionForm(*parts)
    d = ConnectionForm(omega.x - n.x, omega.y - n.y)
    return d, n


def split_contracts(omega_d, omega_n, metric):
    """Residuals of ``G N = N^T G`` and ``dG = D^T G + G D`` (max over axes)."""
    G = metric.G if isinstance(metric, MetricField) else metric
    sym = max((G @ n - n.T @ G).max_abs() for n in omega_n)
    comp = max(
        (G.derivative(a) - d.T @ G - G @ d).max_abs()
        for a, d in zip(("x", "y"), omega_d)
    )
    return sym, comp


def gauge(phi, omega):
    """Gauge action ``Phi Omega Phi^-1 - (d Phi) Phi^-1`` per axis."""
    try:
        pinv = phi.inverse(what="gauge")
    except SingularError as err:
        raise MoebiusError("singular-gauge", err.detail) from None
    return ConnectionForm(*(
        phi @ om @ pinv - phi.derivative(a) @ pinv
        for a, om in zip(("x", "y"), omega)
    ))


def exp_nilpotent(m, tol=1e-12):
    """``I + M + M^2/2 + M^3/6`` for a 4x4 matrix with ``M^4 = 0``."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    m2 = m @ m
    m3 = m2 @ m
    m4 = m3 @ m
    scale = max(1.0, float(np.max(np.abs(m)))) ** 4
    if np.max(np.abs(m4)) > tol * scale:
        raise NilpotencyError(detail=f"|M^4| = {np.max(np.abs(m4)):.3g}")
    return np.eye(n) + m + m2 / 2.0 + m3 / 6.0


def exp_nilpotent_field(m, tol=1e-12):
    """Pointwise :func:`exp_nilpotent` for a 4x4 MatrixField (exact when possible)."""
    v = m.values
    m4 = np.linalg.matrix_power(v, 4) if v.size else v
    scale = max(1.0, m.max_abs(ring=0)) ** 4
    if v.size and np.max(np.abs(m4)) > tol * scale:
        raise NilpotencyError(detail=f"|M^4| = {np.max(np.abs(m4)):.3g}")
    ident = MatrixField.identity(m.grid, m.shape[0], order=m.order)
    m2 = m @ m
    return ident + m + m2 * 0.5 + (m2 @ m) * (1.0 / 6.0)


def _vanishes(f, tol):
    if f.is_exact:
        return all(e.is_zero() for e in f.exprs.ravel()) or f.max_abs(ring=0) <= tol
    return f.max_abs(ring=0) <= tol


def log_derivative_gauge(tau, omega, max_terms=MAX_AD_TERMS, tol=1e-13):
    """``exp(tau) . Omega`` via the terminating logarithmic-derivative series.

    Returns ``Omega - sum_k ad(tau)^k (nabla tau) / (k+1)!`` where
    ``nabla tau = d tau + [Omega, tau]``.
    """
    out = []
    for axis, om in zip(("x", "y"), omega):
        term = tau.derivative(axis) + commutator(om, tau)
        total = om
        scale = max(1.0, term.max_abs(ring=0))
        for k in range(max_terms + 1):
            if _vanishes(term, tol * scale):
                break
            if k == max_terms:
                raise NilpotencyError("ad-not-nilpotent", f"series did not terminate in {max_terms} terms")
            total = total - term * (1.0 / factorial(k + 1))
            term = commutator(tau, term)
        out.append(total)
    return ConnectionForm(*out)


@dataclass(frozen=True)
class EnvelopeReport:
    enveloped: bool
    unimodular: bool
    kernel_rank: np.ndarray
    Dg_flat: bool | None
    null_residual: float
    filtration_residual: float
    trace_residual: float
    Dg_curvature: float | None


def kernel_rank(omega_n, rel=1e-8):
    """Pointwise dimension of the kernel of ``X -> Omega_N(X)`` on the tangent plane."""
    v = np.stack([omega_n.x.values, omega_n.y.values], axis=-1)
    v = v.reshape(v.shape[:2] + (-1, 2))
    s = np.linalg.svd(v, compute_uv=False)
    rank = np.sum(s > rel * s[..., :1], axis=-1)
    return 2 - rank


def envelope_checks(omega_n, metric, omega_d=None, tol=None):
    """Check that the split belongs to an enveloped (and unimodular) metric.

    The filtration is ``E1 = <e1>``, ``E2 = <e1, e2, e3>``.  ``Dg_flat`` is
    reported only when ``omega_d`` is supplied.
    """
    G = metric.G if isinstance(metric, MetricField) else metric
    if tol is None:
        tol = default_tolerance(omega_n.x)
    null_res = G.entry(0, 0).max_abs()
    filt = 0.0
    tr = 0.0
    for n in omega_n:
        v = n.values
        ring = 0 if n.is_exact else 2
        if ring:
            v = v[ring:-ring, ring:-ring]
        filt = max(filt, float(np.max(np.abs(v[..., 1:, 0]), initial=0.0)),
                   float(np.max(np.abs(v[..., 3, :3]), initial=0.0)))
        tr = max(tr, n.trace().max_abs())
    curv = None
    flat = None
    if omega_d is not None:
        curv = curvature(omega_d).max_abs()
        flat = curv < tol
    return EnvelopeReport(
        enveloped=bool(null_res < tol and filt < tol),
        unimodular=bool(tr < tol),
        kernel_rank=kernel_rank(omega_n),
        Dg_flat=flat,
        null_residual=null_res,
        filtration_residual=filt,
        trace_residual=tr,
        Dg_curvature=curv,
    )


__all__ = [
    "ConnectionForm",
    "EnvelopeReport",
    "Grid",
    "MetricField",
    "curvature",
    "default_tolerance",
    "envelope_checks",
    "exp_nilpotent",
    "exp_nilpotent_field",
    "gauge",
    "kernel_rank",
    "log_derivative_gauge",
    "metric_split",
    "split_contracts",
]
