"""Centro-affine geometry of surfaces in R^3.

For an immersion ``r`` transverse to its position vector, second derivatives
decompose as ``r_ij = G^k_ij r_k + g_ij r``.  The coefficients ``g`` form the
centro-affine metric; the difference ``h`` between the induced connection
``G`` and the Levi-Civita connection of ``g`` is the cubic form, and its
trace ``T_i = h^j_ij`` is the Chebyshev covector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import ConnectionForm, MetricField, metric_split
from .errors import CentroAffineError, MoebiusError
from .expr import as_expr
from .fields import Grid, MatrixField, ScalarField, VectorField

@dataclass(frozen=True)
class CentroAffineImmersion:
    """A parametrized surface ``r(u, v)`` in R^3 with ``u = x``, ``v = y`` on the grid."""

    r: VectorField
    p: tuple = (0.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.r.shape != (3,):
            raise CentroAffineError("invalid-immersion", f"r must have 3 components, got {self.r.shape}")

    @classmethod
    def from_exprs(cls, exprs, grid=None, order=4):
        grid = grid if grid is not None else Grid()
        return cls(VectorField.from_entries(grid, [as_expr(e) for e in exprs], order=order))

    @classmethod
    def from_values(cls, grid, values, order=4):
        return cls(VectorField(grid, values=values, order=order))

    @property
    def grid(self):
        return self.r.grid


@dataclass
class CentroAffineData:
    g: MatrixField          # 2x2 centro-affine metric (sampled)
    connection: np.ndarray  # induced connection G[k, i, j] at each node
    levi_civita: np.ndarray
    h: np.ndarray           # h[k, i, j] = G - LeviCivita
    T: np.ndarray           # Chebyshev covector, shape (ny, nx, 2)
    g_derivs: tuple         # (g_u, g_v) node arrays
    exact_derivatives: bool = True

    def _ring(self, ring):
        return (0 if self.exact_derivatives else 2) if ring is None else ring

    def cubic_lowered(self):
        """``h_ijk = g_kl h^l_ij``."""
        return np.einsum("...kl,...lij->...ijk", self.g.values, self.h)

    def symmetry_residual(self, ring=None):
        """Max deviation of the lowered cubic form from total symmetry."""
        c = _crop(self.cubic_lowered(), self._ring(ring))
        perms = [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
        return max(float(np.max(np.abs(c - np.transpose(c, (0, 1) + tuple(2 + i for i in pm))))) for pm in perms)

    def chebyshev_norm(self, ring=None):
        return float(np.max(np.abs(_crop(self.T, self._ring(ring)))))

    def is_hyperbolic(self):
        return bool(np.all(np.linalg.det(self.g.values) < 0))


def _crop(arr, ring):
    return arr[ring:-ring, ring:-ring] if ring else arr


def _solve3(M, rhs):
    return np.linalg.solve(M, rhs[..., None])[..., 0]


def decompose(imm, tol=1e-12):
    """Metric, induced connection, cubic form and Chebyshev covector.

    Expression-backed immersions get exact derivatives of ``g`` through the
    differentiated linear systems; sampled ones use finite differences.
    """
    r = imm.r
    grid = r.grid
    ru, rv = r.dx(), r.dy()
    second = {(0, 0): ru.dx(), (0, 1): ru.dy(), (1, 1): rv.dy()}
    Mv = np.stack([ru.values, rv.values, r.values], axis=-1)
    det = np.linalg.det(Mv)
    scale = np.max(np.abs(Mv), axis=(-2, -1)) ** 3
    bad = np.abs(det) <= tol * np.maximum(scale, 1e-300)
    if np.any(bad):
        j, i = (int(k) for k in np.argwhere(bad)[0])
        raise CentroAffineError(detail=f"det(r_u, r_v, r) vanishes at node (i={i}, j={j})")
    coeffs = {ij: _solve3(Mv, s.values) for ij, s in second.items()}
    gv = np.empty(grid.shape + (2, 2))
    conn = np.empty(grid.shape + (2, 2, 2))
    for (i, j), c in coeffs.items():
        for a, b in ((i, j), (j, i)):
            gv[..., a, b] = c[..., 2]
            conn[..., 0, a, b] = c[..., 0]
            conn[..., 1, a, b] = c[..., 1]
    if r.is_exact:
        # M dc = d(r_ij) - (dM) c
        Mu = np.stack([second[(0, 0)].values, second[(0, 1)].values, ru.values], axis=-1)
        Mw = np.stack([second[(0, 1)].values, second[(1, 1)].values, rv.values], axis=-1)
        gu = np.empty_like(gv)
        gw = np.empty_like(gv)
        for (i, j), s in second.items():
            c = coeffs[(i, j)]
            cu = _solve3(Mv, s.dx().values - np.einsum("...ab,...b->...a", Mu, c))
            cw = _solve3(Mv, s.dy().values - np.einsum("...ab,...b->...a", Mw, c))
            for a, b in ((i, j), (j, i)):
                gu[..., a, b] = cu[..., 2]
                gw[..., a, b] = cw[..., 2]
    else:
        gf = MatrixField(grid, values=gv, order=r.order)
        gu, gw = gf.dx().values, gf.dy().values
    g = MatrixField(grid, values=gv, order=r.order)
    lc = levi_civita(gv, (gu, gw))
    h = conn - lc
    T = np.einsum("...jij->...i", h)
    return CentroAffineData(g, conn, lc, h, T, (gu, gw), r.is_exact)


def levi_civita(gv, dg):
    """Christoffel symbols ``L[k, i, j]`` of a 2x2 metric from its partials ``dg = (g_u, g_v)``."""
    gi = np.linalg.inv(gv)
    d = np.stack(dg, axis=-3)  # d[..., l, i, j] = d_l g_ij
    # Gamma_{l i j} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    low = 0.5 * (np.einsum("...ijl->...lij", d) + np.einsum("...jil->...lij", d) - d)
    return np.einsum("...kl,...lij->...kij", gi, low)


def gauss_curvature(g, tol=1e-14):
    """Gaussian curvature of a 2x2 metric field via the Brioschi formula."""
    if g.shape != (2, 2):
        raise MoebiusError("shape-mismatch", "expected a 2x2 metric")
    E, F, G = g.entry(0, 0), g.entry(0, 1), g.entry(1, 1)
    den = (E * G - F * F).values
    if np.any(np.abs(den) <= tol):
        raise MoebiusError("degenerate-metric", "metric determinant vanishes")
    Eu, Ev, Fu, Fv, Gu, Gv = E.dx(), E.dy(), F.dx(), F.dy(), G.dx(), G.dy()
    a11 = (Ev.dy() * -0.5 + Fu.dy() - Gu.dx() * 0.5).values
    e, f, gg = E.values, F.values, G.values
    m1 = np.stack([
        np.stack([a11, Eu.values / 2, Fu.values - Ev.values / 2], -1),
        np.stack([Fv.values - Gu.values / 2, e, f], -1),
        np.stack([Gv.values / 2, f, gg], -1),
    ], -2)
    z = np.zeros_like(e)
    m2 = np.stack([
        np.stack([z, Ev.values / 2, Gu.values / 2], -1),
        np.stack([Ev.values / 2, e, f], -1),
        np.stack([Gu.values / 2, f, gg], -1),
    ], -2)
    K = (np.linalg.det(m1) - np.linalg.det(m2)) / den**2
    return ScalarField(g.grid, values=K, order=g.order)


def gauss_curvature_max(g, ring=None):
    """Max ``|K|``; sampled metrics skip the four-node ring touched by one-sided stencils."""
    if ring is None:
        ring = 0 if g.is_exact else 4
    return gauss_curvature(g).max_abs(ring=ring)


# -- adapted lift -------------------------------------------------------------

def adapted_frame_connection(data):
    """Connection of the frame ``(R, r_u, r_v, R_hat)``, ``R = p + r``, ``R_hat = p - r``."""
    gv, conn = data.g.values, data.connection
    grid = data.g.grid
    shape = grid.shape
    parts = []
    for i in range(2):
        om = np.zeros(shape + (4, 4))
        om[..., 1 + i, 0] = 1.0         # R_i = r_i
        om[..., 1 + i, 3] = -1.0        # R_hat_i = -r_i
        for j in range(2):
            col = 1 + j
            om[..., 1, col] = conn[..., 0, i, j]
            om[..., 2, col] = conn[..., 1, i, j]
            om[..., 0, col] = 0.5 * gv[..., i, j]
            om[..., 3, col] = -0.5 * gv[..., i, j]
        parts.append(MatrixField(grid, values=om, order=data.g.order))
    return ConnectionForm(*parts)


def adapted_metric(data):
    """Gram matrix with ``g(r, r) = 1 = -g(p, p)`` and ``-g_hat`` on the tangent block."""
    gv = data.g.values
    G = np.zeros(gv.shape[:2] + (4, 4))
    G[..., 0, 3] = G[..., 3, 0] = -2.0
    G[..., 1:3, 1:3] = -gv
    return MetricField(MatrixField(data.g.grid, values=G, order=data.g.order))


def adapted_conserved_check(imm, perturbation=0.0, require_hyperbolic=True, data=None, ring=None):
    """Residual of the conservation of ``R_hat + t^2 (R + eps r_u)`` under the adapted family.

    With ``(D, N)`` the split of the frame connection against the adapted
    metric and ``B`` minus the part of ``D`` mapping ``R_hat`` into
    ``<r_u, r_v>`` and that plane into ``<R>``, the family is
    ``(D + B) + t N - t^2 B``; it equals the trivial connection at ``t = 1``.
    """
    data = decompose(imm) if data is None else data
    if require_hyperbolic and not data.is_hyperbolic():
        raise CentroAffineError("elliptic-metric", "centro-affine metric is not indefinite")
    omega = adapted_frame_connection(data)
    d, n = metric_split(omega, adapted_metric(data))
    grid = data.g.grid
    q0 = np.array([0.0, 0.0, 0.0, 1.0])
    q2 = np.array([1.0, float(perturbation), 0.0, 0.0])
    worst = 0.0
    if ring is None:
        ring = 0 if imm.r.is_exact else 4
    for dd, nn in zip(d, n):
        dv, nv = dd.values, nn.values
        # beta_hat is minus the part of D raising R_hat into U and U into <R>
        bv = np.zeros_like(dv)
        bv[..., 1:3, 3] = -dv[..., 1:3, 3]
        bv[..., 0, 1:3] = -dv[..., 0, 1:3]
        C = [dv + bv, nv, -bv]
        for k in range(5):
            tot = np.zeros(grid.shape + (4,))
            for i, Ci in enumerate(C):
                j = k - i
                if j == 0:
                    tot += Ci @ q0
                elif j == 2:
                    tot += Ci @ q2
            worst = max(worst, float(np.max(np.abs(_crop(tot, ring)))))
    return worst


# -- immersions from frames ----------------------------------------------------

def immersion_from_frame(frame, w, alpha=None):
    """Centro-affine immersion attached to a frame and a potential.

    ``R = e^alpha sigma`` and ``p = F e^alpha (v0 + v1 + v2) / 2``; the
    immersion is ``r = R - p`` written in a basis of its linear span.
    Returns ``(immersion, p_variation)`` where ``p_variation`` measures how
    far ``p`` is from constant relative to its size.
    """
    from .conserved import build_from_potential

    alpha = w.alpha if alpha is None else alpha
    if alpha is None:
        raise MoebiusError("missing-data", "a potential alpha is required")
    from .wilczynski import _scalar

    alpha = _scalar(w.grid, alpha, w.beta.order)
    q = build_from_potential(alpha, w)
    ea = np.exp(alpha.values)[..., None]
    Fv = frame.F.values
    v = q.v0.values + q.v1.values + q.v2.values
    p = 0.5 * ea * np.einsum("...ij,...j->...i", Fv, v)
    R = ea * Fv[..., :, 0]
    r = R - p
    pm = p.reshape(-1, 4)
    p_var = float(np.max(np.abs(pm - pm.mean(axis=0))) / max(np.max(np.abs(pm)), 1e-300))
    _, _, vt = np.linalg.svd(r.reshape(-1, 4), full_matrices=False)
    basis = vt[:3].T
    r3 = r @ basis
    return CentroAffineImmersion.from_values(frame.F.grid, r3, order=frame.F.order), p_var


def unimodular_transform(imm, A):
    """Apply a linear map of R^3 to the immersion."""
    A = np.asarray(A, dtype=float)
    r = imm.r
    if r.is_exact:
        ex = r.exprs
        new = [sum((float(A[i, k]) * ex[k] for k in range(3)), as_expr(0)) for i in range(3)]
        return CentroAffineImmersion(VectorField.from_entries(r.grid, new, order=r.order))
    return CentroAffineImmersion.from_values(r.grid, r.values @ A.T, order=r.order)
