"""Grids, scalar and matrix fields, finite differences and matrix one-forms.

A field lives on a :class:`Grid` and is backed either by expressions
(object arrays of :class:`~moebiusflat.expr.Expr`, differentiated exactly)
or by sampled node values (differentiated with central stencils).  Node
arrays are laid out ``(ny, nx, *shape)`` so the x index varies fastest.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import GridError, MoebiusError
from .expr import Const, Expr, as_expr, evaluate_many

AXES = ("x", "y")


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid of nodes ``(x0 + i dx, y0 + j dy)``."""

    nx: int = 101
    ny: int = 101
    x0: float = 0.0
    y0: float = 0.0
    dx: float = 0.01
    dy: float = 0.01

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise GridError("invalid-grid", "node counts must be integers")
        if self.nx < 5 or self.ny < 5:
            raise GridError("grid-too-small", f"need at least 5x5 nodes, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise GridError("invalid-grid", "spacings must be positive")

    @classmethod
    def spanning(cls, nx=101, ny=101, x_range=(0.0, 1.0), y_range=(0.0, 1.0)):
        (xa, xb), (ya, yb) = x_range, y_range
        return cls(nx, ny, xa, ya, (xb - xa) / (nx - 1), (yb - ya) / (ny - 1))

    @property
    def xs(self):
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def ys(self):
        return self.y0 + self.dy * np.arange(self.ny)

    @cached_property
    def mesh(self):
        """Coordinate arrays ``(X, Y)`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.xs, self.ys)

    @property
    def shape(self):
        return (self.ny, self.nx)

    def spacing(self, axis):
        return self.dx if axis == "x" else self.dy

    def header(self):
        return f"{self.nx} {self.ny} {self.x0!r} {self.y0!r} {self.dx!r} {self.dy!r}"


def _check_axis(axis):
    if axis not in AXES:
        raise MoebiusError("invalid-axis", f"axis must be 'x' or 'y', got {axis!r}")


@lru_cache(maxsize=None)
def _stencil(offsets):
    """Weights of the first-derivative stencil on integer ``offsets``."""
    o = np.asarray(offsets, dtype=float)
    rhs = np.zeros(len(o))
    rhs[1] = 1.0
    return np.linalg.solve(np.vander(o, len(o), increasing=True).T, rhs)


ORDERS = (2, 4, 6)


def finite_difference(values, h, axis=0, order=4):
    """Derivative of sampled ``values`` along array ``axis`` with spacing ``h``.

    Order 2 uses second-order central differences with second-order one-sided
    ends.  Orders 4 and 6 use the ``order + 1``-point central stencil in the
    interior and one-sided stencils of the same width near the ends.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    if order not in ORDERS:
        raise MoebiusError("invalid-order", f"stencil order must be one of {ORDERS}, got {order}")
    if n < order + 1:
        raise GridError("grid-too-small", f"order {order} needs {order + 1} nodes, got {n}")
    if order == 2:
        return np.gradient(values, h, axis=axis, edge_order=2)
    f = np.moveaxis(values, axis, 0)
    m = order // 2
    out = np.zeros_like(f)
    for k, c in enumerate(_stencil(tuple(range(-m, m + 1)))):
        if c:
            out[m:n - m] += c * f[k:n - 2 * m + k]
    for i in range(m):
        for j, c in enumerate(_stencil(tuple(j - i for j in range(order + 1)))):
            out[i] += c * f[j]
            out[n - 1 - i] -= c * f[n - 1 - j]
    return np.moveaxis(out / h, 0, axis)


_diff_x = np.vectorize(lambda e: e.diff("x"), otypes=[object])
_diff_y = np.vectorize(lambda e: e.diff("y"), otypes=[object])
_to_expr = np.vectorize(as_expr, otypes=[object])


class Field:
    """Common machinery for scalar and matrix fields.

    Exactly one of ``exprs`` (object array of shape ``shape``) and ``values``
    (float array of shape ``(ny, nx, *shape)``) defines the field.
    """

    def __init__(self, grid, exprs=None, values=None, order=4):
        if not isinstance(grid, Grid):
            raise GridError("invalid-grid", "expected a Grid")
        if (exprs is None) == (values is None):
            raise MoebiusError("invalid-field", "give exactly one of exprs or values")
        if order not in ORDERS:
            raise MoebiusError("invalid-order", f"stencil order must be one of {ORDERS}, got {order}")
        self.grid = grid
        self.order = order
        if exprs is not None:
            self.exprs = _to_expr(np.asarray(exprs, dtype=object))
            self.shape = self.exprs.shape
            self._values = None
        else:
            v = np.asarray(values, dtype=float)
            if v.shape[:2] != grid.shape:
                raise GridError(detail=f"values shape {v.shape} does not match grid {grid.shape}")
            self.exprs = None
            self.shape = v.shape[2:]
            self._values = v
            self._values.setflags(write=False)

    # -- construction helpers ---------------------------------------------
    def _new(self, exprs=None, values=None):
        shape = (np.shape(exprs) if exprs is not None else np.shape(values)[2:])
        cls = {0: ScalarField, 1: VectorField}.get(len(shape), MatrixField)
        return cls(self.grid, exprs=exprs, values=values, order=self.order)

    @property
    def is_exact(self):
        return self.exprs is not None

    @property
    def values(self):
        """Node values, shape ``(ny, nx, *shape)``."""
        if self._values is None:
            X, Y = self.grid.mesh
            flat = list(self.exprs.ravel())
            arrs = evaluate_many(flat, X, Y) if flat else []
            v = np.stack(arrs, axis=-1) if arrs else np.zeros(self.grid.shape + (0,))
            v = v.reshape(self.grid.shape + self.shape)
            v.setflags(write=False)
            self._values = v
        return self._values

    def sample(self, x, y):
        """Values at arbitrary points; grid-backed fields use cubic splines."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        if self.is_exact:
            flat = list(self.exprs.ravel())
            arrs = evaluate_many(flat, x, y)
            return np.stack(arrs, axis=-1).reshape(shape + self.shape) if arrs else np.zeros(shape + self.shape)
        from scipy.interpolate import RegularGridInterpolator

        g = self.grid
        interp = RegularGridInterpolator((g.ys, g.xs), self.values, method="cubic")
        pts = np.stack(np.broadcast_arrays(y, x), axis=-1).reshape(-1, 2)
        return interp(pts).reshape(shape + self.shape)

    def _check_grid(self, other):
        if isinstance(other, Field) and other.grid != self.grid:
            raise GridError(detail=f"{self.grid} vs {other.grid}")

    def exact_or_values(self):
        return self.exprs if self.is_exact else self.values

    # -- calculus -----------------------------------------------------------
    def derivative(self, axis):
        """Partial derivative along ``"x"`` or ``"y"``."""
        _check_axis(axis)
        if self.is_exact:
            if self.exprs.size == 0:
                return self._new(exprs=self.exprs)
            return self._new(exprs=(_diff_x if axis == "x" else _diff_y)(self.exprs))
        arr_axis = 1 if axis == "x" else 0
        v = finite_difference(self.values, self.grid.spacing(axis), arr_axis, self.order)
        return self._new(values=v)

    def dx(self):
        return self.derivative("x")

    def dy(self):
        return self.derivative("y")

    # -- norms --------------------------------------------------------------
    def max_abs(self, ring=None):
        """Max-norm over nodes, skipping a boundary ring.

        By default no ring is skipped for expression-backed fields and a
        ring of width 2 (the one-sided stencil nodes) for sampled fields.
        """
        if ring is None:
            ring = 0 if self.is_exact else 2
        v = self.values
        if ring:
            v = v[ring:-ring, ring:-ring]
        return float(np.max(np.abs(v))) if v.size else 0.0

    # -- arithmetic ---------------------------------------------------------
    def _binary(self, other, op):
        if isinstance(other, Field):
            self._check_grid(other)
            a, b = self, other
            if a.shape != b.shape and a.shape != () and b.shape != ():
                raise MoebiusError("shape-mismatch", f"{a.shape} vs {b.shape}")
            if a.is_exact and b.is_exact:
                return self._new(exprs=op(_bcast_expr(a, b), _bcast_expr(b, a)))
            return self._new(values=op(_bcast_val(a, b), _bcast_val(b, a)))
        if isinstance(other, np.ndarray) and other.shape:
            if self.is_exact:
                return self._new(exprs=op(self.exprs, _to_expr(other.astype(object))))
            return self._new(values=op(self.values, other))
        if isinstance(other, Expr) or np.isscalar(other):
            if self.is_exact:
                o = as_expr(other)
                return self._new(exprs=op(self.exprs, np.full(self.shape, o, dtype=object) if self.shape else o))
            if isinstance(other, Expr):
                return self._binary(ScalarField(self.grid, exprs=other, order=self.order), op)
            return self._new(values=op(self.values, float(other)))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: b * a)

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __neg__(self):
        return self * -1.0

    def __pos__(self):
        return self

    def __pow__(self, p):
        p = float(p)
        if self.is_exact:
            pw = np.vectorize(lambda e: e ** p, otypes=[object])
            return self._new(exprs=pw(self.exprs))
        return self._new(values=self.values ** p)


def _bcast_expr(a, b):
    # scalar exprs broadcast against matrix ones
    if a.shape == () and b.shape != ():
        return np.full(b.shape, a.exprs.item(), dtype=object)
    return a.exprs if a.shape != () else a.exprs.item()


def _bcast_val(a, b):
    v = a.values
    if a.shape == () and b.shape != ():
        return v.reshape(v.shape + (1,) * len(b.shape))
    return v


class ScalarField(Field):
    """A real-valued field on a grid."""

    def __init__(self, grid, exprs=None, values=None, order=4):
        super().__init__(grid, exprs=exprs, values=values, order=order)
        if self.shape != ():
            raise MoebiusError("shape-mismatch", f"scalar field cannot have shape {self.shape}")

    @classmethod
    def from_expr(cls, grid, expr, order=4):
        return cls(grid, exprs=as_expr(expr), order=order)

    @classmethod
    def from_values(cls, grid, values, order=4):
        return cls(grid, values=values, order=order)

    @classmethod
    def constant(cls, grid, c, order=4):
        return cls(grid, exprs=Const(c), order=order)

    @property
    def expr(self):
        return self.exprs.item() if self.is_exact else None

    def __repr__(self):
        body = str(self.expr) if self.is_exact else f"<sampled {self.grid.shape}>"
        return f"ScalarField({body})"


class MatrixField(Field):
    """An ``m x n`` matrix-valued field (4x4 for connection data)."""

    def __init__(self, grid, exprs=None, values=None, order=4):
        super().__init__(grid, exprs=exprs, values=values, order=order)
        if len(self.shape) != 2:
            raise MoebiusError("shape-mismatch", f"matrix field needs 2D entries, got {self.shape}")

    @classmethod
    def constant(cls, grid, matrix, order=4):
        m = np.asarray(matrix, dtype=float)
        return cls(grid, exprs=_to_expr(m.astype(object)), order=order)

    @classmethod
    def zeros(cls, grid, m=4, n=None, order=4):
        return cls.constant(grid, np.zeros((m, m if n is None else n)), order=order)

    @classmethod
    def identity(cls, grid, n=4, order=4):
        return cls.constant(grid, np.eye(n), order=order)

    @classmethod
    def from_entries(cls, grid, entries, order=4):
        """Build from a nested list of expressions, strings or numbers."""
        arr = np.empty((len(entries), len(entries[0])), dtype=object)
        for i, row in enumerate(entries):
            if len(row) != arr.shape[1]:
                raise MoebiusError("shape-mismatch", "ragged matrix entries")
            for j, e in enumerate(row):
                arr[i, j] = as_expr(e.expr if isinstance(e, ScalarField) else e)
        return cls(grid, exprs=arr, order=order)

    @classmethod
    def from_scalars(cls, grid, entries, order=4):
        """Build from a nested list of :class:`ScalarField` (mixed backing allowed)."""
        flat = [e for row in entries for e in row]
        if all(f.is_exact for f in flat):
            return cls.from_entries(grid, entries, order=order)
        m, n = len(entries), len(entries[0])
        v = np.stack([f.values for f in flat], axis=-1).reshape(grid.shape + (m, n))
        return cls(grid, values=v, order=order)

    def entry(self, i, j):
        if self.is_exact:
            return ScalarField(self.grid, exprs=self.exprs[i, j], order=self.order)
        return ScalarField(self.grid, values=self.values[..., i, j], order=self.order)

    def column(self, j):
        return self[:, j]

    def __getitem__(self, key):
        if self.is_exact:
            sub = self.exprs[key]
            return self._new(exprs=sub)
        sub = self.values[(Ellipsis,) + (key if isinstance(key, tuple) else (key,))]
        return self._new(values=sub)

    @property
    def T(self):
        if self.is_exact:
            return MatrixField(self.grid, exprs=self.exprs.T, order=self.order)
        return MatrixField(self.grid, values=np.swapaxes(self.values, -1, -2), order=self.order)

    def __matmul__(self, other):
        if isinstance(other, Field):
            self._check_grid(other)
            if self.is_exact and other.is_exact:
                return self._new(exprs=_expr_matmul(self.exprs, other.exprs))
            if len(other.shape) == 1:
                return self._new(values=np.einsum("...ij,...j->...i", self.values, other.values))
            return self._new(values=self.values @ other.values)
        other = np.asarray(other, dtype=float)
        if self.is_exact:
            return self._new(exprs=_expr_matmul(self.exprs, _to_expr(other.astype(object))))
        return self._new(values=self.values @ other)

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=float)
        if self.is_exact:
            return self._new(exprs=_expr_matmul(_to_expr(other.astype(object)), self.exprs))
        return self._new(values=other @ self.values)

    def trace(self):
        if self.is_exact:
            return ScalarField(self.grid, exprs=_expr_sum(np.diag(self.exprs)), order=self.order)
        return ScalarField(self.grid, values=np.trace(self.values, axis1=-2, axis2=-1), order=self.order)

    def det(self):
        if self.is_exact:
            return ScalarField(self.grid, exprs=_expr_det(self.exprs), order=self.order)
        return ScalarField(self.grid, values=np.linalg.det(self.values), order=self.order)

    def inverse(self, rel_tol=1e-12, what="matrix"):
        """Pointwise inverse.  Exact fields use the adjugate formula.

        Raises ``degenerate`` errors (via ``SingularError``) naming the first
        node where ``|det|`` falls below ``rel_tol`` times the entry scale.
        """
        m, n = self.shape
        if m != n:
            raise MoebiusError("shape-mismatch", "inverse of a non-square field")
        d = self.det()
        dv = d.values
        scale = max(self.max_abs(ring=0), 1.0) ** m
        bad = np.abs(dv) <= rel_tol * scale
        if np.any(bad):
            j, i = (int(k) for k in np.argwhere(bad)[0])
            g = self.grid
            raise SingularError(what, i, j, g.x0 + i * g.dx, g.y0 + j * g.dy)
        if self.is_exact:
            adj = _expr_adjugate(self.exprs)
            inv_det = 1 / d.expr
            return MatrixField(self.grid, exprs=adj * inv_det, order=self.order)
        return MatrixField(self.grid, values=np.linalg.inv(self.values), order=self.order)

    def __repr__(self):
        kind = "exact" if self.is_exact else "sampled"
        return f"MatrixField({kind}, shape={self.shape})"


class VectorField(Field):
    """A field of column vectors (sections written in a frame)."""

    def __init__(self, grid, exprs=None, values=None, order=4):
        super().__init__(grid, exprs=exprs, values=values, order=order)
        if len(self.shape) != 1:
            raise MoebiusError("shape-mismatch", f"vector field needs 1D entries, got {self.shape}")

    @classmethod
    def from_entries(cls, grid, entries, order=4):
        arr = np.empty(len(entries), dtype=object)
        for i, e in enumerate(entries):
            arr[i] = as_expr(e.expr if isinstance(e, ScalarField) else e)
        return cls(grid, exprs=arr, order=order)

    @classmethod
    def from_scalars(cls, grid, entries, order=4):
        if all(f.is_exact for f in entries):
            return cls.from_entries(grid, entries, order=order)
        v = np.stack([f.values for f in entries], axis=-1)
        return cls(grid, values=v, order=order)

    def entry(self, i):
        if self.is_exact:
            return ScalarField(self.grid, exprs=self.exprs[i], order=self.order)
        return ScalarField(self.grid, values=self.values[..., i], order=self.order)

    def __repr__(self):
        kind = "exact" if self.is_exact else "sampled"
        return f"VectorField({kind}, n={self.shape[0]})"


class SingularError(MoebiusError):
    """A pointwise matrix inverse failed at a node."""

    code = "singular"

    def __init__(self, what, i, j, x, y):
        self.node = (i, j)
        self.point = (x, y)
        super().__init__(self.code, f"{what} is singular at node (i={i}, j={j}), (x, y) = ({x:g}, {y:g})")


def _expr_sum(items):
    total = Const(0.0)
    for e in items:
        total = total + e
    return total


def _expr_matmul(a, b):
    if b.ndim == 1:
        return _expr_matmul(a, b[:, None])[:, 0]
    m, k = a.shape
    k2, n = b.shape
    if k != k2:
        raise MoebiusError("shape-mismatch", f"cannot multiply {a.shape} by {b.shape}")
    out = np.empty((m, n), dtype=object)
    for i in range(m):
        for j in range(n):
            out[i, j] = _expr_sum(a[i, r] * b[r, j] for r in range(k))
    return out


def _expr_det(a):
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    if n == 2:
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    total = Const(0.0)
    for j in range(n):
        if a[0, j].is_zero():
            continue
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        term = a[0, j] * _expr_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _expr_adjugate(a):
    n = a.shape[0]
    if n == 1:
        return np.array([[Const(1.0)]], dtype=object)
    adj = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(a, i, axis=0), j, axis=1)
            c = _expr_det(minor)
            adj[j, i] = c if (i + j) % 2 == 0 else -c
    return adj


class OneForm:
    """A matrix-valued one-form ``omega_x dx + omega_y dy``."""

    def __init__(self, x, y):
        if not isinstance(x, MatrixField) or not isinstance(y, MatrixField):
            raise MoebiusError("invalid-field", "one-form components must be MatrixFields")
        if x.grid != y.grid:
            raise GridError(detail="one-form components live on different grids")
        if x.shape != y.shape:
            raise MoebiusError("shape-mismatch", f"{x.shape} vs {y.shape}")
        self.x = x
        self.y = y

    @property
    def grid(self):
        return self.x.grid

    def component(self, axis):
        _check_axis(axis)
        return self.x if axis == "x" else self.y

    def __iter__(self):
        return iter((self.x, self.y))

    def _map(self, fn):
        return type(self)(fn(self.x), fn(self.y))

    def _zip(self, other, fn):
        if not isinstance(other, OneForm):
            return NotImplemented
        return type(self)(fn(self.x, other.x), fn(self.y, other.y))

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __neg__(self):
        return self._map(lambda a: -a)

    def __mul__(self, c):
        if isinstance(c, OneForm):
            return NotImplemented
        return self._map(lambda a: a * c)

    __rmul__ = __mul__

    def transpose(self):
        return self._map(lambda a: a.T)

    def max_abs(self, ring=None):
        return max(self.x.max_abs(ring), self.y.max_abs(ring))

    @property
    def is_exact(self):
        return self.x.is_exact and self.y.is_exact

    def __repr__(self):
        return f"{type(self).__name__}(x={self.x!r}, y={self.y!r})"


def commutator(a, b):
    return a @ b - b @ a


def wedge_bracket(omega, eta):
    """The ``dx^dy`` component of ``[omega ^ eta]``: ``[w_x, e_y] - [w_y, e_x]``."""
    if omega.grid != eta.grid:
        raise GridError(detail="wedge_bracket operands live on different grids")
    return commutator(omega.x, eta.y) - commutator(omega.y, eta.x)
