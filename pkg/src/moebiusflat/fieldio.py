"""Plain-text readers and writers.

Numbers are written with ``repr`` so a round trip is lossless, and read with
``float`` so the decimal separator is always ``.`` whatever the locale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridError, MissingDataError, MoebiusError, ParseError
from .expr import parse
from .fields import Grid, MatrixField, ScalarField

COEFFICIENT_KEYS = ("beta", "gamma", "V", "W", "a", "b", "alpha")
REQUIRED_COEFFICIENTS = ("beta", "gamma", "V", "W")
IMMERSION_KEYS = ("r1", "r2", "r3")


def _fmt(v):
    return repr(float(v))


def _grid_from_tokens(tokens, what):
    if len(tokens) != 6:
        raise GridError("invalid-grid", f"{what}: expected 'nx ny x0 y0 dx dy', got {len(tokens)} values")
    try:
        nx, ny = int(tokens[0]), int(tokens[1])
        x0, y0, dx, dy = (float(t) for t in tokens[2:])
    except ValueError as err:
        raise GridError("invalid-grid", f"{what}: {err}") from None
    return Grid(nx, ny, x0, y0, dx, dy)


def _read_header(text, tag):
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise GridError("invalid-file", "missing '#' header line")
    tokens = lines[0][1:].split()
    if tag:
        if not tokens or tokens[0] != tag:
            raise GridError("invalid-file", f"expected a '# {tag}' header")
        tokens = tokens[1:]
    body = " ".join(ln for ln in lines[1:] if not ln.lstrip().startswith("#"))
    try:
        data = np.array([float(t) for t in body.split()])
    except ValueError as err:
        raise GridError("invalid-file", str(err)) from None
    return tokens, data


# -- grid field files ---------------------------------------------------------

def format_scalar_field(f):
    """``# nx ny x0 y0 dx dy`` then one line per grid row (x varies fastest)."""
    g = f.grid
    rows = [" ".join(_fmt(v) for v in row) for row in f.values]
    return "\n".join([f"# {g.header()}"] + rows) + "\n"


def parse_scalar_field(text, order=4):
    tokens, data = _read_header(text, None)
    g = _grid_from_tokens(tokens, "grid header")
    if data.size != g.nx * g.ny:
        raise GridError(detail=f"expected {g.nx * g.ny} values, found {data.size}")
    return ScalarField.from_values(g, data.reshape(g.ny, g.nx), order)


def format_matrix_field(m):
    """``# matrixfield nx ny x0 y0 dx dy`` then the 16 entries of each node, row-major."""
    g = m.grid
    v = m.values.reshape(g.ny * g.nx, -1)
    if v.shape[1] != 16:
        raise MoebiusError("invalid-shape", f"expected a 4x4 field, got shape {m.shape}")
    lines = [f"# matrixfield {g.header()}"] + [" ".join(_fmt(x) for x in node) for node in v]
    return "\n".join(lines) + "\n"


def parse_matrix_field(text, order=4):
    tokens, data = _read_header(text, "matrixfield")
    g = _grid_from_tokens(tokens, "matrixfield header")
    if data.size != 16 * g.nx * g.ny:
        raise GridError(detail=f"expected {16 * g.nx * g.ny} values, found {data.size}")
    return MatrixField(g, values=data.reshape(g.ny, g.nx, 4, 4), order=order)


# -- surfaces ------------------------------------------------------------------

def format_surface(lift):
    """``# surface nx ny`` then the four homogeneous components of each node."""
    g = lift.grid
    v = lift.values.reshape(-1, 4)
    return "\n".join([f"# surface {g.nx} {g.ny}"] + [" ".join(_fmt(x) for x in node) for node in v]) + "\n"


def parse_surface(text):
    """Node array ``(ny, nx, 4)`` from a surface file."""
    tokens, data = _read_header(text, "surface")
    if len(tokens) != 2:
        raise GridError("invalid-file", "surface header must be '# surface nx ny'")
    nx, ny = int(tokens[0]), int(tokens[1])
    if data.size != 4 * nx * ny:
        raise GridError(detail=f"expected {4 * nx * ny} values, found {data.size}")
    return data.reshape(ny, nx, 4)


def affine_chart(lift, functional=None):
    """Project a homogeneous lift to R^3 by dividing by a linear functional.

    The default functional is the dominant right singular vector of the node
    values, which keeps the denominator away from zero for surface patches.
    Returns ``(points, functional)`` with ``points`` of shape ``(ny, nx, 3)``.
    """
    v = np.asarray(lift.values if hasattr(lift, "values") else lift, dtype=float)
    flat = v.reshape(-1, 4)
    if functional is None:
        _, _, vt = np.linalg.svd(flat, full_matrices=True)
        ell = vt[0]
        if np.sum(flat @ ell) < 0:
            ell = -ell
        rest = vt[1:]
    else:
        ell = np.asarray(functional, dtype=float)
        _, _, vt = np.linalg.svd(ell[None, :], full_matrices=True)
        rest = vt[1:]
    den = v @ ell
    scale = np.abs(v).max(axis=-1)
    if np.any(np.abs(den) <= 1e-12 * scale):
        raise MoebiusError("chart-degenerate", "the chosen functional vanishes on the surface")
    return (v @ rest.T) / den[..., None], ell


def format_chart(points):
    ny, nx, _ = points.shape
    rows = [" ".join(_fmt(x) for x in p) for p in points.reshape(-1, 3)]
    return "\n".join([f"# chart {nx} {ny}"] + rows) + "\n"


# -- key = expression files ----------------------------------------------------

@dataclass
class KeyValueFile:
    """Parsed ``key = expression`` file; ``exprs`` keeps insertion order."""

    exprs: dict
    grid: Grid | None = None
    lines: dict = field(default_factory=dict)

    def require(self, keys):
        missing = [k for k in keys if k not in self.exprs]
        if missing:
            raise MissingDataError(detail=f"missing required keys: {', '.join(missing)}")


def parse_key_file(text, allowed):
    exprs, lines, grid = {}, {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=n)
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key == "grid":
            if grid is not None:
                raise ParseError("duplicate key 'grid'", line=n)
            try:
                grid = _grid_from_tokens(rhs.split(), "grid")
            except GridError as err:
                raise ParseError(err.detail, line=n) from None
            continue
        if key not in allowed:
            raise ParseError(f"unknown key {key!r}", line=n)
        if key in exprs:
            raise ParseError(f"duplicate key {key!r}", line=n)
        offset = line.index("=") + 1
        try:
            exprs[key] = parse(rhs)
        except ParseError as err:
            col = None if err.position is None else err.position + offset
            raise ParseError(err.message, position=col, line=n) from None
        lines[key] = n
    return KeyValueFile(exprs, grid, lines)


def read_coefficients(path_or_text, order=4, grid=None):
    """Build :class:`~moebiusflat.wilczynski.WilczynskiData` from a coefficient file."""
    from .wilczynski import WilczynskiData

    kv = parse_key_file(_text(path_or_text), COEFFICIENT_KEYS)
    kv.require(REQUIRED_COEFFICIENTS)
    g = grid or kv.grid or Grid()
    return WilczynskiData.build(g, order=order, **kv.exprs)


def read_immersion(path_or_text, order=4, grid=None):
    from .centroaffine import CentroAffineImmersion

    kv = parse_key_file(_text(path_or_text), IMMERSION_KEYS)
    kv.require(IMMERSION_KEYS)
    g = grid or kv.grid or Grid()
    return CentroAffineImmersion.from_exprs([kv.exprs[k] for k in IMMERSION_KEYS], grid=g, order=order)


def format_coefficients(w):
    """Inverse of :func:`read_coefficients` for expression-backed data."""
    g = w.grid
    out = [f"grid = {g.header()}"]
    for key in COEFFICIENT_KEYS:
        f = getattr(w, key)
        if f is None:
            continue
        if not f.is_exact:
            raise MoebiusError("unsupported", "only expression-backed data can be written as a coefficient file")
        out.append(f"{key} = {f.expr}")
    return "\n".join(out) + "\n"


def _text(path_or_text):
    if isinstance(path_or_text, Path):
        return path_or_text.read_text(encoding="utf-8")
    return path_or_text


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


__all__ = [
    "COEFFICIENT_KEYS",
    "IMMERSION_KEYS",
    "KeyValueFile",
    "affine_chart",
    "format_chart",
    "format_coefficients",
    "format_matrix_field",
    "format_scalar_field",
    "format_surface",
    "parse_key_file",
    "parse_matrix_field",
    "parse_scalar_field",
    "parse_surface",
    "read_coefficients",
    "read_immersion",
    "write_text",
]
