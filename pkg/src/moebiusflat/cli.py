"""Command-line interface.

Exit status: 0 when every reported residual is within tolerance, 1 when one
is not, 2 for unusable input (parse errors, missing keys, bad grids).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .centroaffine import adapted_conserved_check, decompose, gauss_curvature
from .connection import default_tolerance, envelope_checks
from .conserved import FLAT_KEYS, build_from_potential, conservation_residual, flat_centro_affine_residuals
from .deform import DEFAULT_TOL as DEFORM_TOL
from .deform import deform_surface, max_difference
from .errors import IntegrationError, MoebiusError
from .fieldio import affine_chart, format_chart, format_surface, read_coefficients, read_immersion, write_text
from .wilczynski import (
    compatibility_residual,
    lie_quadric_metric,
    moebius_flat_residuals,
    spectral_connection,
    split_lie_quadric,
)

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DEFAULT_TS = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)


@dataclass
class RunConfig:
    command: str
    input: Path
    ts: tuple = DEFAULT_TS
    tol: float | None = None
    out: Path | None = None
    order: int = 4
    sign: str = "intro"
    fmt: str = "text"
    figures: bool = True

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise MoebiusError("invalid-tolerance", "tolerance must be positive")
        if self.command in ("spectral", "deform") and not self.ts:
            raise MoebiusError("invalid-t", "the t-list is empty")


@dataclass
class Report:
    """Ordered ``key = value`` lines plus the pass flag."""

    title: str
    items: list = field(default_factory=list)
    passed: bool = True
    files: list = field(default_factory=list)
    checked: dict = field(default_factory=dict)

    def add(self, key, value):
        self.items.append((key, value))

    def check(self, key, value, tol):
        self.add(key, value)
        self.checked[key] = float(value)
        ok = bool(np.isfinite(value) and value < tol)
        self.passed = self.passed and ok
        return ok

    def render(self, fmt):
        rows = list(self.items) + [(f"file.{k}", str(p)) for k, p in enumerate(self.files)]
        rows.append(("status", "pass" if self.passed else "fail"))
        if fmt == "kv":
            return "\n".join(f"{k} = {_kv(v)}" for k, v in rows) + "\n"
        width = max(len(k) for k, _ in rows)
        body = "\n".join(f"  {k.ljust(width)}  {_text(v)}" for k, v in rows)
        return f"{self.title}\n{body}\n"


def _kv(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _text(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.3e}"
    return str(v)


def _tol(cfg, fallback):
    return cfg.tol if cfg.tol is not None else fallback


def _figures(cfg):
    return cfg.out is not None and cfg.figures


# -- commands ----------------------------------------------------------------

def cmd_check(cfg):
    w = read_coefficients(cfg.input, order=cfg.order)
    tol = _tol(cfg, default_tolerance(w.beta))
    rep = Report(f"check {cfg.input}")
    rep.add("tolerance", tol)
    rep.check("compatibility", compatibility_residual(w), tol)
    a = w.a if w.a is not None else w.V * 0.5
    b = w.b if w.b is not None else w.W * 0.5
    rep.add("quadratic_source", "file" if w.a is not None and w.b is not None else "V/2, W/2")
    res = moebius_flat_residuals(w, cfg.sign, a, b)
    rep.add("sign", cfg.sign)
    for k, v in res.as_dict().items():
        rep.check(f"moebius_flat.{k}", v, tol)
    d, n = split_lie_quadric(w)
    env = envelope_checks(n, lie_quadric_metric(w), d, tol)
    rep.check("envelope.null", env.null_residual, tol)
    rep.check("envelope.filtration", env.filtration_residual, tol)
    rep.check("envelope.trace", env.trace_residual, tol)
    rep.add("envelope.kernel_rank_max", int(env.kernel_rank.max()))
    rep.add("envelope.Dg_curvature", env.Dg_curvature)
    if _figures(cfg):
        from .plotting import residual_bars

        rep.files.append(residual_bars(rep.checked, tol, cfg.out / "check.png", "residuals"))
    return rep


def cmd_spectral(cfg):
    w = read_coefficients(cfg.input, order=cfg.order)
    tol = _tol(cfg, default_tolerance(w.beta))
    rep = Report(f"spectral {cfg.input}")
    rep.add("tolerance", tol)
    curv, agree = [], []
    for t in cfg.ts:
        ins = spectral_connection(w, t, "insertion")
        asm = spectral_connection(w, t, "assembled")
        c = ins.curvature().max_abs()
        g = (ins - asm).max_abs()
        curv.append(c)
        agree.append(g)
        rep.check(f"t={t:g}.curvature", c, tol)
        rep.check(f"t={t:g}.route_gap", g, tol)
    if cfg.out is not None:
        lines = ["# t curvature route_gap"] + [f"{t!r} {c!r} {g!r}" for t, c, g in zip(cfg.ts, curv, agree)]
        rep.files.append(write_text(cfg.out / "spectral.dat", "\n".join(lines) + "\n"))
    if _figures(cfg):
        from .plotting import spectral_sweep

        rep.files.append(spectral_sweep(list(cfg.ts), curv, agree, tol, cfg.out / "spectral.png"))
    return rep


def cmd_deform(cfg):
    w = read_coefficients(cfg.input, order=cfg.order)
    tol = _tol(cfg, DEFORM_TOL)
    rep = Report(f"deform {cfg.input}")
    rep.add("tolerance", tol)
    for t in cfg.ts:
        res = deform_surface(w, t, tol=tol)
        target = w.scaled(t)
        key = f"t={t:g}"
        rep.add(f"{key}.path_residual", res.path_residual)
        for name, f in zip(("beta", "gamma", "V", "W"), res.extracted.as_tuple()):
            rep.add(f"{key}.{name}.mean", float(np.mean(f.values)))
        rep.check(f"{key}.extraction_gap", max_difference(res.extracted, target), tol)
        if cfg.out is not None:
            stem = f"deform_t{t:g}"
            rep.files.append(write_text(cfg.out / f"{stem}.surface", format_surface(res.surface_lift)))
            pts, _ = affine_chart(res.surface_lift)
            rep.files.append(write_text(cfg.out / f"{stem}.chart", format_chart(pts)))
            if _figures(cfg):
                from .plotting import surface_chart

                rep.files.append(surface_chart(pts, cfg.out / f"{stem}.png", f"deformed surface, t = {t:g}"))
    return rep


def cmd_conserved(cfg):
    w = read_coefficients(cfg.input, order=cfg.order)
    if w.alpha is None:
        raise MoebiusError("missing-data", "the coefficient file needs an 'alpha' line")
    tol = _tol(cfg, default_tolerance(w.beta))
    rep = Report(f"conserved {cfg.input}")
    rep.add("tolerance", tol)
    t1 = flat_centro_affine_residuals(w.alpha, w)
    for k in FLAT_KEYS:
        rep.check(f"flat_centro_affine.{k}", t1[k], tol)
    q = build_from_potential(w.alpha, w)
    rep.check("conservation", conservation_residual(q, w), tol)
    rep.add("quantity.shape", q.shape_residual())
    if _figures(cfg):
        from .plotting import residual_bars

        rep.files.append(residual_bars(rep.checked, tol, cfg.out / "conserved.png", "flat centro-affine test"))
    return rep


def cmd_centroaffine(cfg):
    imm = read_immersion(cfg.input, order=cfg.order)
    tol = _tol(cfg, 1e-8)
    data = decompose(imm)
    g = data.g.values
    K = gauss_curvature(data.g)
    rep = Report(f"centroaffine {cfg.input}")
    rep.add("tolerance", tol)
    for name, (i, j) in (("g11", (0, 0)), ("g12", (0, 1)), ("g22", (1, 1))):
        rep.add(f"metric.{name}.min", float(g[..., i, j].min()))
        rep.add(f"metric.{name}.max", float(g[..., i, j].max()))
    rep.add("metric.hyperbolic", data.is_hyperbolic())
    kmax = K.max_abs()
    tmax = data.chebyshev_norm()
    rep.add("gauss_curvature.max_abs", kmax)
    rep.add("chebyshev.max_abs", tmax)
    rep.add("flat_metric", bool(kmax < tol))
    rep.add("proper_affine_sphere", bool(tmax < tol))
    rep.check("cubic_form.symmetry", data.symmetry_residual(), tol)
    if data.is_hyperbolic():
        rep.check("adapted_conservation", adapted_conserved_check(imm, data=data), tol)
    if _figures(cfg):
        from .plotting import metric_panels

        Tn = np.linalg.norm(data.T, axis=-1)
        rep.files.append(metric_panels(data.g.grid, g, K.values, Tn, cfg.out / "centroaffine.png"))
    return rep


COMMANDS = {
    "check": cmd_check,
    "spectral": cmd_spectral,
    "deform": cmd_deform,
    "conserved": cmd_conserved,
    "centroaffine": cmd_centroaffine,
}


# -- argument handling ---------------------------------------------------------

def _t_list(text):
    try:
        ts = tuple(float(s) for s in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not ts:
        raise argparse.ArgumentTypeError("the t-list is empty")
    return ts


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", type=Path, help="coefficient file (immersion file for centroaffine)")
    common.add_argument("--tol", type=_positive, help="pass threshold for residuals")
    common.add_argument("--order", type=int, choices=(2, 4), default=4, help="finite-difference stencil order")
    common.add_argument("--out", type=Path, help="directory for data files and figures")
    common.add_argument("--sign", choices=("intro", "derived"), default="intro",
                        help="sign convention of the first Moebius-flat residual")
    common.add_argument("--format", dest="fmt", choices=("text", "kv"), default="text", help="report layout")
    common.add_argument("--no-figures", dest="figures", action="store_false", help="write data files only")

    p = argparse.ArgumentParser(prog="moebiusflat", description="Checks for Moebius-flat surfaces in RP^3.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="compatibility, Moebius-flat and envelope residuals")
    sp = sub.add_parser("spectral", parents=[common], help="curvature of the spectral family over a t-list")
    sp.add_argument("--t", dest="ts", type=_t_list, default=DEFAULT_TS, help="comma or space separated values")
    dp = sub.add_parser("deform", parents=[common], help="integrate the deformed frame and read it back")
    dp.add_argument("--t", dest="ts", type=_t_list, required=True, help="deformation parameter(s)")
    sub.add_parser("conserved", parents=[common], help="flat centro-affine test through a potential alpha")
    sub.add_parser("centroaffine", parents=[common], help="centro-affine metric, curvature and Chebyshev form")
    return p


def run(argv=None, stdout=None):
    """Parse ``argv``, run the command, print the report; returns the exit code."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        cfg = RunConfig(args.command, args.input, getattr(args, "ts", DEFAULT_TS), args.tol, args.out,
                        args.order, args.sign, args.fmt, args.figures)
        if not cfg.input.is_file():
            raise MoebiusError("missing-input", f"no such file: {cfg.input}")
        rep = COMMANDS[cfg.command](cfg)
    except IntegrationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL
    except MoebiusError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    if cfg.out is not None:
        report_name = "report.kv" if cfg.fmt == "kv" else "report.txt"
        rep.files.append(cfg.out / report_name)
        write_text(cfg.out / report_name, rep.render(cfg.fmt))
    stdout.write(rep.render(cfg.fmt))
    return EXIT_PASS if rep.passed else EXIT_FAIL


def main():
    sys.exit(run())


__all__ = ["COMMANDS", "RunConfig", "Report", "build_parser", "main", "run"]
