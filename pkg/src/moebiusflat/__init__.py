"""Möbius-flat surfaces in RP^3: frame systems, spectral families and their checks.

The submodules are importable on their own; the most used names are
re-exported here.
"""

__version__ = "0.1.0"

from .bgg import (
    QuadraticDifferential,
    boundary,
    boundary_one,
    cotton_york_residual,
    cup_residual,
    normal_correction,
    normality_residual,
    quabla,
    solve_psi,
)
from .centroaffine import (
    CentroAffineData,
    CentroAffineImmersion,
    adapted_conserved_check,
    decompose,
    gauss_curvature,
)
from .connection import (
    ConnectionForm,
    MetricField,
    curvature,
    envelope_checks,
    gauge,
    log_derivative_gauge,
    metric_split,
)
from .conserved import (
    PolyConservedQuantity,
    build_from_potential,
    conservation_residual,
    equivalence_check,
    flat_centro_affine_residuals,
    theorem1_residuals,
)
from .deform import DeformationResult, darboux_cubic, deform_surface, integrate_frame
from .errors import MoebiusError
from .expr import parse
from .fields import Grid, MatrixField, ScalarField, VectorField
from .wilczynski import (
    SurfaceFrame,
    WilczynskiData,
    build_connection,
    compatibility_residual,
    extract_from_immersion,
    moebius_flat_residuals,
    spectral_connection,
    split_lie_quadric,
)

__all__ = [
    "CentroAffineData",
    "CentroAffineImmersion",
    "ConnectionForm",
    "DeformationResult",
    "Grid",
    "MatrixField",
    "MetricField",
    "MoebiusError",
    "PolyConservedQuantity",
    "QuadraticDifferential",
    "ScalarField",
    "SurfaceFrame",
    "VectorField",
    "WilczynskiData",
    "adapted_conserved_check",
    "boundary",
    "boundary_one",
    "build_connection",
    "build_from_potential",
    "compatibility_residual",
    "conservation_residual",
    "cotton_york_residual",
    "cup_residual",
    "curvature",
    "darboux_cubic",
    "decompose",
    "deform_surface",
    "envelope_checks",
    "equivalence_check",
    "extract_from_immersion",
    "gauge",
    "gauss_curvature",
    "integrate_frame",
    "log_derivative_gauge",
    "metric_split",
    "moebius_flat_residuals",
    "normal_correction",
    "normality_residual",
    "parse",
    "quabla",
    "solve_psi",
    "spectral_connection",
    "split_lie_quadric",
    "flat_centro_affine_residuals",
    "theorem1_residuals",
]
