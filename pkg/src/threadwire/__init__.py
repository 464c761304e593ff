"""Numerical toolkit for the thread problem on wire curves in 3-space."""

__version__ = "0.1.0"

from .curves import (
    TubularChart,
    WireCurve,
    genericity_check,
    make_wire,
    parallel_frame,
    polyline_and_pipe,
    wire_from_config,
)
from .harmonic import (
    DiscField,
    extract_level_graph,
    harmonic_polynomial,
    hls_classify,
    sign_changes,
    solve_harmonic,
    vanishing_order,
)
from .isoperimetry import (
    StripRegion,
    fuzz_intervals,
    fuzz_strip,
    iso_bound_1,
    iso_bound_2,
)
from .solver import (
    CrescentMesh,
    SolveReport,
    SolverSettings,
    ThreadProblem,
    build_competitor_P0,
    evaluate,
    extract_kappa,
    minimize,
    verify_convex_hull,
    verify_near_wire,
    verify_slicewise,
)

__all__ = [
    "WireCurve", "TubularChart", "make_wire", "wire_from_config",
    "parallel_frame", "genericity_check", "polyline_and_pipe",
    "DiscField", "solve_harmonic", "harmonic_polynomial", "sign_changes",
    "vanishing_order", "extract_level_graph", "hls_classify",
    "StripRegion", "iso_bound_1", "iso_bound_2", "fuzz_strip",
    "fuzz_intervals",
    "ThreadProblem", "SolverSettings", "SolveReport", "CrescentMesh",
    "build_competitor_P0", "evaluate", "minimize", "extract_kappa",
    "verify_convex_hull", "verify_near_wire", "verify_slicewise",
]
