"""Apollonian packings as orbits of reflection groups on Lorentzian lattices.

The circle packing lives in a rank 4 lattice and the sphere packing in a
rank 5 lattice; each packing element is a -2 class and its circle or
sphere is read off in the upper half-space chart with a null class at
infinity.
"""
from .config import CaseConfig, ConfigError, builtin_config, load_config, parse_config
from .counting import (
    DELTA_APOLLONIAN,
    CountSeries,
    ExponentFit,
    PowerLawExponent,
    chamber_search,
    chamber_test,
    count_by_curvature,
    count_orbital,
    fit_exponent,
)
from .geometry import (
    BoundaryChart,
    BoundarySphere,
    boundary_sphere,
    classify_pair,
    curvature_sq,
    line_data,
    sphere_center,
)
from .group import (
    ConstraintSystem,
    CuspTranslations,
    GeneratorSet,
    higher_dim_membership,
    null_point,
    solve_normal,
    validate_generators,
)
from .lattice import (
    GramContext,
    IsometryMatrix,
    pair,
    reflect,
    reflect_scaled,
    reflect_scaled_batch,
    reflection_matrix,
    signature,
)
from .orbit import Budget, OrbitRecord, enumerate_orbit
from .packings import Packing, build_packing, reconstruct_gram, resolve_case, verify_packing

__version__ = "0.1.0"

__all__ = [
    "CaseConfig",
    "ConfigError",
    "builtin_config",
    "load_config",
    "parse_config",
    "DELTA_APOLLONIAN",
    "CountSeries",
    "ExponentFit",
    "PowerLawExponent",
    "chamber_search",
    "chamber_test",
    "count_by_curvature",
    "count_orbital",
    "fit_exponent",
    "BoundaryChart",
    "BoundarySphere",
    "boundary_sphere",
    "classify_pair",
    "curvature_sq",
    "line_data",
    "sphere_center",
    "ConstraintSystem",
    "CuspTranslations",
    "GeneratorSet",
    "higher_dim_membership",
    "null_point",
    "solve_normal",
    "validate_generators",
    "GramContext",
    "IsometryMatrix",
    "pair",
    "reflect",
    "reflect_scaled",
    "reflect_scaled_batch",
    "reflection_matrix",
    "signature",
    "Budget",
    "OrbitRecord",
    "enumerate_orbit",
    "Packing",
    "build_packing",
    "reconstruct_gram",
    "resolve_case",
    "verify_packing",
]
