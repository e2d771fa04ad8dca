"""Effective diffusion tensors of periodic networks of fast-diffusion roads.

A pattern of arcs on the unit torus carries line diffusion of strength ``a``.
The package meshes the periodic cell around the pattern, solves the effective
cell problem (and its thin-strip counterpart), and evaluates the effective
tensor together with the balance test and the graph distances that bound its
trace.
"""

__version__ = "0.1.0"

from .balance import BalanceReport, check_balance
from .errors import (
    AssemblyError,
    DegenerateInputError,
    DomainError,
    GeometryError,
    MeshingError,
    ParameterError,
    PatternFileError,
    RoadnetError,
    SolverError,
)
from .fem import CorrectorField, LinearSystem, assemble_delta, assemble_effective, solve
from .graphspace import build_graph, compute_d, compute_dk, kernel_dim, poincare_ratio
from .mesh import PeriodicMesh, build_mesh, quality_report, refine
from .pattern import TorusPattern, discretize, total_length, unfold, validate_regularity
from .patternio import load_fixture, load_pattern
from .tensor import (
    EffectiveTensor,
    commutation_sweep,
    large_a_bound_check,
    sigma0,
    sigma0_energy,
    sigma_delta,
    small_a_sweep,
    trace_identity,
)

__all__ = [
    "AssemblyError",
    "BalanceReport",
    "CorrectorField",
    "DegenerateInputError",
    "DomainError",
    "EffectiveTensor",
    "GeometryError",
    "LinearSystem",
    "MeshingError",
    "ParameterError",
    "PatternFileError",
    "PeriodicMesh",
    "RoadnetError",
    "SolverError",
    "TorusPattern",
    "assemble_delta",
    "assemble_effective",
    "build_graph",
    "build_mesh",
    "check_balance",
    "commutation_sweep",
    "compute_d",
    "compute_dk",
    "discretize",
    "kernel_dim",
    "large_a_bound_check",
    "load_fixture",
    "load_pattern",
    "poincare_ratio",
    "quality_report",
    "refine",
    "sigma0",
    "sigma0_energy",
    "sigma_delta",
    "small_a_sweep",
    "solve",
    "total_length",
    "trace_identity",
    "unfold",
    "validate_regularity",
]
