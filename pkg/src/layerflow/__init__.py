"""Vertex-centered finite-volume solver for layer-averaged hydrostatic
free-surface flow on unstructured triangular meshes.

The solver integrates the layer-averaged Euler / Navier-Stokes equations
written as a 2D system of conservation laws with source terms: a kinetic
flux-vector-splitting scheme with hydrostatic reconstruction for the
hyperbolic part, an implicit per-cell solve for the inter-layer momentum
exchange, and a lumped P1 finite-element update for the simplified
viscous terms.
"""

from .mesh import Triangulation, Mesh, build_dual, validate, read_mesh, write_mesh
from .layers import LayerConfig, State
from .integrator import StepControl, Solver

__version__ = "1.0.0"

__all__ = [
    "Triangulation",
    "Mesh",
    "build_dual",
    "validate",
    "read_mesh",
    "write_mesh",
    "LayerConfig",
    "State",
    "StepControl",
    "Solver",
]
