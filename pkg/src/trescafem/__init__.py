"""P1 linear elasticity with Tresca friction: solvers, solution derivatives and friction control."""

from .assembly import (
    ElasticMaterial,
    StiffnessSystem,
    assemble_body_load,
    assemble_stiffness,
    energy_norm,
    recover_boundary_traction,
    solve_dirichlet_neumann,
)
from .control import ControlConfig, ControlProblem, ControlState, project_U
from .mesh import BoundaryTopology, TriMesh, build_boundary_topology, generate_disk_mesh, load_mesh, save_mesh
from .sensitivity import PerturbationFamily, derivative_convergence, gateaux_check
from .vi import (
    BoundaryPartition,
    NonConvergenceError,
    TangentialSignoriniSpec,
    TrescaOptions,
    TrescaProblemSpec,
    TrescaSolution,
    compute_boundary_partition,
    signorini_spec_from_tresca,
    solve_tangential_signorini,
    solve_tresca,
    tresca_residuals,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryPartition",
    "BoundaryTopology",
    "ControlConfig",
    "ControlProblem",
    "ControlState",
    "ElasticMaterial",
    "NonConvergenceError",
    "PerturbationFamily",
    "StiffnessSystem",
    "TangentialSignoriniSpec",
    "TrescaOptions",
    "TrescaProblemSpec",
    "TrescaSolution",
    "TriMesh",
    "assemble_body_load",
    "assemble_stiffness",
    "build_boundary_topology",
    "compute_boundary_partition",
    "derivative_convergence",
    "energy_norm",
    "gateaux_check",
    "generate_disk_mesh",
    "load_mesh",
    "project_U",
    "recover_boundary_traction",
    "save_mesh",
    "signorini_spec_from_tresca",
    "solve_dirichlet_neumann",
    "solve_tangential_signorini",
    "solve_tresca",
    "tresca_residuals",
]
