"""P1 vector finite elements for isotropic linear elasticity.

Degrees of freedom are interleaved: dof ``2*v + c`` is component ``c`` of
vertex ``v``.  Load vectors and displacement fields are full-length numpy
arrays; Dirichlet (and interface) vertices are eliminated in the solves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import BoundaryTopology, TriMesh, build_boundary_topology, signed_areas, NEUMANN

logger = logging.getLogger(__name__)

LINEAR_RTOL = 1e-10

# barycentric coordinates of the three edge midpoints
_MIDPOINT_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
_GAUSS2 = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


class SolverError(RuntimeError):
    """Linear solve did not reach the requested residual."""


@dataclass(frozen=True)
class ElasticMaterial:
    """Isotropic Lamé pair; ``lam`` is the first Lamé parameter."""

    mu: float
    lam: float

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")

    @classmethod
    def from_young_poisson(cls, young: float, poisson: float) -> "ElasticMaterial":
        mu = young / (2.0 * (1.0 + poisson))
        lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
        return cls(mu, lam)

    def elasticity_matrix(self) -> np.ndarray:
        """Voigt matrix acting on (e_xx, e_yy, 2 e_xy) (plane strain)."""
        mu, lam = self.mu, self.lam
        return np.array([[2 * mu + lam, lam, 0.0], [lam, 2 * mu + lam, 0.0], [0.0, 0.0, mu]])


def _gradients(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Constant P1 basis gradients ``(m, 3, 2)`` and triangle areas."""
    area = signed_areas(mesh.vertices, mesh.triangles)
    if np.any(area <= 0):
        raise ValueError("degenerate triangle (area <= 0)")
    p = mesh.vertices[mesh.triangles]
    x, y = p[:, :, 0], p[:, :, 1]
    # grad phi_i = (y_j - y_k, x_k - x_j) / (2A) over cyclic (i, j, k)
    gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grads = np.stack([gx, gy], axis=2) / (2.0 * area)[:, None, None]
    return grads, area


def _strain_operator(grads: np.ndarray) -> np.ndarray:
    """B matrices ``(m, 3, 6)`` mapping element dofs to Voigt strain."""
    m = grads.shape[0]
    B = np.zeros((m, 3, 6))
    B[:, 0, 0::2] = grads[:, :, 0]
    B[:, 1, 1::2] = grads[:, :, 1]
    B[:, 2, 0::2] = grads[:, :, 1]
    B[:, 2, 1::2] = grads[:, :, 0]
    return B


def _element_dofs(mesh: TriMesh) -> np.ndarray:
    t = mesh.triangles
    dofs = np.empty((len(t), 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * t
    dofs[:, 1::2] = 2 * t + 1
    return dofs


@dataclass(frozen=True, eq=False)
class StiffnessSystem:
    """Assembled elasticity operator together with its constraint map.

    ``K_full`` acts on all dofs (rigid motions in its kernel);
    ``K`` is the restriction to ``free_dofs`` (Dirichlet dofs eliminated).
    """

    mesh: TriMesh
    material: ElasticMaterial
    topology: BoundaryTopology
    K_full: sp.csr_matrix
    free_dofs: np.ndarray
    K: sp.csc_matrix = field(repr=False)

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_dofs

    @property
    def fixed_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.free_dofs] = False
        return np.flatnonzero(mask)

    def neumann_dofs(self) -> np.ndarray:
        """``(k, 2)`` global dofs of the Neumann nodes."""
        nodes = self.topology.neumann_nodes
        return np.column_stack([2 * nodes, 2 * nodes + 1])


def assemble_stiffness(mesh: TriMesh, material: ElasticMaterial, topology: BoundaryTopology | None = None) -> StiffnessSystem:
    """Assemble ``int 2 mu e(phi_i):e(phi_j) + lam div(phi_i) div(phi_j)``."""
    if topology is None:
        topology = build_boundary_topology(mesh)
    grads, area = _gradients(mesh)
    B = _strain_operator(grads)
    D = material.elasticity_matrix()
    Ke = np.einsum("mki,kl,mlj->mij", B, D, B) * area[:, None, None]
    dofs = _element_dofs(mesh)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    K_full = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    K_full.sum_duplicates()
    # exact symmetry (summation order may differ between (i,j) and (j,i))
    K_full = ((K_full + K_full.T) * 0.5).tocsr()

    fixed_vertices = topology.dirichlet_vertices
    mask = np.ones(mesh.n_dofs, dtype=bool)
    mask[2 * fixed_vertices] = False
    mask[2 * fixed_vertices + 1] = False
    free = np.flatnonzero(mask)
    K = K_full[free][:, free].tocsc()
    return StiffnessSystem(mesh, material, topology, K_full, free, K)


def _as_vector_values(values: np.ndarray, n: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1 and values.shape[0] == 2:
        values = np.broadcast_to(values, (n, 2))
    if values.ndim == 0:
        values = np.full((n, 2), float(values))
    return values


def assemble_body_load(mesh: TriMesh, f: Callable[[np.ndarray, np.ndarray], np.ndarray] | None) -> np.ndarray:
    """Consistent P1 load of ``int f . w`` with the edge-midpoint rule.

    ``f(x, y)`` receives coordinate arrays and returns a ``(q, 2)`` array (or
    a tuple of two component arrays).
    """
    b = np.zeros(mesh.n_dofs)
    if f is None:
        return b
    _, area = _gradients(mesh)
    p = mesh.vertices[mesh.triangles]  # (m, 3, 2)
    qpts = np.einsum("qi,mid->mqd", _MIDPOINT_BARY, p).reshape(-1, 2)
    fv = f(qpts[:, 0], qpts[:, 1])
    if isinstance(fv, tuple):
        fv = np.column_stack([np.broadcast_to(np.asarray(c, dtype=float), (len(qpts),)) for c in fv])
    fv = _as_vector_values(fv, len(qpts)).reshape(len(area), 3, 2)
    # sum_q (A/3) f(x_q) phi_i(x_q)
    local = np.einsum("m,qi,mqc->mic", area / 3.0, _MIDPOINT_BARY, fv)
    t = mesh.triangles
    np.add.at(b, 2 * t, local[:, :, 0])
    np.add.at(b, 2 * t + 1, local[:, :, 1])
    return b


def assemble_boundary_normal_load(mesh: TriMesh, topology: BoundaryTopology, h: np.ndarray) -> np.ndarray:
    """Lumped ``int_{Gamma_N} h w_n``: node ``i`` gets ``weight_i h_i n_i``."""
    h = np.broadcast_to(np.asarray(h, dtype=float), (topology.n_neumann,))
    return assemble_boundary_vector_load(mesh, topology, h[:, None] * topology.neumann_normal)


def assemble_boundary_vector_load(mesh: TriMesh, topology: BoundaryTopology, traction: np.ndarray) -> np.ndarray:
    """Lumped ``int_{Gamma_N} t . w`` for nodal tractions ``(k, 2)`` on Neumann nodes."""
    traction = np.asarray(traction, dtype=float).reshape(topology.n_neumann, 2)
    b = np.zeros(mesh.n_dofs)
    nodes = topology.neumann_nodes
    wt = topology.neumann_weight[:, None] * traction
    b[2 * nodes] += wt[:, 0]
    b[2 * nodes + 1] += wt[:, 1]
    return b


def assemble_edge_traction_load(mesh: TriMesh, traction: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
    """Consistent ``int t . w`` over Neumann edges with 2-point Gauss quadrature.

    ``traction(points, normals)`` gets ``(q, 2)`` points and the outward edge
    normals there, and returns ``(q, 2)`` tractions.
    """
    b = np.zeros(mesh.n_dofs)
    mask = mesh.edge_tags == NEUMANN
    if not mask.any():
        return b
    edges = mesh.boundary_edges[mask]
    # orient with domain on the left
    oriented = np.array(edges)
    t = mesh.triangles
    directed = set(map(tuple, np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]).tolist()))
    for k, (a, c) in enumerate(oriented.tolist()):
        if (a, c) not in directed:
            oriented[k] = (c, a)
    pa = mesh.vertices[oriented[:, 0]]
    pb = mesh.vertices[oriented[:, 1]]
    d = pb - pa
    length = np.hypot(d[:, 0], d[:, 1])
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    for s in _GAUSS2:
        pts = pa + s * d
        tv = np.asarray(traction(pts, normal), dtype=float)
        wa = 0.5 * length * (1.0 - s)
        wb = 0.5 * length * s
        for c in range(2):
            np.add.at(b, 2 * oriented[:, 0] + c, wa * tv[:, c])
            np.add.at(b, 2 * oriented[:, 1] + c, wb * tv[:, c])
    return b


def solve_free(system: StiffnessSystem, load: np.ndarray, rtol: float = LINEAR_RTOL) -> np.ndarray:
    """Solve ``K u = b`` on the free dofs; Dirichlet dofs are exactly zero."""
    load = np.asarray(load, dtype=float)
    b = load[system.free_dofs]
    u = np.zeros(system.n_dofs)
    if not np.any(b):
        return u
    x = spla.splu(system.K).solve(b)
    check_residual(system.K, x, b, rtol)
    u[system.free_dofs] = x
    return u


def check_residual(K, x: np.ndarray, b: np.ndarray, rtol: float = LINEAR_RTOL) -> float:
    nb = np.linalg.norm(b)
    res = np.linalg.norm(K @ x - b)
    if nb > 0 and res > rtol * nb:
        raise SolverError(f"linear residual {res / nb:.2e} exceeds rtol {rtol:.1e}")
    return res


def solve_dirichlet_neumann(system: StiffnessSystem, loads: np.ndarray | list[np.ndarray]) -> np.ndarray:
    """Displacement of the Dirichlet-Neumann problem for the given load vector(s)."""
    if isinstance(loads, (list, tuple)):
        loads = np.sum(loads, axis=0)
    return solve_free(system, loads)


@dataclass(frozen=True)
class BoundaryTraction:
    """Recovered traction on the Neumann nodes (aligned with ``topology.neumann``).

    ``sigma_t`` is the tangential component along the nodal tangent, so that
    ``sigma_tau == sigma_t[:, None] * tangent``.
    """

    vector: np.ndarray
    sigma_n: np.ndarray
    sigma_tau: np.ndarray
    sigma_t: np.ndarray
    reactions: np.ndarray


def recover_boundary_traction(system: StiffnessSystem, u: np.ndarray, body_load: np.ndarray) -> BoundaryTraction:
    """Residual-based traction ``(K_full u - b)/weight`` on the Neumann nodes.

    ``body_load`` must contain the volume forces only; prescribed boundary
    loads then reappear inside the recovered traction.  The Dirichlet
    reactions (residual on constrained vertices, unscaled) are returned too.
    """
    r = system.K_full @ u - body_load
    top = system.topology
    nd = system.neumann_dofs()
    vec = r[nd] / top.neumann_weight[:, None]
    n = top.neumann_normal
    sn = np.sum(vec * n, axis=1)
    st = vec - sn[:, None] * n
    fixed = top.dirichlet_vertices
    reactions = np.column_stack([r[2 * fixed], r[2 * fixed + 1]])
    return BoundaryTraction(vec, sn, st, np.sum(vec * top.neumann_tangent, axis=1), reactions)


def energy_inner(system: StiffnessSystem, u: np.ndarray, w: np.ndarray) -> float:
    return float(u @ (system.K_full @ w))


def energy_norm(system: StiffnessSystem, u: np.ndarray) -> float:
    return float(np.sqrt(max(energy_inner(system, u, u), 0.0)))


def interpolate(mesh: TriMesh, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
    """Nodal interpolant of a vector function as an interleaved dof vector."""
    v = mesh.vertices
    val = func(v[:, 0], v[:, 1])
    if isinstance(val, tuple):
        val = np.column_stack(val)
    return np.asarray(val, dtype=float).reshape(-1, 2).ravel()


def h1_seminorm_error(mesh: TriMesh, u: np.ndarray, grad_exact: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
    """``|u_h - u|_{H^1}`` with the edge-midpoint rule.

    ``grad_exact(x, y)`` returns ``(q, 2, 2)`` with entry ``[q, i, j] = d u_i / d x_j``.
    """
    grads, area = _gradients(mesh)
    ue = u.reshape(-1, 2)[mesh.triangles]  # (m, 3, 2)
    gh = np.einsum("mic,mij->mcj", ue, grads)  # (m, 2, 2) constant per element
    p = mesh.vertices[mesh.triangles]
    qpts = np.einsum("qi,mid->mqd", _MIDPOINT_BARY, p).reshape(-1, 2)
    ge = np.asarray(grad_exact(qpts[:, 0], qpts[:, 1])).reshape(len(area), 3, 2, 2)
    diff = ge - gh[:, None, :, :]
    err2 = np.sum(area[:, None] / 3.0 * np.sum(diff**2, axis=(2, 3)))
    return float(np.sqrt(err2))
