"""Triangular meshes of 2D domains with tagged boundaries.

A :class:`TriMesh` stores vertices, counter-clockwise triangles and the
boundary edges with a ``"D"`` (Dirichlet) or ``"N"`` (Neumann) tag.
:func:`build_boundary_topology` turns it into per-node frames and lumped
quadrature weights used by the contact solvers.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

DIRICHLET = "D"
NEUMANN = "N"
EDGE_TAGS = (DIRICHLET, NEUMANN)

# node classes of boundary vertices
NODE_DIRICHLET = "DIRICHLET"
NODE_NEUMANN = "NEUMANN"
NODE_INTERFACE = "INTERFACE"

FILE_MAGIC = "TMESH"
FILE_VERSION = 1


class MeshError(ValueError):
    """Raised for invalid mesh data or malformed mesh files."""


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0 = vertices[triangles[:, 0]]
    p1 = vertices[triangles[:, 1]]
    p2 = vertices[triangles[:, 2]]
    d1 = p1 - p0
    d2 = p2 - p0
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Conforming P1 triangulation with tagged boundary edges.

    Attributes:
        vertices: ``(n, 2)`` float coordinates.
        triangles: ``(m, 3)`` vertex indices, counter-clockwise.
        boundary_edges: ``(b, 2)`` vertex indices of the boundary edges.
        edge_tags: ``(b,)`` array of ``"D"`` / ``"N"``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        e = np.ascontiguousarray(self.boundary_edges, dtype=np.int64)
        tags = np.asarray(self.edge_tags, dtype="<U1")
        for name, value in (("vertices", v), ("triangles", t), ("boundary_edges", e), ("edge_tags", tags)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        self._validate()

    def _validate(self) -> None:
        v, t, e, tags = self.vertices, self.triangles, self.boundary_edges, self.edge_tags
        if v.ndim != 2 or v.shape[1] != 2:
            raise MeshError("vertices must have shape (n, 2)")
        if not np.all(np.isfinite(v)):
            raise MeshError("vertices contain non-finite coordinates")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise MeshError("triangles must have shape (m, 3) with m > 0")
        if e.ndim != 2 or e.shape[1] != 2:
            raise MeshError("boundary_edges must have shape (b, 2)")
        if tags.shape != (len(e),):
            raise MeshError("edge_tags must have one entry per boundary edge")
        n = len(v)
        for name, idx in (("triangle", t), ("boundary edge", e)):
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise MeshError(f"{name} vertex index out of range [0, {n})")
        bad = sorted(set(tags.tolist()) - set(EDGE_TAGS))
        if bad:
            raise MeshError(f"unknown boundary tags {bad}")
        area = signed_areas(v, t)
        if np.any(area <= 0.0):
            k = int(np.argmin(area))
            raise MeshError(f"triangle {k} has non-positive signed area {area[k]:.3e}")

        # geometric boundary = edges owned by exactly one triangle
        count: dict[tuple[int, int], int] = defaultdict(int)
        for a, b in np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]):
            count[(min(a, b), max(a, b))] += 1
        if any(c > 2 for c in count.values()):
            raise MeshError("non-manifold mesh: an edge is shared by more than two triangles")
        geometric = {k for k, c in count.items() if c == 1}
        given = {(min(a, b), max(a, b)) for a, b in e}
        if len(given) != len(e):
            raise MeshError("duplicate boundary edges")
        if given != geometric:
            raise MeshError(
                f"boundary edges do not match the triangulation boundary "
                f"({len(given - geometric)} spurious, {len(geometric - given)} missing)"
            )
        degree = np.bincount(e.ravel(), minlength=n)
        if np.any((degree != 0) & (degree != 2)):
            raise MeshError("boundary edges do not form closed loops")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_dofs(self) -> int:
        return 2 * len(self.vertices)

    @property
    def diameter(self) -> float:
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.hypot(*span))

    @property
    def max_edge_length(self) -> float:
        t = self.triangles
        edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        d = self.vertices[edges[:, 1]] - self.vertices[edges[:, 0]]
        return float(np.max(np.hypot(d[:, 0], d[:, 1])))

    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.boundary_edges[:, 1]] - self.vertices[self.boundary_edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def retagged(self, tags: Sequence[str] | np.ndarray) -> "TriMesh":
        """Copy of the mesh with new boundary edge tags."""
        return TriMesh(self.vertices, self.triangles, self.boundary_edges, np.asarray(tags))

    def same_as(self, other: "TriMesh") -> bool:
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.boundary_edges, other.boundary_edges)
            and np.array_equal(self.edge_tags, other.edge_tags)
        )


def _in_arc(angle: np.ndarray, arc: tuple[float, float]) -> np.ndarray:
    a, b = arc
    return np.mod(angle - a, 2.0 * np.pi) <= (b - a) + 1e-14


def _check_arc(arc) -> tuple[float, float]:
    if arc is None:
        raise MeshError("dirichlet_arc must be a nonempty interval")
    a, b = (float(x) for x in arc)
    if not (b > a):
        raise MeshError(f"dirichlet_arc [{a}, {b}] is empty")
    if b - a > 2.0 * np.pi:
        raise MeshError("dirichlet_arc spans more than a full turn")
    return a, b


def _stitch_rings(inner: np.ndarray, inner_angles: np.ndarray, outer: np.ndarray, outer_angles: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate the annulus strip between two closed rings of vertices.

    Both rings start at angle 0 and are sorted counter-clockwise.
    """
    m, n = len(inner), len(outer)
    i = j = 0
    tris: list[tuple[int, int, int]] = []
    while i < m or j < n:
        a_next = inner_angles[i + 1] if i + 1 < m else 2.0 * np.pi
        b_next = outer_angles[j + 1] if j + 1 < n else 2.0 * np.pi
        if j < n and (i == m or b_next <= a_next):
            tris.append((inner[i % m], outer[j], outer[(j + 1) % n]))
            j += 1
        else:
            tris.append((inner[i], outer[j % n], inner[(i + 1) % m]))
            i += 1
    return tris


def generate_disk_mesh(n_boundary: int, dirichlet_arc: tuple[float, float] | None = (0.0, np.pi / 2)) -> TriMesh:
    """Structured triangulation of the unit disk by concentric rings.

    The boundary ring carries ``n_boundary`` vertices at angles
    ``2*pi*k/n_boundary``; ``round(n_boundary/8)`` rings are used, ring ``k``
    having about ``n_boundary*k/rings`` vertices.  A boundary edge is tagged
    Dirichlet when the polar angle of its midpoint lies in ``dirichlet_arc``
    (an interval ``[a, b]`` with ``a < b``, taken modulo ``2*pi``).
    """
    if int(n_boundary) != n_boundary or n_boundary < 8:
        raise MeshError(f"n_boundary must be an integer >= 8, got {n_boundary}")
    n_boundary = int(n_boundary)
    arc = _check_arc(dirichlet_arc)
    n_rings = max(1, round(n_boundary / 8))

    verts = [(0.0, 0.0)]
    rings: list[tuple[np.ndarray, np.ndarray]] = []
    for k in range(1, n_rings + 1):
        count = n_boundary if k == n_rings else max(6, round(n_boundary * k / n_rings))
        angles = 2.0 * np.pi * np.arange(count) / count
        r = k / n_rings
        start = len(verts)
        if k == n_rings:
            pts = np.column_stack([np.cos(angles), np.sin(angles)])
            pts /= np.hypot(pts[:, 0], pts[:, 1])[:, None]
        else:
            pts = r * np.column_stack([np.cos(angles), np.sin(angles)])
        verts.extend(map(tuple, pts))
        rings.append((np.arange(start, start + count), angles))

    tris: list[tuple[int, int, int]] = []
    first, first_angles = rings[0]
    n0 = len(first)
    for j in range(n0):
        tris.append((0, first[j], first[(j + 1) % n0]))
    for (a, aa), (b, ba) in zip(rings[:-1], rings[1:]):
        tris.extend(_stitch_rings(a, aa, b, ba))

    vertices = np.array(verts)
    triangles = np.array(tris, dtype=np.int64)
    flip = signed_areas(vertices, triangles) < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    outer = rings[-1][0]
    edges = np.column_stack([outer, np.roll(outer, -1)])
    mid = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    theta = np.mod(np.arctan2(mid[:, 1], mid[:, 0]), 2.0 * np.pi)
    tags = np.where(_in_arc(theta, arc), DIRICHLET, NEUMANN)
    return TriMesh(vertices, triangles, edges, tags)


_SIDES = ("bottom", "right", "top", "left")


def generate_rectangle_mesh(
    nx: int,
    ny: int,
    width: float = 1.0,
    height: float = 1.0,
    dirichlet_sides: Sequence[str] = ("left",),
    tagger: Callable[[np.ndarray], np.ndarray] | None = None,
) -> TriMesh:
    """Structured mesh of ``[0, width] x [0, height]`` split into right triangles.

    Edges on the sides named in ``dirichlet_sides`` are tagged Dirichlet.  A
    ``tagger`` mapping edge midpoints ``(b, 2)`` to a boolean Dirichlet mask
    overrides the side names.
    """
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be positive")
    unknown = set(dirichlet_sides) - set(_SIDES)
    if unknown:
        raise MeshError(f"unknown sides {sorted(unknown)}")
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))

    edges, sides = [], []
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        sides.append("bottom")
    for j in range(ny):
        edges.append((vid(nx, j), vid(nx, j + 1)))
        sides.append("right")
    for i in range(nx, 0, -1):
        edges.append((vid(i, ny), vid(i - 1, ny)))
        sides.append("top")
    for j in range(ny, 0, -1):
        edges.append((vid(0, j), vid(0, j - 1)))
        sides.append("left")
    edges = np.array(edges, dtype=np.int64)
    if tagger is not None:
        mid = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
        mask = np.asarray(tagger(mid), dtype=bool)
    else:
        mask = np.array([s in dirichlet_sides for s in sides])
    tags = np.where(mask, DIRICHLET, NEUMANN)
    return TriMesh(vertices, np.array(tris, dtype=np.int64), edges, tags)


@dataclass(frozen=True, eq=False)
class BoundaryTopology:
    """Per-node boundary frames and lumped quadrature weights.

    Arrays are aligned with ``boundary_nodes`` (loop order).  ``neumann``
    indexes the positions whose class is NEUMANN; boundary fields of the
    solvers live on exactly those nodes, in that order.
    """

    boundary_nodes: np.ndarray
    node_normal: np.ndarray
    node_tangent: np.ndarray
    node_weight: np.ndarray
    node_class: np.ndarray
    vertices: np.ndarray

    @property
    def neumann(self) -> np.ndarray:
        return np.flatnonzero(self.node_class == NODE_NEUMANN)

    @property
    def neumann_nodes(self) -> np.ndarray:
        """Vertex indices of the Neumann nodes."""
        return self.boundary_nodes[self.neumann]

    @property
    def neumann_normal(self) -> np.ndarray:
        return self.node_normal[self.neumann]

    @property
    def neumann_tangent(self) -> np.ndarray:
        return self.node_tangent[self.neumann]

    @property
    def neumann_weight(self) -> np.ndarray:
        return self.node_weight[self.neumann]

    @property
    def neumann_points(self) -> np.ndarray:
        return self.vertices[self.neumann_nodes]

    @property
    def neumann_theta(self) -> np.ndarray:
        p = self.neumann_points
        return np.mod(np.arctan2(p[:, 1], p[:, 0]), 2.0 * np.pi)

    @property
    def dirichlet_vertices(self) -> np.ndarray:
        """Vertices constrained to zero: DIRICHLET and INTERFACE nodes."""
        mask = self.node_class != NODE_NEUMANN
        return np.sort(self.boundary_nodes[mask])

    @property
    def n_neumann(self) -> int:
        return int(np.count_nonzero(self.node_class == NODE_NEUMANN))

    def evaluate(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """Evaluate ``func(x, y)`` at the Neumann nodes."""
        p = self.neumann_points
        out = np.asarray(func(p[:, 0], p[:, 1]), dtype=float)
        if out.ndim == 0:
            out = np.full(len(p), float(out))
        return out


def _oriented_boundary_edges(mesh: TriMesh) -> np.ndarray:
    """Boundary edges oriented so that the domain lies on their left."""
    t = mesh.triangles
    directed = {}
    for a, b in np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]):
        directed[(int(a), int(b))] = True
    out = np.empty_like(mesh.boundary_edges)
    for k, (a, b) in enumerate(mesh.boundary_edges):
        a, b = int(a), int(b)
        if (a, b) in directed:
            out[k] = (a, b)
        elif (b, a) in directed:
            out[k] = (b, a)
        else:  # pragma: no cover - guarded by TriMesh validation
            raise MeshError(f"boundary edge ({a}, {b}) not found in triangles")
    return out


def build_boundary_topology(mesh: TriMesh, snap_to_circle: bool = False) -> BoundaryTopology:
    """Nodal normals, tangents, weights and classes of the boundary vertices.

    Nodal normals average the outward normals of the two adjacent boundary
    edges weighted by edge length.  With ``snap_to_circle`` the normal is
    replaced by the radial direction ``v/|v|`` (exact for meshes whose
    boundary vertices lie on a circle centred at the origin).  The tangent is
    the normal rotated by +90 degrees.
    """
    edges = _oriented_boundary_edges(mesh)
    v = mesh.vertices
    d = v[edges[:, 1]] - v[edges[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    edge_normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]

    nxt: dict[int, int] = {}
    for k, (a, _) in enumerate(edges):
        if int(a) in nxt:
            raise MeshError(f"boundary loop through vertex {a} is not orientable")
        nxt[int(a)] = k
    incoming: dict[int, int] = {}
    for k, (_, b) in enumerate(edges):
        if int(b) in incoming:
            raise MeshError(f"boundary loop through vertex {b} is not orientable")
        incoming[int(b)] = k
    if set(nxt) != set(incoming):
        raise MeshError("boundary loops are not closed")

    # traverse loops, each starting at its smallest vertex
    order: list[int] = []
    seen: set[int] = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        node = start
        while node not in seen:
            seen.add(node)
            order.append(node)
            node = int(edges[nxt[node], 1])
        if node != start:
            raise MeshError("boundary loop is not closed")

    nodes = np.array(order, dtype=np.int64)
    e_out = np.array([nxt[i] for i in order])
    e_in = np.array([incoming[i] for i in order])
    normal = length[e_out, None] * edge_normal[e_out] + length[e_in, None] * edge_normal[e_in]
    if snap_to_circle:
        normal = v[nodes].copy()
    normal /= np.hypot(normal[:, 0], normal[:, 1])[:, None]
    tangent = np.column_stack([-normal[:, 1], normal[:, 0]])
    weight = 0.5 * (length[e_out] + length[e_in])

    tag_out = mesh.edge_tags[e_out]
    tag_in = mesh.edge_tags[e_in]
    cls = np.where(
        (tag_out == DIRICHLET) & (tag_in == DIRICHLET),
        NODE_DIRICHLET,
        np.where((tag_out == NEUMANN) & (tag_in == NEUMANN), NODE_NEUMANN, NODE_INTERFACE),
    )
    return BoundaryTopology(nodes, normal, tangent, weight, cls.astype("<U9"), v)


def save_mesh(mesh: TriMesh, path: str | Path) -> None:
    lines = [f"{FILE_MAGIC} {FILE_VERSION}", f"VERTICES {mesh.n_vertices}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"TRIANGLES {len(mesh.triangles)}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines.append(f"BOUNDARY_EDGES {len(mesh.boundary_edges)}")
    lines += [f"{i} {j} {tag}" for (i, j), tag in zip(mesh.boundary_edges.tolist(), mesh.edge_tags.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path: str | Path) -> TriMesh:
    """Read a mesh in the ``TMESH 1`` text format.

    Raises:
        MeshError: malformed content, bad indices or unknown tags.
        OSError: the file cannot be read.
    """
    text = Path(path).read_text()
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    pos = 0

    def take_header(name: str) -> int:
        nonlocal pos
        if pos >= len(rows) or len(rows[pos]) != 2 or rows[pos][0] != name:
            raise MeshError(f"expected '{name} <count>' at record {pos}")
        try:
            count = int(rows[pos][1])
        except ValueError as exc:
            raise MeshError(f"bad count in '{name}' header") from exc
        if count < 0:
            raise MeshError(f"negative count in '{name}' header")
        pos += 1
        if pos + count > len(rows):
            raise MeshError(f"truncated {name} section")
        return count

    if not rows or rows[0] != [FILE_MAGIC, str(FILE_VERSION)]:
        raise MeshError(f"missing '{FILE_MAGIC} {FILE_VERSION}' header")
    pos = 1
    try:
        nv = take_header("VERTICES")
        verts = [(float(r[0]), float(r[1])) for r in _fixed(rows[pos : pos + nv], 2, "vertex")]
        pos += nv
        nt = take_header("TRIANGLES")
        tris = [tuple(int(c) for c in r) for r in _fixed(rows[pos : pos + nt], 3, "triangle")]
        pos += nt
        nb = take_header("BOUNDARY_EDGES")
        brow = _fixed(rows[pos : pos + nb], 3, "boundary edge")
        edges = [(int(r[0]), int(r[1])) for r in brow]
        tags = [r[2] for r in brow]
        pos += nb
    except ValueError as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"unparsable number: {exc}") from exc
    if pos != len(rows):
        raise MeshError("trailing content after BOUNDARY_EDGES section")
    unknown = sorted(set(tags) - set(EDGE_TAGS))
    if unknown:
        raise MeshError(f"unknown boundary tag(s) {unknown}")
    return TriMesh(
        np.array(verts, dtype=float).reshape(-1, 2),
        np.array(tris, dtype=np.int64).reshape(-1, 3),
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        np.array(tags, dtype="<U1"),
    )


def _fixed(rows: list[list[str]], width: int, what: str) -> list[list[str]]:
    for r in rows:
        if len(r) != width:
            raise MeshError(f"{what} record {' '.join(r)!r} must have {width} fields")
    return rows


def polygon_perimeter(mesh: TriMesh, tag: str | None = None) -> float:
    lengths = mesh.edge_lengths()
    if tag is not None:
        lengths = lengths[mesh.edge_tags == tag]
    return float(lengths.sum())


def angle_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    dot = np.sum(a * b, axis=-1)
    return np.abs(np.arctan2(cross, dot))


__all__ = [
    "DIRICHLET",
    "NEUMANN",
    "NODE_DIRICHLET",
    "NODE_INTERFACE",
    "NODE_NEUMANN",
    "BoundaryTopology",
    "MeshError",
    "TriMesh",
    "angle_between",
    "build_boundary_topology",
    "generate_disk_mesh",
    "generate_rectangle_mesh",
    "load_mesh",
    "polygon_perimeter",
    "save_mesh",
]
