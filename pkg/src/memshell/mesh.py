"""Triangulated surfaces: validated containers, benchmark generators, topology, I/O.

A :class:`SurfaceMesh` couples an oriented triangle mesh with a unit normal
field in the nodes. Construction validates manifoldness, consistent
orientation, and non-degeneracy; the resulting object is immutable and safe to
share between threads. Structured generators produce the cylinder and torus
benchmark surfaces with exact nodal normals and deterministic connectivity.
"""

import dataclasses
import math
from pathlib import Path

import numpy as np

__all__ = [
    "MeshError",
    "BoundaryComponent",
    "SurfaceMesh",
    "build_cylinder_mesh",
    "build_torus_mesh",
    "compute_nodal_normals",
    "boundary_components",
    "import_mesh",
    "mesh_size",
]


class MeshError(ValueError):
    """Invalid, degenerate, non-manifold, or inconsistently oriented mesh data."""


@dataclasses.dataclass(frozen=True)
class BoundaryComponent:
    """One closed boundary loop.

    Attributes
    ----------
    vertices : (k,) int array
        Vertex indices in traversal order along the boundary; the loop is
        closed, the first vertex is not repeated at the end.
    label : str
        Identifier of the component (generators assign geometric labels such
        as ``"x=0"``; extraction defaults to ``"boundary_<k>"``).
    """

    vertices: np.ndarray
    label: str

    def __len__(self) -> int:
        return int(self.vertices.size)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _facet_cross(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Unnormalized facet normals (edge cross products, magnitude = 2 x area)."""
    p0 = vertices[triangles[:, 0]]
    p1 = vertices[triangles[:, 1]]
    p2 = vertices[triangles[:, 2]]
    return np.cross(p1 - p0, p2 - p0)


def _extract_boundary_loops(triangles: np.ndarray, n_vertices: int) -> list[np.ndarray]:
    """Validate edge topology and return boundary loops in deterministic order.

    Raises
    ------
    MeshError
        If a directed edge is used twice (inconsistent orientation), an edge
        has more than two incident triangles (non-manifold), or boundary
        curves touch in a vertex.
    """
    n = int(n_vertices)
    ea = triangles[:, [0, 1, 2]].ravel()
    eb = triangles[:, [1, 2, 0]].ravel()
    lo = np.minimum(ea, eb).astype(np.int64)
    hi = np.maximum(ea, eb).astype(np.int64)
    _, counts = np.unique(lo * n + hi, return_counts=True)
    if counts.size and counts.max() > 2:
        raise MeshError("non-manifold edge: more than two incident triangles")
    key = ea.astype(np.int64) * n + eb
    skey = np.sort(key)
    if skey.size > 1 and np.any(np.diff(skey) == 0):
        raise MeshError("inconsistent orientation: a directed edge is used by two triangles")

    has_reverse = np.isin(eb.astype(np.int64) * n + ea, skey)
    ba = ea[~has_reverse]
    bb = eb[~has_reverse]
    successor: dict[int, int] = {}
    for a, b in zip(ba.tolist(), bb.tolist()):
        if a in successor:
            raise MeshError(f"boundary loops touch at vertex {a}")
        successor[a] = b

    loops: list[np.ndarray] = []
    visited: set[int] = set()
    for start in sorted(successor):
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        cur = successor[start]
        while cur != start:
            if cur in visited:
                raise MeshError(f"boundary loops touch at vertex {cur}")
            loop.append(cur)
            visited.add(cur)
            cur = successor[cur]
        loops.append(np.asarray(loop, dtype=np.int64))
    return loops


def _averaged_normals(vertices: np.ndarray, triangles: np.ndarray, cross: np.ndarray) -> np.ndarray:
    """Area-weighted average of incident facet normals, renormalized."""
    acc = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(acc, triangles[:, k], cross)
    norms = np.linalg.norm(acc, axis=1)
    scale = np.linalg.norm(cross, axis=1).max()
    if np.any(norms <= 1e-12 * scale):
        bad = np.nonzero(norms <= 1e-12 * scale)[0]
        raise MeshError(f"averaged normal vanishes at vertex {bad[0]} (folded surface)")
    return acc / norms[:, None]


class SurfaceMesh:
    """Immutable, consistently oriented triangle mesh with unit nodal normals.

    Parameters
    ----------
    vertices : (n, 3) array_like
        Vertex coordinates.
    triangles : (m, 3) array_like
        Vertex index triples. All triangles must be oriented consistently
        (counter-clockwise seen from the outward-normal side); every interior
        edge is then shared by exactly two triangles running it in opposite
        directions, boundary edges by exactly one.
    nodal_normals : (n, 3) array_like, optional
        Unit normals in the nodes. When omitted, area-weighted averages of
        the incident facet normals are used.
    boundary_labels : sequence of str, optional
        Labels for the boundary components in extraction order.

    Raises
    ------
    MeshError
        On index errors, degenerate triangles, unreferenced vertices,
        non-manifold or inconsistently oriented connectivity, or non-unit
        normals.
    """

    def __init__(self, vertices, triangles, nodal_normals=None, boundary_labels=None):
        v = np.array(vertices, dtype=float)
        t = np.array(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"triangles must have shape (m, 3), got {t.shape}")
        if t.size == 0:
            raise MeshError("mesh has no triangles")
        if t.min() < 0 or t.max() >= len(v):
            raise MeshError("triangle vertex index out of range")
        referenced = np.zeros(len(v), dtype=bool)
        referenced[t.ravel()] = True
        if not referenced.all():
            raise MeshError(f"unreferenced vertex {int(np.nonzero(~referenced)[0][0])}")

        cross = _facet_cross(v, t)
        twice_area = np.linalg.norm(cross, axis=1)
        e1 = np.linalg.norm(v[t[:, 1]] - v[t[:, 0]], axis=1)
        e2 = np.linalg.norm(v[t[:, 2]] - v[t[:, 0]], axis=1)
        degenerate = twice_area <= 1e-13 * e1 * e2
        if np.any(degenerate):
            raise MeshError(f"degenerate triangle {int(np.nonzero(degenerate)[0][0])}")

        loops = _extract_boundary_loops(t, len(v))
        if boundary_labels is None:
            boundary_labels = [f"boundary_{k}" for k in range(len(loops))]
        if len(boundary_labels) != len(loops):
            raise MeshError(
                f"{len(boundary_labels)} boundary labels for {len(loops)} components"
            )

        if nodal_normals is None:
            nn = _averaged_normals(v, t, cross)
        else:
            nn = np.array(nodal_normals, dtype=float)
            if nn.shape != v.shape:
                raise MeshError(f"nodal_normals must have shape {v.shape}, got {nn.shape}")
            if np.any(np.abs(np.linalg.norm(nn, axis=1) - 1.0) > 1e-12):
                raise MeshError("nodal normals must have unit length (tolerance 1e-12)")

        self._vertices = _readonly(v)
        self._triangles = _readonly(t)
        self._normals = _readonly(nn)
        self._facet_normals = _readonly(cross / twice_area[:, None])
        self._facet_areas = _readonly(0.5 * twice_area)
        self._boundary = tuple(
            BoundaryComponent(_readonly(loop), label)
            for loop, label in zip(loops, boundary_labels)
        )

    @property
    def vertices(self) -> np.ndarray:
        """(n, 3) vertex coordinates."""
        return self._vertices

    @property
    def triangles(self) -> np.ndarray:
        """(m, 3) vertex index triples."""
        return self._triangles

    @property
    def nodal_normals(self) -> np.ndarray:
        """(n, 3) unit normals in the nodes."""
        return self._normals

    @property
    def boundary_components(self) -> tuple[BoundaryComponent, ...]:
        return self._boundary

    @property
    def facet_normals(self) -> np.ndarray:
        """(m, 3) unit facet normals (orientation-induced)."""
        return self._facet_normals

    @property
    def facet_areas(self) -> np.ndarray:
        return self._facet_areas

    @property
    def n_vertices(self) -> int:
        return self._vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self._triangles.shape[0]

    def edges(self) -> np.ndarray:
        """Unique undirected edges as a (ne, 2) index array."""
        ea = self._triangles[:, [0, 1, 2]].ravel()
        eb = self._triangles[:, [1, 2, 0]].ravel()
        pairs = np.stack([np.minimum(ea, eb), np.maximum(ea, eb)], axis=1)
        return np.unique(pairs, axis=0)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + self.n_triangles

    def area(self) -> float:
        """Total facet area."""
        return float(self._facet_areas.sum())

    def with_normals(self, nodal_normals) -> "SurfaceMesh":
        """Copy of this mesh carrying a different nodal normal field."""
        return SurfaceMesh(
            self._vertices,
            self._triangles,
            nodal_normals=nodal_normals,
            boundary_labels=[c.label for c in self._boundary],
        )


def build_cylinder_mesh(r: float, L: float, n_circ: int, n_axial: int) -> SurfaceMesh:
    """Structured triangulation of an open cylinder of radius ``r``, length ``L``.

    The axis is the x-axis with end rings at x=0 and x=L. Each parametric quad
    is split along the fixed diagonal from its (x, angle) corner to the
    (x+dx, angle+da) corner, so refinement sequences are deterministic. Nodal
    normals are the exact radial directions.

    Parameters
    ----------
    r, L : float
        Radius and length, both positive.
    n_circ : int
        Segments around the circumference, at least 3.
    n_axial : int
        Segments along the axis, at least 1.

    Returns
    -------
    SurfaceMesh
        ``n_circ * (n_axial + 1)`` vertices, ``2 * n_circ * n_axial``
        triangles, two boundary components labelled ``"x=0"`` and ``"x=L"``.
    """
    if n_circ < 3:
        raise MeshError(f"n_circ must be >= 3, got {n_circ}")
    if n_axial < 1:
        raise MeshError(f"n_axial must be >= 1, got {n_axial}")
    if r <= 0 or L <= 0:
        raise MeshError(f"cylinder dimensions must be positive, got r={r}, L={L}")

    alpha = 2.0 * np.pi * np.arange(n_circ) / n_circ
    xs = np.linspace(0.0, L, n_axial + 1)
    ca, sa = np.cos(alpha), np.sin(alpha)

    verts = np.empty((n_circ * (n_axial + 1), 3))
    normals = np.empty_like(verts)
    for i, x in enumerate(xs):
        sl = slice(i * n_circ, (i + 1) * n_circ)
        verts[sl, 0] = x
        verts[sl, 1] = r * ca
        verts[sl, 2] = r * sa
        normals[sl, 0] = 0.0
        normals[sl, 1] = ca
        normals[sl, 2] = sa

    tris = []
    for i in range(n_axial):
        for j in range(n_circ):
            j1 = (j + 1) % n_circ
            a = i * n_circ + j
            b = (i + 1) * n_circ + j
            c = (i + 1) * n_circ + j1
            d = i * n_circ + j1
            tris.append((a, c, b))
            tris.append((a, d, c))

    return SurfaceMesh(verts, np.asarray(tris), nodal_normals=normals,
                       boundary_labels=["x=0", "x=L"])


def build_torus_mesh(R: float, r: float, n_tor: int, n_pol: int) -> SurfaceMesh:
    """Structured triangulation of a torus with major radius ``R``, minor ``r``.

    Convention: the symmetry axis is the z-axis; ``phi`` is the toroidal angle
    around it and ``theta`` the poloidal angle around the tube, measured so
    that the distance from the axis is ``R + r*sin(theta)``. Hence
    ``sin(theta) = +1`` on the outer equator, ``-1`` on the inner equator, and
    ``theta = 0`` at the top of the tube (z = +r):

        x = (R + r sin(theta)) cos(phi)
        y = (R + r sin(theta)) sin(phi)
        z = r cos(theta)

    Nodal normals are the exact outward normals
    ``(sin(theta) cos(phi), sin(theta) sin(phi), cos(theta))``.

    Parameters
    ----------
    R, r : float
        Major and minor radius with ``R > r > 0``.
    n_tor, n_pol : int
        Toroidal and poloidal segment counts, both at least 3.

    Returns
    -------
    SurfaceMesh
        ``n_tor * n_pol`` vertices, ``2 * n_tor * n_pol`` triangles, closed
        (no boundary components).
    """
    if r <= 0:
        raise MeshError(f"minor radius must be positive, got r={r}")
    if R <= r:
        raise MeshError(f"torus requires R > r, got R={R}, r={r}")
    if n_tor < 3 or n_pol < 3:
        raise MeshError(f"n_tor and n_pol must be >= 3, got {n_tor}, {n_pol}")

    phi = 2.0 * np.pi * np.arange(n_tor) / n_tor
    theta = 2.0 * np.pi * np.arange(n_pol) / n_pol
    cp, sp = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)

    verts = np.empty((n_tor * n_pol, 3))
    normals = np.empty_like(verts)
    for i in range(n_tor):
        sl = slice(i * n_pol, (i + 1) * n_pol)
        rho = R + r * st
        verts[sl, 0] = rho * cp[i]
        verts[sl, 1] = rho * sp[i]
        verts[sl, 2] = r * ct
        normals[sl, 0] = st * cp[i]
        normals[sl, 1] = st * sp[i]
        normals[sl, 2] = ct

    tris = []
    for i in range(n_tor):
        i1 = (i + 1) % n_tor
        for j in range(n_pol):
            j1 = (j + 1) % n_pol
            a = i * n_pol + j
            b = i1 * n_pol + j
            c = i1 * n_pol + j1
            d = i * n_pol + j1
            tris.append((a, d, c))
            tris.append((a, c, b))

    return SurfaceMesh(verts, np.asarray(tris), nodal_normals=normals)


def compute_nodal_normals(mesh: SurfaceMesh, mode: str, surface=None) -> SurfaceMesh:
    """Return a copy of ``mesh`` with recomputed nodal normals.

    Parameters
    ----------
    mesh : SurfaceMesh
    mode : {"exact", "averaged"}
        ``"exact"`` evaluates the normal of ``surface`` (an analytic surface
        providing ``normal_at``) at each vertex. ``"averaged"`` uses the
        area-weighted average of incident facet normals, renormalized.
    surface : optional
        Required for ``mode="exact"``.
    """
    if mode == "exact":
        if surface is None:
            raise MeshError("mode='exact' requires an analytic surface")
        normals = surface.normal_at(mesh.vertices)
        return mesh.with_normals(normals)
    if mode == "averaged":
        cross = _facet_cross(mesh.vertices, mesh.triangles)
        return mesh.with_normals(_averaged_normals(mesh.vertices, mesh.triangles, cross))
    raise MeshError(f"unknown normal mode {mode!r}")


def boundary_components(mesh: SurfaceMesh) -> list[BoundaryComponent]:
    """Extract the closed boundary loops of ``mesh`` (freshly computed)."""
    loops = _extract_boundary_loops(mesh.triangles, mesh.n_vertices)
    return [
        BoundaryComponent(_readonly(loop), f"boundary_{k}")
        for k, loop in enumerate(loops)
    ]


def mesh_size(mesh: SurfaceMesh) -> float:
    """Maximum edge length of the mesh."""
    e = mesh.edges()
    d = mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]]
    return float(np.linalg.norm(d, axis=1).max())


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def _parse_off(lines: list[str]) -> tuple[np.ndarray, np.ndarray]:
    rows = [r for r in (_strip_comment(s).split() for s in lines) if r]
    if not rows:
        raise MeshError("empty OFF file")
    header = rows.pop(0)
    if header[0].upper() != "OFF":
        raise MeshError("missing OFF header")
    counts = header[1:] if len(header) > 1 else (rows.pop(0) if rows else [])
    if len(counts) < 2:
        raise MeshError("missing OFF vertex/face counts")
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except ValueError as exc:
        raise MeshError(f"invalid OFF counts: {counts}") from exc
    if len(rows) < nv + nf:
        raise MeshError(f"OFF file truncated: expected {nv} vertices and {nf} faces")
    try:
        verts = np.array([[float(x) for x in rows[i][:3]] for i in range(nv)])
    except (ValueError, IndexError) as exc:
        raise MeshError("invalid OFF vertex line") from exc
    faces = []
    for i in range(nv, nv + nf):
        row = rows[i]
        try:
            k = int(row[0])
        except ValueError as exc:
            raise MeshError(f"invalid OFF face line: {' '.join(row)}") from exc
        if k != 3:
            raise MeshError(f"only triangular faces are supported, got a {k}-gon")
        faces.append([int(x) for x in row[1:4]])
    return verts, np.asarray(faces, dtype=np.int64)


def _parse_obj(lines: list[str]) -> tuple[np.ndarray, np.ndarray]:
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    for raw in lines:
        row = _strip_comment(raw).split()
        if not row:
            continue
        if row[0] == "v":
            if len(row) < 4:
                raise MeshError(f"invalid OBJ vertex line: {raw.strip()}")
            verts.append([float(x) for x in row[1:4]])
        elif row[0] == "f":
            refs = row[1:]
            if len(refs) != 3:
                raise MeshError(f"only triangular faces are supported: {raw.strip()}")
            idx = []
            for ref in refs:
                first = ref.split("/")[0]
                i = int(first)
                if i <= 0:
                    raise MeshError(f"unsupported OBJ vertex reference {ref!r}")
                idx.append(i - 1)
            faces.append(idx)
        # all other OBJ records (vn, vt, o, g, s, mtl...) are ignored
    if not verts or not faces:
        raise MeshError("OBJ file contains no triangle mesh")
    return np.asarray(verts), np.asarray(faces, dtype=np.int64)


def import_mesh(path, fmt: str | None = None) -> SurfaceMesh:
    """Read an ASCII OFF or OBJ triangle mesh.

    The format is taken from the file suffix unless ``fmt`` ("off" or "obj")
    is given. Faces must be triangles and consistently oriented; nodal
    normals are set to the area-weighted facet-normal averages.
    """
    path = Path(path)
    if fmt is None:
        fmt = path.suffix.lstrip(".").lower()
    fmt = fmt.lower()
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshError(f"cannot read mesh file {path}: {exc}") from exc
    lines = text.splitlines()
    if fmt == "off":
        verts, faces = _parse_off(lines)
    elif fmt == "obj":
        verts, faces = _parse_obj(lines)
    else:
        raise MeshError(f"unsupported mesh format {fmt!r} (expected 'off' or 'obj')")
    return SurfaceMesh(verts, faces)
