"""Triangulations of planar domains with facet topology.

A :class:`Mesh` stores vertices, counter-clockwise triangles and a
structure-of-arrays facet table.  Interior facets carry the two incident
cells ``plus_cell < minus_cell`` and a unit normal pointing from the plus
cell into the minus cell; boundary facets carry the outward normal and a
Dirichlet/Neumann marker.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

INTERIOR = 0
DIRICHLET = 1
NEUMANN = 2

_MARKER_NAMES = {INTERIOR: "Interior", DIRICHLET: "DirichletBoundary", NEUMANN: "NeumannBoundary"}
_GEOM_TOL = 1e-12


class MeshError(ValueError):
    """Raised for malformed mesh files or invalid topology."""


class Facet(NamedTuple):
    vertices: tuple
    marker: int
    plus_cell: int
    minus_cell: Optional[int]
    normal: np.ndarray
    length: float
    h_e: float

    @property
    def marker_name(self) -> str:
        return _MARKER_NAMES[self.marker]


@dataclass(frozen=True)
class BoundarySpec:
    """Rule assigning a boundary marker from a facet midpoint.

    ``classifier`` receives an ``(n, 2)`` array of midpoints and returns an
    integer array of ``DIRICHLET``/``NEUMANN`` markers.
    """

    classifier: Callable[[np.ndarray], np.ndarray]

    def __call__(self, midpoints: np.ndarray) -> np.ndarray:
        out = np.asarray(self.classifier(np.atleast_2d(midpoints)), dtype=np.int64)
        out = np.broadcast_to(out, (len(midpoints),)).copy()
        if np.any((out != DIRICHLET) & (out != NEUMANN)):
            raise MeshError("boundary classifier must return DIRICHLET or NEUMANN")
        return out

    @classmethod
    def all_dirichlet(cls) -> "BoundarySpec":
        return cls(lambda m: np.full(len(m), DIRICHLET))

    @classmethod
    def all_neumann(cls) -> "BoundarySpec":
        return cls(lambda m: np.full(len(m), NEUMANN))

    @classmethod
    def dirichlet_on_x(cls, *xs: float) -> "BoundarySpec":
        """Dirichlet on the vertical lines ``x = xs``, Neumann elsewhere."""

        def rule(m):
            hit = np.zeros(len(m), dtype=bool)
            for x0 in xs:
                hit |= np.abs(m[:, 0] - x0) <= _GEOM_TOL
            return np.where(hit, DIRICHLET, NEUMANN)

        return cls(rule)


class Mesh:
    """Immutable 2D simplicial mesh with facet adjacency."""

    dim = 2

    def __init__(self, vertices, cells, bc: BoundarySpec, marker_overrides=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must have shape (n, 2)")
        if self.cells.ndim != 2 or self.cells.shape[1] != 3:
            raise MeshError("cells must have shape (m, 3)")
        if self.cells.min() < 0 or self.cells.max() >= len(self.vertices):
            raise MeshError("cell references a vertex index out of range")

        p = self.vertices[self.cells]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if np.any(signed <= 0):
            raise MeshError("cells must be counter-clockwise with positive area")
        self.cell_areas = signed
        self.cell_centroids = p.mean(axis=1)

        (self.facet_vertices, self.facet_plus, self.facet_minus,
         self.facet_markers, self.facet_normals, self.facet_lengths,
         self.cell_facets) = _build_facet_arrays(self.vertices, self.cells, bc, marker_overrides)

        for arr in (self.vertices, self.cells, self.cell_areas, self.cell_centroids,
                    self.facet_vertices, self.facet_plus, self.facet_minus,
                    self.facet_markers, self.facet_normals, self.facet_lengths,
                    self.cell_facets):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_facets(self) -> int:
        return len(self.facet_vertices)

    @property
    def facet_h(self) -> np.ndarray:
        # |e|^{1/(d-1)} is just the length in 2D
        return self.facet_lengths

    @property
    def facet_midpoints(self) -> np.ndarray:
        return self.vertices[self.facet_vertices].mean(axis=1)

    @property
    def h(self) -> float:
        """Largest cell diameter."""
        p = self.vertices[self.cells]
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return float(np.sqrt((e ** 2).sum(axis=2)).max())

    @property
    def has_neumann(self) -> bool:
        return bool(np.any(self.facet_markers == NEUMANN))

    @property
    def has_dirichlet(self) -> bool:
        return bool(np.any(self.facet_markers == DIRICHLET))

    def facet(self, i: int) -> Facet:
        minus = int(self.facet_minus[i])
        return Facet(
            vertices=tuple(int(v) for v in self.facet_vertices[i]),
            marker=int(self.facet_markers[i]),
            plus_cell=int(self.facet_plus[i]),
            minus_cell=None if minus < 0 else minus,
            normal=self.facet_normals[i].copy(),
            length=float(self.facet_lengths[i]),
            h_e=float(self.facet_lengths[i]),
        )

    @property
    def facets(self) -> list:
        return [self.facet(i) for i in range(self.n_facets)]

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_facets + self.n_cells

    def boundary_loops(self) -> list:
        """Boundary facets grouped into connected closed loops."""
        bnd = np.flatnonzero(self.facet_markers != INTERIOR)
        by_vertex: dict = {}
        for f in bnd:
            for v in self.facet_vertices[f]:
                by_vertex.setdefault(int(v), []).append(int(f))
        seen = set()
        loops = []
        for f0 in bnd:
            if f0 in seen:
                continue
            stack, loop = [int(f0)], []
            seen.add(int(f0))
            while stack:
                f = stack.pop()
                loop.append(f)
                for v in self.facet_vertices[f]:
                    for g in by_vertex[int(v)]:
                        if g not in seen:
                            seen.add(g)
                            stack.append(g)
            loops.append(np.array(sorted(loop)))
        return loops

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Cell index containing each point (-1 when outside); brute force."""
        points = np.atleast_2d(points)
        p = self.vertices[self.cells]
        out = np.full(len(points), -1, dtype=np.int64)
        for k, x in enumerate(points):
            lam = barycentric(p, x[None, :])
            inside = np.flatnonzero(lam.min(axis=1) >= -1e-12)
            if len(inside):
                out[k] = inside[0]
        return out


def barycentric(tri: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of points ``x`` in triangles ``tri`` (broadcast)."""
    a, b, c = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    v0, v1, v2 = b - a, c - a, x - a
    det = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
    l1 = (v2[..., 0] * v1[..., 1] - v2[..., 1] * v1[..., 0]) / det
    l2 = (v0[..., 0] * v2[..., 1] - v0[..., 1] * v2[..., 0]) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


def build_facets(vertices, cells, bc: BoundarySpec, marker_overrides=None) -> list:
    """Facet list for the given cells; see :class:`Mesh` for conventions."""
    return Mesh(vertices, cells, bc, marker_overrides).facets


def _build_facet_arrays(vertices, cells, bc, marker_overrides):
    n_cells = len(cells)
    # local edge k is opposite vertex k
    local = np.array([[1, 2], [2, 0], [0, 1]])
    edges = cells[:, local].reshape(-1, 2)
    keys = np.sort(edges, axis=1)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        bad = uniq[np.flatnonzero(counts > 2)[0]]
        raise MeshError(f"non-manifold edge {tuple(int(v) for v in bad)} shared by more than two cells")

    n_f = len(uniq)
    owner = np.repeat(np.arange(n_cells), 3)
    order = np.lexsort((owner, inverse))
    first = np.full(n_f, -1, dtype=np.int64)
    second = np.full(n_f, -1, dtype=np.int64)
    sorted_f = inverse[order]
    sorted_c = owner[order]
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_f)) + 1]
    first[sorted_f[starts]] = sorted_c[starts]
    two = starts[counts[sorted_f[starts]] == 2]
    second[sorted_f[two]] = sorted_c[two + 1]
    plus, minus = first, second

    cell_facets = inverse.reshape(n_cells, 3)

    # edge vector as traversed by the plus cell (CCW); outward normal is its right-hand rotation
    slot = np.full(n_f, -1, dtype=np.int64)
    flat_idx = np.arange(3 * n_cells)
    is_plus = owner == plus[inverse]
    slot[inverse[is_plus]] = flat_idx[is_plus]
    e = edges[slot]
    d = vertices[e[:, 1]] - vertices[e[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]

    markers = np.full(n_f, INTERIOR, dtype=np.int64)
    bnd = np.flatnonzero(minus < 0)
    if len(bnd):
        mid = vertices[uniq[bnd]].mean(axis=1)
        markers[bnd] = bc(mid)
    if marker_overrides:
        lookup = {tuple(k): i for i, k in enumerate(uniq.tolist())}
        for (i, j), m in marker_overrides.items():
            f = lookup.get((min(i, j), max(i, j)))
            if f is None or minus[f] >= 0:
                raise MeshError(f"boundary marker given for non-boundary edge ({i}, {j})")
            markers[f] = m

    return uniq, plus, minus, markers, normals, length, cell_facets


def generate_unit_square(level: int, bc: Optional[BoundarySpec] = None) -> Mesh:
    """Uniform mesh of [0,1]^2 with ``h = 2**-level``.

    Every grid square is cut by its bottom-left to top-right diagonal.
    """
    if level < 1:
        raise ValueError("refinement level must be >= 1")
    bc = bc or BoundarySpec.all_dirichlet()
    n = 2 ** level
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper
    return Mesh(vertices, cells, bc)


def read_mesh_file(path):
    """Parse the ASCII mesh format; returns (vertices, cells, overrides, area)."""
    with open(path) as fh:
        lines = []
        for raw in fh:
            s = raw.split("#", 1)[0].strip()
            if s:
                lines.append(s)
    pos = 0

    def header(name):
        nonlocal pos
        if pos >= len(lines):
            raise MeshError(f"expected '{name} N' header, got end of file")
        parts = lines[pos].split()
        if len(parts) != 2 or parts[0] != name:
            raise MeshError(f"expected '{name} N' header, got {lines[pos]!r}")
        try:
            count = int(parts[1])
        except ValueError as exc:
            raise MeshError(f"bad count in {lines[pos]!r}") from exc
        pos += 1
        return count

    def rows(count, ncols, conv):
        nonlocal pos
        if pos + count > len(lines):
            raise MeshError("unexpected end of file")
        out = []
        for s in lines[pos:pos + count]:
            parts = s.split()
            if len(parts) != ncols:
                raise MeshError(f"expected {ncols} fields, got {s!r}")
            try:
                out.append([c(p) for c, p in zip(conv, parts)])
            except ValueError as exc:
                raise MeshError(f"cannot parse line {s!r}") from exc
        pos += count
        return out

    nv = header("vertices")
    vertices = np.array(rows(nv, 2, (float, float)), dtype=float).reshape(-1, 2)
    nc = header("cells")
    cells = np.array(rows(nc, 3, (int, int, int)), dtype=np.int64).reshape(-1, 3)
    overrides = {}
    area = None
    while pos < len(lines):
        key = lines[pos].split()[0]
        if key == "boundary_markers":
            nb = header("boundary_markers")
            for i, j, m in rows(nb, 3, (int, int, str)):
                if m not in ("D", "N"):
                    raise MeshError(f"boundary marker must be D or N, got {m!r}")
                overrides[(i, j)] = DIRICHLET if m == "D" else NEUMANN
        elif key == "area":
            parts = lines[pos].split()
            try:
                area = float(parts[1])
            except (IndexError, ValueError) as exc:
                raise MeshError(f"bad area line {lines[pos]!r}") from exc
            pos += 1
        else:
            raise MeshError(f"unknown section {lines[pos]!r}")
    return vertices, cells, overrides, area


def import_mesh(path, bc: Optional[BoundarySpec] = None) -> Mesh:
    """Load a mesh file; clockwise cells are flipped to counter-clockwise."""
    bc = bc or BoundarySpec.all_dirichlet()
    vertices, cells, overrides, area = read_mesh_file(path)
    if len(cells) and (cells.min() < 0 or cells.max() >= len(vertices)):
        raise MeshError("cell references a vertex index out of range")
    p = vertices[cells]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    cw = signed < 0
    cells = cells.copy()
    cells[cw] = cells[cw][:, [0, 2, 1]]
    if np.any(signed == 0):
        raise MeshError("degenerate cell with zero area")
    mesh = Mesh(vertices, cells, bc, overrides)
    if area is not None and abs(mesh.cell_areas.sum() - area) > 1e-9:
        raise MeshError(f"cell areas sum to {mesh.cell_areas.sum():.12g}, file declares {area:.12g}")
    return mesh


def write_mesh_file(path, mesh: Mesh, area: Optional[float] = None,
                    markers: bool = False) -> None:
    """Write the ASCII mesh format; ``markers=True`` also stores boundary markers."""
    with open(path, "w") as fh:
        fh.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"cells {mesh.n_cells}\n")
        for i, j, k in mesh.cells:
            fh.write(f"{i} {j} {k}\n")
        if markers:
            bnd = np.flatnonzero(mesh.facet_markers != INTERIOR)
            fh.write(f"boundary_markers {len(bnd)}\n")
            for f in bnd:
                i, j = mesh.facet_vertices[f]
                tag = "D" if mesh.facet_markers[f] == DIRICHLET else "N"
                fh.write(f"{i} {j} {tag}\n")
        if area is not None:
            fh.write(f"area {float(area)!r}\n")
