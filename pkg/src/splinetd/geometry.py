"""Simplices, barycentric transforms, grid triangulations and point location.

The state domain is a 2-D axis-aligned box (pendulum angle x angular rate).
A triangulation partitions it into non-overlapping triangles; every query
point is resolved to (simplex index, barycentric coordinates) so that the
piecewise polynomial machinery never has to care about geometry again.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidGrid, InvalidTriangulation, OutOfDomain

# Absolute tolerance on barycentric coordinates for membership tests.
# Balances float round-off at a domain scale of ~2*pi.
BARY_TOL = 1e-9

# A simplex is degenerate when |det(edge matrix)| <= DEGENERACY_TOL * scale^n.
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class Simplex:
    """A non-degenerate n-simplex with a cached affine barycentric transform.

    ``transform`` maps homogeneous Cartesian coordinates to barycentric ones:
    b = transform @ [x_1, ..., x_n, 1].  Its first n columns double as the
    map from displacement vectors to directional barycentric coordinates
    (which sum to zero instead of one).
    """

    vertex_ids: tuple[int, ...]
    vertices: np.ndarray          # (n+1, n)
    transform: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if not np.all(np.isfinite(verts)):
            raise InvalidTriangulation(f"simplex {self.vertex_ids}: non-finite vertex")
        n = verts.shape[1]
        if verts.shape[0] != n + 1:
            raise InvalidTriangulation(
                f"simplex {self.vertex_ids}: expected {n + 1} vertices, got {verts.shape[0]}")
        edges = verts[1:] - verts[0]
        det = np.linalg.det(edges)
        scale = max(np.max(np.abs(edges)), 1.0)
        if abs(det) <= DEGENERACY_TOL * scale**n:
            raise InvalidTriangulation(f"simplex {self.vertex_ids} is degenerate (det={det:g})")
        mat = np.vstack([verts.T, np.ones(n + 1)])      # (n+1, n+1)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "transform", np.linalg.inv(mat))
        # The transform must round-trip the simplex's own vertices exactly.
        bary = self.barycentric_many(verts)
        if np.max(np.abs(bary - np.eye(n + 1))) > 1e-10:
            raise InvalidTriangulation(
                f"simplex {self.vertex_ids}: barycentric transform fails vertex round-trip")

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def volume(self) -> float:
        return _simplex_volume(self.vertices)

    def barycentric(self, x: Sequence[float]) -> np.ndarray:
        """Barycentric coordinates of point ``x`` with respect to this simplex."""
        x = np.asarray(x, dtype=float)
        return self.transform @ np.append(x, 1.0)

    def barycentric_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        homog = np.column_stack([xs, np.ones(len(xs))])
        return homog @ self.transform.T

    def directional(self, u: Sequence[float]) -> np.ndarray:
        """Barycentric coordinates of a displacement ``u`` (they sum to 0)."""
        u = np.asarray(u, dtype=float)
        return self.transform[:, : self.dim] @ u

    def point(self, b: Sequence[float]) -> np.ndarray:
        """Cartesian point for barycentric coordinates ``b``."""
        return np.asarray(b, dtype=float) @ self.vertices

    def contains(self, x: Sequence[float], tol: float = BARY_TOL) -> bool:
        return bool(np.min(self.barycentric(x)) >= -tol)


def _simplex_volume(verts: np.ndarray) -> float:
    from math import factorial

    edges = verts[1:] - verts[0]
    return abs(np.linalg.det(edges)) / factorial(verts.shape[1])


@dataclass(frozen=True)
class FacetNeighbors:
    """The two simplices meeting at an interior facet, with the vertex of
    each that lies off the facet."""

    simplices: tuple[int, int]       # (i, j), i < j
    opposite_vertices: tuple[int, int]   # vertex id off the facet, per simplex


class Triangulation:
    """Immutable collection of simplices covering an axis-aligned box.

    Safe for concurrent read access; nothing is mutated after construction.
    """

    def __init__(self, vertices: np.ndarray, simplex_vertex_ids: Sequence[Sequence[int]]):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or len(vertices) == 0:
            raise InvalidTriangulation("vertices must be a non-empty (V, n) array")
        if not np.all(np.isfinite(vertices)):
            raise InvalidTriangulation("non-finite vertex coordinates")
        n = vertices.shape[1]
        self.vertices = vertices
        self.vertices.setflags(write=False)

        simplices = []
        for ids in simplex_vertex_ids:
            ids = tuple(int(i) for i in ids)
            if len(set(ids)) != n + 1:
                raise InvalidTriangulation(f"simplex {ids}: needs {n + 1} distinct vertices")
            if min(ids) < 0 or max(ids) >= len(vertices):
                raise InvalidTriangulation(f"simplex {ids}: vertex index out of range")
            simplices.append(Simplex(ids, vertices[list(ids)]))
        if not simplices:
            raise InvalidTriangulation("triangulation has no simplices")
        self.simplices: tuple[Simplex, ...] = tuple(simplices)

        self.bounds = (vertices.min(axis=0), vertices.max(axis=0))
        self.facet_adjacency = self._build_adjacency()
        transforms = np.stack([s.transform for s in self.simplices])
        # Flattened to one (J*(n+1), n+1) matrix so locate is a single matvec.
        self._transforms_flat = np.ascontiguousarray(
            transforms.reshape(-1, transforms.shape[2]))

    # -- construction helpers -------------------------------------------------

    def _build_adjacency(self) -> dict[tuple[int, ...], FacetNeighbors]:
        incident: dict[tuple[int, ...], list[int]] = {}
        for j, s in enumerate(self.simplices):
            ids = s.vertex_ids
            for skip in range(len(ids)):
                facet = tuple(sorted(ids[:skip] + ids[skip + 1:]))
                incident.setdefault(facet, []).append(j)
        adjacency = {}
        for facet, owners in sorted(incident.items()):
            if len(owners) > 2:
                raise InvalidTriangulation(f"facet {facet} shared by {len(owners)} simplices")
            if len(owners) == 2:
                i, j = sorted(owners)
                out_i = next(v for v in self.simplices[i].vertex_ids if v not in facet)
                out_j = next(v for v in self.simplices[j].vertex_ids if v not in facet)
                adjacency[facet] = FacetNeighbors((i, j), (out_i, out_j))
        return adjacency

    # -- queries ---------------------------------------------------------------

    @property
    def n_simplices(self) -> int:
        return len(self.simplices)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def total_volume(self) -> float:
        return float(sum(_simplex_volume(s.vertices) for s in self.simplices))

    def locate(self, x: Sequence[float], tol: float = BARY_TOL) -> tuple[int, np.ndarray]:
        """Find the simplex containing ``x``.

        Returns (simplex index, barycentric coordinates).  Points on a shared
        facet resolve to the smallest simplex index, which makes evaluation of
        the piecewise polynomial deterministic (continuity makes the choice
        value-irrelevant).
        """
        x = np.asarray(x, dtype=float)
        homog = np.append(x, 1.0)
        m = len(homog)
        bary = (self._transforms_flat @ homog).reshape(-1, m)
        inside = (bary >= -tol).all(axis=1)
        j = int(np.argmax(inside))
        if not inside[j]:
            raise OutOfDomain(f"point {x.tolist()} is outside the triangulation")
        return j, bary[j]

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "vertices": self.vertices.tolist(),
            "simplices": [list(s.vertex_ids) for s in self.simplices],
        })

    def save(self, path):
        with open(path, "w") as handle:
            handle.write(self.to_json())


def load_triangulation(path) -> Triangulation:
    """Load a triangulation from JSON ``{"vertices": [[x1,x2],...],
    "simplices": [[i,j,k],...]}`` with 0-based indices.

    All structural invariants are re-validated so irregular meshes can be
    used without a Delaunay engine.
    """
    with open(path) as handle:
        data = json.load(handle)
    try:
        vertices = np.asarray(data["vertices"], dtype=float)
        simplices = data["simplices"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidTriangulation(f"malformed triangulation file {path}: {exc}") from exc
    return Triangulation(vertices, simplices)


def build_grid_triangulation(theta_breaks: Sequence[float],
                             thetadot_breaks: Sequence[float],
                             style: str = "type3") -> Triangulation:
    """Triangulate a rectangular grid with alternating cell diagonals.

    Each grid cell is split into two triangles.  The diagonal orientation
    alternates in a checkerboard: cells whose (column + row) index is even use
    the "/" diagonal (bottom-left to top-right), odd cells use "\\".  All
    diagonal endpoints therefore land on grid nodes of even index parity, so
    those nodes become eight-triangle hubs while the odd-parity interior nodes
    are crossed by two straight grid lines.  On grids with an even number of
    cells per axis the pattern is point-symmetric about the domain center and
    the center node is a hub.
    """
    if style != "type3":
        raise InvalidGrid(f"unsupported triangulation style {style!r}")
    tb = np.asarray(theta_breaks, dtype=float)
    db = np.asarray(thetadot_breaks, dtype=float)
    for name, breaks in (("theta", tb), ("thetadot", db)):
        if breaks.ndim != 1 or len(breaks) < 2:
            raise InvalidGrid(f"{name} needs at least 2 breakpoints")
        if not np.all(np.isfinite(breaks)):
            raise InvalidGrid(f"{name} breakpoints must be finite")
        if np.any(np.diff(breaks) <= 0):
            raise InvalidGrid(f"{name} breakpoints must be strictly increasing")

    nx, ny = len(tb), len(db)
    vertices = np.array([[x, y] for y in db for x in tb])

    def vid(col, row):
        return row * nx + col

    triangles = []
    for row in range(ny - 1):
        for col in range(nx - 1):
            bl, br = vid(col, row), vid(col + 1, row)
            tl, tr = vid(col, row + 1), vid(col + 1, row + 1)
            if (col + row) % 2 == 0:
                triangles.append((bl, br, tr))
                triangles.append((bl, tr, tl))
            else:
                triangles.append((bl, br, tl))
                triangles.append((br, tr, tl))
    return Triangulation(vertices, triangles)
