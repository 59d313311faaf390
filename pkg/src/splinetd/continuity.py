"""Cross-facet smoothness constraints and the null-space projector.

For two triangles t_i, t_j sharing a facet, C^r continuity of the piecewise
polynomial couples their coefficients linearly.  With both simplices
re-indexed so the shared facet vertices come first (in matching order) and
the off-facet vertex last, the conditions read

    c^{t_i}_{(kappa*, m)} = sum_{|g| = m} c^{t_j}_{(kappa*, 0) + g} B_g(w),
    0 <= m <= r,  |kappa*| = d - m,

where w is the barycentric coordinate, with respect to t_j, of t_i's
off-facet vertex.  Collecting every condition as a row of H gives the
constraint H c = 0, and the orthogonal projector Z = I - pinv(H) H maps
arbitrary coefficient vectors onto the feasible subspace.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import InvalidTriangulation, NumericalFailure
from .spline import SplineSpace, bernstein, enumerate_multi_indices, multi_index_positions


@dataclass(frozen=True)
class ConstraintInfo:
    """Provenance of one smoothness row."""

    facet: tuple[int, ...]
    simplex_pair: tuple[int, int]
    order: int
    facet_multi_index: tuple[int, ...]


@dataclass(frozen=True)
class SmoothnessMatrix:
    H: np.ndarray
    rows: tuple[ConstraintInfo, ...]

    @property
    def n_constraints(self) -> int:
        return self.H.shape[0]


def build_smoothness_matrix(space: SplineSpace) -> SmoothnessMatrix:
    """Assemble the constraint matrix for C^r continuity of ``space``.

    One set of rows is generated per interior facet, single-sided with the
    lower-indexed simplex on the left-hand side.  Duplicate or dependent rows
    are fine: downstream code relies on the rank, not the row count.
    """
    tri = space.triangulation
    d, r, n = space.degree, space.continuity, space.n
    dhat, ahat = space.dhat, space.ahat
    pos = multi_index_positions(d, n)

    rows = []
    infos = []
    for facet, neighbours in sorted(tri.facet_adjacency.items()):
        i, j = neighbours.simplices
        out_i, out_j = neighbours.opposite_vertices
        reindexed = list(facet)

        def local_positions(simplex_id, out_vertex):
            ids = tri.simplices[simplex_id].vertex_ids
            order = reindexed + [out_vertex]
            try:
                return [ids.index(v) for v in order]
            except ValueError as exc:
                raise InvalidTriangulation(
                    f"facet {facet} inconsistent with simplex {simplex_id}") from exc

        perm_i = local_positions(i, out_i)
        perm_j = local_positions(j, out_j)

        # w: off-facet vertex of t_i in t_j's barycentric frame, re-indexed.
        b_local = tri.simplices[j].barycentric(tri.vertices[out_i])
        w = np.array([b_local[p] for p in perm_j])

        for m in range(r + 1):
            for kappa_star in enumerate_multi_indices(d - m, n - 1):
                row = np.zeros(ahat)
                lhs = [0] * (n + 1)
                for p, value in zip(perm_i, (*kappa_star, m)):
                    lhs[p] = value
                row[i * dhat + pos[tuple(lhs)]] += 1.0
                for gamma in product(range(m + 1), repeat=n + 1):
                    if sum(gamma) != m:
                        continue
                    target = tuple(k + g for k, g in zip((*kappa_star, 0), gamma))
                    rhs = [0] * (n + 1)
                    for p, value in zip(perm_j, target):
                        rhs[p] = value
                    row[j * dhat + pos[tuple(rhs)]] -= bernstein(gamma, w)
                rows.append(row)
                infos.append(ConstraintInfo(facet, (i, j), m, kappa_star))

    H = np.asarray(rows) if rows else np.zeros((0, ahat))
    return SmoothnessMatrix(H, tuple(infos))


@dataclass(frozen=True)
class NullSpaceProjector:
    """Orthogonal projector onto the null space of the smoothness matrix."""

    Z: np.ndarray
    rank_H: int
    svd_tolerance: float

    @property
    def free_parameters(self) -> int:
        return self.Z.shape[0] - self.rank_H

    def project(self, c: np.ndarray) -> np.ndarray:
        return self.Z @ c


def null_space_projector(H: np.ndarray | SmoothnessMatrix) -> NullSpaceProjector:
    """Z = I - pinv(H) H via SVD.

    Singular values below max(H.shape) * eps * sigma_max count as zero, the
    standard rank-determination rule for noisy constraint rows.
    """
    if isinstance(H, SmoothnessMatrix):
        H = H.H
    H = np.asarray(H, dtype=float)
    if not np.all(np.isfinite(H)):
        raise NumericalFailure("smoothness matrix contains non-finite entries")
    ahat = H.shape[1]
    if H.shape[0] == 0:
        return NullSpaceProjector(np.eye(ahat), 0, 0.0)
    try:
        _, singular, vt = np.linalg.svd(H, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD of smoothness matrix failed: {exc}") from exc
    tol = max(H.shape) * np.finfo(float).eps * (singular[0] if len(singular) else 0.0)
    rank = int(np.sum(singular > tol))
    row_space = vt[:rank]
    Z = np.eye(ahat) - row_space.T @ row_space
    Z = (Z + Z.T) / 2.0
    return NullSpaceProjector(Z, rank, tol)
