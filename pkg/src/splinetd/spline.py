"""Bernstein bases on simplices and piecewise polynomial spline functions.

A degree-d polynomial on a simplex is written in the Bernstein basis

    B_kappa(b) = d!/kappa! * b^kappa,      |kappa| = d,

with b the barycentric coordinates and kappa a multi-index over the n+1
vertices.  The coefficients of all simplices are concatenated into one
global vector (simplex-major, lexicographic within each simplex), and
evaluation becomes a dot product between that vector and a sparse basis
row with exactly one non-zero block.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from itertools import product
from math import comb, factorial
from typing import Sequence

import numpy as np

from .errors import InvalidParam
from .geometry import Simplex, Triangulation


def enumerate_multi_indices(d: int, n: int) -> list[tuple[int, ...]]:
    """All multi-indices kappa with |kappa| = d over n+1 slots, ordered
    lexicographically with the earlier slots dominating (descending), e.g.
    for d=2, n=2: (2,0,0), (1,1,0), (1,0,1), (0,2,0), (0,1,1), (0,0,2).
    """
    if d < 0 or n < 1:
        raise InvalidParam(f"need d >= 0 and n >= 1, got d={d}, n={n}")
    indices = [k for k in product(range(d + 1), repeat=n + 1) if sum(k) == d]
    return sorted(indices, reverse=True)


def bernstein(kappa: Sequence[int], b: Sequence[float]) -> float:
    """Bernstein basis polynomial d!/kappa! * prod(b_i^kappa_i), d = |kappa|.

    ``b`` entries may be slightly negative (evaluation just outside a facet);
    the integer exponents keep the expression well defined.
    """
    kappa = tuple(int(k) for k in kappa)
    d = sum(kappa)
    coeff = factorial(d)
    value = float(coeff)
    for k, bi in zip(kappa, b):
        value /= factorial(k)
        value *= float(bi) ** k
    return value


def multi_index_positions(d: int, n: int) -> dict[tuple[int, ...], int]:
    return {k: i for i, k in enumerate(enumerate_multi_indices(d, n))}


def bnet_points(simplex: Simplex, d: int) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Spatial positions of the degree-d coefficients inside a simplex:
    kappa maps to sum_i (kappa_i/d) * v_i."""
    if d < 1:
        raise InvalidParam("b-net needs degree >= 1")
    points = []
    for kappa in enumerate_multi_indices(d, simplex.dim):
        weights = np.asarray(kappa, dtype=float) / d
        points.append((kappa, weights @ simplex.vertices))
    return points


@dataclass(frozen=True)
class BasisRow:
    """Sparse global basis vector: a dense block of ``values`` starting at
    column ``offset`` (the block of one simplex), zeros elsewhere."""

    simplex_index: int
    offset: int
    values: np.ndarray
    size: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.size)
        dense[self.offset:self.offset + len(self.values)] = self.values
        return dense

    def dot(self, c: np.ndarray) -> float:
        return float(self.values @ c[self.offset:self.offset + len(self.values)])


class SplineSpace:
    """Degree-d, continuity-r piecewise polynomial space over a triangulation.

    Holds the precomputed combinatorics shared by every evaluation: the
    multi-index table, Bernstein normalization factors, and the index map
    from degree-(d-1) indices to their d-degree neighbours used by the
    derivative formula.  Instances are immutable and shareable.
    """

    def __init__(self, triangulation: Triangulation, degree: int, continuity: int):
        if degree < 1:
            raise InvalidParam(f"degree must be >= 1, got {degree}")
        if not 0 <= continuity < degree:
            raise InvalidParam(
                f"continuity order must satisfy 0 <= r < d, got r={continuity}, d={degree}")
        self.triangulation = triangulation
        self.degree = degree
        self.continuity = continuity
        n = triangulation.dim

        self.multi_indices = enumerate_multi_indices(degree, n)
        self._exponents = np.asarray(self.multi_indices, dtype=np.int64)
        self._norms = np.array(
            [factorial(degree) / np.prod([factorial(k) for k in kappa])
             for kappa in self.multi_indices])

        lower = enumerate_multi_indices(degree - 1, n)
        self._der_exponents = np.asarray(lower, dtype=np.int64)
        self._der_norms = np.array(
            [factorial(degree - 1) / np.prod([factorial(k) for k in kappa])
             for kappa in lower])
        pos = multi_index_positions(degree, n)
        unit = np.eye(n + 1, dtype=np.int64)
        self._der_neighbours = np.array(
            [[pos[tuple(np.asarray(g) + unit[i])] for i in range(n + 1)] for g in lower])

        # Directional barycentric coordinates of the Cartesian unit vectors,
        # stacked per simplex: (J, n+1, n).
        self._axis_directions = np.stack(
            [s.transform[:, :n] for s in triangulation.simplices])

        # dhat: coefficients (and basis polynomials) per simplex,
        # (d+n)!/(n! d!); ahat: total over all simplices.
        self.dhat = comb(degree + n, n)
        self.ahat = triangulation.n_simplices * self.dhat

    # -- sizes ------------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.triangulation.dim

    # -- evaluation kernels ------------------------------------------------------

    def basis_values(self, b: np.ndarray) -> np.ndarray:
        """All dhat Bernstein values at barycentric point ``b`` (lex order)."""
        return self._norms * np.prod(b[None, :] ** self._exponents, axis=1)

    def basis_row(self, x: Sequence[float]) -> BasisRow:
        """Global regression row for state ``x``: the located simplex's block
        of Bernstein values, zero elsewhere.  Entries sum to 1."""
        j, b = self.triangulation.locate(x)
        return BasisRow(j, j * self.dhat, self.basis_values(b), self.ahat)

    def value_at(self, c: np.ndarray, simplex_index: int, b: np.ndarray) -> float:
        block = c[simplex_index * self.dhat:(simplex_index + 1) * self.dhat]
        return float(self.basis_values(b) @ block)

    def gradient_at(self, c: np.ndarray, simplex_index: int, b: np.ndarray) -> np.ndarray:
        """Cartesian gradient at a located point.

        Uses the degree-lowering identity: the derivative along direction u is
        d * sum_{|g|=d-1} B_g(b) * sum_i a_i c_{g+e_i}, with a the directional
        barycentric coordinates of u.
        """
        lower_vals = self._der_norms * np.prod(b[None, :] ** self._der_exponents, axis=1)
        block = c[simplex_index * self.dhat:(simplex_index + 1) * self.dhat]
        neighbours = block[self._der_neighbours]          # (dhat_{d-1}, n+1)
        return self.degree * (lower_vals @ (neighbours @ self._axis_directions[simplex_index]))

    def directional_derivative_at(self, c: np.ndarray, simplex_index: int,
                                  b: np.ndarray, u: Sequence[float]) -> float:
        a = self.triangulation.simplices[simplex_index].directional(u)
        lower_vals = self._der_norms * np.prod(b[None, :] ** self._der_exponents, axis=1)
        block = c[simplex_index * self.dhat:(simplex_index + 1) * self.dhat]
        return float(self.degree * (lower_vals @ (block[self._der_neighbours] @ a)))

    # -- misc --------------------------------------------------------------------

    def bnet_table(self, c: np.ndarray | None = None) -> list[tuple]:
        """Rows (simplex, kappa..., x..., coefficient) for every coefficient,
        in global vector order.  Useful for exporting value surfaces."""
        if c is None:
            c = np.zeros(self.ahat)
        rows = []
        for j, simplex in enumerate(self.triangulation.simplices):
            for local, (kappa, point) in enumerate(bnet_points(simplex, self.degree)):
                rows.append((j, *kappa, *point, float(c[j * self.dhat + local])))
        return rows

    def content_hash(self) -> str:
        """Stable digest of degree, continuity and triangulation geometry;
        used to pair checkpoints with the space they were trained in."""
        digest = hashlib.sha256()
        digest.update(f"d={self.degree};r={self.continuity};".encode())
        digest.update(np.ascontiguousarray(self.triangulation.vertices).tobytes())
        for s in self.triangulation.simplices:
            digest.update(repr(s.vertex_ids).encode())
        return digest.hexdigest()


@dataclass
class SplineFunction:
    """A spline space plus one global coefficient vector.

    Evaluation is pure; the only sanctioned mutation is replacing ``c``
    wholesale (the estimator owns the learning dynamics).
    """

    space: SplineSpace
    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (self.space.ahat,):
            raise InvalidParam(
                f"coefficient vector has shape {self.c.shape}, expected ({self.space.ahat},)")

    def evaluate(self, x: Sequence[float]) -> float:
        j, b = self.space.triangulation.locate(x)
        return self.space.value_at(self.c, j, b)

    def gradient(self, x: Sequence[float]) -> np.ndarray:
        j, b = self.space.triangulation.locate(x)
        return self.space.gradient_at(self.c, j, b)

    def directional_derivative(self, x: Sequence[float], u: Sequence[float]) -> float:
        j, b = self.space.triangulation.locate(x)
        return self.space.directional_derivative_at(self.c, j, b, u)

    __call__ = evaluate
