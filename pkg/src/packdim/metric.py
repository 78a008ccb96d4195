"""Finite metric spaces, the max-metric cartesian product, and basic queries.

Points are dense integer ids 0..n-1.  A space is backed either by an
embedding in R^m carrying the max metric, or by an explicit symmetric
distance matrix.  Product point ids are (i, j) pairs flattened row-major.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import EmptySetError, PackdimError

# triangle inequality is checked exhaustively up to this many points,
# and on 10_000 seeded random triples above
_EXHAUSTIVE_TRIANGLE_CAP = 64
_TRIANGLE_SAMPLES = 10_000


class FiniteMetricSpace:
    """Immutable point set with a distance oracle.

    Construct via :meth:`from_points` (embedded, max metric) or
    :meth:`from_matrix` (explicit distances).
    """

    def __init__(self, n: int, matrix: np.ndarray | None,
                 embedding: np.ndarray | None, label: str = ""):
        self.n = n
        self._matrix = matrix
        self.embedding = embedding
        self.label = label
        if embedding is not None and embedding.ndim != 2:
            raise PackdimError("embedding must be a 2-D array")
        self._validate()

    # -- constructors -------------------------------------------------

    @classmethod
    def from_points(cls, coords, label: str = "") -> "FiniteMetricSpace":
        arr = np.asarray(coords, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        return cls(len(arr), None, arr, label)

    @classmethod
    def from_matrix(cls, matrix, label: str = "") -> "FiniteMetricSpace":
        m = np.asarray(matrix, dtype=float)
        if m.shape[0] != m.shape[1]:
            raise PackdimError("distance matrix must be square")
        return cls(m.shape[0], m, None, label)

    # -- core queries -------------------------------------------------

    @property
    def points(self) -> range:
        return range(self.n)

    @property
    def dim(self) -> int | None:
        return None if self.embedding is None else self.embedding.shape[1]

    def dist(self, i: int, j: int) -> float:
        if self._matrix is not None:
            return float(self._matrix[i, j])
        return float(np.max(np.abs(self.embedding[i] - self.embedding[j])))

    def matrix(self) -> np.ndarray:
        """Full distance matrix (computed once for embedded spaces)."""
        if self._matrix is None:
            e = self.embedding
            self._matrix = np.max(np.abs(e[:, None, :] - e[None, :, :]), axis=2)
        return self._matrix

    def diam(self, subset=None) -> float:
        ids = list(self.points if subset is None else subset)
        if not ids:
            raise EmptySetError("diam of the empty set is undefined")
        if len(ids) == 1:
            return 0.0
        m = self.matrix()
        sub = m[np.ix_(ids, ids)]
        return float(sub.max())

    # -- validation ---------------------------------------------------

    def _validate(self):
        if self.n == 0:
            return
        m = self.matrix()
        if not np.allclose(np.diag(m), 0.0, atol=0.0):
            raise PackdimError("dist(x,x) must be 0")
        if not np.array_equal(m, m.T):
            raise PackdimError("distance matrix must be symmetric")
        off = m[~np.eye(self.n, dtype=bool)]
        if off.size and off.min() <= 0:
            raise PackdimError("distinct points must have positive distance")
        self._check_triangle(m)

    def _check_triangle(self, m: np.ndarray):
        n = self.n
        if n <= _EXHAUSTIVE_TRIANGLE_CAP:
            # vectorized over all ordered triples: d(i,k) <= d(i,j)+d(j,k)
            lhs = m[:, None, :]
            rhs = m[:, :, None] + m[None, :, :]
            if (lhs > rhs + 1e-12).any():
                raise PackdimError("triangle inequality violated")
        else:
            rng = np.random.default_rng(0)  # fixed seed: validation only
            idx = rng.integers(0, n, size=(_TRIANGLE_SAMPLES, 3))
            i, j, k = idx.T
            if (m[i, k] > m[i, j] + m[j, k] + 1e-12).any():
                raise PackdimError("triangle inequality violated (sampled)")

    def __len__(self):
        return self.n

    def __repr__(self):
        kind = "embedded" if self.embedding is not None else "matrix"
        return f"FiniteMetricSpace(n={self.n}, {kind}, label={self.label!r})"


class ProductSpace(FiniteMetricSpace):
    """Max-metric cartesian product.  Point (i, j) has id i*|right|+j."""

    def __init__(self, left: FiniteMetricSpace, right: FiniteMetricSpace):
        self.left = left
        self.right = right
        n = left.n * right.n
        emb = None
        if left.embedding is not None and right.embedding is not None:
            li = np.repeat(np.arange(left.n), right.n)
            ri = np.tile(np.arange(right.n), left.n)
            emb = np.hstack([left.embedding[li], right.embedding[ri]])
        label = f"{left.label}x{right.label}"
        # bypass FiniteMetricSpace init: the product metric is valid by
        # construction and the matrix is formed lazily from the factors
        self.n = n
        self._matrix = None
        self.embedding = emb
        self.label = label

    def pair(self, i: int, j: int) -> int:
        return i * self.right.n + j

    def unpair(self, pid: int) -> tuple[int, int]:
        return divmod(pid, self.right.n)

    def dist(self, a: int, b: int) -> float:
        ia, ja = self.unpair(a)
        ib, jb = self.unpair(b)
        return max(self.left.dist(ia, ib), self.right.dist(ja, jb))

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            ml = self.left.matrix()
            mr = self.right.matrix()
            self._matrix = np.maximum(
                np.kron(ml, np.ones_like(mr)), np.kron(np.ones_like(ml), mr))
        return self._matrix


def product(left: FiniteMetricSpace, right: FiniteMetricSpace) -> ProductSpace:
    """Cartesian product with the maximum metric."""
    return ProductSpace(left, right)


def section(prod: ProductSpace, E, x: int) -> set[int]:
    """Cross section {y : (x, y) in E} of a subset E of product point ids."""
    out = set()
    for pid in E:
        i, j = prod.unpair(pid)
        if i == x:
            out.add(j)
    return out


def diam(space: FiniteMetricSpace, E) -> float:
    """Max pairwise distance over E; 0 for singletons; error on empty."""
    return space.diam(E)


# -- file formats ----------------------------------------------------
#
# Point cloud: CSV with header id,x0,...,x{m-1}, round-trip decimal floats.
# Explicit metric: CSV lower-triangular matrix with header n=<count>.

def write_point_cloud(path, space: FiniteMetricSpace):
    if space.embedding is None:
        raise PackdimError("point-cloud export needs an embedded space")
    m = space.embedding.shape[1]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id"] + [f"x{k}" for k in range(m)])
        for i in space.points:
            w.writerow([i] + [repr(float(v)) for v in space.embedding[i]])


def read_point_cloud(path, label: str = "") -> FiniteMetricSpace:
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if not header or header[0] != "id":
            raise PackdimError("point-cloud CSV must start with an 'id' column")
        rows = sorted((int(row[0]), [float(v) for v in row[1:]]) for row in r if row)
    coords = [c for _, c in rows]
    return FiniteMetricSpace.from_points(coords, label=label)


def write_matrix_csv(path, space: FiniteMetricSpace):
    m = space.matrix()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"n={space.n}"])
        for i in range(space.n):
            w.writerow([repr(float(m[i, j])) for j in range(i + 1)])


def read_matrix_csv(path, label: str = "") -> FiniteMetricSpace:
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        n = int(header[0].split("=")[1])
        m = np.zeros((n, n))
        for i, row in enumerate(r):
            for j, v in enumerate(row):
                m[i, j] = m[j, i] = float(v)
    return FiniteMetricSpace.from_matrix(m, label=label)
