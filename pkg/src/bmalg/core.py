"""Dense order-3 hypermatrices and the matrix/vector bridge.

A :class:`Hypermatrix` is a flat row-major scalar array with shape
``(n0, n1, n2)``; entry ``A[i0, i1, i2]`` lives at flat index
``i0*n1*n2 + i1*n2 + i2``.  :class:`Matrix` is the separate dense 2-d
type used wherever determinants, adjugates or inverses are needed.
All values are treated as immutable; slicing copies.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ShapeError
from .scalars import ScalarDomain

AXIS_NAMES = {"row": 0, "column": 1, "depth": 2}


@dataclass(frozen=True)
class SliceSpec:
    """Pin one axis of a hypermatrix: row (axis 0), column (axis 1) or
    depth (axis 2)."""

    axis: int
    index: int

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise ShapeError(f"axis must be 0, 1 or 2, got {self.axis}")

    @staticmethod
    def row(index):
        return SliceSpec(0, index)

    @staticmethod
    def column(index):
        return SliceSpec(1, index)

    @staticmethod
    def depth(index):
        return SliceSpec(2, index)


class Hypermatrix:
    __slots__ = ("shape", "data", "domain")

    def __init__(self, shape, data, domain: ScalarDomain):
        n0, n1, n2 = shape
        if n0 <= 0 or n1 <= 0 or n2 <= 0:
            raise ShapeError(f"extents must be positive, got {shape}")
        if len(data) != n0 * n1 * n2:
            raise ShapeError(
                f"data length {len(data)} does not match shape {shape}"
            )
        object.__setattr__(self, "shape", (n0, n1, n2))
        object.__setattr__(self, "data", list(data))
        object.__setattr__(self, "domain", domain)

    def __setattr__(self, name, value):
        raise AttributeError("Hypermatrix is immutable")

    # -- construction -------------------------------------------------------

    @staticmethod
    def from_function(shape, domain, fn):
        n0, n1, n2 = shape
        data = [
            domain.coerce(fn(i, j, k))
            for i in range(n0)
            for j in range(n1)
            for k in range(n2)
        ]
        return Hypermatrix(shape, data, domain)

    @staticmethod
    def zeros(shape, domain):
        n0, n1, n2 = shape
        return Hypermatrix(shape, [domain.zero()] * (n0 * n1 * n2), domain)

    @staticmethod
    def from_nested(nested, domain):
        n0 = len(nested)
        n1 = len(nested[0])
        n2 = len(nested[0][0])
        data = [
            domain.coerce(nested[i][j][k])
            for i in range(n0)
            for j in range(n1)
            for k in range(n2)
        ]
        return Hypermatrix((n0, n1, n2), data, domain)

    @staticmethod
    def random(shape, domain, rng: random.Random, nonzero=False):
        pick = domain.random_nonzero if nonzero else domain.random
        n0, n1, n2 = shape
        return Hypermatrix(
            shape, [pick(rng) for _ in range(n0 * n1 * n2)], domain
        )

    # -- access ---------------------------------------------------------------

    def flat_index(self, i0, i1, i2):
        n0, n1, n2 = self.shape
        if not (0 <= i0 < n0 and 0 <= i1 < n1 and 0 <= i2 < n2):
            raise ShapeError(f"index ({i0},{i1},{i2}) out of range for {self.shape}")
        return i0 * n1 * n2 + i1 * n2 + i2

    def __getitem__(self, idx):
        return self.data[self.flat_index(*idx)]

    def to_nested(self):
        n0, n1, n2 = self.shape
        return [
            [[self[i, j, k] for k in range(n2)] for j in range(n1)]
            for i in range(n0)
        ]

    # -- algebra ---------------------------------------------------------------

    def add(self, other):
        self._check_binary(other)
        dom = self.domain
        return Hypermatrix(
            self.shape,
            [dom.add(a, b) for a, b in zip(self.data, other.data)],
            dom,
        )

    def sub(self, other):
        self._check_binary(other)
        dom = self.domain
        return Hypermatrix(
            self.shape,
            [dom.sub(a, b) for a, b in zip(self.data, other.data)],
            dom,
        )

    def scale(self, c):
        dom = self.domain
        c = dom.coerce(c)
        return Hypermatrix(self.shape, [dom.mul(c, a) for a in self.data], dom)

    def _check_binary(self, other):
        self.domain.check_same(other.domain)
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")

    def equals(self, other):
        self._check_binary(other)
        dom = self.domain
        return all(dom.eq(a, b) for a, b in zip(self.data, other.data))

    def is_zero(self):
        dom = self.domain
        return all(dom.is_zero(a) for a in self.data)

    def max_deviation(self, other) -> float:
        self._check_binary(other)
        dom = self.domain
        return max(
            (dom.magnitude(dom.sub(a, b)) for a, b in zip(self.data, other.data)),
            default=0.0,
        )

    def norm(self) -> float:
        dom = self.domain
        return sum(dom.magnitude(a) ** 2 for a in self.data) ** 0.5

    # -- transposition and slicing ---------------------------------------------

    def transpose(self):
        """Cyclic transpose: result shape (n1, n2, n0) with
        result[i0, i1, i2] = self[i2, i0, i1]."""
        n0, n1, n2 = self.shape
        return Hypermatrix.from_function(
            (n1, n2, n0), self.domain, lambda a, b, c: self[c, a, b]
        )

    def transpose_times(self, times):
        out = self
        for _ in range(times % 3):
            out = out.transpose()
        return out

    def slice(self, spec: SliceSpec):
        """Copy out a degenerate-axis sub-hypermatrix with one index pinned."""
        n0, n1, n2 = self.shape
        axis, idx = spec.axis, spec.index
        extent = self.shape[axis]
        if not (0 <= idx < extent):
            raise ShapeError(f"slice index {idx} out of range for axis {axis}")
        if axis == 0:
            return Hypermatrix.from_function(
                (1, n1, n2), self.domain, lambda a, b, c: self[idx, b, c]
            )
        if axis == 1:
            return Hypermatrix.from_function(
                (n0, 1, n2), self.domain, lambda a, b, c: self[a, idx, c]
            )
        return Hypermatrix.from_function(
            (n0, n1, 1), self.domain, lambda a, b, c: self[a, b, idx]
        )

    def mat_of_depth(self, k) -> "Matrix":
        """The depth matrix slice: rows x cols = n0 x n1, entry [i,j] = A[i,j,k]."""
        n0, n1, n2 = self.shape
        if not (0 <= k < n2):
            raise ShapeError(f"depth index {k} out of range (n2={n2})")
        return Matrix.from_function(n0, n1, self.domain, lambda i, j: self[i, j, k])

    def depth_matrices(self):
        return [self.mat_of_depth(k) for k in range(self.shape[2])]

    # -- interop -----------------------------------------------------------------

    def to_numpy(self):
        import numpy as np

        return np.array(
            [complex(a) for a in self.data], dtype=complex
        ).reshape(self.shape)

    @staticmethod
    def from_numpy(arr, domain):
        n0, n1, n2 = arr.shape
        return Hypermatrix.from_function(
            (n0, n1, n2), domain, lambda i, j, k: arr[i, j, k]
        )

    def to_json(self):
        dom = self.domain
        return {
            "domain": dom.to_json(),
            "shape": list(self.shape),
            "data": [dom.encode(a) for a in self.data],
        }

    @staticmethod
    def from_json(obj):
        dom = ScalarDomain.from_json(obj["domain"])
        shape = tuple(obj["shape"])
        if len(shape) != 3:
            raise ShapeError(f"hypermatrix shape must have 3 extents, got {shape}")
        return Hypermatrix(shape, [dom.decode(a) for a in obj["data"]], dom)

    def __repr__(self):
        return f"Hypermatrix(shape={self.shape}, domain={self.domain.kind})"


def reassemble_depth(matrices, domain=None) -> Hypermatrix:
    """Inverse of depth_matrices: stack n0 x n1 matrices along axis 2."""
    dom = domain or matrices[0].domain
    n0, n1 = matrices[0].shape
    n2 = len(matrices)
    for m in matrices:
        if m.shape != (n0, n1):
            raise ShapeError("depth matrices must share one shape")
    return Hypermatrix.from_function(
        (n0, n1, n2), dom, lambda i, j, k: matrices[k][i, j]
    )


class Matrix:
    __slots__ = ("shape", "data", "domain")

    def __init__(self, shape, data, domain: ScalarDomain):
        m, n = shape
        if m <= 0 or n <= 0:
            raise ShapeError(f"matrix extents must be positive, got {shape}")
        if len(data) != m * n:
            raise ShapeError(f"data length {len(data)} mismatches shape {shape}")
        object.__setattr__(self, "shape", (m, n))
        object.__setattr__(self, "data", list(data))
        object.__setattr__(self, "domain", domain)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    @staticmethod
    def from_function(m, n, domain, fn):
        data = [domain.coerce(fn(i, j)) for i in range(m) for j in range(n)]
        return Matrix((m, n), data, domain)

    @staticmethod
    def from_rows(rows, domain):
        m = len(rows)
        n = len(rows[0])
        return Matrix.from_function(m, n, domain, lambda i, j: rows[i][j])

    @staticmethod
    def zeros(m, n, domain):
        return Matrix((m, n), [domain.zero()] * (m * n), domain)

    @staticmethod
    def identity(n, domain):
        one, zero = domain.one(), domain.zero()
        return Matrix.from_function(n, n, domain, lambda i, j: one if i == j else zero)

    @staticmethod
    def random(m, n, domain, rng, nonzero=False):
        pick = domain.random_nonzero if nonzero else domain.random
        return Matrix((m, n), [pick(rng) for _ in range(m * n)], domain)

    def __getitem__(self, idx):
        i, j = idx
        m, n = self.shape
        if not (0 <= i < m and 0 <= j < n):
            raise ShapeError(f"index ({i},{j}) out of range for {self.shape}")
        return self.data[i * n + j]

    def row(self, i):
        m, n = self.shape
        return self.data[i * n : (i + 1) * n]

    def col(self, j):
        m, n = self.shape
        return [self.data[i * n + j] for i in range(m)]

    def to_rows(self):
        return [self.row(i) for i in range(self.shape[0])]

    def add(self, other):
        self._check_binary(other)
        dom = self.domain
        return Matrix(self.shape, [dom.add(a, b) for a, b in zip(self.data, other.data)], dom)

    def sub(self, other):
        self._check_binary(other)
        dom = self.domain
        return Matrix(self.shape, [dom.sub(a, b) for a, b in zip(self.data, other.data)], dom)

    def scale(self, c):
        dom = self.domain
        c = dom.coerce(c)
        return Matrix(self.shape, [dom.mul(c, a) for a in self.data], dom)

    def matmul(self, other):
        self.domain.check_same(other.domain)
        m, k1 = self.shape
        k2, n = other.shape
        if k1 != k2:
            raise ShapeError(f"matmul mismatch {self.shape} x {other.shape}")
        dom = self.domain
        out = []
        for i in range(m):
            ri = self.row(i)
            for j in range(n):
                acc = dom.zero()
                for t in range(k1):
                    acc = dom.add(acc, dom.mul(ri[t], other[t, j]))
                out.append(acc)
        return Matrix((m, n), out, dom)

    def mat_transpose(self):
        m, n = self.shape
        return Matrix.from_function(n, m, self.domain, lambda i, j: self[j, i])

    def _check_binary(self, other):
        self.domain.check_same(other.domain)
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")

    def equals(self, other):
        self._check_binary(other)
        dom = self.domain
        return all(dom.eq(a, b) for a, b in zip(self.data, other.data))

    def is_zero(self):
        dom = self.domain
        return all(dom.is_zero(a) for a in self.data)

    def max_deviation(self, other) -> float:
        self._check_binary(other)
        dom = self.domain
        return max(
            (dom.magnitude(dom.sub(a, b)) for a, b in zip(self.data, other.data)),
            default=0.0,
        )

    def norm(self) -> float:
        dom = self.domain
        return sum(dom.magnitude(a) ** 2 for a in self.data) ** 0.5

    # -- elimination-based kernels ------------------------------------------------

    def _echelon(self, augment=None):
        """Row echelon form via Gaussian elimination over the domain.

        Exact domains pivot on the first nonzero entry; the complex
        domain pivots on the entry of largest modulus.  Returns
        (rows, aug_rows, pivot_cols, swap_parity).
        """
        dom = self.domain
        m, n = self.shape
        rows = [list(self.row(i)) for i in range(m)]
        aug = [list(r) for r in augment] if augment is not None else None
        pivot_cols = []
        parity = 1
        pr = 0
        for pc in range(n):
            best = None
            if dom.is_exact:
                for i in range(pr, m):
                    if not dom.is_zero(rows[i][pc]):
                        best = i
                        break
            else:
                mag, best = 0.0, None
                for i in range(pr, m):
                    a = abs(rows[i][pc])
                    if a > mag and not dom.is_zero(rows[i][pc]):
                        mag, best = a, i
            if best is None:
                continue
            if best != pr:
                rows[pr], rows[best] = rows[best], rows[pr]
                if aug is not None:
                    aug[pr], aug[best] = aug[best], aug[pr]
                parity = -parity
            inv_p = dom.inv(rows[pr][pc])
            for i in range(m):
                if i == pr or dom.is_zero(rows[i][pc]):
                    continue
                f = dom.mul(rows[i][pc], inv_p)
                rows[i] = [dom.sub(a, dom.mul(f, b)) for a, b in zip(rows[i], rows[pr])]
                if aug is not None:
                    aug[i] = [dom.sub(a, dom.mul(f, b)) for a, b in zip(aug[i], aug[pr])]
            pivot_cols.append(pc)
            pr += 1
            if pr == m:
                break
        return rows, aug, pivot_cols, parity

    def rank(self) -> int:
        return len(self._echelon()[2])

    def det(self):
        m, n = self.shape
        if m != n:
            raise ShapeError("determinant needs a square matrix")
        dom = self.domain
        rows, _, pivots, parity = self._echelon()
        if len(pivots) < n:
            return dom.zero()
        d = dom.one() if parity == 1 else dom.neg(dom.one())
        for r, c in enumerate(pivots):
            d = dom.mul(d, rows[r][c])
        return d

    def inverse(self):
        m, n = self.shape
        if m != n:
            raise ShapeError("inverse needs a square matrix")
        dom = self.domain
        ident = Matrix.identity(n, dom)
        rows, aug, pivots, _ = self._echelon(augment=ident.to_rows())
        if len(pivots) < n:
            raise ZeroDivisionError("matrix is singular")
        out = [[None] * n for _ in range(n)]
        for r, c in enumerate(pivots):
            f = dom.inv(rows[r][c])
            out[c] = [dom.mul(f, a) for a in aug[r]]
        return Matrix.from_rows(out, dom)

    def solve(self, rhs_cols):
        """Solve self @ X = RHS for each rhs column; None if inconsistent.

        Free variables are set to zero, making the solution deterministic.
        ``rhs_cols`` is a list of columns; returns a list of solution
        columns (length n each).
        """
        dom = self.domain
        m, n = self.shape
        aug = [[col[i] for col in rhs_cols] for i in range(m)]
        rows, aug, pivots, _ = self._echelon(augment=aug)
        nrhs = len(rhs_cols)
        # inconsistency: zero row with nonzero rhs
        for i in range(len(pivots), m):
            if any(not dom.is_zero(a) for a in aug[i]):
                return None
        sols = [[dom.zero()] * n for _ in range(nrhs)]
        for r, c in enumerate(pivots):
            f = dom.inv(rows[r][c])
            for s in range(nrhs):
                sols[s][c] = dom.mul(f, aug[r][s])
        return sols

    def nullspace(self):
        """Basis of {x : self @ x = 0}, deterministic free-variable pattern."""
        dom = self.domain
        m, n = self.shape
        rows, _, pivots, _ = self._echelon()
        free = [c for c in range(n) if c not in pivots]
        basis = []
        for fc in free:
            x = [dom.zero()] * n
            x[fc] = dom.one()
            for r, c in enumerate(pivots):
                # rows[r] is zero left of c; solve rows[r] . x = 0
                acc = rows[r][fc]
                x[c] = dom.neg(dom.mul(dom.inv(rows[r][c]), acc))
            basis.append(x)
        return basis

    def to_numpy(self):
        import numpy as np

        return np.array([complex(a) for a in self.data], dtype=complex).reshape(
            self.shape
        )

    def to_json(self):
        dom = self.domain
        return {
            "domain": dom.to_json(),
            "shape": list(self.shape),
            "data": [dom.encode(a) for a in self.data],
        }

    @staticmethod
    def from_json(obj):
        dom = ScalarDomain.from_json(obj["domain"])
        shape = tuple(obj["shape"])
        if len(shape) != 2:
            raise ShapeError(f"matrix shape must have 2 extents, got {shape}")
        return Matrix(shape, [dom.decode(a) for a in obj["data"]], dom)

    def __repr__(self):
        return f"Matrix(shape={self.shape}, domain={self.domain.kind})"


def diag(vector, domain) -> Matrix:
    """Square matrix with the given vector on the diagonal."""
    n = len(vector)
    vec = [domain.coerce(v) for v in vector]
    zero = domain.zero()
    return Matrix.from_function(
        n, n, domain, lambda i, j: vec[i] if i == j else zero
    )


def complete_to_basis(rows, n, domain):
    """Indices of identity rows extending independent ``rows`` to a basis.

    The returned column indices are the non-pivot columns of the row
    matrix, so appending those unit rows always restores full rank.
    """
    if not rows:
        return list(range(n))
    mat = Matrix.from_rows(rows, domain)
    _, _, pivots, _ = mat._echelon()
    if len(pivots) < len(rows):
        raise ValueError("given rows are linearly dependent")
    return [c for c in range(n) if c not in pivots]
