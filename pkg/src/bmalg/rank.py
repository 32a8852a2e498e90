"""Rank machinery for the ternary product.

The rank of a hypermatrix is the minimum number of outer products that
sum to it.  This module builds and checks the certificates: trivial
min-extent upper bounds through the identity pair, slice-reduction
rewrites that lower a decomposition's contracted dimension by one,
numeric witnesses for the generic cubic bound, the 2x2x2
hyperdeterminant, and exhaustive exact rank search over tiny prime
fields (plain and CP-constrained).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from .core import Hypermatrix, Matrix
from .errors import (
    BudgetExceededError,
    CertificateError,
    ReductionHypothesisError,
    ShapeError,
)
from .products import delta_t, identity_pair, outer_product_at

DEFAULT_RANK_BUDGET = 10_000_000


@dataclass
class DecompositionTriple:
    """A conformable triple with a declared support set S.

    reconstruct() sums the outer products at the supported indices;
    slices outside S are zeroed on construction so the certificate is
    canonical and the full ternary product of the legs equals the
    supported sum.
    """

    x0: Hypermatrix
    x1: Hypermatrix
    x2: Hypermatrix
    support: tuple

    def __post_init__(self):
        n0, ell, n2 = self.x0.shape
        if self.x1.shape != (n0, self.x1.shape[1], ell):
            raise ShapeError(f"leg 1 shape {self.x1.shape} not conformable")
        n1 = self.x1.shape[1]
        if self.x2.shape != (ell, n1, n2):
            raise ShapeError(f"leg 2 shape {self.x2.shape} not conformable")
        support = tuple(sorted(set(self.support)))
        if support and not (0 <= support[0] and support[-1] < ell):
            raise ShapeError(f"support {support} out of range for ell={ell}")
        object.__setattr__(self, "support", support)
        if len(support) < ell:
            keep = set(support)
            dom = self.x0.domain
            zero = dom.zero()
            object.__setattr__(
                self,
                "x0",
                Hypermatrix.from_function(
                    self.x0.shape,
                    dom,
                    lambda i, t, k: self.x0[i, t, k] if t in keep else zero,
                ),
            )
            object.__setattr__(
                self,
                "x1",
                Hypermatrix.from_function(
                    self.x1.shape,
                    dom,
                    lambda i, j, t: self.x1[i, j, t] if t in keep else zero,
                ),
            )
            object.__setattr__(
                self,
                "x2",
                Hypermatrix.from_function(
                    self.x2.shape,
                    dom,
                    lambda t, j, k: self.x2[t, j, k] if t in keep else zero,
                ),
            )

    @property
    def ell(self):
        return self.x0.shape[1]

    @property
    def r(self):
        return len(self.support)

    @property
    def target_shape(self):
        return (self.x0.shape[0], self.x1.shape[1], self.x2.shape[2])

    def legs(self):
        return self.x0, self.x1, self.x2

    def reconstruct(self) -> Hypermatrix:
        dom = self.x0.domain
        acc = Hypermatrix.zeros(self.target_shape, dom)
        for t in self.support:
            acc = acc.add(outer_product_at(self.x0, self.x1, self.x2, t))
        return acc

    def to_json(self):
        return {
            "x0": self.x0.to_json(),
            "x1": self.x1.to_json(),
            "x2": self.x2.to_json(),
            "support": list(self.support),
        }

    @staticmethod
    def from_json(obj):
        return DecompositionTriple(
            Hypermatrix.from_json(obj["x0"]),
            Hypermatrix.from_json(obj["x1"]),
            Hypermatrix.from_json(obj["x2"]),
            tuple(obj["support"]),
        )


@dataclass
class RankCertificate:
    """A rank claim with its evidence.

    kind "upper-bound": the triple reconstructs the target, so rank <= r.
    kind "exact": additionally, exhaustive search proved no decomposition
    below r exists (params records the search).  Numeric certificates
    carry their reconstruction residual; exact ones carry None.
    """

    kind: str
    r: int
    triple: DecompositionTriple | None = None
    residual: float | None = None
    params: dict = field(default_factory=dict)

    def verify(self, target: Hypermatrix) -> float:
        """Re-run the reconstruction check; returns the deviation."""
        if self.triple is None:
            if self.r == 0:
                return 0.0 if target.is_zero() else float("inf")
            raise CertificateError("certificate carries no decomposition")
        rec = self.triple.reconstruct()
        if target.domain.is_exact:
            return 0.0 if rec.equals(target) else float("inf")
        dev = rec.sub(target).norm()
        return dev / (1.0 + target.norm())

    def to_json(self):
        return {
            "kind": self.kind,
            "r": self.r,
            "ell": self.triple.ell if self.triple else 0,
            "support": list(self.triple.support) if self.triple else [],
            "triple": self.triple.to_json() if self.triple else None,
            "residual": self.residual,
            "params": {k: v for k, v in sorted(self.params.items())},
        }


# ---------------------------------------------------------------------------
# upper bounds
# ---------------------------------------------------------------------------


def rank_upper_min(a: Hypermatrix) -> RankCertificate:
    """The min-extent upper bound: a decomposition of ``a`` itself with
    r = min(m, n, p) terms, built from the identity pair, routed through
    the transpose identities when the minimum is not the depth extent."""
    m, n, p = a.shape
    dom = a.domain
    r = min(m, n, p)
    if p == r:
        j0, j1 = identity_pair(m, n, p, dom)
        triple = DecompositionTriple(j0, a, j1, tuple(range(p)))
    elif n == r:
        # a is the transpose of some hypermatrix whose depth extent is minimal
        j0, j1 = identity_pair(p, m, n, dom)
        triple = DecompositionTriple(
            a, j1.transpose(), j0.transpose(), tuple(range(r))
        )
    else:
        j0, j1 = identity_pair(n, p, m, dom)
        triple = DecompositionTriple(
            j1.transpose().transpose(),
            j0.transpose().transpose(),
            a,
            tuple(range(r)),
        )
    cert = RankCertificate(kind="upper-bound", r=r, triple=triple)
    if not triple.reconstruct().equals(a):
        raise CertificateError("identity-pair reconstruction failed")
    cert.residual = None if dom.is_exact else 0.0
    return cert


def delta_sum(n, r, domain) -> Hypermatrix:
    """The target sum of the first r rank-one backgrounds."""
    if not (0 < r <= n):
        raise ShapeError(f"need 0 < r <= n, got r={r}, n={n}")
    acc = Hypermatrix.zeros((n, n, n), domain)
    for t in range(r):
        acc = acc.add(delta_t(n, t, domain))
    return acc


def delta_sum_certificate(n, r, domain) -> RankCertificate:
    """Single-outer-product certificate for sum_{t<r} delta_t: the column
    slice [i==k][i<r], depth slice [i==j], row slice [j==k]."""
    if not (0 < r <= n):
        raise ShapeError(f"need 0 < r <= n, got r={r}, n={n}")
    one, zero = domain.one(), domain.zero()
    x = Hypermatrix.from_function(
        (n, 1, n), domain, lambda i, _, k: one if (i == k and i < r) else zero
    )
    y = Hypermatrix.from_function(
        (n, n, 1), domain, lambda i, j, _: one if i == j else zero
    )
    z = Hypermatrix.from_function(
        (1, n, n), domain, lambda _, j, k: one if j == k else zero
    )
    triple = DecompositionTriple(x, y, z, (0,))
    cert = RankCertificate(kind="upper-bound", r=1, triple=triple)
    if not triple.reconstruct().equals(delta_sum(n, r, domain)):
        raise CertificateError("delta-sum reconstruction failed")
    return cert


def delta_sum_certificate_ones(n, r, domain) -> RankCertificate:
    """Equivalent single-term certificate for the same target whose first
    leg is all ones.  Unlike the canonical certificate its legs admit an
    invertible completion, which the rank-nullity construction needs."""
    one, zero = domain.one(), domain.zero()
    x = Hypermatrix.from_function((n, 1, n), domain, lambda i, _, k: one)
    y = Hypermatrix.from_function(
        (n, n, 1), domain, lambda i, j, _: one if (i == j and i < r) else zero
    )
    z = Hypermatrix.from_function(
        (1, n, n), domain, lambda _, j, k: one if j == k else zero
    )
    triple = DecompositionTriple(x, y, z, (0,))
    cert = RankCertificate(kind="upper-bound", r=1, triple=triple)
    if not triple.reconstruct().equals(delta_sum(n, r, domain)):
        raise CertificateError("delta-sum reconstruction failed")
    return cert


# ---------------------------------------------------------------------------
# slice reductions
# ---------------------------------------------------------------------------


def matrix_slice_reduce(x: Matrix, y: Matrix, tau, us):
    """Matrix analog of the reduction: when row tau of y is the
    combination sum_{t != tau} us[t] * y[t, :], drop one outer product.

    Returns (x', y') with contracted dimension ell - 1 and the same
    product; raises when the row hypothesis fails.
    """
    dom = x.domain
    m, ell = x.shape
    if y.shape[0] != ell:
        raise ShapeError(f"y must have {ell} rows, found {y.shape[0]}")
    n = y.shape[1]
    if not (0 <= tau < ell):
        raise ShapeError(f"tau {tau} out of range")
    others = [t for t in range(ell) if t != tau]
    for j in range(n):
        acc = dom.zero()
        for t in others:
            acc = dom.add(acc, dom.mul(dom.coerce(us[t]), y[t, j]))
        if not dom.eq(acc, y[tau, j]):
            raise ReductionHypothesisError(
                f"row hypothesis fails at column {j}", entry=j
            )
    new_x = Matrix.from_function(
        m,
        ell - 1,
        dom,
        lambda i, t_new: dom.add(
            x[i, others[t_new]], dom.mul(dom.coerce(us[others[t_new]]), x[i, tau])
        ),
    )
    new_y = Matrix.from_function(ell - 1, n, dom, lambda t_new, j: y[others[t_new], j])
    return new_x, new_y


@dataclass
class SliceRewriteData:
    """Coefficient families for one hypermatrix slice reduction: pivot
    index tau, u-vectors (length m) and v-vectors (length n) for each
    t != tau."""

    tau: int
    us: dict
    vs: dict


def _reduction_sides(x0, x1, x2, rewrite):
    """Left and right sides of the reduction hypothesis per depth index."""
    dom = x0.domain
    m, ell, p = x0.shape
    n = x1.shape[1]
    tau = rewrite.tau
    others = [t for t in range(ell) if t != tau]
    us, vs = rewrite.us, rewrite.vs
    lhs, rhs = [], []
    for k in range(p):
        lmat = Matrix.from_function(
            m,
            n,
            dom,
            lambda i, j: dom.mul(
                dom.mul(x0[i, tau, k], x1[i, j, tau]), x2[tau, j, k]
            ),
        )

        def rentry(i, j, k=k):
            acc = dom.zero()
            for t in others:
                u = dom.coerce(us[t][i])
                v = dom.coerce(vs[t][j])
                inner = dom.add(
                    dom.add(
                        dom.mul(dom.mul(u, x0[i, tau, k]), dom.mul(x2[tau, j, k], v)),
                        dom.mul(dom.mul(u, x0[i, tau, k]), x2[t, j, k]),
                    ),
                    dom.mul(dom.mul(x0[i, t, k], x2[tau, j, k]), v),
                )
                acc = dom.add(acc, dom.mul(x1[i, j, t], inner))
            return acc

        rhs.append(Matrix.from_function(m, n, dom, rentry))
        lhs.append(lmat)
    return lhs, rhs


def check_reduction_hypothesis(x0, x1, x2, rewrite):
    """Validate the reduction hypothesis for every depth index; raises
    ReductionHypothesisError carrying the first offending (k, entry)."""
    dom = x0.domain
    lhs, rhs = _reduction_sides(x0, x1, x2, rewrite)
    if dom.is_exact:
        for k, (lm, rm) in enumerate(zip(lhs, rhs)):
            if not lm.equals(rm):
                for i in range(lm.shape[0]):
                    for j in range(lm.shape[1]):
                        if not dom.eq(lm[i, j], rm[i, j]):
                            raise ReductionHypothesisError(
                                f"hypothesis fails at depth {k}, entry ({i},{j})",
                                k=k,
                                entry=(i, j),
                            )
        return 0.0
    dev = sum(lm.sub(rm).norm() ** 2 for lm, rm in zip(lhs, rhs)) ** 0.5
    scale = (
        1.0
        + sum(lm.norm() ** 2 for lm in lhs) ** 0.5
        + sum(rm.norm() ** 2 for rm in rhs) ** 0.5
    )
    if dev > dom.tol * scale * 100:
        for k, (lm, rm) in enumerate(zip(lhs, rhs)):
            for i in range(lm.shape[0]):
                for j in range(lm.shape[1]):
                    if abs(lm[i, j] - rm[i, j]) > dom.tol * scale * 10:
                        raise ReductionHypothesisError(
                            f"hypothesis fails at depth {k}, entry ({i},{j}), "
                            f"deviation {abs(lm[i, j] - rm[i, j]):.3e}",
                            k=k,
                            entry=(i, j),
                        )
        raise ReductionHypothesisError(
            f"hypothesis deviation {dev:.3e} exceeds tolerance", k=None, entry=None
        )
    return dev


def hyper_slice_reduce(x0, x1, x2, rewrite: SliceRewriteData):
    """Rewrite a conformable triple into one with contracted dimension
    ell - 1 and the same product.

    The elementary slice operations fold the pivot slices into the
    others:

        x0'[:, t, k] = us[t] o x0[:, tau, k] + x0[:, t, k]
        x2'[t, :, k] = x2[t, :, k] + x2[tau, :, k] o vs[t]

    and leg 1 simply drops depth slice tau.  The hypothesis is checked
    for every depth index first.
    """
    dom = x0.domain
    m, ell, p = x0.shape
    n = x1.shape[1]
    if ell < 2:
        raise ShapeError("cannot reduce a contracted dimension of 1")
    tau = rewrite.tau
    if not (0 <= tau < ell):
        raise ShapeError(f"tau {tau} out of range")
    check_reduction_hypothesis(x0, x1, x2, rewrite)
    others = [t for t in range(ell) if t != tau]
    us, vs = rewrite.us, rewrite.vs
    new_x0 = Hypermatrix.from_function(
        (m, ell - 1, p),
        dom,
        lambda i, tn, k: dom.add(
            dom.mul(dom.coerce(us[others[tn]][i]), x0[i, tau, k]),
            x0[i, others[tn], k],
        ),
    )
    new_x1 = Hypermatrix.from_function(
        (m, n, ell - 1), dom, lambda i, j, tn: x1[i, j, others[tn]]
    )
    new_x2 = Hypermatrix.from_function(
        (ell - 1, n, p),
        dom,
        lambda tn, j, k: dom.add(
            x2[others[tn], j, k],
            dom.mul(x2[tau, j, k], dom.coerce(vs[others[tn]][j])),
        ),
    )
    return new_x0, new_x1, new_x2


# ---------------------------------------------------------------------------
# depth-slice witnesses
# ---------------------------------------------------------------------------


@dataclass
class DepthSliceWitness:
    """Numeric solution of B[:,:,tau] = sum_{t != tau}
    diag(U[:,t]) . B[:,:,t] . diag(V[t,:])."""

    tau: int
    u_cols: dict
    v_rows: dict
    residual: float

    def matrices(self, n, p, domain):
        zero = domain.zero()
        u = Matrix.from_function(
            n,
            p,
            domain,
            lambda i, t: domain.coerce(self.u_cols[t][i]) if t in self.u_cols else zero,
        )
        v = Matrix.from_function(
            p,
            n,
            domain,
            lambda t, j: domain.coerce(self.v_rows[t][j]) if t in self.v_rows else zero,
        )
        return u, v

    def rewrite(self) -> SliceRewriteData:
        return SliceRewriteData(tau=self.tau, us=self.u_cols, vs=self.v_rows)


def depth_slice_witness(
    b: Hypermatrix, tau, tol=None, restarts=50, iters=500, seed=0
):
    """Alternating least squares for the affine depth-slice dependence.

    With V fixed the relation is linear in each row of U and decouples
    row by row; with U fixed it decouples column by column.  Random
    restarts with fresh V initializations; None when no candidate
    reaches residual below tol * ||B||_F within the budget.

    Requires the complex domain and entry-wise nonzero input (the
    genericity proxy; zero entries break the Hadamard-inverse step in
    the analysis and empirically strand the solver).
    """
    dom = b.domain
    if dom.kind != "complex":
        raise ValueError("depth_slice_witness needs the complex domain")
    if tol is None:
        tol = dom.tol or 1e-9
    m, n, p = b.shape
    if not (0 <= tau < p):
        raise ShapeError(f"tau {tau} out of range")
    for idx, v in enumerate(b.data):
        if abs(v) <= dom.tol:
            raise ZeroDivisionError(
                f"entry {idx} is zero within tolerance; input must be generic"
            )
    arr = b.to_numpy()
    target = arr[:, :, tau]
    target_norm = float(np.linalg.norm(arr))
    others = [t for t in range(p) if t != tau]
    rng = random.Random(seed)

    def residual_of(u, v):
        acc = np.zeros((m, n), dtype=complex)
        for idx, t in enumerate(others):
            acc += u[:, idx, None] * arr[:, :, t] * v[None, idx, :]
        return float(np.linalg.norm(target - acc)), acc

    best = None
    for restart in range(max(1, restarts)):
        v = np.array(
            [[dom.random_nonzero(rng) for _ in range(n)] for _ in others],
            dtype=complex,
        )
        u = np.zeros((m, len(others)), dtype=complex)
        prev = None
        for it in range(max(1, iters)):
            for i in range(m):
                g = (arr[i, :, :][:, others] * v.T).astype(complex)  # (n, len(others))
                u[i], *_ = np.linalg.lstsq(g, target[i], rcond=None)
            for j in range(n):
                h = (arr[:, j, :][:, others] * u).astype(complex)  # (m, len(others))
                v[:, j], *_ = np.linalg.lstsq(h, target[:, j], rcond=None)
            res, _ = residual_of(u, v)
            if res <= tol * target_norm:
                break
            if prev is not None and prev - res < 1e-4 * prev and it > 20:
                break
            prev = res
        res, _ = residual_of(u, v)
        if best is None or res < best[0]:
            best = (res, u.copy(), v.copy())
        if res <= tol * target_norm:
            break
    res, u, v = best
    if res > tol * target_norm:
        return None
    return DepthSliceWitness(
        tau=tau,
        u_cols={t: [complex(x) for x in u[:, idx]] for idx, t in enumerate(others)},
        v_rows={t: [complex(x) for x in v[idx, :]] for idx, t in enumerate(others)},
        residual=res,
    )


def two_slice_witness(b: Hypermatrix, tau=1):
    """Exact depth-slice dependence test for two slices.

    For all-nonzero B of shape m x n x 2 the relation
    B[:,:,tau] = diag(u) . B[:,:,other] . diag(v) holds iff the
    entry-wise ratio matrix is rank one; returns (u, v) or None.
    """
    m, n, p = b.shape
    if p != 2:
        raise ShapeError("two_slice_witness needs exactly two depth slices")
    dom = b.domain
    other = 1 - tau
    for i in range(m):
        for j in range(n):
            if dom.is_zero(b[i, j, 0]) or dom.is_zero(b[i, j, 1]):
                raise ZeroDivisionError(
                    f"entries must be nonzero; ({i},{j}) has a zero"
                )
    ratio = Matrix.from_function(
        m, n, dom, lambda i, j: dom.div(b[i, j, tau], b[i, j, other])
    )
    anchor = ratio[0, 0]
    for i in range(m):
        for j in range(n):
            if not dom.eq(
                dom.mul(ratio[i, j], anchor), dom.mul(ratio[i, 0], ratio[0, j])
            ):
                return None
    u = [dom.div(ratio[i, 0], anchor) for i in range(m)]
    v = [ratio[0, j] for j in range(n)]
    return u, v


def hyperdet_2x2x2(b: Hypermatrix):
    """b001 b010 b100 b111 - b101 b110 b000 b011; vanishing characterizes
    depth-slice diagonal dependence of an all-nonzero 2x2x2."""
    if b.shape != (2, 2, 2):
        raise ShapeError(f"need a 2x2x2 hypermatrix, found {b.shape}")
    dom = b.domain
    pos = dom.mul(
        dom.mul(b[0, 0, 1], b[0, 1, 0]), dom.mul(b[1, 0, 0], b[1, 1, 1])
    )
    neg = dom.mul(
        dom.mul(b[1, 0, 1], b[1, 1, 0]), dom.mul(b[0, 0, 0], b[0, 1, 1])
    )
    return dom.sub(pos, neg)


def generic_rank_bound(n) -> int:
    """Generic cubic rank upper bound: 2 at side 2, n - 1 above."""
    if n < 2:
        raise ShapeError("side must be at least 2")
    return 2 if n == 2 else n - 1


# ---------------------------------------------------------------------------
# exhaustive exact rank over GF(q)
# ---------------------------------------------------------------------------


def _reduce_fiber(rows, rhs, q, r):
    """Row-reduce an (len(rows) x r) system mod prime q.

    Returns (reduced_rows, reduced_rhs, pivot_cols, free_cols) or None
    when inconsistent.
    """
    m = len(rows)
    aug = [list(rows[i]) + [rhs[i] % q] for i in range(m)]
    piv_cols = []
    pr = 0
    for pc in range(r):
        sel = None
        for i in range(pr, m):
            if aug[i][pc] % q:
                sel = i
                break
        if sel is None:
            continue
        aug[pr], aug[sel] = aug[sel], aug[pr]
        inv = pow(aug[pr][pc], q - 2, q)
        aug[pr] = [(v * inv) % q for v in aug[pr]]
        for i in range(m):
            if i == pr or aug[i][pc] % q == 0:
                continue
            f = aug[i][pc]
            aug[i] = [(a - f * b) % q for a, b in zip(aug[i], aug[pr])]
        piv_cols.append(pc)
        pr += 1
        if pr == m:
            break
    for i in range(pr, m):
        if aug[i][r] % q:
            return None
    free_cols = [c for c in range(r) if c not in piv_cols]
    return aug[: len(piv_cols)], piv_cols, free_cols


def _fiber_solutions(rows, rhs, q, r, all_solutions):
    """Solutions of one fiber system: the free-variables-zero one, or
    every solution in lexicographic free-assignment order."""
    red = _reduce_fiber(rows, rhs, q, r)
    if red is None:
        return None
    reduced, piv_cols, free_cols = red
    if not all_solutions or not free_cols:
        sol = [0] * r
        for row, pc in zip(reduced, piv_cols):
            sol[pc] = row[r]
        return [sol]
    out = []
    for assign in itertools.product(range(q), repeat=len(free_cols)):
        sol = [0] * r
        for fc, v in zip(free_cols, assign):
            sol[fc] = v
        for row, pc in zip(reduced, piv_cols):
            acc = row[r]
            for fc, v in zip(free_cols, assign):
                acc -= row[fc] * v
            sol[pc] = acc % q
        out.append(sol)
    return out


def _solve_fiber(rows, rhs, q, r):
    sols = _fiber_solutions(rows, rhs, q, r, all_solutions=False)
    return None if sols is None else sols[0]


def iter_bm_decompositions(a: Hypermatrix, r, budget=DEFAULT_RANK_BUDGET,
                           all_solutions=False):
    """Yield contracted-dimension-r decompositions of ``a`` over GF(q),
    in lexicographic order of the two enumerated legs.

    The two smaller legs are enumerated entry by entry; for each
    candidate the remaining leg is solved fiber-wise (the constraints
    are linear in it).  By default each consistent candidate yields one
    decomposition (free entries pinned to zero); with ``all_solutions``
    every solution of the solved leg is yielded.  Either way the scan
    visits a decomposition iff one exists for the enumerated prefix, so
    rank detection is complete.
    """
    dom = a.domain
    if dom.kind != "gf":
        raise ValueError("exhaustive rank search needs a GF(q) domain")
    q = dom.q
    m, n, p = a.shape
    sizes = {0: m * r * p, 1: m * n * r, 2: r * n * p}
    solve_leg = max(sizes, key=lambda leg: (sizes[leg], leg))
    enum_legs = [leg for leg in (0, 1, 2) if leg != solve_leg]
    total_digits = sum(sizes[leg] for leg in enum_legs)
    if q**total_digits > budget:
        raise BudgetExceededError(
            f"enumeration q^{total_digits} exceeds budget {budget}"
        )
    av = a.data  # ints mod q, flat (i, j, k)

    def entry(i, j, k):
        return av[(i * n + j) * p + k]

    # fiber layouts per solved leg: (fiber keys, row builder, rhs builder,
    # flat assembler)
    if solve_leg == 2:
        fiber_keys = [(j, k) for j in range(n) for k in range(p)]

        def fiber(legs, key):
            j, k = key
            x0, x1 = legs[0], legs[1]
            rows = [
                [(x0[(i * r + t) * p + k] * x1[(i * n + j) * r + t]) % q
                 for t in range(r)]
                for i in range(m)
            ]
            return rows, [entry(i, j, k) for i in range(m)]

        def assemble(legs, sol):
            flat = tuple(
                sol[(j, k)][t] for t in range(r) for j in range(n) for k in range(p)
            )
            return _assemble_triple(a, r, legs[0], legs[1], flat)

    elif solve_leg == 1:
        fiber_keys = [(i, j) for i in range(m) for j in range(n)]

        def fiber(legs, key):
            i, j = key
            x0, x2 = legs[0], legs[2]
            rows = [
                [(x0[(i * r + t) * p + k] * x2[(t * n + j) * p + k]) % q
                 for t in range(r)]
                for k in range(p)
            ]
            return rows, [entry(i, j, k) for k in range(p)]

        def assemble(legs, sol):
            flat = tuple(
                sol[(i, j)][t] for i in range(m) for j in range(n) for t in range(r)
            )
            return _assemble_triple(a, r, legs[0], flat, legs[2])

    else:
        fiber_keys = [(i, k) for i in range(m) for k in range(p)]

        def fiber(legs, key):
            i, k = key
            x1, x2 = legs[1], legs[2]
            rows = [
                [(x1[(i * n + j) * r + t] * x2[(t * n + j) * p + k]) % q
                 for t in range(r)]
                for j in range(n)
            ]
            return rows, [entry(i, j, k) for j in range(n)]

        def assemble(legs, sol):
            flat = tuple(
                sol[(i, k)][t] for i in range(m) for t in range(r) for k in range(p)
            )
            return _assemble_triple(a, r, flat, legs[1], legs[2])

    for flat_a in itertools.product(range(q), repeat=sizes[enum_legs[0]]):
        for flat_b in itertools.product(range(q), repeat=sizes[enum_legs[1]]):
            legs = {enum_legs[0]: flat_a, enum_legs[1]: flat_b}
            options = []
            ok = True
            for key in fiber_keys:
                rows, rhs = fiber(legs, key)
                sols = _fiber_solutions(rows, rhs, q, r, all_solutions)
                if sols is None:
                    ok = False
                    break
                options.append([(key, s) for s in sols])
            if not ok:
                continue
            for combo in itertools.product(*options):
                yield assemble(legs, dict(combo))


def _assemble_triple(a, r, flat0, flat1, flat2):
    dom = a.domain
    m, n, p = a.shape
    x0 = Hypermatrix((m, r, p), list(flat0), dom)
    x1 = Hypermatrix((m, n, r), list(flat1), dom)
    x2 = Hypermatrix((r, n, p), list(flat2), dom)
    return DecompositionTriple(x0, x1, x2, tuple(range(r)))


def bm_rank_exhaustive(a: Hypermatrix, budget=DEFAULT_RANK_BUDGET) -> RankCertificate:
    """Exact rank over GF(q) by exhausting contracted dimensions from
    below.

    At r = min(m, n, p) the identity-pair certificate stands in for the
    enumeration: exhaustion below already proves minimality and the
    sandwich decomposition always exists.
    """
    dom = a.domain
    if dom.kind != "gf":
        raise ValueError("exhaustive rank search needs a GF(q) domain")
    if a.is_zero():
        return RankCertificate(
            kind="exact", r=0, triple=None, params={"q": dom.q, "budget": budget}
        )
    cap = min(a.shape)
    for r in range(1, cap + 1):
        if r == cap:
            cert = rank_upper_min(a)
            return RankCertificate(
                kind="exact",
                r=r,
                triple=cert.triple,
                params={"q": dom.q, "budget": budget, "exhausted_below": r},
            )
        found = next(iter_bm_decompositions(a, r, budget=budget), None)
        if found is not None:
            if not found.reconstruct().equals(a):
                raise CertificateError("search returned a bad decomposition")
            return RankCertificate(
                kind="exact",
                r=r,
                triple=found,
                params={"q": dom.q, "budget": budget, "exhausted_below": r},
            )
    raise AssertionError("unreachable: identity-pair level always succeeds")


def cp_rank_exhaustive(a: Hypermatrix, budget=DEFAULT_RANK_BUDGET) -> RankCertificate:
    """Exact CP-constrained rank over GF(q): the slice legs are pinned to
    the rank-one Kronecker form, so this exhausts vector triples."""
    dom = a.domain
    if dom.kind != "gf":
        raise ValueError("exhaustive rank search needs a GF(q) domain")
    q = dom.q
    m, n, p = a.shape
    if a.is_zero():
        return RankCertificate(kind="exact", r=0, params={"q": q, "cp": True})
    av = a.data
    cap = p * min(m, n)
    for r in range(1, cap + 1):
        digits = r * (m + n)
        if q**digits > budget:
            raise BudgetExceededError(
                f"CP enumeration q^{digits} exceeds budget {budget}"
            )
        for xs in itertools.product(range(q), repeat=r * m):
            for ys in itertools.product(range(q), repeat=r * n):
                zsol = {}
                ok = True
                for k in range(p):
                    rows = [
                        [(xs[t * m + i] * ys[t * n + j]) % q for t in range(r)]
                        for i in range(m)
                        for j in range(n)
                    ]
                    rhs = [av[(i * n + j) * p + k] for i in range(m) for j in range(n)]
                    s = _solve_fiber(rows, rhs, q, r)
                    if s is None:
                        ok = False
                        break
                    zsol[k] = s
                if not ok:
                    continue
                x0 = Hypermatrix.from_function(
                    (m, r, p), dom, lambda i, t, k: xs[t * m + i]
                )
                x1 = Hypermatrix.from_function(
                    (m, n, r), dom, lambda i, j, t: ys[t * n + j]
                )
                x2 = Hypermatrix.from_function(
                    (r, n, p), dom, lambda t, j, k: zsol[k][t]
                )
                triple = DecompositionTriple(x0, x1, x2, tuple(range(r)))
                if not triple.reconstruct().equals(a):
                    raise CertificateError("CP search returned a bad decomposition")
                return RankCertificate(
                    kind="exact",
                    r=r,
                    triple=triple,
                    params={"q": q, "cp": True, "exhausted_below": r},
                )
    raise CertificateError("CP search exhausted its rank cap without success")


# ---------------------------------------------------------------------------
# generic numeric pipeline
# ---------------------------------------------------------------------------


def triple_reduction_witness(
    x0, x1, x2, tau, tol=None, restarts=20, iters=200, seed=0
):
    """Alternating least squares for the general reduction hypothesis of
    an arbitrary conformable triple (not just the identity-pair form).

    The right side is linear in the u-family for fixed v (decoupled by
    row) and linear in the v-family for fixed u (decoupled by column).
    Returns SliceRewriteData or None.
    """
    dom = x0.domain
    if dom.kind != "complex":
        raise ValueError("triple_reduction_witness needs the complex domain")
    if tol is None:
        tol = dom.tol or 1e-9
    m, ell, p = x0.shape
    n = x1.shape[1]
    if ell < 2:
        return None
    others = [t for t in range(ell) if t != tau]
    no = len(others)
    ax = x0.to_numpy()
    ay = x1.to_numpy()
    az = x2.to_numpy()
    lhs = np.einsum("ik,ij,jk->ijk", ax[:, tau, :], ay[:, :, tau], az[tau, :, :])
    scale = 1.0 + float(np.linalg.norm(lhs))
    rng = random.Random(seed)

    def residual_of(u, v):
        acc = np.zeros((m, n, p), dtype=complex)
        for idx, t in enumerate(others):
            term = (
                u[:, idx, None, None] * ax[:, None, tau, :] * az[None, tau, :, :]
                * v[None, idx, :, None]
                + u[:, idx, None, None] * ax[:, None, tau, :] * az[None, t, :, :]
                + ax[:, None, t, :] * az[None, tau, :, :] * v[None, idx, :, None]
            )
            acc += ay[:, :, t, None] * term
        return float(np.linalg.norm(lhs - acc))

    best = None
    for _ in range(max(1, restarts)):
        v = np.array(
            [[dom.random(rng) for _ in range(n)] for _ in others], dtype=complex
        )
        u = np.zeros((m, no), dtype=complex)
        prev = None
        for it in range(max(1, iters)):
            for i in range(m):
                cols = []
                for idx, t in enumerate(others):
                    coef = ay[i, :, t, None] * ax[i, tau, None, :] * (
                        az[tau, :, :] * v[idx, :, None] + az[t, :, :]
                    )
                    cols.append(coef.ravel())
                const = np.zeros((n, p), dtype=complex)
                for idx, t in enumerate(others):
                    const += (
                        ay[i, :, t, None]
                        * ax[i, t, None, :]
                        * az[tau, :, :]
                        * v[idx, :, None]
                    )
                g = np.column_stack(cols)
                u[i], *_ = np.linalg.lstsq(
                    g, (lhs[i] - const).ravel(), rcond=None
                )
            for j in range(n):
                cols = []
                for idx, t in enumerate(others):
                    coef = ay[:, j, t, None] * az[None, tau, j, :] * (
                        u[:, idx, None] * ax[:, tau, :] + ax[:, t, :]
                    )
                    cols.append(coef.ravel())
                const = np.zeros((m, p), dtype=complex)
                for idx, t in enumerate(others):
                    const += (
                        ay[:, j, t, None]
                        * u[:, idx, None]
                        * ax[:, tau, :]
                        * az[None, t, j, :]
                    )
                h = np.column_stack(cols)
                v[:, j], *_ = np.linalg.lstsq(
                    h, (lhs[:, j, :] - const).ravel(), rcond=None
                )
            res = residual_of(u, v)
            if res <= tol * scale:
                break
            if prev is not None and prev - res < 1e-4 * prev and it > 20:
                break
            prev = res
        res = residual_of(u, v)
        if best is None or res < best[0]:
            best = (res, u.copy(), v.copy())
        if res <= tol * scale:
            break
    res, u, v = best
    if res > tol * scale:
        return None
    return SliceRewriteData(
        tau=tau,
        us={t: [complex(x) for x in u[:, idx]] for idx, t in enumerate(others)},
        vs={t: [complex(x) for x in v[idx, :]] for idx, t in enumerate(others)},
    )


def generic_rank_pipeline(
    b: Hypermatrix, tau=None, tol=None, restarts=50, iters=500, seed=0
) -> RankCertificate:
    """Numeric upper-bound certificate for an entry-wise nonzero cubic
    hypermatrix.

    Starts from the identity-pair decomposition with contracted
    dimension n and keeps reducing while a depth-slice witness (first
    step) or a general reduction witness (later steps) is found; stalls
    return the best certificate so far, residual included.
    """
    dom = b.domain
    if dom.kind != "complex":
        raise ValueError("generic_rank_pipeline needs the complex domain")
    if tol is None:
        tol = dom.tol or 1e-9
    m, n, p = b.shape
    if not (m == n == p):
        raise ShapeError("pipeline expects a cubic hypermatrix")
    for idx, v in enumerate(b.data):
        if abs(v) <= dom.tol:
            raise ZeroDivisionError("entries must be nonzero (genericity proxy)")
    j0, j1 = identity_pair(m, n, p, dom)
    legs = (j0, b, j1)
    ell = p
    norm_b = b.norm()

    def certificate(legs, ell):
        triple = DecompositionTriple(legs[0], legs[1], legs[2], tuple(range(ell)))
        res = triple.reconstruct().sub(b).norm() / (1.0 + norm_b)
        return RankCertificate(
            kind="upper-bound", r=ell, triple=triple, residual=res
        )

    step = 0
    while ell > 1:
        taus = [tau] if tau is not None else list(range(ell - 1, -1, -1))
        reduced = None
        for t_pick in taus:
            if step == 0:
                witness = depth_slice_witness(
                    b, t_pick, tol=tol, restarts=restarts, iters=iters, seed=seed
                )
                rewrite = witness.rewrite() if witness else None
            else:
                rewrite = triple_reduction_witness(
                    *legs, t_pick, tol=tol, restarts=max(restarts // 2, 5),
                    iters=max(iters // 2, 50), seed=seed + step,
                )
            if rewrite is None:
                continue
            try:
                reduced = hyper_slice_reduce(*legs, rewrite)
                break
            except ReductionHypothesisError:
                continue
        if reduced is None:
            break
        legs = reduced
        ell -= 1
        step += 1
    return certificate(legs, ell)
