"""Inverse pairs of hypermatrices.

A pair (A, B) with A of shape (m, p, p) and B of shape (p, n, p) acts on
every (m, n, p) hypermatrix X through the sandwich Prod(A, X, B).  The
pair is invertible when some (C, D) of the same shapes undoes the
action: Prod(C, Prod(A, X, B), D) = X for all X.  Flattening the
composed action gives a block-diagonal matrix with one p x p block per
position (i, j); invertibility of every block plus rank-one
factorability of the inverse blocks is necessary and sufficient, and
the factorization recovers (C, D) explicitly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import Hypermatrix, Matrix
from .errors import FactorabilityError, ShapeError
from .products import bm_product

SCALING_PATTERN = "scaling"
RECOVERED_GAUGE = "first-nonzero-d-entry-is-one"


@dataclass(frozen=True)
class HyperPair:
    """A sandwich-action pair: a is (m, p, p), b is (p, n, p)."""

    a: Hypermatrix
    b: Hypermatrix

    def __post_init__(self):
        self.a.domain.check_same(self.b.domain)
        m, p1, p2 = self.a.shape
        if p1 != p2:
            raise ShapeError(f"left member must be (m, p, p), found {self.a.shape}")
        q0, n, q2 = self.b.shape
        if q0 != p1 or q2 != p1:
            raise ShapeError(
                f"right member must be (p, n, p) with p={p1}, found {self.b.shape}"
            )

    @property
    def dims(self):
        m = self.a.shape[0]
        n = self.b.shape[1]
        p = self.a.shape[1]
        return m, n, p

    @property
    def domain(self):
        return self.a.domain

    def act(self, x: Hypermatrix) -> Hypermatrix:
        return bm_product(self.a, x, self.b)

    def to_json(self):
        return {"A": self.a.to_json(), "B": self.b.to_json()}

    @staticmethod
    def from_json(obj):
        return HyperPair(
            Hypermatrix.from_json(obj["A"]), Hypermatrix.from_json(obj["B"])
        )


@dataclass(frozen=True)
class OuterInversePair:
    """The recovered (C, D) with its gauge convention marker."""

    c: Hypermatrix
    d: Hypermatrix
    gauge: str = RECOVERED_GAUGE

    def act(self, x: Hypermatrix) -> Hypermatrix:
        return bm_product(self.c, x, self.d)

    def as_pair(self) -> HyperPair:
        return HyperPair(self.c, self.d)

    def to_json(self):
        return {"C": self.c.to_json(), "D": self.d.to_json(), "gauge": self.gauge}


def scaling_pair(alpha: Matrix, beta: Matrix) -> HyperPair:
    """The entry-scaling family: A[i,t,k] = alpha[i,t] on t == k,
    B[t,j,k] = beta[t,j] on t == k, zero off the diagonal pattern.

    The action is Prod(A, X, B)[i,j,k] = alpha[i,k] X[i,j,k] beta[k,j];
    all alpha, beta entries must be nonzero.
    """
    alpha.domain.check_same(beta.domain)
    dom = alpha.domain
    m, p = alpha.shape
    p2, n = beta.shape
    if p2 != p:
        raise ShapeError(
            f"alpha is {alpha.shape} so beta must have {p} rows, found {beta.shape}"
        )
    for idx, v in enumerate(alpha.data):
        if dom.is_zero(v):
            raise ZeroDivisionError(f"alpha entry {idx} is zero")
    for idx, v in enumerate(beta.data):
        if dom.is_zero(v):
            raise ZeroDivisionError(f"beta entry {idx} is zero")
    zero = dom.zero()
    a = Hypermatrix.from_function(
        (m, p, p), dom, lambda i, t, k: alpha[i, t] if t == k else zero
    )
    b = Hypermatrix.from_function(
        (p, n, p), dom, lambda t, j, k: beta[t, j] if t == k else zero
    )
    return HyperPair(a, b)


def extract_scaling(pair: HyperPair):
    """The (alpha, beta) of a scaling pair; raises when the support
    pattern is violated or a diagonal entry vanishes."""
    m, n, p = pair.dims
    dom = pair.domain
    for i in range(m):
        for t in range(p):
            for k in range(p):
                v = pair.a[i, t, k]
                if t == k:
                    if dom.is_zero(v):
                        raise ZeroDivisionError(
                            f"scaling pattern needs nonzero A[{i},{t},{t}]"
                        )
                elif not dom.is_zero(v):
                    raise ShapeError(
                        f"not a scaling pair: A[{i},{t},{k}] is nonzero off pattern"
                    )
    for t in range(p):
        for j in range(n):
            for k in range(p):
                v = pair.b[t, j, k]
                if t == k:
                    if dom.is_zero(v):
                        raise ZeroDivisionError(
                            f"scaling pattern needs nonzero B[{t},{j},{t}]"
                        )
                elif not dom.is_zero(v):
                    raise ShapeError(
                        f"not a scaling pair: B[{t},{j},{k}] is nonzero off pattern"
                    )
    alpha = Matrix.from_function(m, p, dom, lambda i, t: pair.a[i, t, t])
    beta = Matrix.from_function(p, n, dom, lambda t, j: pair.b[t, j, t])
    return alpha, beta


def scaling_inverse(pair: HyperPair) -> OuterInversePair:
    """Invert a scaling pair by inverting its nonzero entries."""
    alpha, beta = extract_scaling(pair)
    dom = pair.domain
    m, n, p = pair.dims
    zero = dom.zero()
    c = Hypermatrix.from_function(
        (m, p, p), dom, lambda i, t, k: dom.inv(alpha[i, t]) if t == k else zero
    )
    d = Hypermatrix.from_function(
        (p, n, p), dom, lambda t, j, k: dom.inv(beta[t, j]) if t == k else zero
    )
    return OuterInversePair(c, d, gauge=SCALING_PATTERN)


@dataclass
class FlatteningMatrix:
    """Block-diagonal flattening of the composed sandwich action.

    Block (i, j) is the p x p matrix with entry [t, s] =
    A[i, s, t] * B[s, j, t]; off-block entries are identically zero and
    never stored.
    """

    m: int
    n: int
    p: int
    blocks: list  # row-major over (i, j)

    def block(self, i, j) -> Matrix:
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise ShapeError(f"block ({i},{j}) out of range")
        return self.blocks[i * self.n + j]

    def full_entry(self, row, col):
        """Entry of the (mnp x mnp) matrix; off-block positions are zero."""
        size = self.m * self.n * self.p
        if not (0 <= row < size and 0 <= col < size):
            raise ShapeError("flattening index out of range")
        blk_r, t = divmod(row, self.p)
        blk_c, s = divmod(col, self.p)
        dom = self.blocks[0].domain
        if blk_r != blk_c:
            return dom.zero()
        return self.blocks[blk_r][t, s]


def flatten(pair: HyperPair) -> FlatteningMatrix:
    m, n, p = pair.dims
    dom = pair.domain
    blocks = []
    for i in range(m):
        for j in range(n):
            blocks.append(
                Matrix.from_function(
                    p,
                    p,
                    dom,
                    lambda t, s, i=i, j=j: dom.mul(pair.a[i, s, t], pair.b[s, j, t]),
                )
            )
    return FlatteningMatrix(m=m, n=n, p=p, blocks=blocks)


@dataclass
class InvertibilityReport:
    invertible: bool
    reason: str | None = None
    singular_block: tuple | None = None
    bad_minor: dict | None = None

    def __bool__(self):
        return self.invertible

    def to_json(self):
        return {
            "invertible": self.invertible,
            "reason": self.reason,
            "singular_block": list(self.singular_block)
            if self.singular_block
            else None,
            "bad_minor": self.bad_minor,
        }


def _rank_one_violation(g: Matrix, tol):
    """First nonzero 2x2 minor of g, or None when rank <= 1."""
    dom = g.domain
    m, n = g.shape
    for i0 in range(m):
        for i1 in range(i0 + 1, m):
            for j0 in range(n):
                for j1 in range(j0 + 1, n):
                    t1 = dom.mul(g[i0, j0], g[i1, j1])
                    t2 = dom.mul(g[i0, j1], g[i1, j0])
                    minor = dom.sub(t1, t2)
                    if dom.is_exact:
                        bad = not dom.is_zero(minor)
                    else:
                        bad = abs(minor) > tol * (1.0 + abs(t1) + abs(t2))
                    if bad:
                        return (i0, i1, j0, j1)
    return None


def _inverse_blocks(flat: FlatteningMatrix):
    """Per-block inverses; (None, (i, j)) on the first singular block."""
    inv = []
    for i in range(flat.m):
        for j in range(flat.n):
            blk = flat.block(i, j)
            dom = blk.domain
            if dom.is_exact:
                if dom.is_zero(blk.det()):
                    return None, (i, j)
                inv.append(blk.inverse())
            else:
                try:
                    candidate = blk.inverse()
                except ZeroDivisionError:
                    return None, (i, j)
                check = blk.matmul(candidate)
                if check.max_deviation(Matrix.identity(flat.p, dom)) > max(
                    dom.tol, 1e-12
                ) * 1e3 * (1.0 + blk.norm()):
                    return None, (i, j)
                inv.append(candidate)
    return inv, None


def _factor_slices(pair: HyperPair, inv_blocks):
    """The m x n matrices G_{t,k}[i,j] = block(i,j)^{-1}[k, t]."""
    m, n, p = pair.dims
    dom = pair.domain
    out = {}
    for t in range(p):
        for k in range(p):
            out[(t, k)] = Matrix.from_function(
                m, n, dom, lambda i, j, t=t, k=k: inv_blocks[i * n + j][k, t]
            )
    return out


def pair_invertible(pair: HyperPair) -> InvertibilityReport:
    """Decide membership in the hypermatrix general linear set.

    True iff every flattening block has nonzero determinant and, for
    every (t, k), the m x n matrix of inverse-block entries
    G_{t,k}[i,j] = F^{-1}_{(i,j)}[k,t] is rank one or zero.  The
    diagnostics name the first singular block or the first nonzero
    2x2 minor of a failing G_{t,k}.
    """
    flat = flatten(pair)
    inv_blocks, bad = _inverse_blocks(flat)
    if inv_blocks is None:
        return InvertibilityReport(
            invertible=False,
            reason=f"flattening block {bad} is singular",
            singular_block=bad,
        )
    dom = pair.domain
    tol = dom.tol if not dom.is_exact else 0.0
    for (t, k), g in _factor_slices(pair, inv_blocks).items():
        violation = _rank_one_violation(g, tol)
        if violation is not None:
            return InvertibilityReport(
                invertible=False,
                reason=(
                    f"inverse-block slice (t={t}, k={k}) is not rank one: "
                    f"nonzero minor at rows {violation[:2]}, cols {violation[2:]}"
                ),
                bad_minor={"t": t, "k": k, "indices": list(violation)},
            )
    return InvertibilityReport(invertible=True)


def _factor_rank_one(g: Matrix, tol):
    """Factor a rank-<=1 matrix as (c_i) x (d_j), d gauge-normalized so
    its first nonzero entry (scanning columns ascending) is one."""
    dom = g.domain
    m, n = g.shape
    j_star = None
    i_star = None
    for j in range(n):
        for i in range(m):
            if not dom.is_zero(g[i, j]):
                j_star, i_star = j, i
                break
        if j_star is not None:
            break
    if j_star is None:
        return [dom.zero()] * m, [dom.zero()] * n
    anchor = g[i_star, j_star]
    c = [g[i, j_star] for i in range(m)]
    d = [dom.div(g[i_star, j], anchor) for j in range(n)]
    for i in range(m):
        for j in range(n):
            prod = dom.mul(c[i], d[j])
            if dom.is_exact:
                ok = dom.eq(prod, g[i, j])
            else:
                ok = abs(prod - g[i, j]) <= tol * (1.0 + abs(prod) + abs(g[i, j]))
            if not ok:
                raise FactorabilityError(
                    f"entries do not factor: position ({i},{j})",
                    minor=(i, j),
                )
    return c, d


def recover_outer_inverse(pair: HyperPair) -> OuterInversePair:
    """Recover (C, D) from the inverse flattening blocks.

    Each slice G_{t,k} factors as C[:,t,k] x D[t,:,k]; the gauge scale
    cancels in every product C[i,t,k] D[t,j,k], which is all the
    sandwich identity sees, so the fixed first-nonzero-d convention is
    harmless.  Raises FactorabilityError when a slice is not rank one.
    """
    m, n, p = pair.dims
    dom = pair.domain
    flat = flatten(pair)
    inv_blocks, bad = _inverse_blocks(flat)
    if inv_blocks is None:
        raise FactorabilityError(
            f"flattening block {bad} is singular; pair not invertible", block=bad
        )
    tol = dom.tol if not dom.is_exact else 0.0
    c_entries = {}
    d_entries = {}
    for (t, k), g in _factor_slices(pair, inv_blocks).items():
        try:
            c_vec, d_vec = _factor_rank_one(g, tol)
        except FactorabilityError as exc:
            raise FactorabilityError(
                f"slice (t={t}, k={k}) is not rank one; pair not invertible",
                block=(t, k),
                minor=exc.minor,
            ) from exc
        for i in range(m):
            c_entries[(i, t, k)] = c_vec[i]
        for j in range(n):
            d_entries[(t, j, k)] = d_vec[j]
    c = Hypermatrix.from_function(
        (m, p, p), dom, lambda i, t, k: c_entries[(i, t, k)]
    )
    d = Hypermatrix.from_function(
        (p, n, p), dom, lambda t, j, k: d_entries[(t, j, k)]
    )
    return OuterInversePair(c, d)


def unit_probe_basis(m, n, p, domain):
    """All m*n*p unit hypermatrices; by linearity of the sandwich in X,
    passing on this basis is passing on every X."""
    probes = []
    one, zero = domain.one(), domain.zero()
    for i in range(m):
        for j in range(n):
            for k in range(p):
                probes.append(
                    Hypermatrix.from_function(
                        (m, n, p),
                        domain,
                        lambda a, b, c, i=i, j=j, k=k: one
                        if (a, b, c) == (i, j, k)
                        else zero,
                    )
                )
    return probes


def sandwich_check(pair: HyperPair, inverse: OuterInversePair, probes) -> float:
    """Max deviation over probes of Prod(C, Prod(A, X, B), D) from X,
    including the two transpose conjugation identities."""
    a, b = pair.a, pair.b
    c, d = inverse.c, inverse.d
    worst = 0.0
    for x in probes:
        direct = bm_product(c, bm_product(a, x, b), d)
        worst = max(worst, direct.max_deviation(x))
        xt = x.transpose()
        left = bm_product(
            bm_product(xt, b.transpose(), a.transpose()), d.transpose(), c.transpose()
        )
        worst = max(worst, left.max_deviation(xt))
        xt2 = xt.transpose()
        right = bm_product(
            d.transpose().transpose(),
            c.transpose().transpose(),
            bm_product(b.transpose().transpose(), a.transpose().transpose(), xt2),
        )
        worst = max(worst, right.max_deviation(xt2))
    return worst


def random_pair(m, n, p, domain, rng: random.Random, kind="scaling") -> HyperPair:
    """Sample from the known invertible families (used by tests and the
    verification suites)."""
    if kind == "scaling":
        alpha = Matrix.random(m, p, domain, rng, nonzero=True)
        beta = Matrix.random(p, n, domain, rng, nonzero=True)
        return scaling_pair(alpha, beta)
    if kind == "identity":
        from .products import identity_pair as _ip

        j0, j1 = _ip(m, n, p, domain)
        return HyperPair(j0, j1)
    raise ValueError(f"unknown pair kind {kind!r}")
