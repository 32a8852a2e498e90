"""Rank-nullity: the matrix reference constructions and their
hypermatrix analogs.

Nullity is operationalized as the maximum number of zero depth slices
of Prod(X0, A, X1) over invertible pairs (X0, X1).  Sufficiency turns a
pair exhibiting z zero slices into a (p - z)-term decomposition through
the pair's outer inverse; necessity turns an r-term decomposition into
a certificate pair exhibiting p - r zero slices, completing the unused
leg slices until the completed pair is invertible.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .core import Hypermatrix, Matrix, complete_to_basis
from .errors import (
    BudgetExceededError,
    CertificateError,
    CompletionError,
    ShapeError,
)
from .inverse import (
    HyperPair,
    OuterInversePair,
    pair_invertible,
    recover_outer_inverse,
)
from .products import identity_pair
from .rank import (
    DecompositionTriple,
    bm_rank_exhaustive,
    iter_bm_decompositions,
    rank_upper_min,
)

DEFAULT_COMPLETION_RETRIES = 32
DEFAULT_EXHAUSTIVE_COMPLETIONS = 65536
DEFAULT_DECOMPOSITION_ATTEMPTS = 4096


# ---------------------------------------------------------------------------
# matrix reference implementation
# ---------------------------------------------------------------------------


@dataclass
class MatrixDecomposition:
    """A = sum over the support of column-row outer products of (u, v)."""

    u: Matrix
    v: Matrix
    support: tuple

    def __post_init__(self):
        if self.u.shape[1] != self.v.shape[0]:
            raise ShapeError(
                f"inner dimensions disagree: {self.u.shape} vs {self.v.shape}"
            )
        object.__setattr__(self, "support", tuple(sorted(set(self.support))))

    @property
    def r(self):
        return len(self.support)

    def reconstruct(self) -> Matrix:
        dom = self.u.domain
        m = self.u.shape[0]
        n = self.v.shape[1]
        acc = Matrix.zeros(m, n, dom)
        for t in self.support:
            col = self.u.col(t)
            row = self.v.row(t)
            acc = acc.add(
                Matrix.from_function(
                    m, n, dom, lambda i, j, c=col, r=row: dom.mul(c[i], r[j])
                )
            )
        return acc


def matrix_nullity_sufficiency(a: Matrix, x: Matrix, r=None) -> MatrixDecomposition:
    """From an invertible x whose action reveals zero columns of a @ x,
    produce the decomposition a = sum_{t in S} col_t(a@x) row_t(x^-1).

    With r given, columns r..n-1 of a @ x must be zero; otherwise the
    support is the set of nonzero columns of a @ x.
    """
    m, n = a.shape
    if x.shape != (n, n):
        raise ShapeError(f"x must be {n} x {n}, found {x.shape}")
    dom = a.domain
    x_inv = x.inverse()  # raises on singular x
    ax = a.matmul(x)
    zero_cols = {
        j for j in range(n) if all(dom.is_zero(ax[i, j]) for i in range(m))
    }
    if r is not None:
        missing = [j for j in range(r, n) if j not in zero_cols]
        if missing:
            raise CertificateError(
                f"columns {missing} of a@x are not zero; hypothesis fails"
            )
        support = tuple(t for t in range(r) if t not in zero_cols)
    else:
        support = tuple(t for t in range(n) if t not in zero_cols)
    decomp = MatrixDecomposition(u=ax, v=x_inv, support=support)
    if not decomp.reconstruct().equals(a):
        raise CertificateError("sufficiency reconstruction failed")
    return decomp


def matrix_nullity_necessity(a: Matrix, decomp: MatrixDecomposition) -> Matrix:
    """From an r-term decomposition, produce an invertible v' whose
    inverse maps a to a matrix with zero columns outside the support.

    The unused rows of v are replaced by unit rows completing the
    support rows to a basis; dependent support rows mean the
    decomposition overstates the rank and are rejected.
    """
    dom = a.domain
    if not decomp.reconstruct().equals(a):
        raise CertificateError("decomposition does not reconstruct the matrix")
    n = decomp.v.shape[0]
    if decomp.v.shape[1] != n:
        raise ShapeError("necessity expects a square v leg")
    s = decomp.support
    rows_s = [decomp.v.row(t) for t in s]
    try:
        extra_cols = complete_to_basis(rows_s, n, dom)
    except ValueError as exc:
        raise CertificateError(
            "support rows of v are linearly dependent; the certificate "
            "overstates the rank"
        ) from exc
    unused = [t for t in range(n) if t not in s]
    fill = dict(zip(unused, extra_cols))
    one, zero = dom.one(), dom.zero()
    v_prime = Matrix.from_function(
        n,
        n,
        dom,
        lambda t, j: decomp.v[t, j]
        if t in s
        else (one if j == fill[t] else zero),
    )
    if dom.is_zero(v_prime.det()):
        raise CertificateError("completion failed to produce an invertible v")
    image = a.matmul(v_prime.inverse())
    for t in unused:
        for i in range(a.shape[0]):
            if not dom.is_zero(image[i, t]):
                raise CertificateError(
                    f"column {t} of a v'^-1 is not zero; internal error"
                )
    return v_prime


# ---------------------------------------------------------------------------
# hypermatrix certificates
# ---------------------------------------------------------------------------


@dataclass
class NullityCertificate:
    """An invertible pair mapping the input to something with |Z| zero
    depth slices, together with the pair's outer inverse."""

    pair: HyperPair
    outer_inverse: OuterInversePair
    zero_set: tuple
    nullity: int
    strategy: str
    transposes_applied: int = 0
    residual: float | None = None

    def to_json(self):
        return {
            "nullity": self.nullity,
            "zero_slices": list(self.zero_set),
            "pair": self.pair.to_json(),
            "outer_inverse": self.outer_inverse.to_json(),
            "strategy": self.strategy,
            "transposes_applied": self.transposes_applied,
            "residual": self.residual,
        }


def _slice_is_zero(g: Hypermatrix, k, tol_scale=0.0):
    dom = g.domain
    m, n, _ = g.shape
    if dom.is_exact:
        return all(
            dom.is_zero(g[i, j, k]) for i in range(m) for j in range(n)
        )
    dev = sum(abs(g[i, j, k]) ** 2 for i in range(m) for j in range(n)) ** 0.5
    return dev <= tol_scale


def hyper_nullity_sufficiency(
    a: Hypermatrix, pair: HyperPair, zero_set
) -> DecompositionTriple:
    """Convert an invertible pair exhibiting zero depth slices into a
    decomposition of ``a`` with p - |Z| terms."""
    m, n, p = a.shape
    zero_set = tuple(sorted(set(zero_set)))
    report = pair_invertible(pair)
    if not report:
        raise CertificateError(f"pair is not invertible: {report.reason}")
    g = pair.act(a)
    if g.shape != a.shape:
        raise ShapeError(f"pair acts with shape {g.shape}, expected {a.shape}")
    dom = a.domain
    tol_scale = 0.0 if dom.is_exact else dom.tol * (1.0 + a.norm()) * 100
    for k in zero_set:
        if not _slice_is_zero(g, k, tol_scale):
            raise CertificateError(f"claimed zero depth slice {k} is not zero")
    inv = recover_outer_inverse(pair)
    support = tuple(t for t in range(p) if t not in zero_set)
    triple = DecompositionTriple(inv.c, g, inv.d, support)
    rec = triple.reconstruct()
    if dom.is_exact:
        if not rec.equals(a):
            raise CertificateError("sufficiency reconstruction failed")
    elif rec.sub(a).norm() > dom.tol * (1.0 + a.norm()) * 1e3:
        raise CertificateError(
            f"sufficiency reconstruction residual {rec.sub(a).norm():.3e} too large"
        )
    return triple


def _pad_triple(d: DecompositionTriple, p) -> DecompositionTriple:
    if d.ell == p:
        return d
    if d.ell > p:
        raise ShapeError(
            f"decomposition has contracted dimension {d.ell} above the depth "
            f"extent {p}; transpose-reduce first"
        )
    dom = d.x0.domain
    m = d.x0.shape[0]
    n = d.x1.shape[1]
    zero = dom.zero()
    ell = d.ell
    x0 = Hypermatrix.from_function(
        (m, p, p), dom, lambda i, t, k: d.x0[i, t, k] if t < ell else zero
    )
    x1 = Hypermatrix.from_function(
        (m, n, p), dom, lambda i, j, t: d.x1[i, j, t] if t < ell else zero
    )
    x2 = Hypermatrix.from_function(
        (p, n, p), dom, lambda t, j, k: d.x2[t, j, k] if t < ell else zero
    )
    return DecompositionTriple(x0, x1, x2, d.support)


def _completion_candidates(m, n, p, unused, domain, retries, exhaustive_budget, seed):
    """Yield (u_fill, w_fill) dictionaries: per unused slice index, the
    column slice for the first leg (m x p values) and the row slice for
    the third leg (n x p values).

    Order: the identity pattern first; over small prime fields every
    assignment in lexicographic order; otherwise seeded uniform-style
    random slices (constant along the free index), which keep the
    flattening inverse factorable whenever anything does.
    """
    one, zero = domain.one(), domain.zero()
    ident_u = {
        t: [[one if t == k else zero for k in range(p)] for _ in range(m)]
        for t in unused
    }
    ident_w = {
        t: [[one if t == k else zero for k in range(p)] for _ in range(n)]
        for t in unused
    }
    yield ident_u, ident_w
    if not unused:
        return
    if domain.kind == "gf":
        digits = len(unused) * p * (m + n)
        if domain.q**digits <= exhaustive_budget:
            q = domain.q
            per_u = m * p
            per_w = n * p
            for flat in itertools.product(range(q), repeat=len(unused) * (per_u + per_w)):
                u_fill, w_fill = {}, {}
                off = 0
                for t in unused:
                    u_fill[t] = [
                        list(flat[off + i * p : off + (i + 1) * p]) for i in range(m)
                    ]
                    off += per_u
                for t in unused:
                    w_fill[t] = [
                        list(flat[off + j * p : off + (j + 1) * p]) for j in range(n)
                    ]
                    off += per_w
                yield u_fill, w_fill
            return
    rng = random.Random(seed)
    for _ in range(retries):
        u_fill, w_fill = {}, {}
        for t in unused:
            row = [domain.random_nonzero(rng) for _ in range(p)]
            u_fill[t] = [list(row) for _ in range(m)]
            row_w = [domain.random_nonzero(rng) for _ in range(p)]
            w_fill[t] = [list(row_w) for _ in range(n)]
        yield u_fill, w_fill


def hyper_nullity_necessity(
    a: Hypermatrix,
    decomp: DecompositionTriple,
    retries=DEFAULT_COMPLETION_RETRIES,
    exhaustive_budget=DEFAULT_EXHAUSTIVE_COMPLETIONS,
    seed=0,
    strategy_label="via-rank",
    transposes_applied=0,
) -> NullityCertificate:
    """From an r-term decomposition of ``a`` build a certificate pair
    exhibiting p - r zero depth slices.

    The unused column slices of the first leg and row slices of the
    third leg are completed until the completed pair is invertible; its
    recovered outer inverse is the certificate pair, which maps ``a``
    to the (zero-padded) middle leg.  Completion failure is surfaced as
    CompletionError, never silently accepted.
    """
    m, n, p = a.shape
    if p != min(a.shape):
        raise ShapeError(
            f"necessity expects the depth extent to be minimal, shape {a.shape}"
        )
    dom = a.domain
    d = _pad_triple(decomp, p)
    rec = d.reconstruct()
    tol_scale = 0.0 if dom.is_exact else dom.tol * (1.0 + a.norm()) * 1e3
    if dom.is_exact:
        if not rec.equals(a):
            raise CertificateError("decomposition does not reconstruct the input")
    elif rec.sub(a).norm() > tol_scale:
        raise CertificateError(
            f"decomposition residual {rec.sub(a).norm():.3e} too large"
        )
    s = d.support
    for t in s:
        term_zero = (
            all(dom.is_zero(d.x1[i, j, t]) for i in range(m) for j in range(n))
            or all(dom.is_zero(d.x0[i, t, k]) for i in range(m) for k in range(p))
            or all(dom.is_zero(d.x2[t, j, k]) for j in range(n) for k in range(p))
        )
        if term_zero:
            raise CertificateError(
                f"support term {t} is degenerate (a zero slice); the "
                "certificate overstates the rank"
            )
    unused = [t for t in range(p) if t not in s]
    zero_set = tuple(unused)
    # a zero support column in some flattening block can never be fixed
    # by completing the unused slices: reject such decompositions early
    for i in range(m):
        for j in range(n):
            for t_sup in s:
                col = [
                    dom.mul(d.x0[i, t_sup, t], d.x2[t_sup, j, t]) for t in range(p)
                ]
                if all(dom.is_zero(v) for v in col):
                    raise CompletionError(
                        f"flattening block ({i},{j}) has a structurally zero "
                        f"support column {t_sup}; no completion is invertible"
                    )
    for u_fill, w_fill in _completion_candidates(
        m, n, p, unused, dom, retries, exhaustive_budget, seed
    ):
        u = Hypermatrix.from_function(
            (m, p, p),
            dom,
            lambda i, t, k: d.x0[i, t, k]
            if t in s
            else dom.coerce(u_fill[t][i][k]),
        )
        w = Hypermatrix.from_function(
            (p, n, p),
            dom,
            lambda t, j, k: d.x2[t, j, k]
            if t in s
            else dom.coerce(w_fill[t][j][k]),
        )
        candidate = HyperPair(u, w)
        if not pair_invertible(candidate):
            continue
        certificate_pair_inv = recover_outer_inverse(candidate)
        cert_pair = HyperPair(certificate_pair_inv.c, certificate_pair_inv.d)
        if not pair_invertible(cert_pair):
            continue
        g = cert_pair.act(a)
        bad = [
            k for k in zero_set if not _slice_is_zero(g, k, max(tol_scale, dom.tol))
        ]
        if bad:
            if dom.is_exact:
                raise CertificateError(
                    f"substitution broke the identity at slices {bad}"
                )
            continue
        residual = None if dom.is_exact else g.sub(d.x1).norm() / (1.0 + a.norm())
        return NullityCertificate(
            pair=cert_pair,
            outer_inverse=OuterInversePair(u, w, gauge="completed-legs"),
            zero_set=zero_set,
            nullity=len(zero_set),
            strategy=strategy_label,
            transposes_applied=transposes_applied,
            residual=residual,
        )
    raise CompletionError(
        "no invertible completion of the decomposition legs was found; "
        f"tried identity, {'exhaustive, ' if dom.kind == 'gf' else ''}and "
        f"{retries} uniform-random completions"
    )


# ---------------------------------------------------------------------------
# top-level nullity
# ---------------------------------------------------------------------------


def orient_depth_min(a: Hypermatrix):
    """Transpose 0, 1 or 2 times so the depth extent is minimal."""
    m, n, p = a.shape
    mn = min(a.shape)
    if p == mn:
        return a, 0
    if m == mn:
        return a.transpose(), 1
    return a.transpose().transpose(), 2


_ACTION_CACHE = {}


def _int_inverse_mod(rows, q):
    """Inverse of a small integer matrix mod prime q, or None."""
    p = len(rows)
    aug = [list(rows[i]) + [1 if i == j else 0 for j in range(p)] for i in range(p)]
    pr = 0
    for pc in range(p):
        sel = None
        for i in range(pr, p):
            if aug[i][pc] % q:
                sel = i
                break
        if sel is None:
            return None
        aug[pr], aug[sel] = aug[sel], aug[pr]
        inv = pow(aug[pr][pc], q - 2, q)
        aug[pr] = [(v * inv) % q for v in aug[pr]]
        for i in range(p):
            if i != pr and aug[i][pc] % q:
                f = aug[i][pc]
                aug[i] = [(a - f * b) % q for a, b in zip(aug[i], aug[pr])]
        pr += 1
    return [row[p:] for row in aug]


def _invertible_actions(m, n, p, domain, budget):
    """All distinct invertible-pair actions over a small prime field.

    Enumerates every (X0, X1) candidate in integer form, keeps those
    whose flattening blocks are all invertible with rank-one inverse
    slices, and dedupes by the block tuple (which determines the
    action).  Returns a list of (blocks, flat0, flat1); cached per
    signature.
    """
    key = (m, n, p, domain.q)
    if key in _ACTION_CACHE:
        return _ACTION_CACHE[key]
    q = domain.q
    digits = m * p * p + p * n * p
    if q**digits > budget:
        raise BudgetExceededError(
            f"direct search needs q^{digits} pair candidates, over budget {budget}"
        )
    flat1_all = list(itertools.product(range(q), repeat=p * n * p))
    actions = {}
    pairs_idx = list(itertools.product(range(m), range(n)))
    for flat0 in itertools.product(range(q), repeat=m * p * p):
        for flat1 in flat1_all:
            blocks = []
            singular = False
            inverses = []
            for i, j in pairs_idx:
                rows = [
                    [
                        (flat0[(i * p + s) * p + t] * flat1[(s * n + j) * p + t]) % q
                        for s in range(p)
                    ]
                    for t in range(p)
                ]
                inv = _int_inverse_mod(rows, q)
                if inv is None:
                    singular = True
                    break
                blocks.append(tuple(v for row in rows for v in row))
                inverses.append(inv)
            if singular:
                continue
            blocks = tuple(blocks)
            if blocks in actions:
                continue
            # rank-one factorability of every inverse slice
            factorable = True
            for t in range(p):
                if not factorable:
                    break
                for k in range(p):
                    g = [
                        [inverses[i * n + j][k][t] for j in range(n)]
                        for i in range(m)
                    ]
                    for i0 in range(m):
                        for i1 in range(i0 + 1, m):
                            for j0 in range(n):
                                for j1 in range(j0 + 1, n):
                                    if (
                                        g[i0][j0] * g[i1][j1]
                                        - g[i0][j1] * g[i1][j0]
                                    ) % q:
                                        factorable = False
                    if not factorable:
                        break
            if factorable:
                actions[blocks] = (flat0, flat1)
    out = [(blocks, f0, f1) for blocks, (f0, f1) in actions.items()]
    _ACTION_CACHE[key] = out
    return out


def nullity_direct_search(a: Hypermatrix, budget=DEFAULT_EXHAUSTIVE_COMPLETIONS):
    """Oracle: exhaust invertible pairs over GF(q) and maximize the
    number of zero depth slices of the pair's action on ``a``."""
    dom = a.domain
    if dom.kind != "gf":
        raise ValueError("direct search needs a GF(q) domain")
    oriented, tcount = orient_depth_min(a)
    m, n, p = oriented.shape
    q = dom.q
    av = oriented.data
    best = None
    for blocks, flat0, flat1 in _invertible_actions(m, n, p, dom, budget):
        zero_slices = []
        for k in range(p):
            ok = True
            for i in range(m):
                if not ok:
                    break
                for j in range(n):
                    fij = blocks[i * n + j]
                    acc = 0
                    for s_idx in range(p):
                        acc += fij[k * p + s_idx] * av[(i * n + j) * p + s_idx]
                    if acc % q:
                        ok = False
                        break
            if ok:
                zero_slices.append(k)
        if best is None or len(zero_slices) > len(best[1]):
            best = ((flat0, flat1), zero_slices)
    (flat0, flat1), zero_slices = best
    pair = HyperPair(
        Hypermatrix((m, p, p), list(flat0), dom),
        Hypermatrix((p, n, p), list(flat1), dom),
    )
    inv = recover_outer_inverse(pair)
    return NullityCertificate(
        pair=pair,
        outer_inverse=inv,
        zero_set=tuple(zero_slices),
        nullity=len(zero_slices),
        strategy="direct-search",
        transposes_applied=tcount,
    )


def _zero_pair_certificate(a, tcount):
    m, n, p = a.shape
    dom = a.domain
    j0, j1 = identity_pair(m, n, p, dom)
    pair = HyperPair(j0, j1)
    inv = recover_outer_inverse(pair)
    return NullityCertificate(
        pair=pair,
        outer_inverse=inv,
        zero_set=tuple(range(p)),
        nullity=p,
        strategy="zero-input",
        transposes_applied=tcount,
    )


def nullity(
    a: Hypermatrix,
    strategy="via-rank",
    budget=DEFAULT_EXHAUSTIVE_COMPLETIONS,
    decomposition: DecompositionTriple | None = None,
    attempts=DEFAULT_DECOMPOSITION_ATTEMPTS,
    seed=0,
    **pipeline_opts,
) -> NullityCertificate:
    """Compute a nullity certificate for ``a``.

    "via-rank" converts a rank certificate: exhaustive exact rank over
    GF(q) (retrying across decompositions until one admits an
    invertible completion), the numeric reduction pipeline over complex
    doubles, or a caller-provided decomposition; over the rationals
    without one, only the zero depth slices of the input itself are
    certified (there is no exact rational rank oracle here, so this is
    a lower bound).  "direct-search" is the exhaustive oracle over tiny
    prime fields.
    """
    oriented, tcount = orient_depth_min(a)
    m, n, p = oriented.shape
    dom = a.domain
    if strategy == "direct-search":
        return nullity_direct_search(a, budget=budget)
    if strategy != "via-rank":
        raise ValueError(f"unknown strategy {strategy!r}")
    if oriented.is_zero():
        return _zero_pair_certificate(oriented, tcount)
    if decomposition is not None:
        return hyper_nullity_necessity(
            oriented, decomposition, seed=seed, transposes_applied=tcount
        )
    if dom.kind == "gf":
        cert = bm_rank_exhaustive(oriented)
        r = cert.r
        # The rank-to-nullity transfer needs a decomposition whose legs
        # admit an invertible completion.  Over a tiny finite field that
        # can fail at the exact rank (no genericity to lean on), in which
        # case the true nullity is smaller: climb through the term counts
        # until a completion exists.  A pair achieving z zero slices
        # always yields a completable (p - z)-term decomposition, so the
        # first level that completes matches the exhaustive oracle.
        for r_level in range(max(r, 1), p + 1):
            if r_level == p:
                full = rank_upper_min(oriented)
                out = hyper_nullity_necessity(
                    oriented, full.triple, seed=seed, transposes_applied=tcount
                )
                out.strategy = f"via-rank (rank {r}, transfer level {r_level})"
                return out
            tried = 0
            found = None
            for triple in iter_bm_decompositions(
                oriented, r_level, all_solutions=True
            ):
                tried += 1
                if tried > attempts:
                    break
                try:
                    found = hyper_nullity_necessity(
                        oriented, triple, seed=seed, transposes_applied=tcount
                    )
                    break
                except CompletionError:
                    continue
            if found is not None:
                found.strategy = f"via-rank (rank {r}, transfer level {r_level})"
                return found
        raise CompletionError(
            f"no decomposition at any term count r..{p} admitted an "
            "invertible completion"
        )
    if dom.kind == "complex":
        from .rank import generic_rank_pipeline

        cert = generic_rank_pipeline(oriented, seed=seed, **pipeline_opts)
        return hyper_nullity_necessity(
            oriented, cert.triple, seed=seed, transposes_applied=tcount
        )
    # rational: certify the visible zero depth slices through the
    # identity-pair decomposition restricted to the nonzero ones
    j0, j1 = identity_pair(m, n, p, dom)
    support = tuple(
        k
        for k in range(p)
        if not all(
            dom.is_zero(oriented[i, j, k]) for i in range(m) for j in range(n)
        )
    )
    triple = DecompositionTriple(j0, oriented, j1, support)
    return hyper_nullity_necessity(
        oriented, triple, seed=seed, transposes_applied=tcount,
        strategy_label="via-rank (zero-slice lower bound)",
    )
