"""Acceptance suite: one test per criterion, each printing a pass/fail
line (run with ``pytest -s tests/test_acceptance.py`` to see them all).

Every tolerance and runtime bound is pinned here; nothing is deferred
to later calibration.
"""

import itertools
import random
import time
from fractions import Fraction

import pytest

from bmalg import scalars
from bmalg.core import Hypermatrix, Matrix
from bmalg.dependence import (
    combination_residual,
    rank_feasibility,
    dependent_slice_family,
    witness_is_nontrivial,
)
from bmalg.inverse import (
    HyperPair,
    pair_invertible,
    random_pair,
    recover_outer_inverse,
    sandwich_check,
    unit_probe_basis,
)
from bmalg.nullity import (
    MatrixDecomposition,
    hyper_nullity_necessity,
    hyper_nullity_sufficiency,
    matrix_nullity_necessity,
    matrix_nullity_sufficiency,
    nullity,
    nullity_direct_search,
)
from bmalg.products import (
    bm_product,
    cp_embed,
    delta_t,
    general_bm_product,
    identity_pair,
    kron3,
    kronecker_delta,
    outer_product,
)
from bmalg.rank import (
    DecompositionTriple,
    SliceRewriteData,
    bm_rank_exhaustive,
    cp_rank_exhaustive,
    delta_sum,
    generic_rank_pipeline,
    hyper_slice_reduce,
    hyperdet_2x2x2,
    rank_upper_min,
    two_slice_witness,
)

RAT = scalars.rational()
GF2 = scalars.gf(2)
GF5 = scalars.gf(5)
GF7 = scalars.gf(7)
CPLX = scalars.complex_doubles()


def _report(num, desc, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"[ACCEPTANCE {num:02d}] {status} {desc}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def _random_shape(rng, hi):
    return tuple(rng.randint(1, hi) for _ in range(3))


def test_c01_identity_pair_law():
    rng = random.Random(101)
    start = time.time()
    for _ in range(100):
        m, n, p = _random_shape(rng, 4)
        a = Hypermatrix.random((m, n, p), RAT, rng)
        j0, j1 = identity_pair(m, n, p, RAT)
        sandwich = bm_product(j0, a, j1)
        ok_sandwich = sandwich.equals(a)
        acc = Hypermatrix.zeros((m, n, p), RAT)
        for t in range(p):
            acc = acc.add(general_bm_product(j0, a, j1, delta_t(p, t, RAT)))
        ok_split = acc.equals(a)
        cert = rank_upper_min(a)
        ok_cert = cert.r == min(m, n, p) and cert.triple.reconstruct().equals(a)
        if not (ok_sandwich and ok_split and ok_cert):
            _report(1, "identity-pair law", False, f"shape {(m, n, p)}")
    elapsed = time.time() - start
    _report(
        1,
        "identity-pair law: sandwich + min(m,n,p)-term split, 100 instances",
        elapsed < 5.0,
        f"{elapsed:.2f}s < 5s",
    )


def test_c02_sum_of_outer_products():
    rng = random.Random(102)
    for dom in (RAT, GF5):
        for _ in range(50):
            n0, n1, n2 = _random_shape(rng, 4)
            ell = rng.randint(1, 4)
            a0 = Hypermatrix.random((n0, ell, n2), dom, rng)
            a1 = Hypermatrix.random((n0, n1, ell), dom, rng)
            a2 = Hypermatrix.random((ell, n1, n2), dom, rng)
            prod = bm_product(a0, a1, a2)
            acc = Hypermatrix.zeros(prod.shape, dom)
            for t in range(ell):
                acc = acc.add(general_bm_product(a0, a1, a2, delta_t(ell, t, dom)))
            if not acc.equals(prod):
                _report(2, "outer-product sum", False, f"domain {dom.kind}")
            if not general_bm_product(
                a0, a1, a2, kronecker_delta(ell, dom)
            ).equals(prod):
                _report(2, "delta background", False, f"domain {dom.kind}")
    _report(2, "product = sum of outer products, 100 triples (Q and GF(5))", True)


def test_c03_transpose_laws():
    rng = random.Random(103)
    for _ in range(100):
        m, n, p = _random_shape(rng, 4)
        dom = rng.choice([RAT, GF5])
        a = Hypermatrix.random((m, n, p), dom, rng)
        if not a.transpose().transpose().transpose().equals(a):
            _report(3, "triple transpose", False)
        j0, j1 = identity_pair(m, n, p, dom)
        at = a.transpose()
        if not bm_product(at, j1.transpose(), j0.transpose()).equals(at):
            _report(3, "first transpose identity", False)
        at2 = at.transpose()
        if not bm_product(
            j1.transpose().transpose(), j0.transpose().transpose(), at2
        ).equals(at2):
            _report(3, "second transpose identity", False)
    _report(3, "transpose laws exact on 100 instances", True)


def test_c04_rank_gap_under_cp_constraint():
    start = time.time()
    for n in (1, 2, 3):
        for r in range(1, n + 1):
            target = delta_sum(n, r, GF2)
            bm_r = bm_rank_exhaustive(target).r
            cp_r = cp_rank_exhaustive(target).r
            if bm_r != 1 or cp_r != r:
                _report(
                    4,
                    "rank gap",
                    False,
                    f"n={n} r={r}: bm={bm_r} cp={cp_r}",
                )
    elapsed = time.time() - start
    _report(
        4,
        "diagonal sums: exhaustive rank 1, CP-constrained rank r (n <= 3, GF(2))",
        elapsed < 60.0,
        f"{elapsed:.1f}s < 60s",
    )


def test_c05_cp_embedding():
    rng = random.Random(105)
    for _ in range(50):
        m, n, p = (rng.randint(1, 5) for _ in range(3))
        x = [RAT.random(rng) for _ in range(m)]
        y = [RAT.random(rng) for _ in range(n)]
        z = [RAT.random(rng) for _ in range(p)]
        bx, by, bz = cp_embed(x, y, z, RAT)
        if not outer_product(bx, by, bz).equals(kron3(x, y, z, RAT)):
            _report(5, "CP embedding", False, f"dims {(m, n, p)}")
    _report(5, "cp_embed outer product equals rank-one Kronecker, 50 triples", True)


def _hyperdet_zero_instance(rng):
    vals = {}
    for i in range(2):
        for j in range(2):
            for k in range(2):
                vals[(i, j, k)] = RAT.random_nonzero(rng)
    vals[(1, 1, 1)] = (
        vals[(1, 0, 1)] * vals[(1, 1, 0)] * vals[(0, 0, 0)] * vals[(0, 1, 1)]
    ) / (vals[(0, 0, 1)] * vals[(0, 1, 0)] * vals[(1, 0, 0)])
    return Hypermatrix.from_function((2, 2, 2), RAT, lambda i, j, k: vals[(i, j, k)])


def test_c06_hyperdeterminant_equivalence():
    rng = random.Random(106)
    false_neg = false_pos = 0
    for _ in range(50):
        b = _hyperdet_zero_instance(rng)
        assert hyperdet_2x2x2(b) == 0
        w = two_slice_witness(b, 1)
        if w is None:
            false_neg += 1
            continue
        u, v = w
        for i in range(2):
            for j in range(2):
                assert b[i, j, 1] == u[i] * b[i, j, 0] * v[j]
    done = 0
    while done < 50:
        b = Hypermatrix.random((2, 2, 2), RAT, rng, nonzero=True)
        if hyperdet_2x2x2(b) == 0:
            continue
        done += 1
        if two_slice_witness(b, 1) is not None:
            false_pos += 1
    _report(
        6,
        "2x2x2 dependence iff vanishing hyperdeterminant (exact ratio test)",
        false_neg == 0 and false_pos == 0,
        f"false negatives {false_neg}, false positives {false_pos}",
    )


def test_c07_generic_pipeline_n3():
    rng = random.Random(107)
    successes = 0
    worst_time = 0.0
    failures = []
    for idx in range(50):
        b = Hypermatrix.random((3, 3, 3), CPLX, rng, nonzero=True)
        t0 = time.time()
        cert = generic_rank_pipeline(b, seed=idx)
        dt = time.time() - t0
        worst_time = max(worst_time, dt)
        if cert.r == 2 and cert.residual < 1e-8:
            successes += 1
        else:
            failures.append((idx, cert.r, cert.residual))
    for idx, r, res in failures:
        print(f"  pipeline failure on instance {idx}: r={r} residual={res:.3e}")
    _report(
        7,
        "numeric pipeline reaches r=2 with residual < 1e-8 on >= 95% of 50 "
        "random 3x3x3 instances",
        successes >= 48 and worst_time < 10.0,
        f"{successes}/50 succeeded, worst instance {worst_time:.2f}s < 10s",
    )


def _reducible_identity_triple(rng, dom, m, n, p, tau):
    us = {t: [dom.random_nonzero(rng) for _ in range(m)] for t in range(p) if t != tau}
    vs = {t: [dom.random_nonzero(rng) for _ in range(n)] for t in range(p) if t != tau}
    slices = {
        t: Matrix.random(m, n, dom, rng, nonzero=True) for t in range(p) if t != tau
    }
    tau_slice = Matrix.zeros(m, n, dom)
    for t, mat in slices.items():
        tau_slice = tau_slice.add(
            Matrix.from_function(
                m,
                n,
                dom,
                lambda i, j, t=t, mat=mat: dom.mul(
                    dom.mul(dom.coerce(us[t][i]), mat[i, j]), dom.coerce(vs[t][j])
                ),
            )
        )
    slices[tau] = tau_slice
    b = Hypermatrix.from_function((m, n, p), dom, lambda i, j, k: slices[k][i, j])
    j0, j1 = identity_pair(m, n, p, dom)
    return (j0, b, j1), SliceRewriteData(tau=tau, us=us, vs=vs), b


def test_c08_slice_reduction():
    rng = random.Random(108)
    for idx in range(50):
        dom = RAT if idx % 2 == 0 else CPLX
        m, n = rng.randint(2, 4), rng.randint(2, 4)
        p = rng.randint(2, min(m, n, 4))
        tau = rng.randrange(p)
        legs, rewrite, b = _reducible_identity_triple(rng, dom, m, n, p, tau)
        x0, x1, x2 = hyper_slice_reduce(*legs, rewrite)  # hypothesis checked inside
        reduced = bm_product(x0, x1, x2)
        if dom.is_exact:
            ok = reduced.equals(b)
        else:
            ok = reduced.sub(b).norm() < 1e-10 * (1.0 + b.norm())
        if not ok:
            _report(8, "slice reduction", False, f"instance {idx}")
    _report(
        8,
        "50 forward-constructed reducible triples reduce with the product "
        "preserved (exact / < 1e-10)",
        True,
    )


def test_c09_feasibility_grid():
    # independent hand evaluation of the inequality on the full grid
    for m in range(2, 7):
        for n in range(2, 7):
            for r in range(1, 5):
                if r >= min(m, n):
                    continue
                lhs = (m + n) * (r - 1)
                rhs = (m - 1) * (n - 1)
                if rank_feasibility(m, n, r) != (lhs < rhs):
                    _report(9, "feasibility grid", False, f"({m},{n},{r})")
    ok = (
        rank_feasibility(2, 2, 1) is True
        and rank_feasibility(3, 3, 2) is False
        and rank_feasibility(4, 4, 2) is True
    )
    _report(
        9,
        "rank feasibility inequality matches hand evaluation on the grid",
        ok,
        "(3,3,2) false, (4,4,2) true",
    )


def test_c10_inverse_pairs():
    rng = random.Random(110)
    for dom in (RAT, GF7):
        for m, n, p in [(2, 2, 2), (3, 2, 2), (4, 3, 2), (3, 4, 3), (4, 4, 4)]:
            pair = random_pair(m, n, p, dom, rng)
            report = pair_invertible(pair)
            if not report:
                _report(10, "scaling invertibility", False, f"{dom.kind} {(m,n,p)}")
            inverse = recover_outer_inverse(pair)
            probes = unit_probe_basis(m, n, p, dom)
            if sandwich_check(pair, inverse, probes) != 0.0:
                _report(10, "unit-probe sandwich", False, f"{dom.kind} {(m,n,p)}")
            random_probes = [
                Hypermatrix.random((m, n, p), dom, rng) for _ in range(20)
            ]
            if sandwich_check(pair, inverse, random_probes) != 0.0:
                _report(10, "transpose conjugation", False, f"{dom.kind} {(m,n,p)}")
    # a zeroed column slice must produce a singular block with diagnostics
    pair = random_pair(3, 3, 2, RAT, rng)
    zeroed = Hypermatrix.from_function(
        (3, 2, 2), RAT, lambda i, t, k: 0 if t == 0 else pair.a[i, t, k]
    )
    broken = pair_invertible(HyperPair(zeroed, pair.b))
    ok = (not broken.invertible) and broken.singular_block == (0, 0)
    _report(
        10,
        "scaling pairs invert exactly over Q and GF(7); zeroed slice "
        "diagnosed by block",
        ok,
        f"diagnostic block {broken.singular_block}",
    )


def _scaled_uniform_decomposition(rng, m, n, p, support):
    amat = Matrix.random(m, p, RAT, rng, nonzero=True)
    bmat = Matrix.random(p, n, RAT, rng, nonzero=True)
    pmat = Matrix.random(p, p, RAT, rng, nonzero=True)
    qmat = Matrix.random(p, p, RAT, rng, nonzero=True)
    x0 = Hypermatrix.from_function(
        (m, p, p), RAT, lambda i, s, t: amat[i, s] * pmat[s, t]
    )
    x2 = Hypermatrix.from_function(
        (p, n, p), RAT, lambda s, j, t: bmat[s, j] * qmat[s, t]
    )
    x1 = Hypermatrix.from_function(
        (m, n, p),
        RAT,
        lambda i, j, t: RAT.random_nonzero(rng) if t in support else 0,
    )
    return DecompositionTriple(x0, x1, x2, tuple(support))


def test_c11_rank_nullity():
    rng = random.Random(111)
    start = time.time()
    # matrix round trips, all ranks up to 6x6
    for m, n in [(3, 3), (4, 4), (5, 5), (6, 6), (6, 4), (4, 6)]:
        for r in range(1, min(m, n) + 1):
            while True:
                left = Matrix.random(m, r, RAT, rng, nonzero=True)
                right = Matrix.random(r, n, RAT, rng, nonzero=True)
                a = left.matmul(right)
                if a.rank() == r:
                    break
            u = Matrix.from_function(
                m, n, RAT, lambda i, t: left[i, t] if t < r else 0
            )
            v = Matrix.from_function(
                n, n, RAT, lambda t, j: right[t, j] if t < r else 0
            )
            d = MatrixDecomposition(u=u, v=v, support=tuple(range(r)))
            v_prime = matrix_nullity_necessity(a, d)
            d2 = matrix_nullity_sufficiency(a, v_prime.inverse())
            if d2.r != r or not d2.reconstruct().equals(a):
                _report(11, "matrix round trip", False, f"{(m, n)} r={r}")
    # hypermatrix round trips over Q at desk scale
    for m, n, p, support in [
        (2, 2, 2, (0,)),
        (3, 3, 2, (0,)),
        (3, 3, 3, (0,)),
        (3, 3, 3, (0, 1)),
        (3, 3, 3, (1, 2)),
        (2, 3, 2, (1,)),
    ]:
        d = _scaled_uniform_decomposition(rng, m, n, p, support)
        a = d.reconstruct()
        cert = hyper_nullity_necessity(a, d)
        if cert.nullity != p - len(support):
            _report(11, "hyper necessity", False, f"{(m, n, p)} S={support}")
        triple = hyper_nullity_sufficiency(a, cert.pair, cert.zero_set)
        if triple.r != len(support) or not triple.reconstruct().equals(a):
            _report(11, "hyper round trip", False, f"{(m, n, p)} S={support}")
    # exhaustive GF(2) cross-check on all 256 hypermatrices
    mismatches = 0
    for bits in itertools.product(range(2), repeat=8):
        a = Hypermatrix((2, 2, 2), list(bits), GF2)
        via = nullity(a, strategy="via-rank")
        direct = nullity_direct_search(a)
        if via.nullity != direct.nullity:
            mismatches += 1
    elapsed = time.time() - start
    _report(
        11,
        "rank-nullity round trips exact; GF(2) via-rank equals the "
        "direct-search oracle on all 256 hypermatrices",
        mismatches == 0 and elapsed < 120.0,
        f"mismatches {mismatches}, {elapsed:.1f}s < 120s",
    )


def test_c12_thin_decomposition_witness():
    rng = random.Random(112)
    for idx in range(25):
        x0 = Hypermatrix.random((4, 2, 4), CPLX, rng, nonzero=True)
        x1 = Hypermatrix.random((4, 4, 2), CPLX, rng, nonzero=True)
        x2 = Hypermatrix.random((2, 4, 4), CPLX, rng, nonzero=True)
        triple = DecompositionTriple(x0, x1, x2, (0, 1))
        h = triple.reconstruct()
        found = dependent_slice_family(h, triple, seed=idx)
        ok = found is not None and len(found.slice_indices) <= 3
        if ok:
            fam = [h.mat_of_depth(k) for k in found.slice_indices]
            res = combination_residual(fam, found.witness).norm()
            ok = res < 1e-8 and witness_is_nontrivial(fam, found.witness, tol=1e-9)
        if not ok:
            _report(12, "thin-decomposition witness", False, f"instance {idx}")
    _report(
        12,
        "25 rank-2 4x4x4 instances yield dependent 3-subsets of depth "
        "slices with residual < 1e-8",
        True,
    )
