"""The Bhattacharya-Mesner ternary product and its relatives.

``bm_product`` contracts one axis of each of three conformable legs:

    Prod(A0, A1, A2)[i0, i1, i2] = sum_j A0[i0, j, i2] A1[i0, i1, j] A2[j, i1, i2]

``general_bm_product`` weights a triple sum by a cubic background
hypermatrix; the plain product is the Kronecker-delta background, and
the rank-one backgrounds delta_t pick out single outer products.
"""

from __future__ import annotations

from .core import Hypermatrix
from .errors import ConformabilityError


def conformability(a0: Hypermatrix, a1: Hypermatrix, a2: Hypermatrix):
    """Validate a triple, returning (n0, n1, n2, ell).

    Convention: leg 0 is (n0, ell, n2), leg 1 is (n0, n1, ell),
    leg 2 is (ell, n1, n2).  Errors name the failing leg and the
    expected versus found extent.
    """
    a0.domain.check_same(a1.domain)
    a0.domain.check_same(a2.domain)
    n0, ell, n2 = a0.shape
    if a1.shape[0] != n0:
        raise ConformabilityError(
            f"leg 1 extent 0 should be {n0} (leg 0 extent 0), found {a1.shape[0]}",
            leg=1,
        )
    if a1.shape[2] != ell:
        raise ConformabilityError(
            f"leg 1 extent 2 should be the contracted dimension {ell}, "
            f"found {a1.shape[2]}",
            leg=1,
        )
    n1 = a1.shape[1]
    if a2.shape[0] != ell:
        raise ConformabilityError(
            f"leg 2 extent 0 should be the contracted dimension {ell}, "
            f"found {a2.shape[0]}",
            leg=2,
        )
    if a2.shape[1] != n1:
        raise ConformabilityError(
            f"leg 2 extent 1 should be {n1} (leg 1 extent 1), found {a2.shape[1]}",
            leg=2,
        )
    if a2.shape[2] != n2:
        raise ConformabilityError(
            f"leg 2 extent 2 should be {n2} (leg 0 extent 2), found {a2.shape[2]}",
            leg=2,
        )
    return n0, n1, n2, ell


def bm_product(a0: Hypermatrix, a1: Hypermatrix, a2: Hypermatrix) -> Hypermatrix:
    """Ternary product of a conformable triple; exact in exact domains."""
    n0, n1, n2, ell = conformability(a0, a1, a2)
    dom = a0.domain
    add, mul = dom.add, dom.mul
    out = []
    for i0 in range(n0):
        for i1 in range(n1):
            for i2 in range(n2):
                acc = dom.zero()
                for j in range(ell):
                    acc = add(
                        acc,
                        mul(mul(a0[i0, j, i2], a1[i0, i1, j]), a2[j, i1, i2]),
                    )
                out.append(acc)
    return Hypermatrix((n0, n1, n2), out, dom)


def general_bm_product(
    a0: Hypermatrix, a1: Hypermatrix, a2: Hypermatrix, background: Hypermatrix
) -> Hypermatrix:
    """Triple-sum product weighted by a cubic background of side ell."""
    n0, n1, n2, ell = conformability(a0, a1, a2)
    a0.domain.check_same(background.domain)
    if background.shape != (ell, ell, ell):
        raise ConformabilityError(
            f"background must be cubic of side {ell}, found {background.shape}",
            leg="background",
        )
    dom = a0.domain
    add, mul = dom.add, dom.mul
    zero = dom.zero()
    # skip zero background entries; delta-like backgrounds are the common case
    support = [
        (j0, j1, j2, background[j0, j1, j2])
        for j0 in range(ell)
        for j1 in range(ell)
        for j2 in range(ell)
        if not dom.is_zero(background[j0, j1, j2])
    ]
    out = []
    for i0 in range(n0):
        for i1 in range(n1):
            for i2 in range(n2):
                acc = zero
                for j0, j1, j2, w in support:
                    acc = add(
                        acc,
                        mul(
                            mul(mul(a0[i0, j0, i2], a1[i0, i1, j1]), a2[j2, i1, i2]),
                            w,
                        ),
                    )
                out.append(acc)
    return Hypermatrix((n0, n1, n2), out, dom)


def kronecker_delta(n, domain) -> Hypermatrix:
    """Cubic hypermatrix with ones exactly on the main space diagonal."""
    one, zero = domain.one(), domain.zero()
    return Hypermatrix.from_function(
        (n, n, n), domain, lambda i, j, k: one if i == j == k else zero
    )


def delta_t(n, t, domain) -> Hypermatrix:
    """Rank-one background with a single one at position (t, t, t)."""
    if not (0 <= t < n):
        raise ConformabilityError(f"delta index {t} out of range for side {n}")
    one, zero = domain.one(), domain.zero()
    return Hypermatrix.from_function(
        (n, n, n), domain, lambda i, j, k: one if i == j == k == t else zero
    )


def identity_pair(m, n, p, domain):
    """The sandwich identity pair (J0, J1): Prod(J0, A, J1) = A for every
    (m, n, p) hypermatrix A.

    J0 is (m, p, p) with J0[i,t,k] = 1 iff t == k; J1 is (p, n, p) with
    J1[t,j,k] = 1 iff t == k.
    """
    one, zero = domain.one(), domain.zero()
    j0 = Hypermatrix.from_function(
        (m, p, p), domain, lambda i, t, k: one if t == k else zero
    )
    j1 = Hypermatrix.from_function(
        (p, n, p), domain, lambda t, j, k: one if t == k else zero
    )
    return j0, j1


def outer_product(
    colslice: Hypermatrix, depthslice: Hypermatrix, rowslice: Hypermatrix
) -> Hypermatrix:
    """Product of one column slice, one depth slice and one row slice.

    Shapes (n0,1,n2), (n0,n1,1), (1,n1,n2); equals the ternary product
    with contracted dimension 1.
    """
    if colslice.shape[1] != 1:
        raise ConformabilityError(
            f"column slice must have extent 1 on axis 1, found {colslice.shape}",
            leg=0,
        )
    if depthslice.shape[2] != 1:
        raise ConformabilityError(
            f"depth slice must have extent 1 on axis 2, found {depthslice.shape}",
            leg=1,
        )
    if rowslice.shape[0] != 1:
        raise ConformabilityError(
            f"row slice must have extent 1 on axis 0, found {rowslice.shape}",
            leg=2,
        )
    return bm_product(colslice, depthslice, rowslice)


def outer_product_at(
    a0: Hypermatrix, a1: Hypermatrix, a2: Hypermatrix, t: int
) -> Hypermatrix:
    """The t-th outer product of a triple: slices extracted at index t."""
    from .core import SliceSpec

    return outer_product(
        a0.slice(SliceSpec.column(t)),
        a1.slice(SliceSpec.depth(t)),
        a2.slice(SliceSpec.row(t)),
    )


def cp_embed(x, y, z, domain):
    """Lift vectors x (len m), y (len n), z (len p) to outer-product-ready
    slices (X, Y, Z) so that outer_product(X, Y, Z)[i,j,k] = x[i] y[j] z[k].

    X is constant along axis 2, Y along axis 0, Z along axis 1; this is
    the constrained-slice form whose outer products are exactly the
    rank-one Kronecker products.
    """
    xs = [domain.coerce(v) for v in x]
    ys = [domain.coerce(v) for v in y]
    zs = [domain.coerce(v) for v in z]
    m, n, p = len(xs), len(ys), len(zs)
    big_x = Hypermatrix.from_function((m, 1, p), domain, lambda i, _, k: xs[i])
    big_y = Hypermatrix.from_function((m, n, 1), domain, lambda i, j, _: ys[j])
    big_z = Hypermatrix.from_function((1, n, p), domain, lambda _, j, k: zs[k])
    return big_x, big_y, big_z


def kron3(x, y, z, domain) -> Hypermatrix:
    """Plain rank-one Kronecker product x (x) y (x) z as a hypermatrix."""
    xs = [domain.coerce(v) for v in x]
    ys = [domain.coerce(v) for v in y]
    zs = [domain.coerce(v) for v in z]
    return Hypermatrix.from_function(
        (len(xs), len(ys), len(zs)),
        domain,
        lambda i, j, k: domain.mul(domain.mul(xs[i], ys[j]), zs[k]),
    )


def general_linear_residual(
    a: Hypermatrix, x: Hypermatrix, b: Hypermatrix, c: Hypermatrix
) -> Hypermatrix:
    """Residual Prod(a, x, b) - c of a general linear system.

    a is (1, ell, n2), x is (1, 1, ell), b is (ell, 1, n2) and c is
    (1, 1, n2); the residual vanishes exactly when x solves the system.
    """
    if a.shape[0] != 1:
        raise ConformabilityError(
            f"left coefficients must be (1, ell, n2), found {a.shape}", leg=0
        )
    if x.shape[0] != 1 or x.shape[1] != 1:
        raise ConformabilityError(
            f"unknown vector must be (1, 1, ell), found {x.shape}", leg=1
        )
    if b.shape[1] != 1:
        raise ConformabilityError(
            f"right coefficients must be (ell, 1, n2), found {b.shape}", leg=2
        )
    prod = bm_product(a, x, b)
    if c.shape != prod.shape:
        raise ConformabilityError(
            f"right-hand side shape {c.shape} does not match system shape {prod.shape}"
        )
    return prod.sub(c)
