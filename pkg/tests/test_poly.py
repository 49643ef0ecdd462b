"""Polynomial layer: arithmetic, irreducibility, factoring, smoothness."""

import itertools
import random

import pytest

from qpdlog import gf, poly
from qpdlog.errors import DivisionByZeroPoly


@pytest.fixture(scope="module")
def f9():
    return gf.field_ctx_create(3, 1)


@pytest.fixture(scope="module")
def f4():
    return gf.field_ctx_create(2, 1)


@pytest.fixture(scope="module")
def f2809():
    return gf.field_ctx_create(53, 1)


def lin(ctx, root):
    """X - root as a poly."""
    return (ctx.neg(root), 1)


# Test-local oracle: trial-division factoring over F_4 up to degree 4.

def brute_monic_irreducibles(ctx, max_deg):
    out = []
    for d in range(1, max_deg + 1):
        for coeffs in itertools.product(range(ctx.q2), repeat=d):
            f = coeffs + (1,)
            if all(poly.divrem(ctx, f, g)[1] for g in out):
                out.append(f)
    return out


def brute_factor(ctx, f, irreducibles):
    unit, f = poly.monic(ctx, f)
    found = {}
    for g in irreducibles:
        while poly.deg(f) >= poly.deg(g):
            q, r = poly.divrem(ctx, f, g)
            if r:
                break
            found[g] = found.get(g, 0) + 1
            f = q
    assert poly.deg(f) == 0
    return unit, found


def test_basic_arith_examples(f9):
    a = poly.sub(f9, (0, 0, 1), poly.ONE)        # X^2 - 1
    b = lin(f9, 1)                               # X - 1
    assert poly.gcd(f9, a, b) == b
    assert poly.divrem(f9, (0, 0, 0, 1), (0, 1)) == ((0, 0, 1), ())
    with pytest.raises(DivisionByZeroPoly):
        poly.divrem(f9, a, poly.ZERO)


def test_gcd_is_monic(f9):
    a = poly.scale(f9, 5, poly.mul(f9, lin(f9, 2), lin(f9, 4)))
    b = poly.scale(f9, 7, lin(f9, 2))
    g = poly.gcd(f9, a, b)
    assert poly.is_monic(g) and g == lin(f9, 2)


def test_powmod_defining_relation(f9):
    # h1*X^q - h0 = 0 mod phi forces X^q = h0/h1 mod phi
    h0 = (1, 1)       # X + 1
    h1 = (2,)         # constant 2
    f = poly.sub(f9, poly.scale(f9, h1[0], poly.shift(poly.ONE, 3)), h0)
    fac = poly.poly_factor(f9, f)
    phi = max((g for g, _ in fac.factors), key=poly.deg)
    lhs = poly.powmod(f9, poly.X, 3, phi)
    rhs = poly.rem(f9, poly.mul(f9, h0, poly.inverse_mod(f9, h1, phi)), phi)
    assert lhs == rhs


def test_eval(f9):
    f = (2, 0, 1)  # X^2 + 2
    for x in range(9):
        assert poly.peval(f9, f, x) == f9.add(f9.mul(x, x), 2)


def test_is_irreducible_examples(f9, f4):
    assert not poly.is_irreducible(f9, (1, 0, 1))  # -1 is a square in F_9
    assert poly.is_irreducible(f9, (7, 1))
    count = sum(poly.is_irreducible(f4, (c0, c1, 1))
                for c0 in range(4) for c1 in range(4))
    # necklace count (Q^2 - Q)/2 with Q = 4
    assert count == (16 - 4) // 2 == 6


def test_factor_systematic_equation(f4):
    # X^4 - X over F_4 is exactly prod over a in F_4 of (X - a)
    f = poly.sub(f4, poly.shift(poly.ONE, 4), poly.X)
    fac = poly.poly_factor(f4, f)
    assert fac.unit == 1
    assert fac.factors == tuple(((a, 1), 1) for a in range(4))


def test_factor_constant(f9):
    fac = poly.poly_factor(f9, (5,))
    assert fac.unit == 5 and fac.factors == ()


def test_factor_round_trip(f9):
    rng = random.Random(1)
    irs = []
    while len(irs) < 5:
        c = poly.random_monic(f9, rng.choice([1, 1, 2, 3]), rng)
        if poly.is_irreducible(f9, c) and c not in irs:
            irs.append(c)
    want = {}
    prod = (7,)
    for i, g in enumerate(irs):
        k = 1 + (i % 3)
        want[g] = k
        for _ in range(k):
            prod = poly.mul(f9, prod, g)
    fac = poly.poly_factor(f9, prod)
    assert fac.unit == 7 and dict(fac.factors) == want
    assert fac.rebuild(f9) == prod


def test_factor_brute_force_exhaustive_f4(f4):
    irreducibles = brute_monic_irreducibles(f4, 4)
    for d in range(1, 5):
        for coeffs in itertools.product(range(4), repeat=d):
            f = coeffs + (1,)
            unit, want = brute_factor(f4, f, irreducibles)
            fac = poly.poly_factor(f4, f)
            assert fac.unit == unit and dict(fac.factors) == want, f


def test_factor_multiplicities_char_p(f9):
    # (X+1)^3 (X^2+1 splits; use a real irreducible quadratic) -> p-th powers
    quad = next((c0, c1, 1) for c0 in range(9) for c1 in range(9)
                if poly.is_irreducible(f9, (c0, c1, 1)))
    f = poly.ONE
    for _ in range(3):
        f = poly.mul(f9, f, (1, 1))
    for _ in range(2):
        f = poly.mul(f9, f, quad)
    fac = poly.poly_factor(f9, f)
    assert dict(fac.factors) == {(1, 1): 3, quad: 2}


def test_smooth_factor_trivial(f9):
    prod = poly.mul(f9, lin(f9, 1), lin(f9, 2))
    fac = poly.smooth_factor(f9, prod, 1)
    assert fac is not None and fac.max_degree() == 1
    quad = next((c0, c1, 1) for c0 in range(9) for c1 in range(9)
                if poly.is_irreducible(f9, (c0, c1, 1)))
    assert poly.smooth_factor(f9, quad, 1) is None
    assert poly.smooth_factor(f9, quad, 2) is not None


def test_smooth_factor_never_rejects_at_full_degree(f9):
    rng = random.Random(2)
    for _ in range(50):
        f = poly.random_monic(f9, rng.randrange(1, 9), rng)
        assert poly.smooth_factor(f9, f, poly.deg(f)) is not None


def test_smooth_factor_agrees_with_full_factorization(f9, f4, f2809):
    rng = random.Random(3)
    for ctx, dmax in ((f9, 9), (f4, 8), (f2809, 12)):
        for _ in range(120):
            f = poly.random_monic(ctx, rng.randrange(2, dmax), rng)
            full = poly.poly_factor(ctx, f)
            for B in (1, 2, 3, 5):
                got = poly.smooth_factor(ctx, f, B, rng)
                if full.max_degree() <= B:
                    assert got == full
                else:
                    assert got is None


def test_smooth_factor_multiplicity_blind_spots(f9):
    # repeated factors and p-th powers must not slip through the early abort
    quad = next((c0, c1, 1) for c0 in range(9) for c1 in range(9)
                if poly.is_irreducible(f9, (c0, c1, 1)))
    cube = next(c for c in (poly.random_monic(f9, 3, random.Random(i))
                            for i in range(100))
                if poly.is_irreducible(f9, c))
    f = poly.ONE
    for _ in range(3):
        f = poly.mul(f9, f, quad)       # quad^3, degree 6
    assert poly.smooth_factor(f9, f, 1) is None
    assert poly.smooth_factor(f9, f, 2) is not None
    g = poly.mul(f9, f, cube)           # quad^3 * cubic
    assert poly.smooth_factor(f9, g, 2) is None
    assert poly.smooth_factor(f9, g, 3) is not None


def test_frobenius_twist(f2809):
    rng = random.Random(5)
    subfield_poly = tuple(rng.choice(f2809.subfield) for _ in range(4)) + (1,)
    assert poly.frobenius_twist(f2809, subfield_poly) == subfield_poly
    for _ in range(20):
        f = poly.random_monic(f2809, 6, rng)
        tw = poly.frobenius_twist(f2809, f)
        assert poly.frobenius_twist(f2809, tw) == f
        c = rng.randrange(1, f2809.q2)
        assert poly.frobenius_twist(f2809, (0, c)) == (0, f2809.pw(c, 53))


def test_plane_engine_matches_generic(f2809, f9):
    rng = random.Random(6)
    f = poly.random_monic(f2809, 33, rng)
    mm = poly.modmul_engine(f2809, f)
    for _ in range(40):
        a = poly.random_monic(f2809, 32, rng)
        b = poly.random_monic(f2809, 32, rng)
        assert mm(a, b) == poly.rem(f2809, poly.mul(f2809, a, b), f)
    # m = 2 context falls back to the generic closure
    f2 = poly.random_monic(f9, 5, rng)
    mm2 = poly.modmul_engine(f9, f2)
    a = poly.random_monic(f9, 4, rng)
    assert mm2(a, a) == poly.rem(f9, poly.mul(f9, a, a), f2)


def test_powmod_cross_path(f2809):
    rng = random.Random(7)
    f = poly.random_monic(f2809, 20, rng)
    a = poly.random_monic(f2809, 19, rng)
    e = 2 ** 45 + 9
    fast = poly.powmod(f2809, a, e, f)
    slow = poly.ONE
    base, ee = a, e
    while ee:
        if ee & 1:
            slow = poly.rem(f2809, poly.mul(f2809, slow, base), f)
        base = poly.rem(f2809, poly.mul(f2809, base, base), f)
        ee >>= 1
    assert fast == slow


def test_text_round_trip():
    for f in ((), (5,), (0, 1), (3, 0, 0, 7)):
        assert poly.poly_from_text(poly.poly_to_text(f)) == f
    assert poly.poly_to_text(()) == "0"
