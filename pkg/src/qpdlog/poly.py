"""Univariate polynomial arithmetic over F_{q^2}.

A polynomial is a tuple of element codes, little-endian, with no trailing
zeros; () is the zero polynomial.  All functions take the FieldCtx first.
Beyond ring arithmetic this module owns irreducibility testing, complete
factorization, and the bounded-smoothness test with early abort that the
relation sieve spends nearly all its time in.  For m = 1 contexts modular
products run on numpy digit planes (integer convolutions per digit pair
plus a precomputed reduction matrix), which makes the medium-field sieve
minutes instead of hours.
"""

import random
from dataclasses import dataclass

import numpy as np

from .errors import DivisionByZeroPoly, VerificationFailed
from .gf import factor_int

ZERO = ()
ONE = (1,)
X = (0, 1)


def norm(cs):
    cs = list(cs)
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def deg(a):
    return len(a) - 1


def constant(c):
    return (c,) if c else ()


def is_monic(a):
    return bool(a) and a[-1] == 1


def add(ctx, a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = ctx.add(out[i], c)
    return norm(out)


def neg(ctx, a):
    return tuple(ctx.neg(c) for c in a)


def sub(ctx, a, b):
    return add(ctx, a, neg(ctx, b))


def scale(ctx, c, a):
    if c == 0:
        return ZERO
    if c == 1:
        return tuple(a)
    return tuple(ctx.mul(c, x) for x in a)


def shift(a, i):
    """a * X^i"""
    if not a:
        return ZERO
    return (0,) * i + tuple(a)


def mul(ctx, a, b):
    if not a or not b:
        return ZERO
    if ctx.EXP is not None and ctx.m == 1:
        return _mul_m1(ctx, a, b)
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    out[i + j] = ctx.add(out[i + j], ctx.mul(ai, bj))
    return norm(out)


def _mul_m1(ctx, a, b):
    # deferred-carry digit accumulation: one table product per coefficient
    # pair, digit reduction once per output coefficient
    p = ctx.p
    EXP, LOG = ctx.EXP, ctx.LOG
    lo, hi = ctx.digit_lo, ctx.digit_hi
    acc0 = [0] * (len(a) + len(b) - 1)
    acc1 = acc0[:]
    for i, ai in enumerate(a):
        if ai:
            la = LOG[ai]
            for j, bj in enumerate(b):
                if bj:
                    t = EXP[la + LOG[bj]]
                    acc0[i + j] += lo[t]
                    acc1[i + j] += hi[t]
    return norm([x % p + p * (y % p) for x, y in zip(acc0, acc1)])


def divrem(ctx, a, b):
    if not b:
        raise DivisionByZeroPoly("polynomial division by zero")
    da, db = deg(a), deg(b)
    if da < db:
        return ZERO, tuple(a)
    inv_lead = ctx.inv(b[-1])
    r = list(a)
    quot = [0] * (da - db + 1)
    for i in range(da, db - 1, -1):
        c = r[i]
        if c:
            c = ctx.mul(c, inv_lead)
            quot[i - db] = c
            for j in range(db):
                r[i - db + j] = ctx.sub(r[i - db + j], ctx.mul(c, b[j]))
            r[i] = 0
    return norm(quot), norm(r)


def rem(ctx, a, b):
    return divrem(ctx, a, b)[1]


def exact_div(ctx, a, b):
    q, r = divrem(ctx, a, b)
    assert not r, "division was not exact"
    return q


def gcd(ctx, a, b):
    while b:
        a, b = b, rem(ctx, a, b)
    if not a:
        return ZERO
    return monic(ctx, a)[1]


def monic(ctx, a):
    """(unit, monic part) with a = unit * monic part; unit of 0 is 1."""
    if not a:
        return 1, ZERO
    u = a[-1]
    if u == 1:
        return 1, tuple(a)
    return u, scale(ctx, ctx.inv(u), a)


def inverse_mod(ctx, a, f):
    r0, r1 = tuple(f), rem(ctx, a, f)
    s0, s1 = ZERO, ONE
    while r1:
        q, r = divrem(ctx, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, sub(ctx, s0, mul(ctx, q, s1))
    if deg(r0) != 0:
        raise ZeroDivisionError("element not invertible modulo f")
    return rem(ctx, scale(ctx, ctx.inv(r0[0]), s0), f)


def peval(ctx, a, x):
    acc = 0
    for c in reversed(a):
        acc = ctx.add(ctx.mul(acc, x), c)
    return acc


def derivative(ctx, a):
    out = [0] * max(len(a) - 1, 0)
    for i in range(1, len(a)):
        s = i % ctx.p
        if s and a[i]:
            out[i - 1] = ctx.mul(a[i], s)
    return norm(out)


def frobenius_twist(ctx, a):
    """Coefficient-wise q-th power; an involution on F_{q^2}[X]."""
    return tuple(ctx.frob(c) for c in a)


def random_monic(ctx, d, rng):
    return tuple(rng.randrange(ctx.q2) for _ in range(d)) + (1,)


# -------------------------------------------------- modular multiply -------

ENGINE_MIN_DEG = 8


class _PlaneEngine:
    """Multiplication mod a fixed monic f for m = 1 contexts.

    Elements split into base-p digit planes (c = c0 + p*c1); a field product
    becomes integer convolutions of planes folded through t^2 = e0 + e1*t,
    and reduction mod f is a precomputed (n-1) x n matrix product.  All
    intermediate values stay far below 2^63.
    """

    def __init__(self, ctx, f):
        assert ctx.m == 1 and is_monic(f) and deg(f) >= 2
        self.ctx = ctx
        self.f = f
        self.n = n = deg(f)
        p = ctx.p
        self.p = p
        self.e0 = (-ctx.modulus[0]) % p
        self.e1 = (-ctx.modulus[1]) % p
        rows0 = np.zeros((n - 1, n), dtype=np.int64)
        rows1 = np.zeros_like(rows0)
        cur = rem(ctx, shift(ONE, n), f)
        for i in range(n - 1):
            for j, c in enumerate(cur):
                rows0[i, j] = c % p
                rows1[i, j] = c // p
            cur = rem(ctx, shift(cur, 1), f)
        self.R0, self.R1 = rows0, rows1

    def enc(self, a):
        assert len(a) <= self.n
        v = np.zeros((2, self.n), dtype=np.int64)
        for i, c in enumerate(a):
            v[0, i] = c % self.p
            v[1, i] = c // self.p
        return v

    def dec(self, v):
        return norm([int(v[0, i]) + self.p * int(v[1, i])
                     for i in range(self.n)])

    def mul(self, u, v):
        p, n, e0, e1 = self.p, self.n, self.e0, self.e1
        m00 = np.convolve(u[0], v[0])
        m11 = np.convolve(u[1], v[1])
        mx = np.convolve(u[0] + u[1], v[0] + v[1]) - m00 - m11
        c0 = m00 + e0 * m11
        c1 = mx + e1 * m11
        h0 = c0[n:] % p
        h1 = c1[n:] % p
        t = h1 @ self.R1
        r0 = c0[:n] + h0 @ self.R0 + e0 * t
        r1 = c1[:n] + h0 @ self.R1 + h1 @ self.R0 + e1 * t
        out = np.empty((2, n), dtype=np.int64)
        out[0] = r0 % p
        out[1] = r1 % p
        return out

    def powmod(self, a, e):
        """a^e mod f for a an encoded plane pair, e >= 1."""
        assert e >= 1
        rv = None
        sq = a
        while e:
            if e & 1:
                rv = sq.copy() if rv is None else self.mul(rv, sq)
            e >>= 1
            if e:
                sq = self.mul(sq, sq)
        return rv


def modmul_engine(ctx, f):
    """mulmod specialized to f: (a, b) -> a*b mod f on code tuples."""
    if ctx.m == 1 and deg(f) >= 2:
        eng = _PlaneEngine(ctx, f)

        def mm(a, b):
            return eng.dec(eng.mul(eng.enc(rem(ctx, a, f)),
                                   eng.enc(rem(ctx, b, f))))
        return mm
    return lambda a, b: rem(ctx, mul(ctx, a, b), f)


def powmod(ctx, a, e, f):
    assert e >= 0
    if deg(f) < 1:
        raise DivisionByZeroPoly("powmod modulus must have degree >= 1")
    a = rem(ctx, a, f)
    if e == 0:
        return rem(ctx, ONE, f)
    if not a:
        return ZERO
    if ctx.m == 1 and deg(f) >= ENGINE_MIN_DEG and e.bit_length() > 8:
        eng = _PlaneEngine(ctx, f)
        return eng.dec(eng.powmod(eng.enc(a), e))
    r = ONE
    while e:
        if e & 1:
            r = rem(ctx, mul(ctx, r, a), f)
        a = rem(ctx, mul(ctx, a, a), f)
        e >>= 1
    return r


# -------------------------------------------------- factorization ----------

@dataclass(frozen=True)
class Factorization:
    """unit * prod(poly^mult); factors monic irreducible, sorted, distinct."""
    unit: int
    factors: tuple  # of (poly, mult)

    def rebuild(self, ctx):
        out = constant(self.unit)
        for f, k in self.factors:
            for _ in range(k):
                out = mul(ctx, out, f)
        return out

    def max_degree(self):
        return max((deg(f) for f, _ in self.factors), default=0)

    def factor_count(self):
        return sum(k for _, k in self.factors)


def _sorted_factors(fac_map):
    return tuple(sorted(fac_map.items(), key=lambda fk: (deg(fk[0]), fk[0])))


def is_irreducible(ctx, f):
    """Rabin test over F_{q^2}."""
    n = deg(f)
    assert n >= 1
    if n == 1:
        return True
    _, f = monic(ctx, f)
    Q = ctx.q2
    if powmod(ctx, X, Q ** n, f) != rem(ctx, X, f):
        return False
    for r in factor_int(n)[0]:
        h = sub(ctx, powmod(ctx, X, Q ** (n // r), f), X)
        if deg(gcd(ctx, h, f)) != 0:
            return False
    return True


def _pth_root(ctx, f):
    """For f with zero derivative: the unique g with g^p = f."""
    p = ctx.p
    assert all(c == 0 for i, c in enumerate(f) if i % p), "not a p-th power"
    e = p ** (2 * ctx.m - 1)
    return norm([ctx.pw(f[i], e) for i in range(0, len(f), p)])


def _squarefree_decomp(ctx, f):
    """Monic f -> sorted [(mult, squarefree monic g)] with f = prod g^mult."""
    out = {}

    def accumulate(g, mult):
        if deg(g) > 0:
            out[mult] = mul(ctx, out[mult], g) if mult in out else g

    def walk(f, outer):
        fp = derivative(ctx, f)
        if not fp:
            walk(_pth_root(ctx, f), outer * ctx.p)
            return
        c = gcd(ctx, f, fp)
        w = exact_div(ctx, f, c)
        i = 1
        while deg(w) > 0:
            y = gcd(ctx, w, c)
            accumulate(exact_div(ctx, w, y), outer * i)
            c = exact_div(ctx, c, y)
            w = y
            i += 1
        if deg(c) > 0:
            walk(_pth_root(ctx, c), outer * ctx.p)

    walk(f, 1)
    return sorted(out.items())


def _edf(ctx, f, d, rng):
    """Split a product of distinct monic irreducibles of equal degree d."""
    if deg(f) == d:
        return [f]
    Q = ctx.q2
    out = []
    stack = [f]
    while stack:
        h = stack.pop()
        if deg(h) == d:
            out.append(h)
            continue
        g = ZERO
        for _ in range(400):
            a = norm(rng.randrange(Q) for _ in range(deg(h)))
            if deg(a) < 1:
                continue
            if Q & 1:
                b = powmod(ctx, a, (Q ** d - 1) // 2, h)
                g = gcd(ctx, sub(ctx, b, ONE), h)
            else:
                # char 2: absolute trace of a over F_2 inside F_{Q^d}
                t = cur = rem(ctx, a, h)
                for _ in range(2 * ctx.m * d - 1):
                    cur = rem(ctx, mul(ctx, cur, cur), h)
                    t = add(ctx, t, cur)
                g = gcd(ctx, t, h)
            if 0 < deg(g) < deg(h):
                break
        else:
            raise VerificationFailed("equal-degree split failed to converge")
        stack.append(g)
        stack.append(exact_div(ctx, h, g))
    return out


def _factor_quadratic(ctx, f):
    """Monic quadratic via the discriminant (odd p, tables present)."""
    c, b = f[0], f[1]
    disc = ctx.sub(ctx.mul(b, b), ctx.mul(4 % ctx.p, c))
    r = ctx.sqrt(disc)
    if r is None:
        return {f: 1}
    half = ctx.inv(2 % ctx.p)
    x1 = ctx.mul(ctx.sub(r, b), half)
    x2 = ctx.mul(ctx.neg(ctx.add(r, b)), half)
    if x1 == x2:
        return {(ctx.neg(x1), 1): 2}
    return {(ctx.neg(x1), 1): 1, (ctx.neg(x2), 1): 1}


def poly_factor(ctx, P, rng=None):
    """Complete factorization: squarefree split, then distinct-degree,
    then randomized equal-degree; deterministic output order."""
    if not P:
        raise ValueError("cannot factor the zero polynomial")
    if rng is None:
        rng = random.Random(0x5EED)
    unit, f = monic(ctx, P)
    found = {}
    if deg(f) == 1:
        found[f] = 1
    elif deg(f) == 2 and ctx.p != 2 and ctx.EXP is not None:
        found = _factor_quadratic(ctx, f)
    elif deg(f) > 0:
        Q = ctx.q2
        for mult, g in _squarefree_decomp(ctx, f):
            b = None
            s = 1
            while deg(g) > 0 and 2 * s <= deg(g):
                b = (powmod(ctx, X, Q, g) if s == 1
                     else powmod(ctx, b, Q, g))
                h = gcd(ctx, sub(ctx, b, X), g)
                if deg(h) > 0:
                    for piece in _edf(ctx, h, s, rng):
                        found[piece] = found.get(piece, 0) + mult
                    g = exact_div(ctx, g, h)
                    if deg(g) > 0:
                        b = rem(ctx, b, g)
                s += 1
            if deg(g) > 0:
                found[g] = found.get(g, 0) + mult
    result = Factorization(unit, _sorted_factors(found))
    if __debug__:
        assert result.rebuild(ctx) == tuple(P), "factorization broke rebuild"
    return result


# ----------------------------------------------- bounded smoothness --------

class SmoothTester:
    """Early-abort smoothness testing against one (ctx, degree bound) pair.

    test() answers accept/reject as cheaply as possible; factor() adds the
    full Factorization for accepted inputs (None on reject).  For m = 1
    contexts with enough degree the q^2-power map of F_{q^2}[X]/(f) is
    materialized as a matrix on digit planes, so each distinct-degree stage
    costs one matrix-vector product instead of a modular exponentiation.
    """

    def __init__(self, ctx, bound):
        assert bound >= 1
        self.ctx = ctx
        self.bound = bound
        self.stats = {"tested": 0, "accepted": 0}

    def test(self, P):
        self.stats["tested"] += 1
        ok = self._accepts(P)
        self.stats["accepted"] += ok
        return ok

    def factor(self, P, rng=None):
        if not self.test(P):
            return None
        fac = poly_factor(self.ctx, P, rng)
        assert fac.max_degree() <= self.bound
        return fac

    def _accepts(self, P):
        ctx, B = self.ctx, self.bound
        _, f = monic(ctx, P)
        n = deg(f)
        if n <= B:
            return True
        Q = ctx.q2

        def strip(i, g, b):
            # divide out all factors of degree exactly i; repeated division
            # so multiplicities cannot hide higher-degree content
            while True:
                h = gcd(ctx, sub(ctx, rem(ctx, b, g), X), g)
                if deg(h) < 1:
                    return g
                g = exact_div(ctx, g, h)
                if deg(g) == 0:
                    return g

        def decide(i, g):
            # after stage i every factor of g has degree > i
            d = deg(g)
            if d == 0:
                return True
            if d < 2 * (i + 1):  # irreducible of degree d
                return d <= B
            return None

        fast = ctx.m == 1 and n >= ENGINE_MIN_DEG
        if fast:
            eng = _PlaneEngine(ctx, f)
            bv = eng.powmod(eng.enc(X), Q)
            b = eng.dec(bv)
        else:
            b = powmod(ctx, X, Q, f)
        g = strip(1, f, b)
        verdict = decide(1, g)
        if verdict is not None:
            return verdict
        if B == 1:
            return False
        if fast:
            # q^2-power map as a matrix; columns are powers of X^(q^2) mod f
            M0 = np.zeros((eng.n, eng.n), dtype=np.int64)
            M1 = np.zeros_like(M0)
            col = eng.enc(ONE)
            M0[:, 0], M1[:, 0] = col
            for j in range(1, eng.n):
                col = eng.mul(col, bv)
                M0[:, j], M1[:, j] = col
            e0, e1 = eng.e0, eng.e1
            cur = bv

            def next_b():
                nonlocal cur
                t = M1 @ cur[1]
                n0 = (M0 @ cur[0] + e0 * t) % eng.p
                n1 = (M0 @ cur[1] + M1 @ cur[0] + e1 * t) % eng.p
                cur = np.stack([n0, n1])
                return eng.dec(cur)
        else:
            bb = b

            def next_b():
                nonlocal bb
                bb = powmod(ctx, bb, Q, f)
                return bb

        for i in range(2, B + 1):
            g = strip(i, g, next_b())
            verdict = decide(i, g)
            if verdict is not None:
                return verdict
        return False


def smooth_factor(ctx, P, B, rng=None):
    """Factorization of P if every irreducible factor has degree <= B,
    else None; rejects early without completing the factorization."""
    if not P:
        raise ValueError("cannot factor the zero polynomial")
    return SmoothTester(ctx, B).factor(P, rng)


# -------------------------------------------------- serialization ----------

def poly_to_text(a):
    if not a:
        return "0"
    return ",".join(str(c) for c in a)


def poly_from_text(s):
    s = s.strip()
    if not s:
        return ZERO
    return norm(int(c) for c in s.split(","))
