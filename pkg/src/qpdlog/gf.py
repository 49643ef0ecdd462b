"""Arithmetic in F_{q^2} (q = p^m), integer factorization, and generic
small-group discrete logs.

An element of F_{q^2} is an int code in [0, q^2): its base-p digits are the
coefficients of the element on the power basis of F_p[t]/(modulus), lowest
degree first.  Contexts with q^2 below the table budget get exp/log/frobenius
tables (relation sieving is multiplication-bound); larger contexts fall back
to schoolbook arithmetic on digit vectors.
"""

import math
import random
import time
from functools import cached_property

import numpy as np

from .errors import InternalCountMismatch, NotInSubgroup, VerificationFailed

TABLE_BUDGET = 1 << 16


# ------------------------------------------------------------- F_p[t] ------
# Bootstrap layer: little-endian coefficient lists, no trailing zeros, [] is
# the zero polynomial.  Only used to build contexts and as the no-table
# fallback; everything hot runs on tables.

def _fp_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_add(a, b, p):
    n = max(len(a), len(b))
    out = [0] * n
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % p
    return _fp_trim(out)


def _fp_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, c in enumerate(a):
        if c:
            for j, d in enumerate(b):
                out[i + j] += c * d
    return _fp_trim([c % p for c in out])


def _fp_rem(a, b, p):
    assert b, "division by zero polynomial"
    a = a[:]
    inv_lead = pow(b[-1], p - 2, p)
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        if c:
            off = len(a) - len(b)
            for i, d in enumerate(b):
                a[off + i] = (a[off + i] - c * d) % p
        a.pop()
    return _fp_trim(a)


def _fp_gcd(a, b, p):
    while b:
        a, b = b, _fp_rem(a, b, p)
    return a


def _fp_powmod(a, e, f, p):
    r = [1]
    a = _fp_rem(a, f, p)
    while e:
        if e & 1:
            r = _fp_rem(_fp_mul(r, a, p), f, p)
        a = _fp_rem(_fp_mul(a, a, p), f, p)
        e >>= 1
    return r


def _fp_irreducible(f, p):
    """Rabin test for F_p[t]."""
    d = len(f) - 1
    if d < 1:
        return False
    x = [0, 1]
    if _fp_powmod(x, p ** d, f, p) != _fp_rem(x, f, p):
        return False
    for r in set(factor_int(d)[0]):
        h = _fp_add(_fp_powmod(x, p ** (d // r), f, p), [0, p - 1], p)
        if len(_fp_gcd(f, h, p)) != 1:
            return False
    return True


def _code_digits(code, p, n):
    out = []
    for _ in range(n):
        code, c = divmod(code, p)
        out.append(c)
    return out


def _digits_code(digs, p):
    c = 0
    for d in reversed(digs):
        c = c * p + d
    return c


# -------------------------------------------------------------- context ----

class FieldCtx:
    """Immutable arithmetic context for F_{q^2} and its subfield F_q.

    Build one with field_ctx_create() or ctx_from_text(); the constructor
    only validates and precomputes, it never searches.
    """

    def __init__(self, p, m, modulus, generator, tables="auto",
                 table_budget=TABLE_BUDGET):
        if not is_probable_prime(p):
            raise ValueError(f"p = {p} is not prime")
        if m < 1:
            raise ValueError("m must be >= 1")
        self.p = p
        self.m = m
        self.q = p ** m
        self.q2 = self.q * self.q
        modulus = tuple(modulus)
        if len(modulus) != 2 * m + 1 or modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree 2m")
        if not _fp_irreducible(list(modulus), p):
            raise ValueError("modulus is reducible")
        self.modulus = modulus

        self.order_factors, cof = factor_int(self.q2 - 1)
        assert cof == 1, "q^2 - 1 must factor completely at context scale"

        if tables == "auto":
            tables = self.q2 <= table_budget
        if tables and self.q2 > table_budget:
            raise ValueError(
                f"table size {self.q2} exceeds budget {table_budget}")
        self._tables = tables

        for r in self.order_factors:
            if self._pw_school(generator, (self.q2 - 1) // r) == 1:
                raise ValueError("generator does not have order q^2 - 1")
        self.generator = generator

        if tables:
            self._build_tables()
        else:
            self.EXP = self.LOG = self.FROB = self.NEG = None

        self.subfield = self._build_subfield()
        self._subfield_set = frozenset(self.subfield)

    # construction ----------------------------------------------------------

    def _build_tables(self):
        n = self.q2 - 1
        exp = [0] * (2 * n)
        log = [-1] * self.q2
        cur = 1
        for i in range(n):
            exp[i] = cur
            exp[i + n] = cur
            log[cur] = i
            cur = self._mul_school(cur, self.generator)
        assert cur == 1, "generator order broken"
        self.EXP = exp
        self.LOG = log
        # x^q on codes; q-th power is index multiplication by q
        frob = [0] * self.q2
        for x in range(1, self.q2):
            frob[x] = exp[log[x] * self.q % n]
        self.FROB = frob
        p = self.p
        neg = [0] * self.q2
        for x in range(1, self.q2):
            neg[x] = _digits_code([(p - c) % p for c in
                                   _code_digits(x, p, 2 * self.m)], p)
        self.NEG = neg

    def _build_subfield(self):
        # F_q* is the unique subgroup of order q-1, generated by g^(q+1)
        sub = {0, 1}
        h = self.pw(self.generator, self.q + 1)
        cur = h
        while cur != 1:
            sub.add(cur)
            cur = self.mul(cur, h)
        if len(sub) != self.q:
            raise InternalCountMismatch(f"subfield has {len(sub)} elements, not {self.q}")
        for x in sub:
            assert self.frob(x) == x
        return tuple(sorted(sub))

    # schoolbook paths -------------------------------------------------------

    def _mul_school(self, a, b):
        p = self.p
        n = 2 * self.m
        da = _code_digits(a, p, n)
        db = _code_digits(b, p, n)
        r = _fp_rem(_fp_mul(da, db, p), list(self.modulus), p)
        return _digits_code(r, p)

    def _pw_school(self, a, e):
        r = 1
        while e:
            if e & 1:
                r = self._mul_school(r, a)
            a = self._mul_school(a, a)
            e >>= 1
        return r

    # arithmetic -------------------------------------------------------------

    def add(self, a, b):
        p = self.p
        if p == 2:
            return a ^ b
        if self.m == 1:
            a1, a0 = divmod(a, p)
            b1, b0 = divmod(b, p)
            return (a0 + b0) % p + p * ((a1 + b1) % p)
        out = 0
        mult = 1
        for _ in range(2 * self.m):
            out += (a % p + b % p) % p * mult
            a //= p
            b //= p
            mult *= p
        return out

    def neg(self, a):
        if self.NEG is not None:
            return self.NEG[a]
        if self.p == 2:
            return a
        p = self.p
        digs = [(p - c) % p for c in _code_digits(a, p, 2 * self.m)]
        return _digits_code(digs, p)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.EXP is not None:
            if a == 0 or b == 0:
                return 0
            return self.EXP[self.LOG[a] + self.LOG[b]]
        return self._mul_school(a, b)

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        if self.EXP is not None:
            return self.EXP[self.q2 - 1 - self.LOG[a]]
        return self._pw_school(a, self.q2 - 2)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pw(self, a, e):
        if a == 0:
            if e == 0:
                return 1
            assert e > 0
            return 0
        n = self.q2 - 1
        if self.EXP is not None:
            return self.EXP[self.LOG[a] * (e % n) % n]
        return self._pw_school(a, e % n)

    def frob(self, a):
        if self.FROB is not None:
            return self.FROB[a]
        return self.pw(a, self.q)

    def in_subfield(self, a):
        return a in self._subfield_set

    # encoding ---------------------------------------------------------------

    def elem_vec(self, a):
        """Coefficient vector of an element code, little-endian, length 2m."""
        return tuple(_code_digits(a, self.p, 2 * self.m))

    def elem_of_vec(self, v):
        v = list(v)
        assert len(v) <= 2 * self.m and all(0 <= c < self.p for c in v)
        return _digits_code(v, self.p)

    # numpy views for bulk kernels ------------------------------------------

    @cached_property
    def digit_lo(self):
        """code % p for every code; feeds deferred-carry poly kernels."""
        return [c % self.p for c in range(self.q2)]

    @cached_property
    def digit_hi(self):
        return [c // self.p for c in range(self.q2)]

    def sqrt(self, a):
        """A square root of a, or None if a is a nonsquare (tables only)."""
        if a == 0:
            return 0
        assert self.EXP is not None
        la = self.LOG[a]
        if la & 1:
            if self.p == 2:
                # squaring is bijective in char 2
                return self.EXP[(la + self.q2 - 1) >> 1]
            return None
        return self.EXP[la >> 1]

    @cached_property
    def np_exp(self):
        assert self.EXP is not None
        return np.asarray(self.EXP, dtype=np.int64)

    @cached_property
    def np_log(self):
        assert self.LOG is not None
        return np.asarray(self.LOG, dtype=np.int64)

    @cached_property
    def np_neg(self):
        assert self.NEG is not None
        return np.asarray(self.NEG, dtype=np.int64)

    def np_mul(self, a, b):
        """Elementwise product of two code arrays (tables required)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self.np_exp[self.np_log[a] + self.np_log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def np_add(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.p == 2:
            return a ^ b
        p = self.p
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        mult = 1
        for _ in range(2 * self.m):
            out += (a % p + b % p) % p * mult
            a = a // p
            b = b // p
            mult *= p
        return out

    def __repr__(self):
        return f"FieldCtx(p={self.p}, m={self.m}, q={self.q})"

    def __eq__(self, other):
        return (isinstance(other, FieldCtx)
                and (self.p, self.m, self.modulus, self.generator)
                == (other.p, other.m, other.modulus, other.generator))

    def __hash__(self):
        return hash((self.p, self.m, self.modulus, self.generator))


def field_ctx_create(p, m, seed=0, tables="auto", table_budget=TABLE_BUDGET):
    """Build the deterministic context for F_{(p^m)^2}.

    The modulus is the first irreducible in lexicographic candidate order
    starting from an offset derived from seed (seed 0 scans from t^2m up);
    the generator is the smallest element code of full order.
    """
    if not is_probable_prime(p):
        raise ValueError(f"p = {p} is not prime")
    d = 2 * m
    span = p ** d
    offset = seed % span
    modulus = None
    for i in range(span):
        low = (offset + i) % span
        f = _code_digits(low, p, d) + [1]
        if _fp_irreducible(f, p):
            modulus = f
            break
    assert modulus is not None  # irreducibles of every degree exist

    q2 = p ** d
    fac, cof = factor_int(q2 - 1)
    assert cof == 1

    def mul(a, b):
        da = _code_digits(a, p, d)
        db = _code_digits(b, p, d)
        return _digits_code(_fp_rem(_fp_mul(da, db, p), modulus, p), p)

    gen = find_generator(range(2, q2), q2 - 1, fac, mul=mul, one=1)
    return FieldCtx(p, m, modulus, gen, tables=tables,
                    table_budget=table_budget)


def frobenius(ctx, x):
    """x^q, the conjugation of F_{q^2} over F_q."""
    return ctx.frob(x)


# -------------------------------------------------- serialization ----------

def ctx_to_text(ctx):
    mod = ",".join(str(c) for c in ctx.modulus)
    gen = ",".join(str(c) for c in ctx.elem_vec(ctx.generator))
    return (f"p: {ctx.p}\nm: {ctx.m}\nmodulus: {mod}\ngenerator: {gen}\n")


def parse_kv_text(text):
    """Parse 'key: value' lines, skipping blanks and # comments."""
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition(":")
        out[key.strip()] = val.strip()
    return out

def ctx_from_text(text, tables="auto"):
    kv = parse_kv_text(text)
    p = int(kv["p"])
    m = int(kv["m"])
    modulus = [int(c) for c in kv["modulus"].split(",")]
    gen_vec = [int(c) for c in kv["generator"].split(",")]
    gen = _digits_code(gen_vec, p)
    return FieldCtx(p, m, modulus, gen, tables=tables)


# ------------------------------------------------- generic group ops -------

def gpow(x, e, mul, one):
    """Square-and-multiply in any monoid."""
    assert e >= 0
    r = one
    while e:
        if e & 1:
            r = mul(r, x)
        x = mul(x, x)
        e >>= 1
    return r


def bsgs_dlog(base, target, order, *, mul, one):
    """Baby-step giant-step over any group with caller-supplied mul.

    Returns x in [0, order) with base^x = target.  Elements must be hashable.
    """
    order = int(order)
    assert order >= 1
    steps = math.isqrt(order) + 1
    baby = {}
    cur = one
    for j in range(steps):
        baby.setdefault(cur, j)
        cur = mul(cur, base)
    # cur is now base^steps; its inverse is base^(order - steps mod order)
    giant = gpow(base, (order - steps % order) % order, mul, one)
    gamma = target
    for i in range(steps + 1):
        j = baby.get(gamma)
        if j is not None:
            return (i * steps + j) % order
        gamma = mul(gamma, giant)
    raise NotInSubgroup("target not generated by base")


def find_generator(candidates, order, order_factors, *, mul, one):
    """First candidate of full order; order_factors must be complete."""
    checks = [order // r for r in sorted(order_factors)]
    for g in candidates:
        if g == one:
            continue
        if all(gpow(g, e, mul, one) != one for e in checks):
            if gpow(g, order, mul, one) != one:
                raise VerificationFailed(
                    "order factorization inconsistent with group")
            return g
    raise VerificationFailed("no generator among candidates")


# -------------------------------------------------- integer helpers --------

def _small_primes(limit=10000):
    sieve = bytearray([1]) * limit
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(sieve[i * i::i]))
    return [i for i in range(limit) if sieve[i]]


SMALL_PRIMES = _small_primes()

# enough bases for a deterministic test below 3.3 * 10^24
_MR_BASES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41]


def is_probable_prime(n):
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1

    def witness(a):
        x = pow(a, d, n)
        if x in (1, n - 1):
            return False
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                return False
        return True

    bases = list(_MR_BASES)
    if n >= 3_317_044_064_679_887_385_961_981:
        r = random.Random(n)
        bases += [r.randrange(2, n - 1) for _ in range(64)]
    return not any(witness(a) for a in bases)


def _brent_rho(n, rng, deadline=None):
    """One nontrivial factor of composite odd n, or None on deadline."""
    while True:
        y = rng.randrange(1, n)
        c = rng.randrange(1, n)
        m = 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            if deadline is not None and time.monotonic() > deadline:
                return None
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r <<= 1
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def _perfect_power(n):
    for b in range(2, n.bit_length() + 1):
        a = round(n ** (1.0 / b))
        for cand in (a - 1, a, a + 1):
            if cand >= 2 and cand ** b == n:
                return cand, b
    return None


def factor_int(n, *, deadline=None, rng=None):
    """Factor n >= 1.  Returns (factors, cofactor): factors maps certified
    primes to exponents; cofactor is 1 on completion, else the composite
    remainder left when the deadline struck."""
    assert n >= 1
    if rng is None:
        rng = random.Random(n)
    factors = {}
    for p in SMALL_PRIMES:
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
        if p * p > n:
            break
    cofactor = 1
    stack = [n] if n > 1 else []
    while stack:
        v = stack.pop()
        if v == 1:
            continue
        if is_probable_prime(v):
            factors[v] = factors.get(v, 0) + 1
            continue
        pp = _perfect_power(v)
        if pp is not None:
            a, b = pp
            stack.extend([a] * b)
            continue
        if deadline is not None and time.monotonic() > deadline:
            cofactor *= v
            continue
        d = _brent_rho(v, rng, deadline)
        if d is None:
            cofactor *= v
            continue
        stack.extend([d, v // d])
    return factors, cofactor
