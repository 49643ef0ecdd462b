"""Sparse medium subfield representation of F_{q^{2k}} and its log context.

The big field is F_{q^2}[X] / phi where phi is a degree-k irreducible
factor of h1*X^q - h0 and h0, h1 have tiny degree.  Setup searches for
(h0, h1), factors the defining polynomial to split off phi and the trap
factors, fixes the working prime ell and a generator, and provides the
constant-log and big-field-power services everything downstream uses.
"""

import time
import warnings as _pywarnings
from dataclasses import dataclass

from . import poly
from .errors import (DegenerateModulus, FactorizationTimeout,
                     NoRepresentationFound, VerificationFailed)
from .gf import (bsgs_dlog, ctx_from_text, factor_int, is_probable_prime,
                 parse_kv_text)
from .rng import stream

FACTOR_BUDGET = 60.0  # seconds of rho before giving up on the group order


@dataclass(frozen=True)
class SparseRep:
    ctx: object
    k: int
    h0: tuple
    h1: tuple          # monic
    phi: tuple         # monic irreducible of degree k
    traps: tuple       # monic irreducible factors != phi, repeated per mult
    family: str        # which search family produced (h0, h1)

    @property
    def delta(self):
        return max(poly.deg(self.h0), poly.deg(self.h1))

    @property
    def q(self):
        return self.ctx.q


def defining_poly(ctx, h0, h1):
    """h1*X^q - h0."""
    return poly.sub(ctx, poly.shift(h1, ctx.q), h0)


def make_sparse_rep(ctx, k, h0, h1, family="manual", phi=None):
    """Validate (h0, h1) and split phi from the traps.

    Returns None when h1*X^q - h0 has no simple degree-k irreducible
    factor (the search's common case).  Raises ValueError on malformed
    input: zero h1, gcd(h0, h1) != 1.
    """
    h0 = poly.norm(h0)
    h1 = poly.norm(h1)
    if not h1:
        raise ValueError("h1 must be nonzero")
    unit, h1 = poly.monic(ctx, h1)
    if unit != 1:
        h0 = poly.scale(ctx, ctx.inv(unit), h0)
    if poly.deg(poly.gcd(ctx, h0, h1)) != 0 and h0:
        raise ValueError("h0 and h1 must be coprime")
    if not h0:
        return None  # h1*X^q alone cannot carry a degree-k factor, k >= 2
    F = defining_poly(ctx, h0, h1)
    fac = poly.poly_factor(ctx, F)
    if phi is None:
        simple = [f for f, mt in fac.factors if poly.deg(f) == k and mt == 1]
        if not simple:
            return None
        phi = simple[0]
    else:
        if (phi, 1) not in fac.factors:
            raise ValueError("supplied phi is not a simple factor")
    traps = []
    for f, mt in fac.factors:
        if f == phi:
            mt -= 1
        traps.extend([f] * mt)
    for t in traps:
        assert poly.rem(ctx, h1, t), "trap divides h1 despite gcd(h0,h1)=1"
    check = poly.constant(fac.unit)
    for f in [phi] + traps:
        check = poly.mul(ctx, check, f)
    assert check == F, "factor split does not rebuild h1*X^q - h0"
    return SparseRep(ctx, k, h0, h1, phi, tuple(traps), family)


def _has_simple_degree_k_factor(ctx, F, k):
    """DDF-only pre-filter; no split work on the scan's misses.

    False negatives are impossible: a simple degree-k factor survives in
    F / gcd(F, F') and shows up at distinct-degree stage k.  False
    positives (multiplicity games) are fine; make_sparse_rep re-checks.
    """
    if poly.deg(F) < k:
        return False
    d1 = poly.derivative(ctx, F)
    if not d1:
        return False  # p-th power: every multiplicity is divisible by p
    g = poly.exact_div(ctx, F, poly.gcd(ctx, F, d1))
    Q = ctx.q2
    b = poly.X
    for s in range(1, k + 1):
        if poly.deg(g) < k:
            return False
        if poly.deg(g) < 2 * s:
            return poly.deg(g) == k  # remainder is irreducible
        b = poly.powmod(ctx, b, Q, g)
        h = poly.gcd(ctx, poly.sub(ctx, b, poly.X), g)
        if s == k:
            return poly.deg(h) >= k
        if poly.deg(h):
            g = poly.exact_div(ctx, g, h)
            b = poly.rem(ctx, b, g)
    return False


def find_sparse_rep(ctx, k, delta_max=2, strategy="scan", seed=0,
                    budget=8000):
    """Search for a representation with delta <= delta_max.

    Scan order climbs delta: degree-1 h0 over h1 = 1, then random
    degree-1 pairs, then the X^q + X^2 + a family, then all degree-2 h0
    over h1 = 1, then random pairs up to delta_max.  The low-delta-first
    order matters: relation numerators have degree (1+delta)*deg P, so a
    needlessly large delta wrecks smoothness rates downstream.
    """
    q2 = ctx.q2
    if not 1 <= k <= ctx.q + delta_max:
        raise ValueError(
            f"k={k} needs q + delta_max >= k; got q={ctx.q}, "
            f"delta_max={delta_max}")
    if delta_max > 2:
        _pywarnings.warn("delta > 2 is untested territory: trap descent "
                         "may loop", stacklevel=2)
    tried = 0

    def attempt(h0, h1, family):
        nonlocal tried
        tried += 1
        if not _has_simple_degree_k_factor(ctx, defining_poly(ctx, h0, h1), k):
            return None
        try:
            return make_sparse_rep(ctx, k, h0, h1, family)
        except ValueError:
            return None

    if strategy == "scan":
        if k <= ctx.q + 1:
            # X^q - c is a p-th power, so c1 starts at 1
            for c1 in range(1, q2):
                for c0 in range(q2):
                    rep = attempt(poly.norm((c0, c1)), poly.ONE, "linear")
                    if rep:
                        return rep
            rng = stream(seed, "rep:delta1")
            for _ in range(budget):
                v = rng.randrange(q2)
                h1 = (v, 1)
                h0 = poly.norm((rng.randrange(q2), rng.randrange(q2)))
                if not h0 or poly.peval(ctx, h0, ctx.neg(v)) == 0:
                    continue
                rep = attempt(h0, h1, "linear-ratio")
                if rep:
                    return rep
        if delta_max >= 2:
            for a in range(q2):
                h0 = poly.norm((ctx.neg(a), 0, ctx.neg(1)))
                rep = attempt(h0, poly.ONE, "quadratic-shift")
                if rep:
                    return rep
            for c2 in range(q2):
                for c1 in range(q2):
                    for c0 in range(q2):
                        rep = attempt(poly.norm((c0, c1, c2)), poly.ONE,
                                      "quadratic")
                        if rep:
                            return rep
    rng = stream(seed, "rep:random")
    for _ in range(budget):
        d1 = rng.randrange(delta_max + 1)
        h1 = poly.random_monic(ctx, d1, rng)
        h0 = poly.norm([rng.randrange(q2) for _ in range(delta_max + 1)])
        if not h0 or poly.deg(poly.gcd(ctx, h0, h1)) != 0:
            continue
        rep = attempt(h0, h1, "random")
        if rep:
            return rep
    raise NoRepresentationFound(
        f"no representation with delta <= {delta_max} for q={ctx.q}, "
        f"k={k} after {tried} candidates")


def group_order(rep):
    return rep.ctx.q2 ** rep.k - 1


def factor_group_order(rep, budget=FACTOR_BUDGET):
    """Complete factorization of q^{2k} - 1 as [(prime, exponent), ...]."""
    order = group_order(rep)
    deadline = time.monotonic() + budget
    factors, cof = factor_int(order, deadline=deadline)
    if cof > 1:
        raise FactorizationTimeout(order, factors, cof)
    out = sorted(factors.items())
    check = 1
    for p, e in out:
        check *= p ** e
    assert check == order
    return out


def _known_factors_with(order, ell):
    """Deterministic partial factorization: trial division plus ell.

    Used when ell is supplied explicitly so reloads do not depend on how
    far a time-boxed rho happened to get.
    """
    factors, cof = factor_int(order, deadline=time.monotonic() - 1.0)
    while cof % ell == 0:
        factors[ell] = factors.get(ell, 0) + 1
        cof //= ell
    return factors, cof


@dataclass(frozen=True)
class LogContext:
    rep: SparseRep
    ell: int
    order: int
    cofactor: int        # order // ell
    g: tuple             # generator of F_{q^{2k}}*, poly mod phi
    g_ell: tuple         # g^cofactor, generates the order-ell subgroup
    order_factors: tuple  # ((prime, exp), ...) certified primes
    unfactored: int      # composite remainder of the order, 1 if none
    const_gen: int       # element code generating F_{q^2}*
    const_hop: int       # (order/(q^2-1)) mod ell
    warnings: tuple

    @property
    def ctx(self):
        return self.rep.ctx

    def project(self, x):
        """x^(order/ell): the order-ell subgroup sees only log mod ell."""
        return big_field_pow(x, self.cofactor, self.rep)


def big_field_pow(x, e, rep):
    return poly.powmod(rep.ctx, x, e, rep.phi)


def _generator_checks(ctx, rep, cand, order, prime_list):
    for r in prime_list:
        if big_field_pow(cand, order // r, rep) == poly.ONE:
            return False
    if big_field_pow(cand, order, rep) != poly.ONE:
        raise VerificationFailed("group order is wrong")
    return True


def _subfield_gen_of(ctx, rep, g, order):
    """g^(order/(q^2-1)), landed in F_{q^2} and returned as a code."""
    c = big_field_pow(g, order // (ctx.q2 - 1), rep)
    assert poly.deg(c) <= 0, "norm of a field element left the subfield"
    return c[0] if c else 0


def _subfield_gen_ok(ctx, code):
    if code == 0:
        return False
    n = ctx.q2 - 1
    factors, cof = factor_int(n)
    assert cof == 1
    return all(ctx.pw(code, n // r) != 1 for r in factors)


def make_log_context(rep, ell=None, g=None, factor_budget=FACTOR_BUDGET):
    """Fix ell, certify a generator, precompute subgroup helpers.

    With ell=None the group order must factor completely (the default
    ell is its largest prime); FactorizationTimeout propagates with the
    partial result so the caller can pick ell and come back.  With ell
    given, certification degrades gracefully to the primes that trial
    division (plus ell itself) can see, and says so in warnings.
    """
    ctx = rep.ctx
    order = group_order(rep)
    warnings = []
    if ell is None:
        pairs = factor_group_order(rep, budget=factor_budget)
        factors = dict(pairs)
        unfactored = 1
        ell = max(factors)
    else:
        ell = int(ell)
        if not is_probable_prime(ell):
            raise ValueError(f"ell={ell} is not prime")
        if order % ell:
            raise ValueError(f"ell={ell} does not divide q^(2k)-1")
        factors, unfactored = _known_factors_with(order, ell)
        if unfactored > 1:
            warnings.append(
                f"group order only partially factored; generator certified "
                f"against {len(factors)} known primes "
                f"({unfactored.bit_length()}-bit cofactor unsplit)")
    if (ctx.q ** 3 - ctx.q) % ell == 0:
        warnings.append("ell divides q^3 - q: the design-rank argument "
                        "does not apply at this modulus")
    if ell <= ctx.q:
        warnings.append("ell <= q: trap coefficients q - v_P may vanish "
                        "mod ell")
    prime_list = sorted(factors)
    candidates = [g] if g is not None else \
        [poly.norm((c, 1)) for c in range(ctx.q2)]
    for cand in candidates:
        if not _generator_checks(ctx, rep, cand, order, prime_list):
            continue
        const_gen = _subfield_gen_of(ctx, rep, cand, order)
        if _subfield_gen_ok(ctx, const_gen):
            g = cand
            break
    else:
        raise VerificationFailed(
            "no generator candidate passed certification")
    cofactor = order // ell
    return LogContext(
        rep=rep, ell=ell, order=order, cofactor=cofactor, g=g,
        g_ell=big_field_pow(g, cofactor, rep),
        order_factors=tuple(sorted(factors.items())),
        unfactored=unfactored,
        const_gen=const_gen,
        const_hop=(order // (ctx.q2 - 1)) % ell,
        warnings=tuple(warnings),
    )


def const_log(c, lc):
    """log_g(c) mod ell for a constant c in F_{q^2}*."""
    assert c != 0
    ctx = lc.ctx
    if (ctx.q2 - 1) % lc.ell == 0:
        raise DegenerateModulus(
            f"ell={lc.ell} divides q^2-1; constant logs are not "
            f"determined by the subfield projection")
    s = bsgs_dlog(lc.const_gen, c, ctx.q2 - 1, mul=ctx.mul, one=1)
    return s * lc.const_hop % lc.ell


def subgroup_log(x, lc):
    """log_g(x) mod ell by baby-step giant-step in the order-ell subgroup.

    sqrt(ell) field multiplications: the base case everything else reduces
    to, and the direct pin for directions a relation lattice cannot see.
    """
    rep = lc.rep
    ctx = rep.ctx

    def mul(u, v):
        return poly.rem(ctx, poly.mul(ctx, u, v), rep.phi)

    return bsgs_dlog(lc.g_ell, lc.project(x), lc.ell, mul=mul, one=poly.ONE)


# ------------------------------------------------------------ file form ----

def context_to_text(lc):
    rep = lc.rep
    ctx = rep.ctx
    gen_vec = ",".join(str(c) for c in ctx.elem_vec(ctx.generator))
    lines = [
        f"p: {ctx.p}",
        f"m: {ctx.m}",
        f"modulus: {','.join(str(c) for c in ctx.modulus)}",
        f"ctx_generator: {gen_vec}",
        f"k: {rep.k}",
        f"h0: {poly.poly_to_text(rep.h0)}",
        f"h1: {poly.poly_to_text(rep.h1)}",
        f"phi: {poly.poly_to_text(rep.phi)}",
        f"traps: {';'.join(poly.poly_to_text(t) for t in rep.traps)}",
        f"family: {rep.family}",
        f"ell: {lc.ell}",
        f"generator: {poly.poly_to_text(lc.g)}",
    ]
    return "\n".join(lines) + "\n"


def context_from_text(text, factor_budget=FACTOR_BUDGET):
    kv = parse_kv_text(text)
    ctx = ctx_from_text("\n".join([
        f"p: {kv['p']}", f"m: {kv['m']}", f"modulus: {kv['modulus']}",
        f"generator: {kv['ctx_generator']}"]))
    rep = make_sparse_rep(
        ctx, int(kv["k"]), poly.poly_from_text(kv["h0"]),
        poly.poly_from_text(kv["h1"]), kv.get("family", "manual"),
        phi=poly.poly_from_text(kv["phi"]))
    assert rep is not None
    saved = tuple(poly.poly_from_text(t)
                  for t in kv["traps"].split(";") if t)
    if saved != rep.traps:
        raise VerificationFailed("trap list in file does not match the "
                                 "defining polynomial")
    return make_log_context(rep, ell=int(kv["ell"]),
                            g=poly.poly_from_text(kv["generator"]),
                            factor_budget=factor_budget)
