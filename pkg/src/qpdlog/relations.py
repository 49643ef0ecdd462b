"""Relation generation and the linear systems built on it.

Everything rests on one identity over F_{q^2}:

    Y^q Z - Y Z^q = Z * prod_{alpha in F_q} (Y - alpha Z).

For a coset representative m = (a b; c d) and a monic target P,
substituting Y = a P + b and Z = c P + d turns the right side into a
constant times the product of translates P - mu over the block of m, while
the defining equation X^q = h0/h1 collapses the left side, mod phi, to a
polynomial of degree at most (1 + delta) deg P over a power of h1.  Cosets
whose numerator is B-smooth become rows tying the block's translates to
logarithms of low-degree polynomials: sieve_relations collects such rows
into the descent matrix H(P), descend_step solves against the unit target
vector, and base_linear_system runs the same machinery at P = X to pin
down every monic linear polynomial at once.  Trap factors of h1 X^q - h0
get their own direct relation (trap_relation) instead of a descent step.

The optional two-polynomial mode substitutes Y = a P + b P1, Z = c P + d P1
and produces translates P - mu P1; the plain mode is P1 = 1.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import poly
from .cosets import enumerate_cosets, incidence_vector
from .errors import (BaseSystemRankDeficient, NonInvertibleCoefficient,
                     RankDeficient, TrapLoop, VerificationFailed)
from .linalg import RankTracker, solve_left, solve_right
from .rep import big_field_pow, const_log, subgroup_log

RANK_MARGIN = 16       # extra rows collected beyond full rank
SPOT_CHECK_EVERY = 100  # field-identity check on every 100th accepted row
_CHUNK = 64            # accepted rows per incremental rank update


@dataclass(frozen=True, eq=False)
class RelationCandidate:
    coset: object        # CosetRep
    numerator: tuple     # poly over F_{q^2}, degree <= (1+delta) deg P
    h1_power: int        # s: the cleared denominator is h1^s
    lam: int             # constant of the identity, in F_{q^2}*
    rhs: np.ndarray      # uint8 incidence vector of the block


@dataclass(frozen=True, eq=False)
class Relation:
    candidate: RelationCandidate
    lhs: poly.Factorization   # of the numerator, all degrees <= B


@dataclass(eq=False)
class RelationMatrix:
    rows: list           # Relations, pairwise distinct coset keys
    H: np.ndarray        # int64 incidence rows, shape (len(rows), q^2+1)
    tried: int           # cosets consumed from the stream

    @property
    def accepted(self):
        return len(self.rows)

    @property
    def rate(self):
        return self.accepted / self.tried if self.tried else 0.0


@dataclass(frozen=True, eq=False)
class TrapRelation:
    trap: tuple
    v_P: int                        # valuation of the trap in R
    rhs_factors: poly.Factorization  # of R / trap^v_P
    constant: int                   # its unit, in F_{q^2}*


@dataclass(eq=False)
class DescendStep:
    target: tuple
    children: tuple      # ((monic irreducible, exponent mod ell), ...)
    h1_exp: int
    const_log_total: int
    rows_used: int
    tried: int
    combination: tuple = ()   # ((homography, coefficient mod ell), ...)
    aux: tuple = None


def twist_star(ctx, P, h0, h1):
    """h1^deg(P) * Ptilde(h0/h1) as a polynomial: sum of
    p_i^q * h0^i * h1^(deg P - i)."""
    D = poly.deg(P)
    assert D >= 0
    h0pow = [poly.ONE]
    h1pow = [poly.ONE]
    for _ in range(D):
        h0pow.append(poly.mul(ctx, h0pow[-1], h0))
        h1pow.append(poly.mul(ctx, h1pow[-1], h1))
    acc = poly.ZERO
    for i, c in enumerate(P):
        if not c:
            continue
        term = poly.scale(ctx, ctx.frob(c),
                          poly.mul(ctx, h0pow[i], h1pow[D - i]))
        acc = poly.add(ctx, acc, term)
    return acc


class _CandidateFamily:
    """Per-target state shared across the coset stream.

    With A = twist_star(P) and A1 = twist_star(P1) * h1^(deg P - deg P1),
    the numerator for m = (a b; c d) is

        (a~ c - a c~) A*P + (b~ c - a d~) A1*P
        + (a~ d - b c~) A*P1 + (b~ d - b d~) A1*P1

    (entrywise ~ = q-th power), so each coset costs four coefficient
    combinations of fixed polynomials.
    """

    def __init__(self, rep, P, aux=None):
        ctx = rep.ctx
        P = poly.norm(P)
        aux = poly.ONE if aux is None else poly.norm(aux)
        D, D1 = poly.deg(P), poly.deg(aux)
        assert poly.is_monic(P) and 1 <= D <= rep.k - 1
        assert 0 <= D1 < D, "auxiliary degree must be below the target's"
        self.ctx = ctx
        self.rep = rep
        self.P = P
        self.aux = aux
        self.s = D
        A = twist_star(ctx, P, rep.h0, rep.h1)
        A1 = twist_star(ctx, aux, rep.h0, rep.h1)
        for _ in range(D - D1):
            A1 = poly.mul(ctx, A1, rep.h1)
        basis = (poly.mul(ctx, A, P), poly.mul(ctx, A1, P),
                 poly.mul(ctx, A, aux), poly.mul(ctx, A1, aux))
        self._len = max(len(u) for u in basis)
        self._terms = [tuple((i, c) for i, c in enumerate(u) if c)
                       for u in basis]
        self._vals = {}   # xi -> (P(xi), aux(xi)) cache for lam()

    def numerator(self, m):
        ctx = self.ctx
        a, b, c, d = m
        fa, fb = ctx.frob(a), ctx.frob(b)
        fc, fd = ctx.frob(c), ctx.frob(d)
        mul, add, sub = ctx.mul, ctx.add, ctx.sub
        coefs = (sub(mul(fa, c), mul(a, fc)),
                 sub(mul(fb, c), mul(a, fd)),
                 sub(mul(fa, d), mul(b, fc)),
                 sub(mul(fb, d), mul(b, fd)))
        out = [0] * self._len
        for t, terms in zip(coefs, self._terms):
            if not t:
                continue
            for i, c0 in terms:
                out[i] = add(out[i], mul(t, c0))
        return poly.norm(out)

    def lam(self, m, block):
        """The constant of the identity, by evaluating both sides at the
        first xi where the translate product is nonzero.  When the value
        set of P covers the whole block (possible only for tiny q) fall
        back to collecting the constants of the product form directly."""
        ctx = self.ctx
        a, b, c, d = m
        inf = ctx.q2
        for xi in range(ctx.q2):
            if xi in self._vals:
                pv, av = self._vals[xi]
            else:
                pv = poly.peval(ctx, self.P, xi)
                av = poly.peval(ctx, self.aux, xi)
                self._vals[xi] = (pv, av)
            rhs = 1
            for mu in block:
                f = av if mu == inf else ctx.sub(pv, ctx.mul(mu, av))
                if f == 0:
                    rhs = 0
                    break
                rhs = ctx.mul(rhs, f)
            if rhs == 0:
                continue
            y = ctx.add(ctx.mul(a, pv), ctx.mul(b, av))
            z = ctx.add(ctx.mul(c, pv), ctx.mul(d, av))
            lhs = ctx.sub(ctx.mul(ctx.frob(y), z), ctx.mul(y, ctx.frob(z)))
            return ctx.div(lhs, rhs)
        return self._lam_product(m)

    def _lam_product(self, m):
        # Y^q Z - Y Z^q = Z prod (Y - alpha Z): the constant is the product
        # of the leading coefficients of the q+1 factors
        ctx = self.ctx
        a, b, c, d = m
        lam = c if c else d
        for alpha in ctx.subfield:
            t = ctx.sub(a, ctx.mul(alpha, c))
            lam = ctx.mul(lam, t if t else ctx.sub(b, ctx.mul(alpha, d)))
        return lam


def candidate_family(rep, P, aux=None):
    """Shared per-target state for building many candidates against P."""
    return _CandidateFamily(rep, P, aux)


def build_candidate(P, rep, coset, aux=None, family=None):
    """Candidate relation for one coset; numerator, cleared h1 power, the
    identity constant, and the block incidence vector."""
    fam = family if family is not None else _CandidateFamily(rep, P, aux)
    num = fam.numerator(coset.m)
    assert num, "zero numerator: coset matrix is singular"
    assert poly.deg(num) <= (1 + rep.delta) * fam.s
    assert poly.rem(rep.ctx, num, rep.phi), "phi divides a numerator"
    return RelationCandidate(coset=coset, numerator=num, h1_power=fam.s,
                             lam=fam.lam(coset.m, coset.block),
                             rhs=incidence_vector(rep.ctx, coset))


def candidate_identity_ok(cand, rep, P, aux=None):
    """Check numerator = lam * h1^s * prod over the block of (P - mu*aux),
    with aux itself standing in at mu = infinity, as elements mod phi."""
    ctx = rep.ctx
    aux = poly.ONE if aux is None else poly.norm(aux)
    inf = ctx.q2
    acc = poly.scale(ctx, cand.lam,
                     poly.powmod(ctx, rep.h1, cand.h1_power, rep.phi))
    for mu in cand.coset.block:
        f = aux if mu == inf else poly.sub(ctx, P, poly.scale(ctx, mu, aux))
        acc = poly.rem(ctx, poly.mul(ctx, acc, f), rep.phi)
    return acc == poly.rem(ctx, cand.numerator, rep.phi)


def sieve_relations(P, rep, B=None, lc=None, *, strategy="stream",
                    budget=None, margin=RANK_MARGIN, shuffle_seed=None,
                    spot_check=SPOT_CHECK_EVERY, aux=None):
    """Stream cosets and keep those whose numerator is B-smooth, tracking
    rank over F_ell until it reaches q^2+1 (plus a margin of extra rows).

    strategy "stream" accepts rows in stream order and stops as soon as
    the rank target is met; "greedy" exhausts the stream (or the budget)
    first, then keeps rank-increasing rows preferring small maximum factor
    degree, which lowers the degrees a later descent step has to recurse
    into.  Raises RankDeficient, carrying the partial matrix, if the
    stream ends below full rank.
    """
    assert lc is not None, "rank tracking needs the working prime"
    ctx = rep.ctx
    D = poly.deg(P)
    if B is None:
        B = (D + 1) // 2
    assert B >= max(1, (D + 1) // 2), "bound below ceil(D/2) loses Prop. 1"
    assert strategy in ("stream", "greedy")
    fam = _CandidateFamily(rep, P, aux)
    tester = poly.SmoothTester(ctx, B)
    ncols = ctx.q2 + 1
    tracker = RankTracker(ncols, lc.ell)
    rows = []
    vecs = []
    chunk = []
    tried = 0
    extras = 0
    full = False

    def flush():
        nonlocal full
        if chunk:
            tracker.add_rows(chunk)
            chunk.clear()
            full = tracker.rank == ncols

    for cr in enumerate_cosets(ctx, shuffle_seed=shuffle_seed):
        if budget is not None and tried >= budget:
            break
        tried += 1
        num = fam.numerator(cr.m)
        assert num, "zero numerator: coset matrix is singular"
        if not tester.test(num):
            continue
        lhs = poly.poly_factor(ctx, num)
        assert lhs.max_degree() <= B
        cand = RelationCandidate(coset=cr, numerator=num, h1_power=fam.s,
                                 lam=fam.lam(cr.m, cr.block),
                                 rhs=incidence_vector(ctx, cr))
        if spot_check and len(rows) % spot_check == 0:
            if not candidate_identity_ok(cand, rep, P, aux=aux):
                raise VerificationFailed(
                    f"relation identity failed at coset {cand.coset.key.hex()}")
        rows.append(Relation(candidate=cand, lhs=lhs))
        vecs.append(cand.rhs.astype(np.int64))
        if strategy == "greedy":
            continue
        if full:
            extras += 1
            if extras >= margin:
                break
        else:
            chunk.append(vecs[-1])
            if len(chunk) >= _CHUNK:
                flush()
    flush()

    if strategy == "greedy":
        rows, vecs, full = _greedy_select(rows, vecs, ncols, lc.ell, margin)

    H = (np.stack(vecs) if vecs
         else np.zeros((0, ncols), dtype=np.int64))
    mat = RelationMatrix(rows=rows, H=H, tried=tried)
    if not full:
        raise RankDeficient(
            f"rank {tracker.rank} of {ncols} after {tried} cosets "
            f"({len(rows)} rows accepted)",
            rank=tracker.rank, needed=ncols, rows=len(rows), matrix=mat)
    return mat


def _greedy_select(rows, vecs, ncols, ell, margin):
    """Re-add accepted rows in order of max lhs factor degree, keeping the
    rank-increasing ones, then pad with the lowest-degree leftovers."""
    order = sorted(range(len(rows)),
                   key=lambda i: (rows[i].lhs.max_degree(), i))
    tracker = RankTracker(ncols, ell)
    keep = []
    spare = []
    for i in order:
        if tracker.rank < ncols and tracker.add_row(vecs[i]):
            keep.append(i)
        else:
            spare.append(i)
    full = tracker.rank == ncols
    keep.extend(spare[:margin])
    keep.sort()
    return [rows[i] for i in keep], [vecs[i] for i in keep], full


def trap_relation(T, rep, lc):
    """Direct relation for a trap factor T of h1 X^q - h0.

    R = twist_star(T) is divisible by T; with v its valuation and
    R' = R / T^v, the identity T^(q-v) * h1^deg(T) = unit(R') * prod Q_i^e_i
    holds mod phi, expressing log T through smaller non-trap polynomials.
    """
    ctx = rep.ctx
    assert T in rep.traps, "trap relations only apply to trap factors"
    D = poly.deg(T)
    R = twist_star(ctx, T, rep.h0, rep.h1)
    v = 0
    body = R
    while True:
        quo, r = poly.divrem(ctx, body, T)
        if r:
            break
        body = quo
        v += 1
    assert 1 <= v <= rep.delta, "trap valuation escaped its bound"
    assert poly.deg(body) <= (rep.delta - 1) * D
    fac = poly.poly_factor(ctx, body)
    for Q, _ in fac.factors:
        if Q in rep.traps:
            raise TrapLoop(
                f"trap relation for {poly.poly_to_text(T)} produced trap "
                f"{poly.poly_to_text(Q)}")
    if math.gcd(ctx.q - v, lc.ell) != 1:
        raise NonInvertibleCoefficient(
            f"q - v_P = {ctx.q - v} is not invertible mod {lc.ell}")
    return TrapRelation(trap=T, v_P=v, rhs_factors=fac, constant=fac.unit)


def descend_step(P, rep, lc, db=None, *, B=None, margin=RANK_MARGIN,
                 budget=None, shuffle_seed=None, strategy="stream",
                 spot_check=SPOT_CHECK_EVERY, aux=None):
    """One descent layer: express log P through logs of degree <= B.

    Sieves relations for P, solves x . H = e_{mu0} over F_ell (mu0 the
    column of the translate P - 0), and aggregates over the used rows the
    exponent of every numerator factor, of h1, and the constant
    contribution.  Strict mode propagates RankDeficient from the sieve.

    With aux = P1 the relation lattice runs over P - mu * P1 instead of
    P - mu, and the infinity column carries P1 itself: its solved
    coefficient is moved to the children (as the irreducible factors of
    P1), which may therefore exceed the degree bound B.
    """
    ctx = rep.ctx
    P = poly.norm(P)
    D = poly.deg(P)
    assert poly.is_monic(P) and 2 <= D <= rep.k - 1
    assert poly.is_irreducible(ctx, P), "descend only irreducible targets"
    assert P not in rep.traps, "traps go through trap_relation"
    inf = ctx.q2
    ncols = ctx.q2 + 1

    mat = sieve_relations(P, rep, B, lc, strategy=strategy, budget=budget,
                          margin=margin, shuffle_seed=shuffle_seed,
                          spot_check=spot_check, aux=aux)
    entries = []   # (s, unit * lam^-1, lhs factors) per sieved row
    vecs = []
    for rel in mat.rows:
        cconst = ctx.mul(rel.lhs.unit, ctx.inv(rel.candidate.lam))
        entries.append((rel.candidate.h1_power, cconst, rel.lhs.factors))
        vecs.append(rel.candidate.rhs.astype(np.int64))

    # with aux the infinity column is an output, not a constraint
    width = ncols if aux is None else inf
    target = np.zeros(width, dtype=np.int64)
    target[0] = 1
    x = solve_left([v[:width] for v in vecs], target, lc.ell)

    ell = lc.ell
    counts = {}
    h1e = 0
    ctot = 0
    combo = []
    aux_exp = 0
    for xm, rel, (s, cconst, factors), vec in zip(x, mat.rows, entries, vecs):
        if xm == 0:
            continue
        combo.append((rel.candidate.coset.m, xm))
        h1e = (h1e - xm * s) % ell
        ctot = (ctot + xm * const_log(cconst, lc)) % ell
        aux_exp = (aux_exp + xm * int(vec[inf])) % ell
        for f, e in factors:
            counts[f] = (counts.get(f, 0) + xm * e) % ell
    loose = set()
    if aux is not None and aux_exp:
        afac = poly.poly_factor(ctx, poly.norm(aux))
        ctot = (ctot - aux_exp * const_log(afac.unit, lc)) % ell
        for f, e in afac.factors:
            counts[f] = (counts.get(f, 0) - aux_exp * e) % ell
            loose.add(f)
    children = tuple(
        (f, c) for f, c in sorted(counts.items(),
                                  key=lambda fe: (poly.deg(fe[0]), fe[0]))
        if c)
    bound = B if B is not None else (D + 1) // 2
    assert all(poly.deg(f) <= bound for f, _ in children if f not in loose)
    assert len(children) <= (1 + rep.delta) * D * ncols
    return DescendStep(target=P, children=children, h1_exp=h1e,
                       const_log_total=ctot, rows_used=len(combo),
                       tried=mat.tried, combination=tuple(combo),
                       aux=poly.norm(aux) if aux is not None else None)


@dataclass(eq=False)
class BaseSystem:
    entries: dict        # poly -> log mod ell, every monic linear included
    width: int           # q^2 + number of degree->=2 factors of h1
    rows: int
    tried: int


def base_linear_system(rep, lc, *, margin=RANK_MARGIN):
    """Solve the P = X system for the logs of all monic linears X + a and
    of h1's degree->=2 irreducible factors.

    Every block membership and every 1-smooth numerator factor is a linear
    unknown, so each accepted coset gives one row; relations for linear
    traps are appended, and the generator's own column is pinned to
    log g = 1 (all the constant right-hand sides live in F_{q^2}, whose
    order-ell part is trivial, so without the pin the system is
    homogeneous and determines logs only up to scale).  Every solved log
    is verified in the order-ell subgroup before anything is returned.
    """
    ctx = rep.ctx
    q2 = ctx.q2
    ell = lc.ell
    hfac = poly.poly_factor(ctx, rep.h1)
    assert hfac.unit == 1
    wide = [f for f, _ in hfac.factors if poly.deg(f) >= 2]
    hidx = {f: q2 + i for i, f in enumerate(wide)}
    width = q2 + len(wide)
    hexp = np.zeros(width, dtype=np.int64)
    for f, e in hfac.factors:
        hexp[f[0] if poly.deg(f) == 1 else hidx[f]] += e

    fam = _CandidateFamily(rep, poly.X)
    inf = q2
    tracker = RankTracker(width, ell)
    rows = []
    rhs = []
    chunk = []
    tried = 0
    extras = 0
    full = False   # coefficient rank tops out one short of the width:
    # scaling every true log solves the homogeneous part too

    def flush():
        nonlocal full
        if chunk:
            tracker.add_rows(chunk)
            chunk.clear()
            full = tracker.rank >= width - 1

    for cr in enumerate_cosets(ctx):
        tried += 1
        num = fam.numerator(cr.m)
        assert num
        fac = poly.poly_factor(ctx, num)
        if fac.max_degree() > 1:
            continue
        v = np.zeros(width, dtype=np.int64)
        for mu in cr.block:
            if mu != inf:
                v[ctx.neg(mu)] += 1
        for f, e in fac.factors:
            v[f[0]] -= e
        v += hexp    # s = deg X = 1
        lam = fam.lam(cr.m, cr.block)
        rows.append(v % ell)
        rhs.append(const_log(ctx.mul(fac.unit, ctx.inv(lam)), lc))
        if full:
            extras += 1
            if extras >= margin:
                break
        else:
            chunk.append(rows[-1])
            if len(chunk) >= _CHUNK:
                flush()
    flush()

    if rep.delta <= 1:
        # Frobenius rows: h1 (X+a)^q = h0 + a^q h1 stays linear, tying each
        # monic linear to its twist.  The coset stream can stall one short
        # of width - 1 for some h, and these closures cut that kernel.
        for a in range(q2):
            R = poly.add(ctx, rep.h0, poly.scale(ctx, ctx.frob(a), rep.h1))
            assert 0 <= poly.deg(R) <= 1
            v = np.zeros(width, dtype=np.int64)
            v[a] += ctx.q
            v += hexp
            lead = R[-1]
            if poly.deg(R) == 1:
                v[ctx.div(R[0], lead)] -= 1
            rows.append(v % ell)
            rhs.append(const_log(lead, lc))

    for T in dict.fromkeys(rep.traps):
        if poly.deg(T) != 1:
            continue     # wider traps are handled during descent
        tr = trap_relation(T, rep, lc)
        v = np.zeros(width, dtype=np.int64)
        v[T[0]] += ctx.q - tr.v_P
        v += hexp        # D = 1
        for f, e in tr.rhs_factors.factors:
            v[f[0]] -= e  # degree <= delta - 1, so always linear
        rows.append(v % ell)
        rhs.append(const_log(tr.constant, lc))

    assert poly.deg(lc.g) == 1, "the scale pin needs a linear generator"
    v = np.zeros(width, dtype=np.int64)
    v[lc.g[0]] = 1
    rows.append(v)
    rhs.append(1)

    # every lattice row descends from X^q = h0/h1, which holds modulo each
    # irreducible factor of h1 X^q - h0, so a trap T with ell | q^(2 deg T)-1
    # admits a parasite solution (logs taken mod T instead of mod phi) the
    # rows cannot reject.  Pin one column per parasite with a direct
    # subgroup log; the final verification pass guards the result either way.
    allowance = 2 + sum(1 for T in dict.fromkeys(rep.traps)
                        if (q2 ** poly.deg(T) - 1) % ell == 0)
    pins = (a for a in range(q2) if a != lc.g[0])
    while True:
        try:
            u = solve_right(rows, rhs, ell)
            break
        except RankDeficient as exc:
            if allowance == 0:
                raise BaseSystemRankDeficient(
                    f"base system rank {exc.rank} of {width} "
                    f"({len(rows)} rows from {tried} cosets)",
                    rank=exc.rank, needed=width, rows=len(rows)) from None
            allowance -= 1
            a = next(pins)
            v = np.zeros(width, dtype=np.int64)
            v[a] = 1
            rows.append(v)
            rhs.append(subgroup_log((a, 1), lc))

    entries = {}
    for a in range(q2):
        entries[(a, 1)] = u[a]
    for f, i in hidx.items():
        entries[f] = u[i]
    for pol, val in entries.items():
        if lc.project(pol) != big_field_pow(lc.g_ell, val, rep):
            raise VerificationFailed(
                f"log of {poly.poly_to_text(pol)} failed the subgroup check")
    return BaseSystem(entries=entries, width=width, rows=len(rows),
                      tried=tried)


def dump_relations(matrix, out):
    """Debug dump, one line per relation:

        <coset key hex> <s> <lam> <unit>*<poly>^<e>*...

    with polynomials in little-endian comma form.
    """
    for rel in matrix.rows:
        c = rel.candidate
        fs = "*".join(
            [str(rel.lhs.unit)]
            + [f"{poly.poly_to_text(f)}^{e}" for f, e in rel.lhs.factors])
        out.write(f"{c.coset.key.hex()} {c.h1_power} {c.lam} {fs}\n")
