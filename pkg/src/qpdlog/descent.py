"""Descent orchestration above the relation layer.

compute_base seeds a verified log database with every monic linear
polynomial (and, for base_degree >= 2, every monic irreducible polynomial
up to that degree, solved jointly over the coset stream).  descend factors
its target and resolves each irreducible factor through the database, a
trap substitution, or a descend_step whose children recurse, assembling a
certificate tree as it goes.  full_dlog runs Pohlig-Hellman over the
factored group order, routing large prime factors through a descent
context and small ones through baby-step giant-step, and checks the
combined answer with one exponentiation.

Certificates are self-contained: every row of every step is stored as a
homography plus its solved coefficient, so replay_certificate can reverify
the whole tree with field arithmetic only, no linear algebra.
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import poly
from .cosets import CosetRep, block_of
from .errors import (BaseSystemRankDeficient, CycleDetected,
                     DeadlineExceeded, PrimePowerFailed, RankDeficient,
                     VerificationFailed)
from .gf import bsgs_dlog, gpow
from .linalg import LinearSystem
from .relations import (RANK_MARGIN, base_linear_system, build_candidate,
                        candidate_identity_ok, descend_step, sieve_relations,
                        trap_relation)
from .rep import (big_field_pow, const_log, factor_group_order, group_order,
                  make_log_context)

PH_THRESHOLD = 1 << 20   # primes above this descend; below, generic walks
BSGS_CAP = 1 << 30       # largest subgroup a generic walk will accept
PROVENANCES = ("base-system", "descent", "trap", "constant")
_WARN_BASE_DEGREE = 2    # q^(2 base_degree) unknowns: warn past this


def verify_log(target, value, lc):
    """Order-ell subgroup check: target^(order/ell) = (g^(order/ell))^value."""
    t = poly.rem(lc.ctx, poly.norm(target), lc.rep.phi)
    if not t:
        return False
    return lc.project(t) == big_field_pow(lc.g_ell, int(value) % lc.ell,
                                          lc.rep)


# ------------------------------------------------------------ database ----

class LogDB:
    """Verified map from canonical monic irreducible polynomials to their
    logarithms mod ell.

    insert refuses values that fail verify_log, so everything read back is
    correct by construction; inserting an existing key demands the same
    value (insert-if-absent semantics otherwise).  The text form is a
    short header naming the representation, then one sorted line per
    entry, `poly:value:provenance`; load feeds every line back through
    insert, so a tampered file fails verification rather than parsing.
    """

    HEADER = "qpdlog logdb v1"

    def __init__(self, lc):
        self.lc = lc
        self._vals = {}
        self._prov = {}

    def __len__(self):
        return len(self._vals)

    def __contains__(self, pol):
        return poly.norm(pol) in self._vals

    def __getitem__(self, pol):
        return self._vals[poly.norm(pol)]

    def get(self, pol):
        return self._vals.get(poly.norm(pol))

    def provenance(self, pol):
        return self._prov[poly.norm(pol)]

    def items(self):
        return self._vals.items()

    def insert(self, pol, value, provenance):
        assert provenance in PROVENANCES
        pol = poly.norm(pol)
        assert poly.is_monic(pol) and poly.is_irreducible(self.lc.ctx, pol)
        value = int(value) % self.lc.ell
        old = self._vals.get(pol)
        if old is not None:
            if old != value:
                raise VerificationFailed(
                    f"conflicting reinsert for {poly.poly_to_text(pol)}: "
                    f"{old} vs {value}")
            return value
        if not verify_log(pol, value, self.lc):
            raise VerificationFailed(
                f"log {value} of {poly.poly_to_text(pol)} fails the "
                f"subgroup check")
        self._vals[pol] = value
        self._prov[pol] = provenance
        return value

    def save(self, out):
        rep = self.lc.rep
        out.write(self.HEADER + "\n")
        out.write(f"rep: q={rep.q} k={rep.k} "
                  f"h0={poly.poly_to_text(rep.h0)} "
                  f"h1={poly.poly_to_text(rep.h1)}\n")
        out.write(f"ell: {self.lc.ell}\n")
        out.write(f"g: {poly.poly_to_text(self.lc.g)}\n")
        for pol in sorted(self._vals, key=lambda f: (poly.deg(f), f)):
            out.write(f"{poly.poly_to_text(pol)}:{self._vals[pol]}:"
                      f"{self._prov[pol]}\n")

    @classmethod
    def load(cls, fh, lc):
        lines = [ln.rstrip("\n") for ln in fh]
        if not lines or lines[0] != cls.HEADER:
            raise VerificationFailed("not a log database file")
        rep = lc.rep
        want = {
            "rep": (f"q={rep.q} k={rep.k} h0={poly.poly_to_text(rep.h0)} "
                    f"h1={poly.poly_to_text(rep.h1)}"),
            "ell": str(lc.ell),
            "g": poly.poly_to_text(lc.g),
        }
        body = 1
        for ln in lines[1:4]:
            key, _, val = ln.partition(": ")
            if key not in want or want[key] != val:
                raise VerificationFailed(
                    f"database header mismatch on {ln!r}")
            body += 1
        db = cls(lc)
        for ln in lines[body:]:
            if not ln:
                continue
            text, value, prov = ln.rsplit(":", 2)
            db.insert(poly.poly_from_text(text), int(value), prov)
        return db


# -------------------------------------------------------- certificates ----

@dataclass(eq=False)
class CertNode:
    """One node of a descent certificate.

    At every non-leaf node

        value = const + sum(exponent * child.value)   (mod ell)

    with the h1 contribution already folded into the children, so replay
    needs no side table.  kind is leaf (database entry), product
    (factorization of a composite or non-monic target), trap
    (trap_relation substitution, v_P set), or descent (one descend_step;
    combination holds its rows as (homography, coefficient) pairs).
    h1_exp keeps the raw step coefficient of log h1 for inspection.
    """
    kind: str
    target: tuple
    value: int
    const: int = 0
    h1_exp: int = 0
    v_P: int = 0
    combination: tuple = ()
    aux: tuple = None
    children: tuple = ()     # ((exponent mod ell, CertNode), ...)

    def depth(self):
        return 1 + max((ch.depth() for _, ch in self.children), default=0)

    def node_count(self):
        return 1 + sum(ch.node_count() for _, ch in self.children)

    def max_arity(self):
        return max([len(self.children)]
                   + [ch.max_arity() for _, ch in self.children])


CERT_HEADER = "qpdlog descent-certificate v1"


def certificate_to_text(node, lc):
    """Stable indented text form; two spaces per tree level."""
    rep = lc.rep
    lines = [
        CERT_HEADER,
        (f"rep: q={rep.q} k={rep.k} h0={poly.poly_to_text(rep.h0)} "
         f"h1={poly.poly_to_text(rep.h1)}"),
        f"ell: {lc.ell}",
        f"target: {poly.poly_to_text(node.target)}",
        f"value: {node.value}",
    ]

    def emit(n, exp, depth):
        tok = ["  " * depth + (f"^{exp}" if exp is not None else "|"),
               n.kind, poly.poly_to_text(n.target), "=", str(n.value)]
        if n.kind in ("product", "trap", "descent"):
            tok.append(f"const={n.const}")
        if n.kind == "trap":
            tok.append(f"v={n.v_P}")
            tok.append(f"h1={n.h1_exp}")
        if n.kind == "descent":
            tok.append(f"h1={n.h1_exp}")
            if n.aux is not None:
                tok.append(f"aux={poly.poly_to_text(n.aux)}")
            tok.append("rows=" + ";".join(
                f"{a}.{b}.{c}.{d}*{x}" for (a, b, c, d), x in n.combination))
        lines.append(" ".join(tok))
        for e, ch in n.children:
            emit(ch, e, depth + 1)

    emit(node, None, 0)
    return "\n".join(lines) + "\n"


def parse_certificate(text):
    """Inverse of certificate_to_text: returns (root CertNode, meta dict)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CERT_HEADER:
        raise VerificationFailed("not a descent certificate")
    meta = {}
    i = 1
    while i < len(lines) and ": " in lines[i] and not lines[i].startswith(" ") \
            and lines[i].split(": ", 1)[0] in ("rep", "ell", "target", "value"):
        key, val = lines[i].split(": ", 1)
        meta[key] = val
        i += 1

    def parse_node(ln):
        stripped = ln.lstrip(" ")
        depth, rem = (len(ln) - len(stripped)) // 2, stripped.split(" ")
        head, kind, target, eq, value = rem[:5]
        exp = None if head == "|" else int(head[1:])
        if eq != "=":
            raise VerificationFailed(f"malformed certificate line {ln!r}")
        node = CertNode(kind=kind, target=poly.poly_from_text(target),
                        value=int(value))
        for tok in rem[5:]:
            key, _, val = tok.partition("=")
            if key == "const":
                node.const = int(val)
            elif key == "v":
                node.v_P = int(val)
            elif key == "h1":
                node.h1_exp = int(val)
            elif key == "aux":
                node.aux = poly.poly_from_text(val)
            elif key == "rows" and val:
                rows = []
                for part in val.split(";"):
                    m, x = part.split("*")
                    rows.append((tuple(int(c) for c in m.split(".")), int(x)))
                node.combination = tuple(rows)
        return depth, exp, node

    root = None
    stack = []   # (depth, node) path to the current rightmost branch
    for ln in lines[i:]:
        depth, exp, node = parse_node(ln)
        if root is None:
            assert depth == 0 and exp is None
            root = node
            stack = [(0, node)]
            continue
        while stack and stack[-1][0] >= depth:
            stack.pop()
        if not stack or stack[-1][0] != depth - 1:
            raise VerificationFailed(f"broken certificate indentation {ln!r}")
        parent = stack[-1][1]
        parent.children = parent.children + ((exp, node),)
        stack.append((depth, node))
    if root is None:
        raise VerificationFailed("certificate has no tree")
    return root, meta


def _h1_factors(rep):
    fac = poly.poly_factor(rep.ctx, rep.h1)
    assert fac.unit == 1
    return fac.factors


def _child_sums(children, ell):
    out = {}
    for e, ch in children:
        out[ch.target] = (out.get(ch.target, 0) + e) % ell
    return {f: c for f, c in out.items() if c}


def _replay_trap(node, lc):
    rep, ell = lc.rep, lc.ell
    ctx = rep.ctx
    tr = trap_relation(node.target, rep, lc)
    if tr.v_P != node.v_P:
        raise VerificationFailed("trap valuation mismatch")
    D = poly.deg(node.target)
    # the substituted identity itself: T^(q-v) h1^D = unit prod Q^e mod phi
    lhs = poly.rem(ctx, poly.mul(
        ctx, poly.powmod(ctx, node.target, ctx.q - tr.v_P, rep.phi),
        poly.powmod(ctx, rep.h1, D, rep.phi)), rep.phi)
    rhs = poly.constant(tr.constant)
    for Q, e in tr.rhs_factors.factors:
        rhs = poly.rem(ctx, poly.mul(
            ctx, rhs, poly.powmod(ctx, Q, e, rep.phi)), rep.phi)
    if lhs != rhs:
        raise VerificationFailed("trap identity does not hold in the field")
    inv = pow(ctx.q - tr.v_P, -1, ell)
    expect = {}
    for Q, e in tr.rhs_factors.factors:
        expect[Q] = (expect.get(Q, 0) + e * inv) % ell
    for hf, he in _h1_factors(rep):
        expect[hf] = (expect.get(hf, 0) - D * he * inv) % ell
    expect = {f: c for f, c in expect.items() if c}
    if expect != _child_sums(node.children, ell):
        raise VerificationFailed("trap children disagree with the relation")
    if node.const != const_log(tr.constant, lc) * inv % ell:
        raise VerificationFailed("trap constant mismatch")


def _replay_descent(node, lc):
    rep, ell = lc.rep, lc.ell
    ctx = rep.ctx
    inf = ctx.q2
    if not node.combination:
        raise VerificationFailed("descent node carries no rows")
    total = np.zeros(inf + 1, dtype=np.int64)
    counts = {}
    ctot = 0
    h1e = 0
    for m, x in node.combination:
        cand = build_candidate(node.target, rep,
                               CosetRep(m=m, block=block_of(ctx, m)),
                               aux=node.aux)
        if not candidate_identity_ok(cand, rep, node.target, aux=node.aux):
            raise VerificationFailed(
                f"row identity fails at homography {m}")
        lhs = poly.poly_factor(ctx, cand.numerator)
        ctot = (ctot + x * const_log(
            ctx.mul(lhs.unit, ctx.inv(cand.lam)), lc)) % ell
        h1e = (h1e - x * cand.h1_power) % ell
        for f, e in lhs.factors:
            counts[f] = (counts.get(f, 0) + x * e) % ell
        total = (total + x * cand.rhs.astype(np.int64)) % ell
    width = inf + 1 if node.aux is None else inf
    if total[0] != 1 or total[1:width].any():
        raise VerificationFailed(
            "row combination does not hit the unit target vector")
    if node.aux is not None and total[inf]:
        afac = poly.poly_factor(ctx, node.aux)
        ctot = (ctot - int(total[inf]) * const_log(afac.unit, lc)) % ell
        for f, e in afac.factors:
            counts[f] = (counts.get(f, 0) - int(total[inf]) * e) % ell
    for hf, he in _h1_factors(rep):
        counts[hf] = (counts.get(hf, 0) + h1e * he) % ell
    counts = {f: c for f, c in counts.items() if c}
    if counts != _child_sums(node.children, ell):
        raise VerificationFailed("descent children disagree with its rows")
    if node.const != ctot or node.h1_exp != h1e:
        raise VerificationFailed("descent aggregates disagree with its rows")


def replay_certificate(cert, lc):
    """Walk a certificate and reverify every claim in it.

    Leaves go through the subgroup projection; trap and descent nodes are
    rebuilt from the field side (trap identity, per-row candidate
    identity, row combination against the unit vector, child aggregation)
    and every non-leaf value is recomputed from its children.  No linear
    system is solved.  Accepts a CertNode or certificate text; returns the
    root value, raising VerificationFailed at the first broken claim.
    """
    if isinstance(cert, str):
        node, meta = parse_certificate(cert)
        rep = lc.rep
        want = (f"q={rep.q} k={rep.k} h0={poly.poly_to_text(rep.h0)} "
                f"h1={poly.poly_to_text(rep.h1)}")
        if meta.get("rep") != want or meta.get("ell") != str(lc.ell):
            raise VerificationFailed("certificate context mismatch")
        if poly.poly_from_text(meta["target"]) != node.target \
                or int(meta["value"]) != node.value:
            raise VerificationFailed("certificate header contradicts root")
    else:
        node = cert
    ell = lc.ell

    def walk(n):
        if n.kind == "leaf":
            if not verify_log(n.target, n.value, lc):
                raise VerificationFailed(
                    f"leaf {poly.poly_to_text(n.target)} fails the "
                    f"subgroup check")
            return
        total = n.const
        for e, ch in n.children:
            walk(ch)
            total = (total + e * ch.value) % ell
        if total != n.value % ell:
            raise VerificationFailed(
                f"value of {poly.poly_to_text(n.target)} is not the stated "
                f"combination of its children")
        if n.kind == "product":
            fac = poly.poly_factor(lc.ctx, n.target)
            expect = {f: e % ell for f, e in fac.factors}
            if expect != _child_sums(n.children, ell) \
                    or n.const != (const_log(fac.unit, lc) if fac.unit != 1
                                   else 0):
                raise VerificationFailed("product node is not the "
                                         "factorization of its target")
        elif n.kind == "trap":
            _replay_trap(n, lc)
        elif n.kind == "descent":
            _replay_descent(n, lc)
        else:
            raise VerificationFailed(f"unknown certificate node {n.kind!r}")

    walk(node)
    return node.value


# ----------------------------------------------------- base precompute ----

def _twist_chain_orbits(rep, lc, d, traps):
    """Orbits of non-trap monic irreducibles of degree d under
    P -> monic(h1^d Ptilde(h0/h1)), with per-member chain data.

    The twist of P equals lead * sigma(P) in the field, and taking logs
    of P^q h1^d = lead * sigma(P) gives

        log sigma(P) = q log P + d log h1 - log lead,

    so along an orbit every member's log is alpha * log(rep member)
    + beta * log h1 + gamma with alpha = q^j and the affine parts
    accumulated step by step.  Returns {member: (orbit, alpha, beta,
    gamma)} plus the orbit count; members whose orbit leaves the
    degree-d irreducibles (possible only through traps) are mapped to
    their own singleton columns.
    """
    ctx = rep.ctx
    ell = lc.ell
    q = ctx.q
    assert rep.delta == 1
    chain = {}
    orbits = 0
    for first in _monic_irreducibles(ctx, d):
        if first in chain or first in traps:
            continue
        members = []
        node = first
        a_cur, b_cur, g_cur = 1, 0, 0
        regular = True
        while True:
            members.append((node, a_cur, b_cur, g_cur))
            tw = poly.norm(
                _twist_of(ctx, node, rep.h0, rep.h1))
            lead, mon = poly.monic(ctx, tw)
            if poly.deg(mon) != d or mon in traps or mon in chain \
                    or not poly.is_irreducible(ctx, mon):
                regular = False   # orbit escapes; no compression
                break
            a_cur = a_cur * q % ell
            b_cur = (b_cur * q + d) % ell
            g_cur = (g_cur * q - const_log(lead, lc)) % ell
            if mon == first:
                break
            node = mon
        if regular:
            # closing the loop once more must be consistent; a nontrivial
            # closure pins the orbit column, but with alpha = q^len it
            # collapses mod ell whenever ell | q^len - 1
            for mem, a, b, g in members:
                chain[mem] = (orbits, a, b, g)
            orbits += 1
        else:
            for mem, _, _, _ in members:
                if mem not in chain:
                    chain[mem] = (orbits, 1, 0, 0)
                    orbits += 1
    return chain, orbits


def _twist_of(ctx, P, h0, h1):
    from .relations import twist_star
    return twist_star(ctx, P, h0, h1)


def _monic_irreducibles(ctx, d):
    """All monic irreducibles of degree d, lexicographic in the low
    coefficients.  Enumerates q^(2d) tuples; fine for d <= 3 at desk
    scale, the reason higher base degrees warn."""
    q2 = ctx.q2
    idx = [0] * d
    while True:
        cand = tuple(idx) + (1,)
        if poly.is_irreducible(ctx, cand):
            yield cand
        i = 0
        while i < d and idx[i] == q2 - 1:
            idx[i] = 0
            i += 1
        if i == d:
            return
        idx[i] += 1


def compute_base(rep, lc, base_degree=1, *, margin=RANK_MARGIN):
    """Log database for every monic linear polynomial and (base_degree
    >= 2) every monic irreducible polynomial up to base_degree.

    Degree 1 is base_linear_system.  Higher degrees are solved jointly:
    with the linear logs known, the unknowns are one column per
    twist-orbit of degree-d irreducibles (delta = 1, where the twist
    permutes each degree and ties logs along orbits) or per polynomial
    (delta >= 2), plus one column per trap of degree <= base_degree.  Rows
    come from sieving the relation families X^d + t_(d-1) X^(d-1) + ... +
    t_1 X over the full coset stream, whose block translates then range
    over the degree-d unknowns, plus one substitution row per trap.
    Families run at the cheapest usable smoothness bound; columns the
    first pass leaves unpivoted are patched by re-sieving their owning
    family one bound higher before giving up.
    """
    assert base_degree >= 1
    if base_degree > _WARN_BASE_DEGREE:
        warnings.warn(
            f"base_degree {base_degree} enumerates about "
            f"q^{2 * base_degree} polynomials and as many sieve families",
            RuntimeWarning, stacklevel=2)
    db = LogDB(lc)
    base = base_linear_system(rep, lc, margin=margin)
    for pol, val in base.entries.items():
        prov = "trap" if pol in rep.traps else "base-system"
        db.insert(pol, val, prov)
    for d in range(2, base_degree + 1):
        _joint_degree(rep, lc, db, d)
    return db


def _joint_degree(rep, lc, db, d):
    """Solve the logs of all monic irreducible polynomials of degree d
    jointly and insert them into db (which already covers degrees < d)."""
    ctx = rep.ctx
    ell = lc.ell
    q2 = ctx.q2
    traps = {T for T in rep.traps if poly.deg(T) == d}
    h1log = 0
    for hf, he in _h1_factors(rep):
        h1log = (h1log + he * db[hf]) % ell

    if rep.delta == 1:
        chain, ncols = _twist_chain_orbits(rep, lc, d, traps)
    else:
        chain = {}
        for pol in _monic_irreducibles(ctx, d):
            if pol not in traps and pol not in db:
                chain[pol] = (len(chain), 1, 0, 0)
        ncols = len(chain)
    trap_col = {}
    for T in sorted(traps, key=lambda f: f):
        trap_col[T] = ncols
        ncols += 1
    if ncols == 0:
        return

    def add(v, pol, c):
        # contributes c * log(pol) to the left side of a row: unknown
        # columns go into v, and the returned known part is what the
        # caller must subtract from the right-hand side
        if pol in db:
            return c * db[pol] % ell
        info = chain.get(pol)
        if info is not None:
            col, alpha, beta, gamma = info
            v[col] = (v[col] + c * alpha) % ell
            return c * (beta * h1log + gamma) % ell
        if pol in trap_col:
            v[trap_col[pol]] = (v[trap_col[pol]] + c) % ell
            return 0
        fac = poly.poly_factor(ctx, pol)
        assert fac.max_degree() <= d, "translate factor above the base"
        known = c * const_log(fac.unit, lc) % ell if fac.unit != 1 else 0
        for f, e in fac.factors:
            known = (known + add(v, f, c * e)) % ell
        return known

    def family_rows(tail, B):
        # tail = (t_1 .. t_(d-1)); target X^d + sum t_i X^i, sieved at B;
        # each accepted coset gives
        #   sum over the block of log(P - mu) + s log h1 - sum e log f
        #     = const_log(unit / lam)
        fam = poly.norm((0,) + tail + (1,))
        try:
            mat = sieve_relations(fam, rep, B, lc, strategy="stream",
                                  margin=10**9)
            rels = mat.rows
        except RankDeficient as exc:
            rels = exc.matrix.rows
        out = []
        for rel in rels:
            v = np.zeros(ncols + 1, dtype=np.int64)
            rhs = const_log(ctx.mul(rel.lhs.unit,
                                    ctx.inv(rel.candidate.lam)), lc)
            rhs = (rhs - rel.candidate.h1_power * h1log) % ell
            inc = rel.candidate.rhs
            for mu in range(q2):
                if inc[mu]:
                    t = (ctx.neg(mu),) + fam[1:]
                    rhs = (rhs - add(v, t, int(inc[mu]))) % ell
            for f, e in rel.lhs.factors:
                rhs = (rhs - add(v, f, -e)) % ell
            v[ncols] = rhs % ell
            out.append(v)
        return out

    rows = []
    for T in sorted(trap_col):
        # (q - v) log T - sum e log Q = const_log(unit) - deg(T) log h1
        tr = trap_relation(T, rep, lc)
        v = np.zeros(ncols + 1, dtype=np.int64)
        rhs = (const_log(tr.constant, lc) - d * h1log) % ell
        v[trap_col[T]] = (ctx.q - tr.v_P) % ell
        for Q, e in tr.rhs_factors.factors:
            rhs = (rhs - add(v, Q, -e)) % ell
        v[ncols] = rhs
        rows.append(v)

    first_B = d - 1 if rep.delta == 1 and d >= 2 else d
    ls = LinearSystem(ncols, ell)
    flush_at = max(4 * ncols, 2000)
    tails = _all_tails(q2, d)
    for tail in tails:
        rows.extend(family_rows(tail, first_B))
        if len(rows) >= flush_at:
            if ls.add_rows(rows) == ncols:
                rows = []
                break
            rows = []
    if rows:
        ls.add_rows(rows)

    # patch pass: re-sieve the family owning each unpivoted column, one
    # smoothness bound higher each round
    for B in range(first_B + 1, d + 1):
        if ls.rank == ncols:
            break
        wanted = set(ls.missing_columns())
        owners = []
        for pol, (col, _, _, _) in chain.items():
            if col in wanted:
                owners.append(pol[1:d] if d > 1 else ())
                wanted.discard(col)
        for tail in dict.fromkeys(owners):
            ls.add_rows(family_rows(tail, B))
            if ls.rank == ncols:
                break
    if ls.rank < ncols:
        raise BaseSystemRankDeficient(
            f"degree-{d} base system stuck at rank {ls.rank} of {ncols}",
            rank=ls.rank, needed=ncols, rows=None)

    u = ls.solution()
    for pol, (col, alpha, beta, gamma) in chain.items():
        if pol in db:
            continue
        val = (alpha * int(u[col]) + beta * h1log + gamma) % ell
        db.insert(pol, val, "base-system")
    for T, col in trap_col.items():
        db.insert(T, int(u[col]) % ell, "trap")


def _all_tails(q2, d):
    """Middle-coefficient tuples (t_1 .. t_(d-1)) of the degree-d sieve
    families, lexicographic."""
    if d == 1:
        return [()]
    tails = [()]
    for _ in range(d - 1):
        tails = [t + (c,) for t in tails for c in range(q2)]
    return tails


# ----------------------------------------------------------- recursion ----

class _DescentState:
    def __init__(self, B, escalate, memoize, strategy, budget, margin,
                 shuffle_seed, deadline):
        self.B = B
        self.escalate = escalate
        self.memoize = memoize
        self.strategy = strategy
        self.budget = budget
        self.margin = margin
        self.shuffle_seed = shuffle_seed
        self.deadline = deadline
        self.steps = 0
        self.escalations = 0

    def check_deadline(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise DeadlineExceeded(
                f"descent ran past its deadline after {self.steps} steps")


def descend(P, lc, db, *, B=None, escalate=True, memoize=True,
            strategy="stream", budget=None, margin=RANK_MARGIN,
            shuffle_seed=None, deadline=None):
    """Logarithm of P mod ell together with a replayable certificate.

    P is normalized to monic (the unit goes through const_log), factored,
    and each irreducible factor resolved: database hits are leaves, traps
    substitute through trap_relation, and everything else runs
    descend_step at B (default ceil(D/2)), recursing on the children.
    When a step comes back RankDeficient the bound escalates one degree at
    a time up to D - 1 before the failure propagates; memoize writes every
    resolved polynomial back to db, so shared subtrees across one or many
    calls are walked once.

    deadline is a time.monotonic() instant; the walk checks it before
    every step and raises DeadlineExceeded when past it.  Returns
    (residue mod ell, CertNode).
    """
    ctx = lc.ctx
    P = poly.rem(ctx, poly.norm(P), lc.rep.phi)
    if not P:
        raise ValueError("the zero polynomial has no logarithm")
    st = _DescentState(B, escalate, memoize, strategy, budget, margin,
                       shuffle_seed, deadline)
    fac = poly.poly_factor(ctx, P)
    if fac.unit == 1 and len(fac.factors) == 1 and fac.factors[0][1] == 1:
        return _descend_irr(P, lc, db, st, ())
    ell = lc.ell
    cval = const_log(fac.unit, lc) if fac.unit != 1 else 0
    total = cval
    kids = []
    for f, e in fac.factors:
        val, node = _descend_irr(f, lc, db, st, ())
        total = (total + e * val) % ell
        kids.append((e % ell, node))
    root = CertNode(kind="product", target=P, value=total, const=cval,
                    children=tuple(kids))
    return total, root


def _descend_irr(f, lc, db, st, stack):
    hit = db.get(f)
    if hit is not None and (st.memoize or db.provenance(f) != "descent"):
        return hit, CertNode(kind="leaf", target=f, value=hit)
    st.check_deadline()
    if f in stack:
        raise CycleDetected(
            f"{poly.poly_to_text(f)} came back up inside its own descent")
    rep = lc.rep
    ctx = lc.ctx
    ell = lc.ell
    stack = stack + (f,)

    if f in rep.traps:
        tr = trap_relation(f, rep, lc)
        inv = pow(ctx.q - tr.v_P, -1, ell)
        D = poly.deg(f)
        counts = {}
        for Q, e in tr.rhs_factors.factors:
            counts[Q] = (counts.get(Q, 0) + e * inv) % ell
        for hf, he in _h1_factors(rep):
            counts[hf] = (counts.get(hf, 0) - D * he * inv) % ell
        cval = const_log(tr.constant, lc) * inv % ell
        kind, h1e, v_P, combo, aux = \
            "trap", (-D * inv) % ell, tr.v_P, (), None
        step_const = cval
    else:
        D = poly.deg(f)
        B0 = st.B if st.B is not None else (D + 1) // 2
        bmax = max(B0, D - 1) if st.escalate else B0
        step = None
        bound = B0
        while True:
            st.check_deadline()
            try:
                step = descend_step(f, rep, lc, db, B=bound,
                                    margin=st.margin, budget=st.budget,
                                    shuffle_seed=st.shuffle_seed,
                                    strategy=st.strategy)
                break
            except RankDeficient:
                if bound >= bmax:
                    raise
                bound += 1
                st.escalations += 1
        st.steps += 1
        counts = {}
        for chp, ce in step.children:
            counts[chp] = ce % ell
        for hf, he in _h1_factors(rep):
            counts[hf] = (counts.get(hf, 0) + step.h1_exp * he) % ell
        kind, h1e, v_P, combo, aux = \
            "descent", step.h1_exp, 0, step.combination, step.aux
        step_const = step.const_log_total

    total = step_const
    kids = []
    for pol in sorted(counts, key=lambda p: (poly.deg(p), p)):
        c = counts[pol]
        if not c:
            continue
        val, node = _descend_irr(pol, lc, db, st, stack)
        total = (total + c * val) % ell
        kids.append((c, node))
    node = CertNode(kind=kind, target=f, value=total, const=step_const,
                    h1_exp=h1e, v_P=v_P, combination=combo, aux=aux,
                    children=tuple(kids))
    if st.memoize:
        db.insert(f, total, "trap" if kind == "trap" else "descent")
    elif not verify_log(f, total, lc):
        raise VerificationFailed(
            f"descended log of {poly.poly_to_text(f)} fails the "
            f"subgroup check")
    return total, node


# ---------------------------------------------------- pohlig-hellman ------

def _crt(residues):
    x, m = 0, 1
    for r, n in residues:
        t = (r - x) * pow(m, -1, n) % n
        x += m * t
        m *= n
    return x % m


def _ph_prime_power(rep, g, t, r, e, order):
    """x mod r^e by digit-wise reduction into the order-r subgroup."""
    ctx = rep.ctx

    def fmul(a, b):
        return poly.rem(ctx, poly.mul(ctx, a, b), rep.phi)

    pe = r ** e
    base = big_field_pow(g, order // pe, rep)
    z = big_field_pow(t, order // pe, rep)
    h = gpow(base, pe // r, fmul, poly.ONE)
    x = 0
    for i in range(e):
        shifted = fmul(z, gpow(base, (pe - x) % pe, fmul, poly.ONE))
        u = gpow(shifted, pe // r ** (i + 1), fmul, poly.ONE)
        x += bsgs_dlog(h, u, r, mul=fmul, one=poly.ONE) * r ** i
    return x


def full_dlog(target, rep, *, threshold=PH_THRESHOLD, base_degree=1,
              bsgs_cap=BSGS_CAP, factor_budget=None, margin=RANK_MARGIN,
              contexts=None):
    """Discrete logarithm of target modulo the full group order.

    The order is factored; each prime power r^e then goes one of two
    ways.  Primes above threshold (that do not divide q^2 - 1) get a
    descent context at ell = r, which pins the residue mod r; because
    every constant right-hand side of that machinery lives in the mod-r
    world, the higher digits of such a prime power are invisible to it,
    and they are finished by a baby-step giant-step walk of the order
    r^(e-1) cofactor subgroup instead.  Prime powers at or below the
    threshold run classic digit-wise reduction with the same generic
    walk.  Either walk refuses subgroups larger than bsgs_cap.  The
    residues combine by remaindering and g^result = target is checked
    before the result is returned.

    contexts, if given, is a mutable dict keyed by prime caching
    (log context, database) pairs across calls sharing rep.

    Raises PrimePowerFailed naming the first prime power whose
    subproblem failed, and VerificationFailed if the assembled result
    does not reproduce the target.
    """
    ctx = rep.ctx
    t = poly.rem(ctx, poly.norm(target), rep.phi)
    if not t:
        raise ValueError("zero is not in the multiplicative group")
    order = group_order(rep)
    kwargs = {} if factor_budget is None else {"budget": factor_budget}
    factors = factor_group_order(rep, **kwargs)
    lc0 = None
    residues = []
    for r, e in factors:
        try:
            if r > threshold and (ctx.q2 - 1) % r:
                if contexts is not None and r in contexts:
                    lc_r, db_r = contexts[r]
                else:
                    lc_r = make_log_context(
                        rep, ell=r, g=None if lc0 is None else lc0.g)
                    db_r = compute_base(rep, lc_r, base_degree,
                                        margin=margin)
                    if contexts is not None:
                        contexts[r] = (lc_r, db_r)
                if lc0 is None:
                    lc0 = lc_r
                x0 = descend(t, lc_r, db_r)[0]
                if e == 1:
                    residues.append((x0, r))
                    continue
                if r ** (e - 1) > bsgs_cap:
                    raise PrimePowerFailed(
                        r, e, f"digits past the first need a generic walk "
                              f"of r^{e - 1} > bsgs_cap")

                def fmul(a, b):
                    return poly.rem(ctx, poly.mul(ctx, a, b), rep.phi)

                pe = r ** e
                co = order // pe
                base = big_field_pow(lc0.g, co, rep)
                w = fmul(big_field_pow(t, co, rep),
                         gpow(base, (pe - x0) % pe, fmul, poly.ONE))
                z = bsgs_dlog(gpow(base, r, fmul, poly.ONE), w,
                              r ** (e - 1), mul=fmul, one=poly.ONE)
                residues.append((x0 + r * z, pe))
            else:
                if r ** e > bsgs_cap:
                    raise PrimePowerFailed(
                        r, e, f"subgroup of order {r}^{e} is above bsgs_cap "
                              f"and below the descent threshold")
                if lc0 is None:
                    lc0 = make_log_context(rep)
                residues.append(
                    (_ph_prime_power(rep, lc0.g, t, r, e, order), r ** e))
        except PrimePowerFailed:
            raise
        except Exception as exc:
            raise PrimePowerFailed(r, e, exc) from exc
    x = _crt(residues)
    if big_field_pow(lc0.g, x, rep) != t:
        raise VerificationFailed(
            "assembled exponent does not reproduce the target")
    return x
