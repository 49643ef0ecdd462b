"""P^1(F_{q^2}), homographies, and coset representatives of
PGL_2(F_{q^2}) modulo PGL_2(F_q).

A projective point is a plain int: the element code of mu for finite
points, q^2 for infinity.  A homography is a 4-tuple (a, b, c, d) over
F_{q^2} with ad - bc != 0, normalized so its first nonzero entry is 1.

The block of m is the (q+1)-point set m^{-1} . P^1(F_q).  Multiplying m
on the left by any h with F_q entries only permutes the rational points
before m^{-1} is applied, so coset mates share one block and coset dedup
is plain set-key dedup; no matrix normal form is needed.

Enumeration splits by geometry: the rational block itself, the blocks
through infinity (affine F_q-lines u + F_q.v), and the blocks avoiding
infinity ("circles" {(a.t + b)/(t + d0) : t in P^1(F_q)} for one fixed
non-rational d0).  Every circle block arises from exactly q+1 pairs
(a, b), so the scan over F_{q^2}^2 closes at exactly q^3 - q^2 distinct
keys and the stream total at q^3 + q.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InternalCountMismatch

ProjPoint = int       # element code, or q^2 for infinity
Homography = tuple    # (a, b, c, d), normalized


def inf_index(ctx):
    return ctx.q2


def normalize_homography(ctx, m):
    a, b, c, d = m
    for lead in m:
        if lead:
            break
    det = ctx.sub(ctx.mul(a, d), ctx.mul(b, c))
    assert det != 0, "homography must be invertible"
    if lead == 1:
        return tuple(m)
    s = ctx.inv(lead)
    return tuple(ctx.mul(s, x) for x in m)


def invert_homography(ctx, m):
    a, b, c, d = m
    return normalize_homography(ctx, (d, ctx.neg(b), ctx.neg(c), a))


def compose_homographies(ctx, m1, m2):
    a1, b1, c1, d1 = m1
    a2, b2, c2, d2 = m2
    return normalize_homography(ctx, (
        ctx.add(ctx.mul(a1, a2), ctx.mul(b1, c2)),
        ctx.add(ctx.mul(a1, b2), ctx.mul(b1, d2)),
        ctx.add(ctx.mul(c1, a2), ctx.mul(d1, c2)),
        ctx.add(ctx.mul(c1, b2), ctx.mul(d1, d2)),
    ))


def apply_homography(ctx, m, pt):
    """(a*pt + b)/(c*pt + d), with infinity handled as (1:0)."""
    a, b, c, d = m
    if pt == ctx.q2:
        if c == 0:
            return ctx.q2
        return ctx.mul(a, ctx.inv(c))
    den = ctx.add(ctx.mul(c, pt), d)
    num = ctx.add(ctx.mul(a, pt), b)
    if den == 0:
        assert num != 0, "homography not invertible"
        return ctx.q2
    return ctx.mul(num, ctx.inv(den))


def block_key(block):
    return np.asarray(block, dtype=np.uint16).tobytes()


@dataclass(frozen=True)
class CosetRep:
    m: Homography
    block: tuple   # sorted ProjPoints of m^{-1} . P^1(F_q)

    @property
    def key(self):
        return block_key(self.block)


def block_of(ctx, m):
    """The block m^{-1} . P^1(F_q), sorted."""
    mi = invert_homography(ctx, m)
    pts = [apply_homography(ctx, mi, t) for t in ctx.subfield]
    pts.append(apply_homography(ctx, mi, ctx.q2))
    out = tuple(sorted(pts))
    assert len(set(out)) == ctx.q + 1
    return out


def incidence_vector(ctx, rep):
    v = np.zeros(ctx.q2 + 1, dtype=np.uint8)
    v[list(rep.block)] = 1
    return v


def _direction_transversal(ctx):
    """One representative per class of F_{q^2}* / F_q*, minimal code first."""
    nonzero_sub = [s for s in ctx.subfield if s]
    seen = set()
    out = []
    for v in range(1, ctx.q2):
        if v in seen:
            continue
        out.append(v)
        for s in nonzero_sub:
            seen.add(ctx.mul(v, s))
    assert len(out) == ctx.q + 1
    return out


def _line_blocks(ctx):
    """Blocks through infinity except the rational one.  The line
    u + F_q.v is the image of P^1(F_q) under M = (v,u;0,1), so the coset
    representative is M^{-1} ~ (1,-u;0,v)."""
    inf = ctx.q2
    for v in _direction_transversal(ctx):
        covered = set()
        for u in range(ctx.q2):
            if u in covered:
                continue
            line = [ctx.add(u, ctx.mul(t, v)) for t in ctx.subfield]
            covered.update(line)
            if v == 1 and u == 0:
                continue  # the rational block, emitted separately
            m = normalize_homography(ctx, (1, ctx.neg(u), 0, v))
            yield CosetRep(m, tuple(sorted(line)) + (inf,))


def _circle_blocks(ctx):
    """Blocks avoiding infinity, deduped, as a dict key -> m."""
    q, q2 = ctx.q, ctx.q2
    d0 = next(x for x in range(q2) if not ctx.in_subfield(x))
    want = q ** 3 - q ** 2
    ts = list(ctx.subfield)
    winv = [ctx.inv(ctx.add(t, d0)) for t in ts]
    found = {}
    bvec = np.arange(q2, dtype=np.int64)
    stride = 2 * (q + 1)
    for a in range(q2):
        cols = np.empty((q + 1, q2), dtype=np.uint16)
        for i, t in enumerate(ts):
            cols[i] = ctx.np_mul(ctx.np_add(bvec, ctx.mul(a, t)), winv[i])
        cols[q] = a  # the image of t = infinity
        cols.sort(axis=0)
        raw = cols.T.tobytes()
        bad_b = ctx.mul(a, d0)  # the one b with det(a,b;1,d0) = 0
        for b in range(q2):
            if b == bad_b:
                continue
            key = raw[b * stride:(b + 1) * stride]
            if key not in found:
                # block = M . P^1(F_q) for M = (a,b;1,d0); the rep is M^{-1}
                found[key] = invert_homography(ctx, (a, b, 1, d0))
                if len(found) == want:
                    return found
    return found


def enumerate_cosets(ctx, shuffle_seed=None):
    """Stream all q^3 + q coset representatives: the rational block, the
    lines through infinity, then the circles sorted by key.  Raises
    InternalCountMismatch (at end of stream) if the count is off.  With
    shuffle_seed the stream is materialized and reshuffled instead."""
    assert ctx.q2 < (1 << 16), "uint16 block keys"
    if shuffle_seed is not None:
        import random
        reps = list(enumerate_cosets(ctx))
        random.Random(shuffle_seed).shuffle(reps)
        return reps
    return _coset_stream(ctx)


def _coset_stream(ctx):
    inf = ctx.q2
    n = 1
    yield CosetRep((1, 0, 0, 1), tuple(ctx.subfield) + (inf,))
    for rep in _line_blocks(ctx):
        n += 1
        yield rep
    circles = _circle_blocks(ctx)
    for key in sorted(circles):
        block = tuple(int(x) for x in np.frombuffer(key, dtype=np.uint16))
        n += 1
        yield CosetRep(circles[key], block)
    if n != ctx.q ** 3 + ctx.q:
        raise InternalCountMismatch(
            f"enumerated {n} cosets, expected {ctx.q ** 3 + ctx.q}")
