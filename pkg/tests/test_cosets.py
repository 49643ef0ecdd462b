import itertools
import random

import numpy as np
import pytest

from qpdlog.cosets import (CosetRep, apply_homography, block_of,
                           compose_homographies, enumerate_cosets,
                           incidence_vector, invert_homography,
                           normalize_homography)
from qpdlog.gf import field_ctx_create

CTX = {}


def ctx_for(q):
    if q not in CTX:
        p, m = {2: (2, 1), 3: (3, 1), 4: (2, 2), 5: (5, 1),
                7: (7, 1), 8: (2, 3), 9: (3, 2), 13: (13, 1)}[q]
        CTX[q] = field_ctx_create(p, m)
    return CTX[q]


def random_homography(ctx, rng):
    while True:
        m = tuple(rng.randrange(ctx.q2) for _ in range(4))
        a, b, c, d = m
        if ctx.sub(ctx.mul(a, d), ctx.mul(b, c)):
            return normalize_homography(ctx, m)


def random_rational_homography(ctx, rng):
    sub = ctx.subfield
    while True:
        m = tuple(rng.choice(sub) for _ in range(4))
        a, b, c, d = m
        if ctx.sub(ctx.mul(a, d), ctx.mul(b, c)):
            return normalize_homography(ctx, m)


def test_apply_identity_and_inversion():
    ctx = ctx_for(5)
    ident = (1, 0, 0, 1)
    for pt in range(ctx.q2 + 1):
        assert apply_homography(ctx, ident, pt) == pt
    swap = (0, 1, 1, 0)  # x -> 1/x
    assert apply_homography(ctx, swap, 0) == ctx.q2
    assert apply_homography(ctx, swap, ctx.q2) == 0


def test_apply_is_group_action():
    ctx = ctx_for(9)
    rng = random.Random(7)
    for _ in range(200):
        m1 = random_homography(ctx, rng)
        m2 = random_homography(ctx, rng)
        pt = rng.randrange(ctx.q2 + 1)
        lhs = apply_homography(ctx, m1, apply_homography(ctx, m2, pt))
        rhs = apply_homography(ctx, compose_homographies(ctx, m1, m2), pt)
        assert lhs == rhs


def test_apply_is_bijection():
    ctx = ctx_for(7)
    rng = random.Random(3)
    m = random_homography(ctx, rng)
    img = {apply_homography(ctx, m, pt) for pt in range(ctx.q2 + 1)}
    assert len(img) == ctx.q2 + 1
    mi = invert_homography(ctx, m)
    for pt in range(ctx.q2 + 1):
        assert apply_homography(ctx, mi, apply_homography(ctx, m, pt)) == pt


def test_normalization_is_projective():
    ctx = ctx_for(9)
    rng = random.Random(11)
    for _ in range(50):
        m = random_homography(ctx, rng)
        s = rng.randrange(1, ctx.q2)
        scaled = tuple(ctx.mul(s, x) for x in m)
        assert normalize_homography(ctx, scaled) == m
        assert m[next(i for i, x in enumerate(m) if x)] == 1


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_enumeration_count_and_distinctness(q):
    ctx = ctx_for(q)
    reps = list(enumerate_cosets(ctx))
    assert len(reps) == q ** 3 + q
    keys = {r.key for r in reps}
    assert len(keys) == len(reps)
    for r in reps:
        assert len(r.block) == q + 1
        assert len(set(r.block)) == q + 1
        assert list(r.block) == sorted(r.block)
        assert block_of(ctx, r.m) == r.block


def test_q2_blocks_are_all_3_subsets():
    ctx = ctx_for(2)
    blocks = {r.block for r in enumerate_cosets(ctx)}
    assert blocks == set(itertools.combinations(range(5), 3))


def test_q3_block_shape():
    ctx = ctx_for(3)
    reps = list(enumerate_cosets(ctx))
    assert len(reps) == 30
    assert all(len(r.block) == 4 for r in reps)


def test_rational_block_comes_first():
    ctx = ctx_for(5)
    first = next(iter(enumerate_cosets(ctx)))
    assert first.m == (1, 0, 0, 1)
    assert first.block == tuple(ctx.subfield) + (ctx.q2,)
    v = incidence_vector(ctx, first)
    assert [i for i, x in enumerate(v) if x] == sorted(ctx.subfield) + [ctx.q2]


@pytest.mark.parametrize("q", [3, 4, 5])
def test_incidence_design_identities(q):
    # H^T H counts blocks through point pairs: (q+1)(J - (1-q)I) exactly
    ctx = ctx_for(q)
    H = np.array([incidence_vector(ctx, r) for r in enumerate_cosets(ctx)],
                 dtype=np.int64)
    assert H.shape == (q ** 3 + q, q ** 2 + 1)
    assert (H.sum(axis=1) == q + 1).all()
    assert (H.sum(axis=0) == q ** 2 + q).all()
    n = q ** 2 + 1
    expect = (q + 1) * (np.ones((n, n), dtype=np.int64)
                        - (1 - q) * np.eye(n, dtype=np.int64))
    assert (H.T @ H == expect).all()


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_three_design_exhaustive(q):
    ctx = ctx_for(q)
    blocks = [frozenset(r.block) for r in enumerate_cosets(ctx)]
    for triple in itertools.combinations(range(ctx.q2 + 1), 3):
        t = frozenset(triple)
        assert sum(t <= b for b in blocks) == 1


def test_block_is_right_coset_invariant():
    # h with F_q entries permutes P^1(F_q); applying it before m^{-1}
    # leaves the block alone, so block(h.m) = block(m)
    for q in (5, 9):
        ctx = ctx_for(q)
        rng = random.Random(q)
        for _ in range(100):
            m = random_homography(ctx, rng)
            h = random_rational_homography(ctx, rng)
            hm = compose_homographies(ctx, h, m)
            assert block_of(ctx, hm) == block_of(ctx, m)
            if hm != m:
                assert block_of(ctx, compose_homographies(ctx, m, h)) \
                    is not None  # still a valid block either way


def test_stream_is_deterministic():
    ctx = ctx_for(5)
    a = list(enumerate_cosets(ctx))
    b = list(enumerate_cosets(ctx))
    assert a == b


def test_shuffle_mode_is_a_permutation():
    ctx = ctx_for(3)
    plain = list(enumerate_cosets(ctx))
    shuffled = enumerate_cosets(ctx, shuffle_seed=42)
    assert shuffled != plain
    assert sorted(r.key for r in shuffled) == sorted(r.key for r in plain)
    again = enumerate_cosets(ctx, shuffle_seed=42)
    assert shuffled == again


def test_block_matches_numerator_translates():
    # the block must list exactly the translates P - mu appearing in the
    # factored relation product: for each rational alpha, the factor
    # (a - alpha*c)P + (b - alpha*d) vanishes at P = mu with
    # mu = (alpha*d - b)/(a - alpha*c), plus the c*P + d factor at infinity
    ctx = ctx_for(9)
    rng = random.Random(5)
    for _ in range(25):
        m = random_homography(ctx, rng)
        a, b, c, d = m
        mus = set()
        for alpha in ctx.subfield:
            den = ctx.sub(a, ctx.mul(alpha, c))
            num = ctx.sub(ctx.mul(alpha, d), b)
            mus.add(ctx.q2 if den == 0 else ctx.div(num, den))
        mus.add(ctx.q2 if c == 0 else ctx.neg(ctx.div(d, c)))
        assert tuple(sorted(mus)) == block_of(ctx, m)
