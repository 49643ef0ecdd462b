import random

import pytest

from qpdlog import poly
from qpdlog.errors import (DegenerateModulus, FactorizationTimeout,
                           VerificationFailed)
from qpdlog.gf import field_ctx_create
from qpdlog.rep import (_has_simple_degree_k_factor, big_field_pow,
                        const_log, context_from_text, context_to_text,
                        defining_poly, factor_group_order, find_sparse_rep,
                        group_order, make_log_context, make_sparse_rep)


def brute_has_simple_k(ctx, F, k):
    fac = poly.poly_factor(ctx, F)
    return any(poly.deg(f) == k and mt == 1 for f, mt in fac.factors)


def test_prefilter_never_misses():
    ctx = field_ctx_create(3, 2)
    rng = random.Random(17)
    for _ in range(300):
        F = poly.random_monic(ctx, rng.randrange(2, 11), rng)
        for k in (1, 2, 3, 5, 7):
            if brute_has_simple_k(ctx, F, k):
                assert _has_simple_degree_k_factor(ctx, F, k)
            if not _has_simple_degree_k_factor(ctx, F, k):
                assert not brute_has_simple_k(ctx, F, k)


def test_rep_invariants_q9(rep97, ctx9):
    assert rep97.family == "quadratic-shift"
    assert rep97.h0 == (1, 0, 2) and rep97.h1 == poly.ONE
    assert rep97.delta == 2
    assert rep97.traps == ((44, 1), (77, 1))
    F = defining_poly(ctx9, rep97.h0, rep97.h1)
    rebuilt = rep97.phi
    for t in rep97.traps:
        rebuilt = poly.mul(ctx9, rebuilt, t)
    assert rebuilt == F
    assert poly.is_irreducible(ctx9, rep97.phi)
    assert poly.deg(rep97.phi) == 7
    for t in rep97.traps:
        assert poly.is_irreducible(ctx9, t) and t != rep97.phi
        assert poly.rem(ctx9, rep97.h1, t) or poly.deg(rep97.h1) == 0


@pytest.mark.slow
def test_rep_q13_is_delta1(rep137):
    assert rep137.family == "linear-ratio"
    assert rep137.delta == 1
    assert rep137.h0 == (2, 122) and rep137.h1 == (132, 1)
    assert [poly.deg(t) for t in rep137.traps] == [7]


def test_rep_q53_is_the_linear_one(rep53):
    assert rep53.family == "linear"
    assert rep53.h0 == (1, 1) and rep53.h1 == poly.ONE
    assert rep53.delta == 1
    assert rep53.traps == ()


def test_rep_q53_delta_cap_one(ctx53, rep53):
    assert find_sparse_rep(ctx53, 53, delta_max=1).h0 == rep53.h0


def test_degree_precondition_fails_before_search():
    ctx = field_ctx_create(2, 2)
    with pytest.raises(ValueError):
        find_sparse_rep(ctx, 7, delta_max=2)  # q + delta = 6 < 7


def test_k10_at_q9_needs_nonconstant_h1(ctx9):
    # X^9 + X^2 + a has degree 9, so no a can carry a degree-10 factor;
    # the search must reach k = 10 through a degree-1 h1 instead
    for a in range(ctx9.q2):
        F = defining_poly(ctx9, poly.norm((ctx9.neg(a), 0, ctx9.neg(1))),
                          poly.ONE)
        assert not _has_simple_degree_k_factor(ctx9, F, 10)
    rep = find_sparse_rep(ctx9, 10)
    assert poly.deg(rep.h1) == 1 and rep.delta == 1
    assert poly.deg(rep.phi) == 10


def test_make_sparse_rep_rejects_bad_input():
    ctx = field_ctx_create(3, 1)
    with pytest.raises(ValueError):
        make_sparse_rep(ctx, 2, (1, 1), (1, 1))  # gcd = X + 1
    with pytest.raises(ValueError):
        make_sparse_rep(ctx, 2, (1,), poly.ZERO)
    # no degree-2 factor: X^3 - X splits into linears
    assert make_sparse_rep(ctx, 2, (0, 1), poly.ONE) is None


def test_factor_group_order_small():
    assert factor_group_order(
        find_sparse_rep(field_ctx_create(2, 1), 2)) == [(3, 1), (5, 1)]
    assert factor_group_order(
        find_sparse_rep(field_ctx_create(3, 1), 2)) == [(2, 4), (5, 1)]


def test_factor_group_order_q9(rep97):
    fac = factor_group_order(rep97)
    assert fac == [(2, 4), (5, 1), (29, 1), (547, 1), (1093, 1), (16493, 1)]
    n = 1
    for p, e in fac:
        n *= p ** e
    assert n == group_order(rep97) == 9 ** 14 - 1


@pytest.mark.slow
def test_factor_group_order_q53_times_out(rep53):
    with pytest.raises(FactorizationTimeout) as ei:
        factor_group_order(rep53, budget=2.0)
    err = ei.value
    assert err.cofactor > 1
    n = err.cofactor
    for p, e in err.factors.items():
        n *= p ** e
    assert n == group_order(rep53)


def test_log_context_q9(lc97, rep97):
    assert lc97.ell == 16493
    assert lc97.unfactored == 1
    assert lc97.warnings == ()
    assert lc97.ell * lc97.cofactor == lc97.order
    # generator really has full order: lands outside every maximal subgroup
    for p, _ in lc97.order_factors:
        assert big_field_pow(lc97.g, lc97.order // p, rep97) != poly.ONE
    assert big_field_pow(lc97.g, lc97.order, rep97) == poly.ONE


def test_log_context_q53(lc53, rep53):
    assert lc53.ell == 5324593
    assert lc53.g == (106, 1)
    assert lc53.unfactored > 1
    assert [p for p, _ in lc53.order_factors] == [2, 3, 13, 107, 5324593]
    assert any("partially factored" in w for w in lc53.warnings)
    assert lc53.const_gen == 2598
    assert lc53.const_hop == 0  # ell divides order/(q^2-1) here
    assert lc53.g_ell != poly.ONE
    assert big_field_pow(lc53.g_ell, lc53.ell, rep53) == poly.ONE


def test_explicit_ell_validation(rep97):
    with pytest.raises(ValueError):
        make_log_context(rep97, ell=16491)  # 3 * 23 * 239, not prime
    with pytest.raises(ValueError):
        make_log_context(rep97, ell=11)  # prime, does not divide 9^14-1


def test_const_log_basics(lc97):
    ctx = lc97.ctx
    assert const_log(1, lc97) == 0
    c = ctx.pw(lc97.const_gen, 5)
    assert const_log(c, lc97) == 5 * lc97.const_hop % lc97.ell


def test_const_log_is_homomorphism(lc97):
    ctx = lc97.ctx
    rng = random.Random(23)
    for _ in range(50):
        a = rng.randrange(1, ctx.q2)
        b = rng.randrange(1, ctx.q2)
        assert const_log(ctx.mul(a, b), lc97) == \
            (const_log(a, lc97) + const_log(b, lc97)) % lc97.ell


def test_const_log_subgroup_projection(lc97, rep97):
    rng = random.Random(29)
    for _ in range(10):
        c = rng.randrange(1, lc97.ctx.q2)
        v = const_log(c, lc97)
        lhs = big_field_pow(poly.constant(c), lc97.cofactor, rep97)
        assert lhs == big_field_pow(lc97.g_ell, v, rep97)


def test_degenerate_modulus():
    rep = find_sparse_rep(field_ctx_create(3, 1), 2)
    lc = make_log_context(rep, ell=2)
    assert any("q^3 - q" in w for w in lc.warnings)
    assert any("ell <= q" in w for w in lc.warnings)
    with pytest.raises(DegenerateModulus):
        const_log(2, lc)


def test_big_field_pow_identities(rep97):
    ctx = rep97.ctx
    rng = random.Random(31)
    x = poly.random_monic(ctx, 5, rng)
    assert big_field_pow(x, 1, rep97) == poly.rem(ctx, x, rep97.phi)
    assert big_field_pow(x, group_order(rep97), rep97) == poly.ONE
    xq = big_field_pow(poly.X, ctx.q, rep97)
    h1inv = poly.inverse_mod(ctx, rep97.h1, rep97.phi)
    assert xq == poly.rem(ctx, poly.mul(ctx, rep97.h0, h1inv), rep97.phi)


def test_context_round_trip(lc53):
    text = context_to_text(lc53)
    lc2 = context_from_text(text)
    assert lc2.ell == lc53.ell and lc2.g == lc53.g
    assert lc2.rep.phi == lc53.rep.phi and lc2.rep.traps == lc53.rep.traps
    assert lc2.const_gen == lc53.const_gen
    assert lc2.warnings == lc53.warnings


def test_context_file_tamper_detection(lc97):
    text = context_to_text(lc97)
    # claim there are no traps: the factor split no longer matches
    bad = text.replace("traps: " + ";".join(
        poly.poly_to_text(t) for t in lc97.rep.traps), "traps: ")
    assert bad != text
    with pytest.raises(VerificationFailed):
        context_from_text(bad)
