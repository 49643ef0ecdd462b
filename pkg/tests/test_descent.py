import io
import random
import time

import pytest

from qpdlog import poly
from qpdlog.descent import (CertNode, LogDB, certificate_to_text,
                            compute_base, descend, full_dlog,
                            parse_certificate, replay_certificate, verify_log)
from qpdlog.errors import (CycleDetected, DeadlineExceeded, PrimePowerFailed,
                           RankDeficient, VerificationFailed)
from qpdlog.rep import big_field_pow, make_log_context


def mulmod(lc, a, b):
    return poly.rem(lc.ctx, poly.mul(lc.ctx, a, b), lc.rep.phi)


# ------------------------------------------------------------ verify_log --

def test_verify_log_basics(lc97):
    g = lc97.g
    g2 = mulmod(lc97, g, g)
    assert verify_log(g, 1, lc97)
    assert verify_log(g, 1 + lc97.ell, lc97)   # values live mod ell
    assert not verify_log(g2, 1, lc97)
    assert verify_log(g2, 2, lc97)
    assert not verify_log((), 0, lc97)
    assert verify_log(poly.ONE, 0, lc97)


# ------------------------------------------------------------------ LogDB --

def test_logdb_insert_verifies(lc97, db97):
    db = LogDB(lc97)
    g = lc97.g
    db.insert(g, 1, "base-system")
    assert db[g] == 1
    assert db.provenance(g) == "base-system"
    with pytest.raises(VerificationFailed):
        db.insert((0, 1), db97[(0, 1)] + 1, "base-system")
    assert (0, 1) not in db


def test_logdb_reinsert_must_match(lc97):
    db = LogDB(lc97)
    db.insert(lc97.g, 1, "base-system")
    assert db.insert(lc97.g, 1, "descent") == 1    # absorbed, keeps original
    assert db.provenance(lc97.g) == "base-system"
    with pytest.raises(VerificationFailed):
        db.insert(lc97.g, 2, "base-system")


def test_logdb_input_guards(lc97):
    db = LogDB(lc97)
    with pytest.raises(AssertionError):
        db.insert(lc97.g, 1, "folklore")
    with pytest.raises(AssertionError):
        db.insert((0, 0, 1), 0, "base-system")     # X^2 is reducible


def test_logdb_save_load_roundtrip(lc97, db97):
    out = io.StringIO()
    db97.save(out)
    back = LogDB.load(io.StringIO(out.getvalue()), lc97)
    assert len(back) == len(db97)
    assert dict(back.items()) == dict(db97.items())
    assert back.provenance(lc97.rep.traps[0]) == "trap"


def test_logdb_load_rejects_tampering(lc97, db97):
    out = io.StringIO()
    db97.save(out)
    lines = out.getvalue().splitlines()
    pol, val, prov = lines[-1].rsplit(":", 2)
    lines[-1] = f"{pol}:{int(val) + 1}:{prov}"
    with pytest.raises(VerificationFailed):
        LogDB.load(io.StringIO("\n".join(lines)), lc97)


def test_logdb_load_rejects_wrong_context(lc97, db97):
    out = io.StringIO()
    db97.save(out)
    text = out.getvalue().replace(f"ell: {lc97.ell}", "ell: 999983")
    with pytest.raises(VerificationFailed):
        LogDB.load(io.StringIO(text), lc97)
    with pytest.raises(VerificationFailed):
        LogDB.load(io.StringIO("not a database\n"), lc97)


# ----------------------------------------------------------- linear base --

def test_compute_base_linears(rep97, lc97, db97):
    assert len(db97) == 81
    assert db97[(0, 1)] == 0        # X is the subgroup kernel here
    assert db97[lc97.g] == 1
    for T in rep97.traps:
        assert db97.provenance(T) == "trap"
    rng = random.Random(5)
    for a in rng.sample(range(81), 8):
        assert verify_log((a, 1), db97[(a, 1)], lc97)
    assert db97.provenance((1, 1)) == "base-system"


# ---------------------------------------------------------------- descend --

def test_descend_product_of_linears(lc97, db97):
    ell = lc97.ell
    t = mulmod(lc97, (2, 1), (5, 1))
    val, cert = descend(t, lc97, db97)
    assert val == (db97[(2, 1)] + db97[(5, 1)]) % ell
    assert verify_log(t, val, lc97)
    assert cert.kind == "product"
    assert {ch.target for _, ch in cert.children} == {(2, 1), (5, 1)}
    assert all(ch.kind == "leaf" for _, ch in cert.children)


def test_descend_honors_multiplicity_and_unit(lc97, db97):
    ell = lc97.ell
    sq = mulmod(lc97, (7, 1), (7, 1))
    t = poly.scale(lc97.ctx, 2, sq)
    val, cert = descend(t, lc97, db97)
    assert val == 2 * db97[(7, 1)] % ell      # log of the unit is 0 mod ell
    assert verify_log(t, val, lc97)
    (e, leaf), = cert.children
    assert e == 2 and leaf.target == (7, 1)


def test_descend_zero_rejected(lc97, db97):
    with pytest.raises(ValueError):
        descend((), lc97, db97)
    with pytest.raises(ValueError):
        descend(lc97.rep.phi, lc97, db97)


def test_descend_trap_node(rep97, lc97, db97):
    # a database without the trap exercises trap substitution
    T = rep97.traps[0]
    tr_rhs = (76, 1) if T == (44, 1) else (43, 1)
    db = LogDB(lc97)
    db.insert(tr_rhs, db97[tr_rhs], "base-system")
    val, cert = descend(T, lc97, db)
    assert val == db97[T]
    assert cert.kind == "trap"
    assert cert.v_P == 1
    (e, leaf), = cert.children
    assert leaf.target == tr_rhs and leaf.kind == "leaf"
    assert db.provenance(T) == "trap"
    text = certificate_to_text(cert, lc97)
    assert replay_certificate(text, lc97) == val


def test_descend_memoize_off_leaves_db_alone(rep97, lc97, db97):
    T = rep97.traps[1]
    tr_rhs = (76, 1) if T == (44, 1) else (43, 1)
    db = LogDB(lc97)
    db.insert(tr_rhs, db97[tr_rhs], "base-system")
    val, cert = descend(T, lc97, db, memoize=False)
    assert val == db97[T]
    assert T not in db and len(db) == 1


def test_descend_quadratic_rank_deficient(lc97, db97):
    # ceil(D/2) = D - 1 = 1 for quadratics: no room to escalate at q = 9
    with pytest.raises(RankDeficient):
        descend((1, 3, 1), lc97, db97)


def test_descend_deadline(lc97, db97):
    with pytest.raises(DeadlineExceeded):
        descend((1, 3, 1), lc97, db97, deadline=time.monotonic() - 1)
    # database hits resolve without any step, so the deadline never fires
    val, _ = descend((2, 1), lc97, db97, deadline=time.monotonic() - 1)
    assert val == db97[(2, 1)]


def test_descend_cycle_detection(lc97, db97, monkeypatch):
    import qpdlog.descent as dsc
    from qpdlog.relations import DescendStep

    def loop_step(P, rep, lc, db=None, **kw):
        return DescendStep(target=P, children=((P, 1),), h1_exp=0,
                           const_log_total=0, rows_used=0, tried=0,
                           combination=(), aux=None)

    monkeypatch.setattr(dsc, "descend_step", loop_step)
    with pytest.raises(CycleDetected):
        descend((1, 3, 1), lc97, db97)


# ----------------------------------------------------------- certificates --

def test_certificate_roundtrip_text(lc97, db97):
    t = mulmod(lc97, (2, 1), (8, 1))
    val, cert = descend(t, lc97, db97)
    text = certificate_to_text(cert, lc97)
    root, meta = parse_certificate(text)
    assert meta["ell"] == str(lc97.ell)
    assert meta["value"] == str(val)
    assert root.kind == cert.kind and root.value == cert.value
    assert certificate_to_text(root, lc97) == text
    assert replay_certificate(text, lc97) == val


def test_certificate_parse_rejects_malformed(lc97, db97):
    with pytest.raises(VerificationFailed):
        parse_certificate("hello\n")
    t = mulmod(lc97, (2, 1), (8, 1))
    _, cert = descend(t, lc97, db97)
    text = certificate_to_text(cert, lc97)
    lines = text.splitlines()
    lines[-1] = "      " + lines[-1].lstrip(" ")   # hops two indent levels
    with pytest.raises(VerificationFailed):
        parse_certificate("\n".join(lines))


def test_replay_rejects_tampered_value(lc97, db97):
    t = mulmod(lc97, (2, 1), (8, 1))
    val, cert = descend(t, lc97, db97)
    text = certificate_to_text(cert, lc97)
    bad = text.replace(f"value: {val}", f"value: {(val + 1) % lc97.ell}", 1)
    bad = bad.replace(f"= {val} const=", f"= {(val + 1) % lc97.ell} const=", 1)
    with pytest.raises(VerificationFailed):
        replay_certificate(bad, lc97)


def test_replay_rejects_tampered_leaf(lc97, db97):
    t = mulmod(lc97, (2, 1), (8, 1))
    val, cert = descend(t, lc97, db97)
    (e0, leaf0), rest = cert.children[0], cert.children[1:]
    fudged = CertNode(kind="leaf", target=leaf0.target,
                      value=(leaf0.value + 1) % lc97.ell)
    cert.children = ((e0, fudged),) + rest
    cert.value = (cert.value + e0) % lc97.ell
    with pytest.raises(VerificationFailed):
        replay_certificate(certificate_to_text(cert, lc97), lc97)


def test_replay_checks_context(lc97, db97):
    t = mulmod(lc97, (2, 1), (8, 1))
    _, cert = descend(t, lc97, db97)
    text = certificate_to_text(cert, lc97).replace(
        f"ell: {lc97.ell}", "ell: 999983")
    with pytest.raises(VerificationFailed):
        replay_certificate(text, lc97)


# -------------------------------------------------------------- full_dlog --

def test_full_dlog_roundtrip_small_field(rep95):
    # 9^10 - 1 factors into prime powers small enough for the generic walk
    ctx = rep95.ctx
    lc = make_log_context(rep95)
    rng = random.Random(6)
    for _ in range(3):
        t = poly.random_monic(ctx, rng.randrange(1, 5), rng)
        x = full_dlog(t, rep95)
        assert big_field_pow(lc.g, x, rep95) == poly.rem(ctx, t, rep95.phi)


def test_full_dlog_trivials(rep95):
    assert full_dlog(poly.ONE, rep95) == 0
    lc = make_log_context(rep95)
    assert full_dlog(lc.g, rep95) == 1
    with pytest.raises(ValueError):
        full_dlog((), rep95)


def test_full_dlog_matches_subgroup_logs(rep97, lc97, db97):
    # the generic route's answer reduces to the database log mod ell
    t = mulmod(lc97, (4, 1), (11, 1))
    x = full_dlog(t, rep97)
    assert x % lc97.ell == (db97[(4, 1)] + db97[(11, 1)]) % lc97.ell


def test_full_dlog_bsgs_cap(rep97):
    with pytest.raises(PrimePowerFailed) as exc:
        full_dlog((1, 1), rep97, bsgs_cap=4)
    assert exc.value.prime == 2


@pytest.mark.slow
def test_full_dlog_descent_route(rep97, lc97, db97):
    # push the big prime over the descent branch and compare with the
    # generic-only answer; the shared contexts cache must be reused
    t = mulmod(lc97, (4, 1), (11, 1))
    want = full_dlog(t, rep97)
    ctxs = {}
    x = full_dlog(t, rep97, threshold=1 << 14, contexts=ctxs)
    assert x == want
    assert lc97.ell in ctxs
    db_r = ctxs[lc97.ell][1]
    t2 = mulmod(lc97, (9, 1), (70, 1))
    x2 = full_dlog(t2, rep97, threshold=1 << 14, contexts=ctxs)
    assert ctxs[lc97.ell][1] is db_r
    assert big_field_pow(make_log_context(rep97).g, x2, rep97) == t2


# -------------------------------------------------------- degree-2 bases --

@pytest.mark.slow
def test_compute_base_degree2_q9(rep97, lc97, db97_2):
    # 81 linears + (81^2 - 81)/2 = 3240 irreducible quadratics
    assert len(db97_2) == 3321
    rng = random.Random(7)
    quads = [f for f, _ in db97_2.items() if poly.deg(f) == 2]
    assert len(quads) == 3240
    for f in rng.sample(quads, 12):
        assert verify_log(f, db97_2[f], lc97)
    # the next degree is still out of reach of strict per-target descent
    with pytest.raises(RankDeficient):
        descend((1, 0, 3, 1), lc97, db97_2)


@pytest.mark.slow
def test_compute_base_degree2_q13_and_descent(rep137, lc137, db137_2):
    # 169 linears + (169^2 - 169)/2 = 14196 quadratics; the degree-7 trap
    # is never a descent child for targets of degree < 7
    assert len(db137_2) == 14365
    ctx = rep137.ctx
    rng = random.Random(8)
    for f in rng.sample([f for f, _ in db137_2.items()], 12):
        assert verify_log(f, db137_2[f], lc137)
    while True:
        P = poly.random_monic(ctx, 3, rng)
        if poly.is_irreducible(ctx, P):
            break
    before = len(db137_2)
    val, cert = descend(P, lc137, db137_2)
    assert verify_log(P, val, lc137)
    assert cert.kind == "descent"
    assert len(db137_2) == before + 1
    text = certificate_to_text(cert, lc137)
    assert replay_certificate(text, lc137) == val
    # memoized: the second walk is a leaf lookup
    val2, cert2 = descend(P, lc137, db137_2)
    assert val2 == val and cert2.kind == "leaf"
