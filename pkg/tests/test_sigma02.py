import random
import threading

import pytest
from hypothesis import given, settings, strategies as st

from bairespace.contmap import make_builtin
from bairespace.seq import Point, all_sequences, random_points
from bairespace.sigma02 import (
    FAMILIES,
    Schedule,
    Stability,
    build_control,
    default_schedule,
    induced_in_s,
    s_membership,
    shipped_family,
    shuffled_schedule,
    sigma02_set,
    stabilizing_point,
    state_trace,
    union_reduction,
    verify_union,
)
from oracles import has_zero_cofinally

BUILTINS_WITH_TRUTH = [
    ("identity", ()), ("no_zero", ()), ("has_zero", ()), ("zero_in_first", (3,)), ("avoid", (1,)),
    ("eventually_even", ()), ("eventually_below", (2,)), ("cylinder", ((2, 0),)), ("empty", ()),
    ("whole", ()), ("first_zero_at", (2,)), ("first_zero_from", (3,)), ("zero_count", (1,)),
    ("zero_count_at_least", (2,)),
]

SAMPLES = random_points(random.Random(11), 120, branch=3, max_head=5, max_period=3)


def test_s_membership_examples():
    assert s_membership(Point.const((1,), 1))
    assert not s_membership(Point.periodic((), (1, 0)))
    assert s_membership(Point.const((0, 0, 0), 7))


def test_default_schedules():
    assert default_schedule(3).prefix(7) == [0, 1, 2, 0, 1, 2, 0]
    assert default_schedule(1).prefix(5) == [0] * 5
    assert default_schedule(None).prefix(9) == [0, 1, 0, 1, 2, 0, 1, 2, 3]
    with pytest.raises(ValueError):
        default_schedule(0)


def test_repeating_schedule_rejected():
    with pytest.raises(ValueError):
        build_control([make_builtin("identity")] * 2, Schedule(2, (), (0, 0, 1)))


def test_control_examples():
    ident = make_builtin("identity")
    phi = build_control([ident])
    x = Point.const((1,), 1)
    assert all(phi.star(x.prefix(m)) == (1,) * m for m in range(12))
    z = Point.const((), 0)
    assert all(phi.star(z.prefix(m)) == (0,) * m for m in range(12))
    assert [phi.state(z.prefix(m))[1] for m in range(6)] == list(range(6))
    assert phi.star(()) == () and phi.sigma(()) == 0


def test_state_trace_examples():
    fam, sched = shipped_family("two-set")
    phi = build_control([a.reduction for a in fam], sched)
    assert state_trace(phi, Point.const((), 1), 0) == [sched.at(0)]
    ident = build_control([make_builtin("identity")])
    assert len(set(state_trace(ident, Point.const((), 1), 5))) == 1
    both = build_control([make_builtin("no_zero"), make_builtin("cylinder", (1,))])
    x = Point.const((0,), 0)  # in neither set
    assert len(set(state_trace(both, x, 32)[-8:])) > 1


def test_stabilizing_point_examples():
    ident = build_control([make_builtin("identity")])
    truths = [s_membership]
    assert stabilizing_point(ident, Point.const((1,), 1), 16, truths) == (0, Stability.PROVEN_STABLE)
    assert stabilizing_point(ident, Point.const((0, 1), 1), 16, truths)[0] == 1
    for h in (4, 8, 16):
        assert stabilizing_point(ident, Point.periodic((), (1, 0)), h)[1] is Stability.NOT_STABLE_AT_HORIZON


def test_union_singleton_agrees():
    a = sigma02_set("eventually_below", 2)
    u = union_reduction([a])
    for x in SAMPLES[:50]:
        assert induced_in_s(u.reduction, x)[0] == a.contains(x)


def test_union_disjunction_and_empty_member():
    a, b = sigma02_set("cylinder", (1,)), sigma02_set("cylinder", (2,))
    u = union_reduction([a, b])
    v = union_reduction([sigma02_set("empty"), a])
    for x in SAMPLES[:50]:
        assert induced_in_s(u.reduction, x)[0] == (a.contains(x) or b.contains(x))
        assert induced_in_s(v.reduction, x)[0] == a.contains(x)


def test_reductions_match_ground_truth():
    # every shipped reduction reduces its set to S, checked against an independent unfolding
    for name, params in BUILTINS_WITH_TRUTH:
        a = sigma02_set(name, *params)
        for x in SAMPLES:
            in_s, exact = induced_in_s(a.reduction, x)
            assert exact
            assert in_s == a.contains(x), (name, params, x)
            assert in_s == (not has_zero_cofinally(Point.const(a.reduction(x.prefix(400)), 1))), (name, x)


def test_verify_union_examples():
    fam, sched = shipped_family("two-set")
    phi = build_control([a.reduction for a in fam], sched)
    rep = verify_union(phi, fam, SAMPLES[:50])
    assert rep.ok and rep.inexact == 0
    empty = [sigma02_set("empty")]
    rep = verify_union(build_control([empty[0].reduction]), empty, SAMPLES[:30])
    assert all(not v.member and not v.stable for v in rep.verdicts)


def test_stabilized_state_holds():
    fam, sched = shipped_family("four")
    phi = build_control([a.reduction for a in fam], sched)
    for v in verify_union(phi, fam, SAMPLES).verdicts:
        if v.member:
            assert fam[v.state].contains(v.point)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_union_holds_under_shuffled_schedules(name):
    fam, _ = shipped_family(name)
    for seed in range(3):
        phi = build_control([a.reduction for a in fam], shuffled_schedule(len(fam), seed))
        assert verify_union(phi, fam, SAMPLES).ok


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(["no_zero", "has_zero", "eventually_even", "empty", "whole"]),
                min_size=1, max_size=4),
       st.integers(0, 50))
def test_union_holds_for_random_families(names, seed):
    fam = [sigma02_set(n) for n in names]
    sched = shuffled_schedule(len(fam), seed) if len(fam) > 1 else None
    phi = build_control([a.reduction for a in fam], sched)
    assert verify_union(phi, fam, SAMPLES[:40]).ok


def test_control_lock_step_exhaustive():
    fam, sched = shipped_family("three")
    phi = build_control([a.reduction for a in fam], sched)
    for s in all_sequences(5, 3):
        for i in range(3):
            t = s + (i,)
            b = phi.star(t)[-1]
            assert phi.star(t)[:-1] == phi.star(s)
            assert (phi.state(t)[1] != phi.state(s)[1]) == (b == 0)


def test_concurrent_queries_agree():
    fam, sched = shipped_family("stair-four")
    seqs = list(all_sequences(5, 3))
    ref = build_control([a.reduction for a in fam], sched)
    expected = [ref.star(s) for s in seqs]
    phi = build_control([a.reduction for a in fam], sched)
    results = {}

    def worker(k):
        order = seqs[k:] + seqs[:k]
        results[k] = {s: phi.star(s) for s in order}

    threads = [threading.Thread(target=worker, args=(k,)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for k in range(4):
        for s, v in results[k].items():
            assert v == expected[seqs.index(s)]
