import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bairespace.contmap import FuncMap, make_builtin
from bairespace.full import (
    BUCKET,
    CertificationFailed,
    ConstantNotDyadic,
    FullFunction,
    FullSet,
    NotPrefixDetermined,
    check_preimages_partition,
    compose_full_lipschitz,
    format_full,
    full_complement,
    full_intersection,
    full_union,
    full_union_all,
    is_full,
    lipschitz_bound_of_full,
    parse_full,
    precompose_full,
    predicate_to_fullset,
    truncate,
    truncated_prefixes,
    verify_lipschitz,
)
from bairespace.seq import ParseError, Point, point_grid, random_points


def random_fullset(rng, depth, branch):
    return FullSet(depth, branch, frozenset(p for p in truncated_prefixes(depth, branch) if rng.random() < 0.5))


def same_set(a, b, pts):
    return all(a.contains(x) == b.contains(x) for x in pts)


def test_complement_example():
    a = FullSet(1, 2, {(0,)})
    assert full_complement(a).prefixes == {(1,), (BUCKET,)}


def test_union_example_refines_then_unites():
    a, b = FullSet(1, 2, {(0,)}), FullSet(2, 2, {(1, 0)})
    u = full_union(a, b)
    assert u.depth == 2
    assert u.prefixes == {(0, 0), (0, 1), (0, BUCKET), (1, 0)}
    assert u.constant == Fraction(1, 2)
    for x in random_points(random.Random(1), 30, branch=4):
        assert u.contains(x) == (x[0] == 0 or (x[0], x[1]) == (1, 0))


def test_union_with_complement_is_whole():
    rng = random.Random(4)
    for _ in range(20):
        a = random_fullset(rng, 2, 3)
        assert full_union(a, full_complement(a)) == FullSet.whole(2, 3)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_boolean_laws(seed, branch):
    rng = random.Random(seed)
    a, b, c = (random_fullset(rng, rng.randint(1, 3), branch) for _ in range(3))
    pts = point_grid(3, branch + 2)
    assert same_set(full_union(full_union(a, b), c), full_union(a, full_union(b, c)), pts)
    assert same_set(full_intersection(a, full_union(b, c)),
                    full_union(full_intersection(a, b), full_intersection(a, c)), pts)
    assert same_set(full_complement(full_union(a, b)),
                    full_intersection(full_complement(a), full_complement(b)), pts)
    assert full_complement(full_complement(a)) == a
    u = full_union(a, b)
    assert u.depth == max(a.depth, b.depth) and u.constant == min(a.constant, b.constant)


def test_union_of_many_same_depth():
    rng = random.Random(9)
    sets = [random_fullset(rng, 2, 2) for _ in range(25)]
    u = full_union_all(sets)
    assert u.depth == 2
    for x in point_grid(3, 4):
        assert u.contains(x) == any(s.contains(x) for s in sets)


def test_is_full_examples():
    a = FullSet(3, 2, {(0, 1, BUCKET)})
    assert is_full(a) == (True, Fraction(1, 4))
    assert is_full(lambda x: x[0] == 0, 1, 3) == (True, 1)
    with pytest.raises(NotPrefixDetermined) as e:
        is_full(lambda x: 0 in x.prefix(40), 4, 2)
    x, y = e.value.witnesses
    assert truncate(x.prefix(4), 2) == truncate(y.prefix(4), 2)
    assert (0 in x.prefix(40)) != (0 in y.prefix(40))


def test_predicate_to_fullset_matches_predicate():
    pred = lambda x: x[0] == 1 and x[1] != 0
    fs = predicate_to_fullset(pred, 3, 2)
    assert fs.depth == 2
    for x in point_grid(3, 4):
        assert fs.contains(x) == pred(x)


def test_preimages_partition():
    rng = random.Random(3)
    for _ in range(20):
        f = FullFunction.tabulate(lambda p: rng.randrange(4), rng.randint(1, 3), rng.randint(1, 3))
        assert check_preimages_partition(f)


def test_lipschitz_bound_examples():
    unit = lambda a, b: 0 if a == b else 1
    f1 = FullFunction.tabulate(lambda p: p[0] % 2, 1, 2)
    assert lipschitz_bound_of_full(f1) == 1
    f3 = FullFunction.tabulate(lambda p: p[2] == 0, 3, 2)
    assert lipschitz_bound_of_full(f3) == 4
    chk = verify_lipschitz(f3, unit)
    assert chk.ok and chk.sharpest == 4
    flat = FullFunction.constant_function(5, 3, 2)
    assert verify_lipschitz(flat, unit, bound=0).ok


def test_lipschitz_never_fails_on_random_functions():
    rng = random.Random(12)
    dist = lambda a, b: Fraction(abs(a - b), 4)
    for _ in range(15):
        f = FullFunction.tabulate(lambda p: rng.randrange(5), rng.randint(1, 2), rng.randint(1, 2))
        assert verify_lipschitz(f, dist).ok


def test_compose_examples():
    f = FullFunction.tabulate(lambda p: p[0] + 2 * (p[1] == 0), 2, 2)
    assert compose_full_lipschitz(lambda v: v, f) == f
    flat = compose_full_lipschitz(lambda v: 7, f)
    assert flat.values() == [7]
    g = lambda v: v // 2
    gf = compose_full_lipschitz(g, f)
    assert len(gf.values()) <= len(f.values())
    for x in point_grid(3, 4):
        assert gf(x) == g(f(x))


def test_precompose_with_shift():
    f = FullFunction.tabulate(lambda p: 3 * (p[0] % 3) + (p[1] % 3), 2, 2)
    shift = make_builtin("shift", 1)
    fh = precompose_full(shift, f, 2)
    assert fh.depth == 3
    for x in point_grid(4, 4):
        assert fh(x) == f(Point.const(x.prefix(10)[1:], 0))
    for v, pre in fh.preimages().items():
        for x in point_grid(4, 3):
            assert pre.contains(x) == (f(Point.const(x.prefix(10)[1:], 0)) == v)


def test_precompose_errors():
    f = FullFunction.constant_function(0, 1, 2)
    with pytest.raises(ConstantNotDyadic):
        precompose_full(make_builtin("identity"), f, 3)
    drop_two = FuncMap(lambda s: s[2:], name="drop2")
    with pytest.raises(CertificationFailed):
        precompose_full(drop_two, f, 2)


def test_full_file_round_trip():
    rng = random.Random(1)
    for _ in range(10):
        f = FullFunction.tabulate(lambda p: rng.randrange(6), rng.randint(1, 3), rng.randint(1, 3))
        assert parse_full(format_full(f)) == f


def test_full_parse_errors():
    with pytest.raises(ParseError):
        parse_full("fullfunction v1\ndepth 1\nbranch 1\n[0] -> 0\n")
    with pytest.raises(ParseError):
        parse_full("nonsense\n")


def test_fullset_rejects_bad_prefix():
    with pytest.raises(ValueError):
        FullSet(2, 2, {(0, 2)})
    with pytest.raises(ValueError):
        FullSet(0, 2)


def test_exhaustive_small_membership():
    for depth, branch in itertools.product((1, 2), (1, 2)):
        for p in truncated_prefixes(depth, branch):
            s = FullSet(depth, branch, {p})
            for x in point_grid(depth, branch + 2):
                want = all((v == BUCKET and e >= branch) or v == e for v, e in zip(p, x.prefix(depth)))
                assert s.contains(x) == want
