import itertools
import random
from fractions import Fraction

import pytest

from bairespace.approx import approximant_value, baire1_to_full, shipped_spec
from bairespace.embed import (
    InvalidSpace,
    Undefined,
    UltraSpace,
    branch_point,
    build_lusin_scheme,
    check_full_on_space,
    check_lusin_scheme,
    embed_h,
    format_space,
    induced_ultrametric,
    invert_h,
    parse_space,
    pullback_values,
    random_dendrogram,
    separating_depth,
    verify_bilipschitz,
)
from bairespace.seq import ParseError, dyadic


def pairs_space(inner):
    """Labels a, b and c, d: inner distance within each pair, 1 across pairs."""
    groups = {"a": 0, "b": 0, "c": 1, "d": 1}
    return UltraSpace.from_function("abcd", lambda u, v: 0 if u == v else inner if groups[u] == groups[v] else 1)


def test_one_point_space():
    space = UltraSpace(("p",), ((0,),))
    sch = build_lusin_scheme(space, 3)
    assert sorted(sch.nodes) == [(), (0,), (0, 0), (0, 0, 0)]
    assert invert_h(sch, "p") == (0, 0, 0)
    assert embed_h(sch, (0, 0, 0)) == "p"
    rep = verify_bilipschitz(sch)
    assert rep.ok and rep.pairs == 0


def test_two_labels_at_distance_one():
    space = UltraSpace.from_function("uv", lambda a, b: 0 if a == b else 1)
    sch = build_lusin_scheme(space, 2)
    assert sch.children(()) == [0, 1]
    assert sch.children((0,)) == [0] and sch.children((1,)) == [0]
    assert induced_ultrametric(sch, "u", "v") == 1
    assert induced_ultrametric(sch, "u", "u") == 0
    rep = verify_bilipschitz(sch)
    assert rep.ok and rep.max_ratio_forward == 1 and rep.max_ratio_inverse == 1


def test_dendrogram_with_quarter_pairs():
    space = pairs_space(Fraction(1, 4))
    sch = build_lusin_scheme(space, separating_depth(space))
    assert [sch.nodes[(i,)].members for i in sch.children(())] == [(0, 1), (2, 3)]
    assert all(len(sch.nodes[s].members) == 1 for s in sch.nodes if len(s) == 2)
    a, b = invert_h(sch, "a"), invert_h(sch, "b")
    assert a[0] == b[0] and a[1] != b[1]
    rep = verify_bilipschitz(sch)
    assert rep.ok and rep.pairs == 6 and rep.max_ratio_inverse == 2
    assert set(rep.tight_pairs) == {("a", "b"), ("c", "d")}


def test_dendrogram_with_half_pairs_splits_at_once():
    # strict balls of radius 1/2 already separate labels at distance 1/2
    space = pairs_space(Fraction(1, 2))
    sch = build_lusin_scheme(space, 2)
    assert [sch.nodes[(i,)].members for i in sch.children(())] == [(0,), (1,), (2,), (3,)]
    rep = verify_bilipschitz(sch)
    assert rep.ok and rep.max_ratio_inverse == 2
    assert induced_ultrametric(sch, "a", "b") == 1


def test_round_trip_and_scheme_conditions_on_random_spaces():
    rng = random.Random(21)
    for _ in range(20):
        space = random_dendrogram(rng)
        sch = build_lusin_scheme(space, separating_depth(space))
        assert check_lusin_scheme(sch).ok
        for u in space.labels:
            assert embed_h(sch, invert_h(sch, u)) == u


def test_bilipschitz_on_random_spaces():
    rng = random.Random(22)
    for _ in range(30):
        space = random_dendrogram(rng, 32, 8)
        assert 2 <= len(space) <= 32
        rep = verify_bilipschitz(build_lusin_scheme(space, separating_depth(space)))
        assert rep.ok and rep.max_ratio_forward <= 1 and rep.max_ratio_inverse <= 2


def test_induced_ultrametric_strong_triangle():
    rng = random.Random(23)
    for _ in range(10):
        space = random_dendrogram(rng, 12, 5)
        sch = build_lusin_scheme(space, separating_depth(space))
        for u, v, w in itertools.permutations(space.labels, 3):
            assert induced_ultrametric(sch, u, w) <= max(induced_ultrametric(sch, u, v),
                                                         induced_ultrametric(sch, v, w))


def test_undefined_branches():
    sch = build_lusin_scheme(pairs_space(Fraction(1, 4)), 2)
    with pytest.raises(Undefined):
        embed_h(sch, (5,))
    with pytest.raises(Undefined):
        embed_h(sch, (0,))
    with pytest.raises(ValueError):
        embed_h(sch, (0, 0, 0))


def test_invalid_spaces_rejected():
    with pytest.raises(InvalidSpace):
        UltraSpace("abc", ((0, 1, Fraction(1, 4)), (1, 0, Fraction(1, 4)), (Fraction(1, 4), Fraction(1, 4), 0)))
    with pytest.raises(InvalidSpace):
        UltraSpace("ab", ((0, Fraction(1, 3)), (Fraction(1, 3), 0)))
    with pytest.raises(InvalidSpace):
        UltraSpace("ab", ((0, 0), (0, 0)))


def test_space_text_round_trip():
    rng = random.Random(24)
    for _ in range(10):
        space = random_dendrogram(rng)
        assert parse_space(format_space(space)) == space
    assert parse_space("ultraspace v1\n1\n").labels == ("x0",)


def test_space_parse_errors():
    with pytest.raises(ParseError) as e:
        parse_space("ultraspace v1\n3\n1\n1 3/4\n")
    assert e.value.line == 4
    with pytest.raises(ParseError):
        parse_space("ultraspace v1\n3\n1\n")
    with pytest.raises(ParseError):
        parse_space("ultraspace v1\n3\n2^-1\n1 2^-2\n")  # strong triangle fails


@pytest.mark.parametrize("name", ["indicator", "first-zero", "zero-count"])
def test_pullback_is_full_and_converges(name):
    spec = shipped_spec(name)
    space = random_dendrogram(random.Random(25), 16, 6)
    sch = build_lusin_scheme(space, separating_depth(space))
    for k in range(1, 7):
        vals = pullback_values(sch, baire1_to_full(spec, k))
        assert check_full_on_space(space, vals, dyadic(k)) == []
    for u in space.labels:
        x = branch_point(sch, u)
        assert all(spec.space.d(approximant_value(spec, k, x), spec.truth(x)) <= dyadic(4) for k in range(16, 25))
