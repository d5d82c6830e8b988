import random
from fractions import Fraction

import pytest

from bairespace.approx import (
    SPECS,
    Baire1Spec,
    CompMetricSpace,
    CoverGap,
    StepApproximation,
    approximant_value,
    baire1_to_full,
    build_open_scheme,
    check_scheme,
    convergence_report,
    diagonal_limit,
    dyadic_rationals_unit,
    first_zero_spec,
    format_spec,
    indicator_spec,
    parse_spec,
    rational_space,
    sample_domain,
    shipped_spec,
    spec_ball_oracle,
    step_approximation,
    step_error_report,
    value_count_bound,
    verify_diagonal,
    zero_power_harness,
)
from bairespace.borel import EMPTY, WHOLE, Union
from bairespace.full import check_preimages_partition, is_full
from bairespace.seq import ParseError, Point, dyadic, random_points
from bairespace.sigma02 import first_index

SAMPLES = sample_domain()


def test_sample_domain_is_distinct():
    assert len(SAMPLES) == len({x.canonical() for x in SAMPLES}) >= 200


def test_two_point_scheme():
    space = CompMetricSpace(["a", "b"], lambda u, v: 0 if u == v else 1, "two")
    sch = build_open_scheme(space, 2, 8)
    assert sch.content((0,)) == (0,) and sch.content((1,)) == (1,)
    assert sch.witness((0,)) == 0 and sch.witness((1,)) == 1
    assert sch.children(()) == (0, 1)
    assert check_scheme(sch).ok


def test_singleton_scheme():
    space = CompMetricSpace(["a"], lambda u, v: 0, "one")
    sch = build_open_scheme(space, 4, 8)
    for depth in range(5):
        assert sch.witness((0,) * depth) == 0
    assert sch.children((0, 0)) == (0,)


def test_dyadic_scheme_diameters():
    space = dyadic_rationals_unit()
    assert [space.label(i) for i in range(5)] == [0, 1, Fraction(1, 2), Fraction(1, 4), Fraction(3, 4)]
    sch = build_open_scheme(space, 3, 64)
    chk = check_scheme(sch)
    assert chk.ok and chk.nodes > 64
    for length, c in {(len(s), sch.content(s)) for s in sch.explored()}:
        assert all(space.d(i, j) <= dyadic(length) for i in c for j in c)


def test_metric_space_check():
    assert rational_space([0, Fraction(1, 3), 1]).check() == []
    bad = CompMetricSpace([0, 1], lambda a, b: 2 * abs(a - b))
    assert bad.check()
    with pytest.raises(ValueError):
        rational_space([2])


@pytest.mark.parametrize("k", [0, 1, 3, 6])
def test_constant_spec_gives_constant_functions(k):
    f = baire1_to_full(shipped_spec("constant"), k)
    assert f.values() == [0]


def test_indicator_reads_zero_in_prefix():
    spec = indicator_spec()
    for k in range(1, 6):
        f = baire1_to_full(spec, k)
        for x in SAMPLES:
            assert f(x) == (0 if 0 in x.prefix(k) else 1)


def test_indicator_late_zero_sample():
    spec = indicator_spec()
    x = Point.const((1,) * 7 + (0,), 1)
    rep = convergence_report(spec, range(0, 25), [x], 0, 24)
    assert rep.rows[0].m == 8


@pytest.mark.parametrize("name", sorted(SPECS))
def test_full_constant_is_two_to_minus_k_minus_one_not_k(name):
    spec = shipped_spec(name)
    for k in range(1, 7):
        f = baire1_to_full(spec, k)
        assert f.depth == k and f.constant == dyadic(k - 1)
        assert check_preimages_partition(f)
        for pre in f.preimages().values():
            assert is_full(pre) == (True, dyadic(k - 1))


@pytest.mark.parametrize("name", sorted(SPECS))
def test_value_count_bound(name):
    spec = shipped_spec(name)
    for k in range(5):
        assert len(baire1_to_full(spec, k).values()) <= value_count_bound(k)


@pytest.mark.parametrize("name", sorted(SPECS))
def test_values_lie_in_scheme_nodes_and_scheme_holds(name):
    spec = shipped_spec(name)
    for k in range(4):
        baire1_to_full(spec, k)
    assert check_scheme(spec.scheme).ok


@pytest.mark.parametrize("name", sorted(SPECS))
def test_convergence_on_shipped_specs(name):
    spec = shipped_spec(name)
    for n in (0, 3):
        rep = convergence_report(spec, range(0, 25), SAMPLES[::3], n, 24)
        assert rep.ok, [(r.point, r.distances) for r in rep.failures][:3]
    if name == "constant":
        assert all(r.m == 0 for r in rep.rows)


def test_constant_step_approximation():
    space = rational_space([Fraction(1, 2), 0, 1])
    oracle = lambda n, k: Union((WHOLE,)) if n == 0 else Union((EMPTY,))
    approx = step_approximation(oracle, space, 3, 3)
    for x in random_points(random.Random(2), 40):
        assert approx(x) == 0


def test_indicator_step_approximation_exact():
    spec = indicator_spec()
    for k in range(1, 4):
        approx = step_approximation(spec_ball_oracle(spec), spec.space, k, spec.space.size)
        for x in SAMPLES:
            assert approx(x) == spec.truth(x)


def test_step_bound_on_first_zero():
    spec = first_zero_spec()
    for k in range(1, 6):
        approx = step_approximation(spec_ball_oracle(spec), spec.space, k, spec.space.size)
        assert all(ok for _, _, ok in step_error_report(approx, spec.space, spec.truth, SAMPLES))


def test_step_cover_gap():
    approx = StepApproximation(1, [0], [Union((EMPTY,))])
    with pytest.raises(CoverGap):
        approx(Point.const((), 0))


def test_diagonal_examples():
    f_seq = lambda n: (lambda x: Fraction(n))
    h = diagonal_limit(lambda n, m: f_seq(n))
    assert h(4)(Point.const((), 0)) == 4
    fixed = lambda x: Fraction(x[0], 3)
    h = diagonal_limit(lambda n, m: fixed)
    assert all(h(n)(x) == fixed(x) for n in range(4) for x in SAMPLES[:20])


def test_zero_power_harness():
    f, f_seq, g = zero_power_harness()
    pts = random_points(random.Random(5), 50, branch=3, max_head=4)
    chk = verify_diagonal(f_seq, g, f, lambda a, b: abs(a - b), pts, 4, 20)
    assert chk.ok and chk.checked > 0


def test_ground_truth_agrees_with_level_sets():
    for name in SPECS:
        spec = shipped_spec(name)
        for x in SAMPLES:
            v = spec.truth(x)
            assert spec.levels[v].contains(x)
            assert sum(a.contains(x) for a in spec.levels.values()) == 1


def test_spec_file_round_trip():
    for name in ("indicator", "first-zero", "zero-count"):
        spec = shipped_spec(name)
        back = parse_spec(format_spec(spec))
        assert format_spec(back) == format_spec(spec)
        for x in SAMPLES[::5]:
            assert back.truth(x) == spec.truth(x)
        assert approximant_value(back, 3, SAMPLES[7]) == approximant_value(spec, 3, SAMPLES[7])


def test_spec_parse_errors():
    with pytest.raises(ParseError):
        parse_spec("baire1spec v1\nname x\n")
    with pytest.raises(ParseError) as e:
        parse_spec("baire1spec v1\nspace 0 1\nlevel 0 builtin nosuch\n")
    assert e.value.line == 3
    with pytest.raises(ValueError):
        Baire1Spec("bad", rational_space([0, 1]), {5: None}, lambda x: 0)


def test_first_zero_truth():
    spec = first_zero_spec()
    assert spec.truth(Point.const((1, 1, 0), 1)) == 3
    assert spec.truth(Point.const((), 2)) == 0
    x = Point.const((1,) * 6, 0)
    assert spec.truth(x) == 5 and first_index(x, 0) == 6
