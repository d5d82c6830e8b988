import itertools
import random

import pytest

from bairespace.contmap import (
    Diverged,
    FuncMap,
    IncoherentOracle,
    LetterMap,
    TableMap,
    ViolationFound,
    check_monotone,
    compose,
    format_seqmap,
    induced_eval,
    induced_point,
    make_builtin,
    parse_seqmap,
    seqmap_from_prefix_oracle,
    validate_monotone,
)
from bairespace.seq import ParseError, Point, all_sequences, random_points
from bairespace.sigma02 import build_control, shipped_family


def _table(depth, branch, rule, default="copy"):
    return TableMap({s: rule(s) for s in all_sequences(depth, branch)}, depth, branch, default)


def test_identity_certified():
    assert validate_monotone(make_builtin("identity"), 4, 3).certified


def test_reverse_violates():
    rev = FuncMap(lambda s: tuple(reversed(s)), 2, 2, "reverse")
    with pytest.raises(ViolationFound) as e:
        validate_monotone(rev, 2, 2)
    assert (e.value.s, e.value.t) == ((0,), (0, 1))


def test_control_output_certified():
    family, sched = shipped_family("two-set")
    phi = build_control([a.reduction for a in family], sched)
    assert validate_monotone(phi.star_map, 6, 3).certified


def test_depth_beyond_declaration_rejected():
    t = _table(2, 2, lambda s: s)
    with pytest.raises(ValueError):
        check_monotone(t, 3, 2)


def test_induced_eval_examples():
    x = Point.periodic((2,), (0, 1))
    assert induced_eval(make_builtin("identity"), x, 5, 5) == x.prefix(5)
    flip = make_builtin("const", 7)
    assert induced_eval(flip, x, 4, 4) == (7, 7, 7, 7)
    with pytest.raises(Diverged):
        induced_eval(FuncMap(lambda s: ()), x, 1, 100)


def test_compose_identity_laws():
    ident = make_builtin("identity")
    psi = _table(3, 2, lambda s: tuple(1 - v for v in s))
    for s in all_sequences(3, 2):
        assert compose(ident, psi)(s) == psi(s)
        assert compose(psi, ident)(s) == psi(s)


def test_compose_matches_sequential_on_samples():
    a = _table(3, 3, lambda s: tuple((v + 1) % 3 for v in s))
    b = _table(3, 3, lambda s: tuple(min(v, 1) for v in s))
    ab = compose(a, b)
    rng = random.Random(7)
    for x in random_points(rng, 50, branch=3):
        n = rng.randint(0, 6)
        first = induced_eval(a, x, n, n)
        assert induced_eval(ab, x, n, n) == induced_eval(b, Point.const(first, 0), n, n)


def test_compose_associative_on_samples():
    a = make_builtin("const", 1)
    b = LetterMap(0, lambda q, v: (q ^ (v == 0), q), "parity")
    c = make_builtin("identity")
    rng = random.Random(1)
    for x in random_points(rng, 40):
        left, right = compose(compose(a, b), c), compose(a, compose(b, c))
        assert induced_eval(left, x, 8, 8) == induced_eval(right, x, 8, 8)


def test_prefix_oracle_examples():
    ident = seqmap_from_prefix_oracle(lambda s: s, 3)
    assert all(ident(s) == s for s in all_sequences(3, 2))
    zero = seqmap_from_prefix_oracle(lambda s: (0,), 3)
    assert zero(()) == ()
    assert all(zero(s) == (0,) for s in all_sequences(3, 2) if s)
    with pytest.raises(IncoherentOracle):
        seqmap_from_prefix_oracle(lambda s: (1,) if len(s) == 1 else (2,) if len(s) == 2 else (), 3)


def test_continuity_at_prefix_level():
    maps = [_table(4, 3, lambda s: s[1:]), make_builtin("no_zero"), _table(4, 3, lambda s: s[:2], "hold")]
    for phi in maps:
        for s in all_sequences(4, 3):
            xs = [Point.const(s, v) for v in range(3)]
            out = phi(s)
            for x, y in itertools.combinations(xs, 2):
                assert phi(x.prefix(len(s)))[: len(out)] == phi(y.prefix(len(s)))[: len(out)] == out


def test_length_preserving_never_diverges():
    phi = make_builtin("has_zero")
    for x in random_points(random.Random(2), 30):
        for n in range(6):
            assert len(induced_eval(phi, x, n, n)) == n


def test_induced_point_exact_matches_unfolding():
    phi = make_builtin("zero_in_first", 2)
    for x in random_points(random.Random(4), 60):
        y = induced_point(phi, x)
        assert y is not None
        assert y.prefix(40) == phi(x.prefix(40))


def test_seqmap_file_round_trip():
    t = _table(2, 2, lambda s: tuple(1 - v for v in s), "hold")
    back = parse_seqmap(format_seqmap(t))
    assert all(back(s) == t(s) for s in all_sequences(4, 3))
    b = make_builtin("cylinder", (2, 0))
    assert parse_seqmap(format_seqmap(b))((2, 0, 1)) == b((2, 0, 1))


def test_seqmap_parse_errors():
    with pytest.raises(ParseError):
        parse_seqmap("kind table\ndepth 1\nbranch 2\n[0] -> [0]\n")  # missing rows
    with pytest.raises(ParseError):
        parse_seqmap("bogus line\n")
