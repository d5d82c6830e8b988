"""Approximating functions into a complete metric space.

Two engines live here. :func:`step_approximation` builds, for a Borel
function given by ball-preimage codes, a function that is constant on the cells
of a disjoint Borel partition and lies within 2^-k of the target. The
second takes a Baire class 1 function, given by reductions of the preimages
of a scheme of open sets, and produces full functions f_k that converge to it
pointwise (:func:`baire1_to_full`).
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .borel import EMPTY, WHOLE, Basic, Complement, Union, Verdict, eval_membership, generalized_reduction
from .contmap import SeqMap
from .full import FullFunction, representative
from .seq import FinSeq, ParseError, Point, dyadic, format_seq
from .sigma02 import (
    ControlFunction,
    Sigma02Set,
    build_control,
    first_index,
    stabilizing_point,
    sigma02_set,
    union_reduction,
    zero_count,
)


class CoverGap(ValueError):
    def __init__(self, x: Point):
        super().__init__(f"{x} lies in no cell of the partition")
        self.point = x


class MissingReduction(KeyError):
    pass


class NodeOutsideTree(ValueError):
    def __init__(self, prefix: FinSeq, node: FinSeq):
        super().__init__(f"prefix {format_seq(prefix)} led to node {format_seq(node)} outside the tree")
        self.prefix = prefix
        self.node = node


# ---------------------------------------------------------------------------
# metric spaces given by a dense sequence


class CompMetricSpace:
    """A dense sequence of labels with an exact rational distance bounded by 1.

    ``labels`` is a list, or a callable i -> label for an infinite sequence
    (``size`` None).
    """

    def __init__(self, labels, dist: Callable, name: str = "Y", size: int | None = None):
        if callable(labels):
            self._label = labels
            self.size = size
        else:
            labels = list(labels)
            self._label = labels.__getitem__
            self.size = len(labels)
        self.dist = dist
        self.name = name

    def label(self, i: int):
        if self.size is not None and not 0 <= i < self.size:
            raise IndexError(f"dense index {i} out of range")
        return self._label(i)

    def d(self, i: int, j: int) -> Fraction:
        return Fraction(self.dist(self.label(i), self.label(j)))

    def indices(self, bound: int) -> range:
        return range(bound if self.size is None else min(bound, self.size))

    def check(self, bound: int = 32) -> list[str]:
        """Metric axioms and the bound 1 on the first ``bound`` points."""
        idx = list(self.indices(bound))
        problems = []
        for i, j in itertools.product(idx, repeat=2):
            dij = self.d(i, j)
            if dij != self.d(j, i):
                problems.append(f"asymmetric at {i},{j}")
            if not 0 <= dij <= 1:
                problems.append(f"distance {dij} at {i},{j} outside [0,1]")
            if i == j and dij != 0:
                problems.append(f"nonzero self distance at {i}")
        for i, j, k in itertools.product(idx, repeat=3):
            if self.d(i, k) > self.d(i, j) + self.d(j, k):
                problems.append(f"triangle fails at {i},{j},{k}")
        return problems


def abs_dist(a, b) -> Fraction:
    return abs(Fraction(a) - Fraction(b))


def rational_space(values: Sequence, name: str = "Y") -> CompMetricSpace:
    vals = [Fraction(v) for v in values]
    if any(not 0 <= v <= 1 for v in vals):
        raise ValueError("values must lie in [0, 1]")
    return CompMetricSpace(vals, abs_dist, name)


def dyadic_rationals_unit() -> CompMetricSpace:
    """0, 1, 1/2, 1/4, 3/4, 1/8, 3/8, ... : the dyadic rationals of [0, 1]."""

    def label(i: int) -> Fraction:
        if i < 2:
            return Fraction(i)
        n = (i - 1).bit_length()  # block of denominators 2^n
        first = 1 << (n - 1)
        return Fraction(2 * (i - 1 - first) + 1, 1 << n)

    return CompMetricSpace(label, abs_dist, "dyadic[0,1]")


# ---------------------------------------------------------------------------
# open schemes


class OpenScheme:
    """U_empty = Y and U_{s^i} = B(y_i, 2^-(lh(s)+2)) intersected with U_s.

    A node is stored as the dense indices below ``search_bound`` that satisfy
    its ball constraints. Nonemptiness is certified by a witness; an empty node
    only means no witness was found below the bound. Nodes are built lazily and
    memoized.
    """

    def __init__(self, space: CompMetricSpace, search_bound: int):
        if search_bound < 1:
            raise ValueError("search bound must be >= 1")
        self.space = space
        self.search_bound = search_bound
        self._nodes: dict[FinSeq, tuple[int, ...]] = {(): tuple(space.indices(search_bound))}
        self._children: dict[FinSeq, tuple[int, ...]] = {}
        self._dist: dict[tuple[int, int], Fraction] = {}
        self._balls: dict[tuple[int, int], frozenset] = {}
        self._lock = threading.Lock()

    def d(self, i: int, j: int) -> Fraction:
        """Memoized distance between dense points."""
        key = (i, j) if i <= j else (j, i)
        hit = self._dist.get(key)
        if hit is None:
            hit = self._dist.setdefault(key, self.space.d(i, j))
        return hit

    def ball(self, center: int, length: int) -> frozenset:
        """Dense indices below the bound within the radius used at nodes of this length."""
        key = (center, length)
        hit = self._balls.get(key)
        if hit is None:
            r = dyadic(length + 1)
            hit = frozenset(j for j in self.space.indices(self.search_bound) if self.d(j, center) < r)
            self._balls.setdefault(key, hit)
        return hit

    @staticmethod
    def radius(s: FinSeq) -> Fraction:
        """Radius of the ball constraint added at node s (lh(s) >= 1)."""
        return dyadic(len(s) + 1)

    def content(self, s: Sequence[int]) -> tuple[int, ...]:
        s = tuple(s)
        hit = self._nodes.get(s)
        if hit is not None:
            return hit
        parent = self.content(s[:-1])
        center = s[-1]
        if center not in self.space.indices(self.search_bound):
            out: tuple[int, ...] = ()
        else:
            ball = self.ball(center, len(s))
            out = tuple(j for j in parent if j in ball)
        with self._lock:
            self._nodes[s] = out
        return out

    def nonempty(self, s: Sequence[int]) -> bool:
        return bool(self.content(s))

    def witness(self, s: Sequence[int]) -> int:
        c = self.content(s)
        if not c:
            raise NodeOutsideTree((), tuple(s))
        return c[0]

    def children(self, s: Sequence[int]) -> tuple[int, ...]:
        """The j_i: indices j with s^j nonempty, increasing."""
        s = tuple(s)
        hit = self._children.get(s)
        if hit is not None:
            return hit
        c = self.content(s)
        n = len(s) + 1
        out = tuple(j for j in self.space.indices(self.search_bound) if not self.ball(j, n).isdisjoint(c))
        with self._lock:
            self._children[s] = out
        return out

    def explore(self, depth: int) -> None:
        """Build every node of the tree down to ``depth``."""
        frontier = [()]
        for _ in range(depth):
            frontier = [s + (j,) for s in frontier for j in self.children(s)]
            for s in frontier:
                self.content(s)

    def explored(self) -> list[FinSeq]:
        return sorted(s for s, c in list(self._nodes.items()) if c)


def build_open_scheme(space: CompMetricSpace, depth: int, search_bound: int) -> OpenScheme:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    scheme = OpenScheme(space, search_bound)
    scheme.explore(depth)
    return scheme


@dataclass
class SchemeCheck:
    nodes: int = 0
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def check_scheme(scheme: OpenScheme, nodes: Iterable[FinSeq] | None = None) -> SchemeCheck:
    """Conditions U_empty = Y, nesting, covering by children and diam(U_s) <= 2^-lh(s).

    Openness holds by construction (finite intersections of open balls).
    """
    res = SchemeCheck()
    space = scheme.space
    if scheme.content(()) != tuple(space.indices(scheme.search_bound)):
        res.problems.append("root is not the whole sampled space")
    for s in (scheme.explored() if nodes is None else nodes):
        c = scheme.content(s)
        if not c:
            continue
        res.nodes += 1
        if s and not set(c) <= set(scheme.content(s[:-1])):
            res.problems.append(f"{format_seq(s)} not inside its parent")
        covered = set()
        for j in scheme.children(s):
            covered.update(scheme.content(s + (j,)))
        if covered != set(c):
            res.problems.append(f"children of {format_seq(s)} do not cover it")
        bound = dyadic(len(s))
        for i, j in itertools.combinations(c, 2):
            if scheme.d(i, j) > bound:
                res.problems.append(f"diameter of {format_seq(s)} exceeds {bound}")
                break
    return res


# ---------------------------------------------------------------------------
# Baire class 1 functions given by reductions


@dataclass
class Baire1Spec:
    """f: Baire space -> Y with finitely many values, each level set a Sigma^0_2 set.

    ``levels`` maps a dense index v to the set f^-1(y_v) (with its reduction);
    ``truth`` computes the dense index of f(x) directly. ``level_codes`` maps v
    to Borel children whose union is f^-1(y_v), for the step approximation.
    """

    name: str
    space: CompMetricSpace
    levels: Mapping[int, Sigma02Set]
    truth: Callable[[Point], int]
    branch: int = 2
    search_bound: int = 64
    level_codes: Mapping[int, list] | None = None
    truth_slack: Fraction = Fraction(0)

    def __post_init__(self):
        self.scheme = OpenScheme(self.space, self.search_bound)
        self._reductions: dict = {}
        self._controls: dict = {}
        self._lock = threading.Lock()
        bad = [v for v in self.levels if v not in self.space.indices(self.search_bound)]
        if bad:
            raise ValueError(f"level value {bad[0]} lies beyond the search bound")

    def node_set(self, s: FinSeq) -> Sigma02Set:
        """f^-1(U_s) with its reduction: the union of the level sets inside U_s."""
        inside = tuple(v for v in sorted(self.levels) if v in set(self.scheme.content(s)))
        hit = self._reductions.get(inside)
        if hit is not None:
            return hit
        if not inside:
            out = sigma02_set("empty")
        elif len(inside) == 1:
            out = self.levels[inside[0]]
        else:
            out = union_reduction([self.levels[v] for v in inside])
        with self._lock:
            self._reductions.setdefault(inside, out)
        return self._reductions[inside]

    def reduction(self, s: FinSeq) -> SeqMap:
        if not self.scheme.nonempty(s):
            raise MissingReduction(f"no reduction for empty node {format_seq(s)}")
        return self.node_set(s).reduction

    def control(self, s: FinSeq) -> ControlFunction:
        """psi_s: the control function over the reductions of s^j_i, i < I_s."""
        kids = self.scheme.children(s)
        if not kids:
            raise NodeOutsideTree((), s)
        key = tuple(tuple(v for v in sorted(self.levels) if v in set(self.scheme.content(s + (j,)))) for j in kids)
        hit = self._controls.get(key)
        if hit is not None:
            return hit
        ctrl = build_control([self.reduction(s + (j,)) for j in kids])
        with self._lock:
            self._controls.setdefault(key, ctrl)
        return self._controls[key]

    def value(self, x: Point) -> int:
        return self.truth(x)


def approximant_node(spec: Baire1Spec, prefix: FinSeq, k: int) -> FinSeq:
    """s^{x,k}_k computed from x|k: k+1 steps, each picking child j_{min(sigma, k)}."""
    prefix = tuple(prefix[:k])
    s: FinSeq = ()
    for _ in range(k + 1):
        kids = spec.scheme.children(s)
        if not kids:
            raise NodeOutsideTree(prefix, s)
        sigma = spec.control(s).sigma(prefix)
        s = s + (kids[min(sigma, k)],)
    return s


def approximant_value(spec: Baire1Spec, k: int, x: Point) -> int:
    """f_k(x) as a dense index."""
    return spec.scheme.witness(approximant_node(spec, x.prefix(k), k))


def baire1_to_full(spec: Baire1Spec, k: int) -> FullFunction:
    """f_k tabulated over the truncated prefixes of length k (depth 1 when k = 0)."""
    depth = max(k, 1)
    return FullFunction.tabulate(
        lambda p: spec.scheme.witness(approximant_node(spec, representative(p, spec.branch), k)),
        depth, spec.branch)


def value_count_bound(k: int) -> int:
    return (k + 1) ** (k + 1)


@dataclass
class ConvergenceRow:
    index: int
    point: Point
    truth: int
    values: dict  # k -> dense index
    distances: dict  # k -> Fraction
    m: int | None  # least m after which every tested k is close enough; None on failure
    root_stability: str = ""


@dataclass
class ConvergenceReport:
    n: int
    M: int
    tolerance: Fraction
    slack: Fraction
    rows: list

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.m is None]

    @property
    def ok(self) -> bool:
        return not self.failures


def convergence_report(spec: Baire1Spec, ks: Sequence[int], samples: Sequence[Point], n: int, M: int,
                       horizon: int = 32) -> ConvergenceReport:
    """Per sample, the least m <= M with d(f_m'(x), f(x)) <= 2^-(n+1) for every tested m' >= m."""
    ks = sorted(k for k in set(ks) if k <= M)
    if not ks:
        raise ValueError("no k at most M")
    tol = dyadic(n + 1)
    rows = []
    root = spec.control(())
    for idx, x in enumerate(samples):
        t = spec.truth(x)
        vals = {k: approximant_value(spec, k, x) for k in ks}
        dists = {k: spec.space.d(v, t) for k, v in vals.items()}
        m: int | None = None
        if dists[ks[-1]] <= tol + spec.truth_slack:
            m = 0
            for k in reversed(ks):
                if dists[k] > tol + spec.truth_slack:
                    m = k + 1
                    break
        stab = stabilizing_point(root, x, horizon)
        rows.append(ConvergenceRow(idx, x, t, vals, dists, m, f"{stab[1].value}@{stab[0]}"))
    return ConvergenceReport(n, M, tol, spec.truth_slack, rows)


# ---------------------------------------------------------------------------
# step approximation


@dataclass
class StepApproximation:
    k: int
    centers: list[int]  # dense index y_n for cell n
    partition: list  # Borel codes Q^k_n
    budget: int = 1_000_000

    def cell(self, x: Point) -> tuple[int | None, int]:
        """(index of the cell holding x, number of Unknown verdicts)."""
        found, unknown = [], 0
        for n, q in enumerate(self.partition):
            v = eval_membership(q, x, self.budget)
            if v is Verdict.IN:
                found.append(n)
            elif v is Verdict.UNKNOWN:
                unknown += 1
        if len(found) > 1:
            raise ValueError(f"{x} lies in cells {found}: partition not disjoint")
        return (found[0] if found else None), unknown

    def __call__(self, x: Point) -> int:
        n, _ = self.cell(x)
        if n is None:
            raise CoverGap(x)
        return self.centers[n]


def spec_ball_oracle(spec: Baire1Spec) -> Callable[[int, int], Union]:
    """(n, k) -> code for f^-1(B(y_n, 2^-(k+1))) from the spec's level codes."""
    if spec.level_codes is None:
        raise ValueError(f"spec {spec.name} has no level codes")

    def oracle(n: int, k: int) -> Union:
        r = dyadic(k + 1)
        kids = [c for v in sorted(spec.level_codes) if spec.space.d(v, n) < r for c in spec.level_codes[v]]
        return Union(tuple(kids) if kids else (EMPTY,))

    return oracle


def step_approximation(oracle: Callable[[int, int], Union], space: CompMetricSpace, k: int,
                       cover: int, xi: int | None = None) -> StepApproximation:
    """Reduce the cover S^k_n = f^-1(B(y_n, 2^-(k+1))), n < cover, to a partition Q^k_n."""
    centers = list(space.indices(cover))
    family = [oracle(n, k) for n in centers]
    return StepApproximation(k, centers, generalized_reduction(family, xi))


def step_error_report(approx: StepApproximation, space: CompMetricSpace, truth: Callable[[Point], int],
                      samples: Sequence[Point], slack: Fraction = Fraction(0)) -> list[tuple[Point, Fraction, bool]]:
    bound = dyadic(approx.k) + slack
    out = []
    for x in samples:
        d = space.d(approx(x), truth(x))
        out.append((x, d, d <= bound))
    return out


def diagonal_limit(g: Callable[[int, int], Callable[[Point], Fraction]]) -> Callable[[int], Callable[[Point], Fraction]]:
    """h_n = g_{n,n}."""
    return lambda n: g(n, n)


@dataclass
class DiagonalCheck:
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_diagonal(f_seq: Callable[[int], Callable[[Point], Fraction]], g, f: Callable[[Point], Fraction],
                    dist: Callable, samples: Sequence[Point], kmax: int, M: int) -> DiagonalCheck:
    """d(h_m'(x), f(x)) <= 2^-m' + 2^-(k+1) <= 2^-k for m' >= max(m_k, k+1).

    m_k is the least m with d(f_m'(x), f(x)) <= 2^-(k+1) for all m' in [m, M],
    and g_{n,m} is assumed to stay within 2^-m of f_n (also checked).
    """
    h = diagonal_limit(g)
    res = DiagonalCheck()
    for x in samples:
        fx = f(x)
        for m in range(M + 1):
            if dist(g(m, m)(x), f_seq(m)(x)) > dyadic(m):
                res.violations.append((x, "g", m))
        for k in range(kmax + 1):
            mk = 0
            for m in range(M, -1, -1):
                if dist(f_seq(m)(x), fx) > dyadic(k + 1):
                    mk = m + 1
                    break
            if mk > M:
                res.violations.append((x, "no convergence", k))
                continue
            for m in range(max(mk, k + 1), M + 1):
                res.checked += 1
                d = dist(h(m)(x), fx)
                if not (d <= dyadic(m) + dyadic(k + 1) <= dyadic(k)):
                    res.violations.append((x, k, m))
    return res


def zero_power_harness():
    """f(x) = 2^-#zeros, f_n(x) = 2^-(#zeros in x|n), g_{n,m} = f_n rounded down to 2^-m."""

    def f(x: Point) -> Fraction:
        z = zero_count(x)
        return Fraction(0) if z == float("inf") else dyadic(int(z))

    def f_seq(n: int):
        return lambda x: dyadic(x.prefix(n).count(0))

    def g(n: int, m: int):
        def gx(x):
            v = f_seq(n)(x)
            step = dyadic(m)
            return (v // step) * step
        return gx

    return f, f_seq, g


# ---------------------------------------------------------------------------
# shipped specs

CODE_DEPTH = 6
CODE_ALPHABET = (1, 2)


def zero_cylinders(p: int) -> list:
    """Cylinders whose first zero sits at position p, over nonzero entries < 3."""
    return [Basic(s + (0,)) for s in itertools.product(CODE_ALPHABET, repeat=p)]


def _has_zero_children() -> list:
    return [c for p in range(CODE_DEPTH) for c in zero_cylinders(p)]


def _no_zero_code():
    return Complement(Union(tuple(_has_zero_children())))


def constant_spec() -> Baire1Spec:
    """Constant 1, the first dense point: f_0 always takes the first child, so f_k is constant for every k."""
    space = rational_space([1, Fraction(1, 2), 0], "three-values")
    return Baire1Spec("constant", space, {0: sigma02_set("whole")}, lambda x: 0,
                      level_codes={0: [WHOLE]})


def indicator_spec() -> Baire1Spec:
    space = rational_space([0, 1], "two-point")

    def truth(x: Point) -> int:
        return 0 if first_index(x, 0) is not None else 1

    return Baire1Spec("indicator", space, {0: sigma02_set("has_zero"), 1: sigma02_set("no_zero")}, truth,
                      level_codes={0: _has_zero_children(), 1: [_no_zero_code()]})


def first_zero_spec() -> Baire1Spec:
    """2^-(p+1) when the first zero sits at p <= 3, 0 for a later first zero, 1 with no zero."""
    space = rational_space([1, Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16), 0], "first-zero")

    def truth(x: Point) -> int:
        p = first_index(x, 0)
        if p is None:
            return 0
        return p + 1 if p <= 3 else 5

    levels = {0: sigma02_set("no_zero"), 5: sigma02_set("first_zero_from", 4)}
    codes = {0: [_no_zero_code()], 5: zero_cylinders(4) + zero_cylinders(5)}
    for p in range(4):
        levels[p + 1] = sigma02_set("first_zero_at", p)
        codes[p + 1] = zero_cylinders(p)
    return Baire1Spec("first-zero", space, levels, truth, level_codes=codes)


def zero_count_spec() -> Baire1Spec:
    """2^-min(#zeros, 3)."""
    space = rational_space([1, Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)], "zero-count")

    def truth(x: Point) -> int:
        z = zero_count(x)
        return 3 if z >= 3 else int(z)

    levels = {j: sigma02_set("zero_count", j) for j in range(3)}
    levels[3] = sigma02_set("zero_count_at_least", 3)
    return Baire1Spec("zero-count", space, levels, truth)


SPECS: dict[str, Callable[[], Baire1Spec]] = {
    "constant": constant_spec,
    "indicator": indicator_spec,
    "first-zero": first_zero_spec,
    "zero-count": zero_count_spec,
}


def shipped_spec(name: str) -> Baire1Spec:
    try:
        return SPECS[name]()
    except KeyError:
        raise KeyError(f"unknown spec {name!r}; shipped: {', '.join(SPECS)}") from None


def sample_domain(max_head: int = 3, branch: int = 3, max_period: int = 2) -> list[Point]:
    """Distinct points with entries < branch, head length <= max_head, period <= max_period."""
    seen, out = set(), []
    for hl in range(max_head + 1):
        for head in itertools.product(range(branch), repeat=hl):
            for pl in range(1, max_period + 1):
                for pat in itertools.product(range(branch), repeat=pl):
                    x = Point.periodic(head, pat) if pl > 1 else Point.const(head, pat[0])
                    key = x.canonical()
                    if key not in seen:
                        seen.add(key)
                        out.append(key)
    return out


# ---------------------------------------------------------------------------
# spec file format

SPEC_HEADER = "baire1spec v1"


def parse_spec(text: str) -> Baire1Spec:
    """Header, then ``name``, ``space <rationals>``, ``branch``, ``bound`` and ``level <v> builtin <set> <params>`` lines."""
    from .contmap import _parse_param, _tokens

    lines = text.splitlines()
    if not lines or lines[0].strip() != SPEC_HEADER:
        raise ParseError(f"expected header {SPEC_HEADER!r}", 1, 1)
    name, values, branch, bound = "spec", None, 2, 64
    levels: dict[int, Sigma02Set] = {}
    for ln, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = _tokens(line)
        key = parts[0]
        try:
            if key == "name":
                name = parts[1]
            elif key == "space":
                values = [Fraction(p) for p in parts[1:]]
            elif key == "branch":
                branch = int(parts[1])
            elif key == "bound":
                bound = int(parts[1])
            elif key == "level":
                if len(parts) < 4 or parts[2] != "builtin":
                    raise ParseError("expected 'level <v> builtin <name> <params>'", ln, 1)
                params = [_parse_param(p, ln) for p in parts[4:]]
                levels[int(parts[1])] = sigma02_set(parts[3], *params)
            else:
                raise ParseError(f"unknown key {key!r}", ln, 1)
        except (IndexError, ValueError, KeyError) as e:
            if isinstance(e, ParseError):
                raise
            raise ParseError(f"bad {key} line: {e}", ln, 1) from None
    if values is None:
        raise ParseError("missing 'space' line", 1, 1)
    if not levels:
        raise ParseError("no 'level' lines", 1, 1)
    order = sorted(levels)

    def truth(x: Point) -> int:
        hits = [v for v in order if levels[v].contains(x)]
        if len(hits) != 1:
            raise ValueError(f"{x} lies in {len(hits)} level sets")
        return hits[0]

    return Baire1Spec(name, rational_space(values, name), levels, truth, branch=branch, search_bound=bound)


def format_spec(spec: Baire1Spec) -> str:
    if spec.space.size is None:
        raise ValueError("only finite spaces can be written")
    lines = [SPEC_HEADER, f"name {spec.name}",
             "space " + " ".join(str(spec.space.label(i)) for i in range(spec.space.size)),
             f"branch {spec.branch}", f"bound {spec.search_bound}"]
    for v in sorted(spec.levels):
        red = spec.levels[v].reduction
        params = " ".join(format_seq(p) if isinstance(p, tuple) else str(p) for p in red.params)
        lines.append(f"level {v} builtin {red.name} {params}".rstrip())
    return "\n".join(lines) + "\n"
