"""Full sets and full functions on Baire space over a truncated alphabet.

Entries 0..B-1 are kept as they are and every entry >= B falls into one
bucket, written ``*`` and stored as :data:`BUCKET`. A depth-m prefix set then
denotes a union of cylinders N_s with lh(s) = m. Agreeing on the first m
entries means d' <= 2^-m, so N_{x|m} is the ball B(x, 2^-(m-1)) and every
such set is full with constant 2^-(m-1).
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .contmap import SeqMap
from .seq import Constant, FinSeq, ParseError, Periodic, Point, dyadic, format_seq, ultrametric_distance

BUCKET = -1


class NotPrefixDetermined(ValueError):
    def __init__(self, x: Point, y: Point, depth: int):
        super().__init__(f"{x} and {y} agree to depth {depth} but the predicate separates them")
        self.witnesses = (x, y)
        self.depth = depth


class ConstantNotDyadic(ValueError):
    pass


class CertificationFailed(ValueError):
    pass


def truncate(s: Sequence[int], branch: int) -> FinSeq:
    return tuple(v if v < branch else BUCKET for v in s)


def representative(p: Sequence[int], branch: int) -> FinSeq:
    """A concrete sequence whose truncation is p (the bucket becomes ``branch``)."""
    return tuple(branch if v == BUCKET else v for v in p)


def truncated_prefixes(depth: int, branch: int) -> Iterable[FinSeq]:
    return itertools.product(list(range(branch)) + [BUCKET], repeat=depth)


def full_constant(depth: int) -> Fraction:
    """2^-(m-1), capped at 1 for depth 0."""
    return dyadic(max(depth - 1, 0))


def refine_prefixes(prefixes: Iterable[FinSeq], steps: int, branch: int) -> set[FinSeq]:
    out = set(prefixes)
    for _ in range(steps):
        out = {p + (a,) for p in out for a in list(range(branch)) + [BUCKET]}
    return out


@dataclass(frozen=True)
class FullSet:
    depth: int
    branch: int
    prefixes: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.branch < 1:
            raise ValueError("branch must be >= 1")
        object.__setattr__(self, "prefixes", frozenset(tuple(p) for p in self.prefixes))
        for p in self.prefixes:
            if len(p) != self.depth or any(not (v == BUCKET or 0 <= v < self.branch) for v in p):
                raise ValueError(f"prefix {format_seq(p)} does not fit depth {self.depth}, branch {self.branch}")

    @classmethod
    def whole(cls, depth: int, branch: int) -> "FullSet":
        return cls(depth, branch, frozenset(truncated_prefixes(depth, branch)))

    @classmethod
    def empty(cls, depth: int, branch: int) -> "FullSet":
        return cls(depth, branch, frozenset())

    @property
    def constant(self) -> Fraction:
        return full_constant(self.depth)

    def contains(self, x: Point) -> bool:
        return truncate(x.prefix(self.depth), self.branch) in self.prefixes

    __contains__ = contains

    def refine(self, depth: int) -> "FullSet":
        if depth < self.depth:
            raise ValueError("can only refine to a larger depth")
        return FullSet(depth, self.branch, frozenset(refine_prefixes(self.prefixes, depth - self.depth, self.branch)))

    def __str__(self):
        body = " ".join(format_seq(p) for p in sorted(self.prefixes))
        return f"FullSet(depth={self.depth}, branch={self.branch}: {body})"


def _common(a: FullSet, b: FullSet) -> tuple[FullSet, FullSet]:
    if a.branch != b.branch:
        raise ValueError(f"branch mismatch: {a.branch} vs {b.branch}")
    m = max(a.depth, b.depth)
    return a.refine(m), b.refine(m)


def full_union(a: FullSet, b: FullSet) -> FullSet:
    a, b = _common(a, b)
    return FullSet(a.depth, a.branch, a.prefixes | b.prefixes)


def full_intersection(a: FullSet, b: FullSet) -> FullSet:
    a, b = _common(a, b)
    return FullSet(a.depth, a.branch, a.prefixes & b.prefixes)


def full_complement(a: FullSet) -> FullSet:
    return FullSet(a.depth, a.branch, FullSet.whole(a.depth, a.branch).prefixes - a.prefixes)


def full_union_all(sets: Sequence[FullSet]) -> FullSet:
    if not sets:
        raise ValueError("need at least one set")
    out = sets[0]
    for s in sets[1:]:
        out = full_union(out, s)
    return out


def probe_points(p: Sequence[int], branch: int) -> list[Point]:
    """Points with truncation p, varying the bucket representative and the tail."""
    reps = {representative(p, branch), tuple(branch + 1 if v == BUCKET else v for v in p)}
    tails = [Constant(0), Constant(1), Constant(branch), Periodic((0, branch))]
    return [Point(r, t) for r in sorted(reps) for t in tails]


def determination_depth(predicate: Callable[[Point], bool], depth: int, branch: int) -> int:
    """Least d <= depth at which the predicate looks determined by the truncated prefix.

    The probe points vary the tail and the bucket representative. When no depth
    works, the pair found at ``depth`` is raised as a witness.
    """
    witness = None
    for d in range(1, depth + 1):
        witness = None
        for p in truncated_prefixes(d, branch):
            pts = probe_points(p, branch)
            vals = [bool(predicate(x)) for x in pts]
            if len(set(vals)) > 1:
                witness = (pts[vals.index(True)], pts[vals.index(False)])
                break
        if witness is None:
            return d
    raise NotPrefixDetermined(witness[0], witness[1], depth)


def is_full(subject, depth: int | None = None, branch: int | None = None) -> tuple[bool, Fraction]:
    """Fullness with its constant, for a FullSet or a sampled point predicate."""
    if isinstance(subject, FullSet):
        return True, subject.constant
    if depth is None or branch is None:
        raise ValueError("a predicate needs depth and branch")
    d = determination_depth(subject, depth, branch)
    return True, full_constant(d)


def predicate_to_fullset(predicate: Callable[[Point], bool], depth: int, branch: int) -> FullSet:
    d = determination_depth(predicate, depth, branch)
    pre = {p for p in truncated_prefixes(d, branch) if predicate(Point(representative(p, branch), Constant(0)))}
    return FullSet(max(d, 1), branch, frozenset(pre))


# ---------------------------------------------------------------------------
# full functions


@dataclass(frozen=True)
class FullFunction:
    """A function constant on each truncated depth-m prefix; values are dense indices."""

    depth: int
    branch: int
    table: Mapping[FinSeq, int]

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        table = dict(self.table)
        missing = [p for p in truncated_prefixes(self.depth, self.branch) if p not in table]
        if missing:
            raise ValueError(f"table misses prefix {format_seq(missing[0])}")
        if len(table) != (self.branch + 1) ** self.depth:
            raise ValueError("table has entries outside the truncated prefix space")
        object.__setattr__(self, "table", table)

    @classmethod
    def constant_function(cls, value: int, depth: int, branch: int) -> "FullFunction":
        return cls(depth, branch, {p: value for p in truncated_prefixes(depth, branch)})

    @classmethod
    def tabulate(cls, rule: Callable[[FinSeq], int], depth: int, branch: int) -> "FullFunction":
        return cls(depth, branch, {p: rule(p) for p in truncated_prefixes(depth, branch)})

    @property
    def constant(self) -> Fraction:
        return full_constant(self.depth)

    def __call__(self, x: Point) -> int:
        return self.table[truncate(x.prefix(self.depth), self.branch)]

    def values(self) -> list[int]:
        return sorted(set(self.table.values()))

    def preimage(self, value: int) -> FullSet:
        return FullSet(self.depth, self.branch, frozenset(p for p, v in self.table.items() if v == value))

    def preimages(self) -> dict[int, FullSet]:
        return {v: self.preimage(v) for v in self.values()}


def check_preimages_partition(f: FullFunction) -> bool:
    seen: set = set()
    for pre in f.preimages().values():
        if seen & pre.prefixes:
            return False
        seen |= pre.prefixes
    return seen == FullSet.whole(f.depth, f.branch).prefixes


def lipschitz_bound_of_full(f: FullFunction) -> Fraction:
    """r^-1 = 2^(m-1) for a target metric bounded by 1."""
    return 1 / f.constant


@dataclass
class LipschitzCheck:
    bound: Fraction
    pairs: int
    violations: list
    sharpest: Fraction  # least constant that works on the checked pairs

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_lipschitz(f: FullFunction, dist: Callable[[int, int], Fraction],
                     bound: Fraction | None = None) -> LipschitzCheck:
    """d_Y(f(x), f(x')) <= bound * d'(x, x') over all pairs of the depth-(m+1) grid."""
    if bound is None:
        bound = lipschitz_bound_of_full(f)
    grid = [Point(p, Constant(0)) for p in itertools.product(range(f.branch + 2), repeat=f.depth + 1)]
    vals = [f(x) for x in grid]
    violations = []
    sharpest = Fraction(0)
    pairs = 0
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            pairs += 1
            dy = Fraction(dist(vals[i], vals[j]))
            if dy == 0:
                continue
            dx = ultrametric_distance(grid[i], grid[j]).value
            sharpest = max(sharpest, dy / dx)
            if dy > bound * dx:
                violations.append((grid[i], grid[j]))
    return LipschitzCheck(Fraction(bound), pairs, violations, sharpest)


def compose_full_lipschitz(g: Callable[[int], int], f: FullFunction) -> FullFunction:
    """g after f, tabulated at the same depth."""
    return FullFunction(f.depth, f.branch, {p: g(v) for p, v in f.table.items()})


def log2_exact(lip: Fraction | int) -> int:
    q = Fraction(lip)
    if q < 1 or q.denominator != 1 or q.numerator & (q.numerator - 1):
        raise ConstantNotDyadic(f"Lipschitz constant {lip} is not a power of two >= 1")
    return q.numerator.bit_length() - 1


def certify_length_shift(h: SeqMap, depth: int, branch: int, shift: int) -> None:
    """lh(h(s)) >= lh(s) - shift on all truncated prefixes up to depth, and h respects the bucket."""
    for n in range(depth + 1):
        for p in truncated_prefixes(n, branch):
            lo = h(representative(p, branch))
            if len(lo) < n - shift:
                raise CertificationFailed(f"lh(h({format_seq(p)})) = {len(lo)} < {n - shift}")
            hi = h(tuple(branch + 1 if v == BUCKET else v for v in p))
            if truncate(lo, branch) != truncate(hi, branch):
                raise CertificationFailed(f"h separates bucket entries at {format_seq(p)}")


def precompose_full(h: SeqMap, f: FullFunction, lip: Fraction | int) -> FullFunction:
    """f after h for an L-Lipschitz h, tabulated at depth m + log2 L."""
    shift = log2_exact(lip)
    n = f.depth + shift
    certify_length_shift(h, n, f.branch, shift)

    def rule(p):
        out = h(representative(p, f.branch))
        return f.table[truncate(out[: f.depth], f.branch)]

    return FullFunction.tabulate(rule, n, f.branch)


# ---------------------------------------------------------------------------
# text format

FORMAT_HEADER = "fullfunction v1"


def format_full(f: FullFunction) -> str:
    lines = [FORMAT_HEADER, f"depth {f.depth}", f"branch {f.branch}", f"values {len(f.values())}"]
    for p in sorted(f.table, key=lambda p: tuple(math.inf if v == BUCKET else v for v in p)):
        lines.append(f"{format_seq(p)} -> {f.table[p]}")
    return "\n".join(lines) + "\n"


_ROW = re.compile(r"\s*\[([^\]]*)\]\s*->\s*(\d+)\s*")


def parse_full(text: str) -> FullFunction:
    header: dict[str, int] = {}
    table: dict[FinSeq, int] = {}
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ParseError(f"expected header {FORMAT_HEADER!r}", 1, 1)
    for ln, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("depth", "branch", "values"):
            if len(parts) != 2 or not parts[1].isdigit():
                raise ParseError(f"{parts[0]} expects a natural", ln, 1)
            header[parts[0]] = int(parts[1])
            continue
        m = _ROW.fullmatch(line)
        if not m:
            raise ParseError("expected 'prefix -> valueIndex'", ln, 1)
        entries = []
        for tok in m.group(1).split(","):
            tok = tok.strip()
            if tok == "*":
                entries.append(BUCKET)
            elif tok.isdigit():
                entries.append(int(tok))
            else:
                raise ParseError(f"bad prefix entry {tok!r}", ln, raw.find(tok) + 1)
        table[tuple(entries)] = int(m.group(2))
    for key in ("depth", "branch"):
        if key not in header:
            raise ParseError(f"missing '{key}' line", 1, 1)
    try:
        f = FullFunction(header["depth"], header["branch"], table)
    except ValueError as e:
        raise ParseError(str(e), 1, 1) from None
    if "values" in header and header["values"] != len(f.values()):
        raise ParseError(f"header says {header['values']} values, table has {len(f.values())}", 1, 1)
    return f
