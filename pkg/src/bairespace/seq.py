"""Finite sequences, eventually periodic points of Baire space and the ultrametric.

Finite sequences are plain tuples of naturals. A :class:`Point` is an element
of Baire space given by a finite head followed by a constant or periodic tail,
which makes every "from some index on" question about a single point decidable.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence, Union

FinSeq = tuple  # tuple[int, ...]

# Cap on how far past the horizon we unfold two tails to decide equality.
MAX_UNFOLD = 1 << 20


class ParseError(ValueError):
    """Raised when a textual value does not follow the expected format."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# finite sequences


def lh(s: Sequence[int]) -> int:
    return len(s)


def is_prefix(s: Sequence[int], t: Sequence[int]) -> bool:
    """True iff ``s`` is an initial segment of ``t``."""
    return len(s) <= len(t) and tuple(t[: len(s)]) == tuple(s)


def comparable(s: Sequence[int], t: Sequence[int]) -> bool:
    return is_prefix(s, t) or is_prefix(t, s)


def seq_diff(t: Sequence[int], s: Sequence[int]) -> FinSeq:
    """The tail ``u`` of ``t`` beyond position ``lh(s)``; empty when ``t`` is shorter.

    Whether ``s`` really is a prefix of ``t`` is deliberately not checked.
    """
    if len(t) < len(s):
        return ()
    return tuple(t[len(s):])


def all_sequences(depth: int, branch: int) -> Iterator[FinSeq]:
    """Every sequence of length <= depth with entries < branch, shortest first."""
    for n in range(depth + 1):
        yield from itertools.product(range(branch), repeat=n)


def format_seq(s: Sequence[int]) -> str:
    return "[" + ",".join("*" if v is None or v < 0 else str(v) for v in s) + "]"


_SEQ_RE = re.compile(r"\s*\[\s*([^\]]*)\]\s*")


def parse_seq(text: str, line: int = 1, column: int = 1) -> FinSeq:
    m = _SEQ_RE.fullmatch(text)
    if not m:
        raise ParseError(f"expected a sequence like [3,1,4], got {text!r}", line, column)
    body = m.group(1).strip()
    if not body:
        return ()
    out = []
    for part in body.split(","):
        part = part.strip()
        if not part.isdigit():
            raise ParseError(f"not a natural number: {part!r}", line, column + text.find(part))
        out.append(int(part))
    return tuple(out)


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class Constant:
    value: int

    @property
    def cycle(self) -> FinSeq:
        return (self.value,)


@dataclass(frozen=True)
class Periodic:
    pattern: FinSeq

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("periodic tail needs a nonempty pattern")
        object.__setattr__(self, "pattern", tuple(self.pattern))

    @property
    def cycle(self) -> FinSeq:
        return self.pattern


Tail = Union[Constant, Periodic]


@dataclass(frozen=True)
class Point:
    """An eventually periodic element of Baire space: ``head`` then ``tail`` forever."""

    head: FinSeq
    tail: Tail

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        if any(v < 0 for v in self.head + self.tail.cycle):
            raise ValueError("entries must be naturals")

    @classmethod
    def const(cls, head: Sequence[int], value: int) -> "Point":
        return cls(tuple(head), Constant(value))

    @classmethod
    def periodic(cls, head: Sequence[int], pattern: Sequence[int]) -> "Point":
        return cls(tuple(head), Periodic(tuple(pattern)))

    @property
    def cycle(self) -> FinSeq:
        return self.tail.cycle

    def __getitem__(self, m: int) -> int:
        if m < len(self.head):
            return self.head[m]
        c = self.cycle
        return c[(m - len(self.head)) % len(c)]

    def prefix(self, n: int) -> FinSeq:
        """x restricted to n."""
        if n <= len(self.head):
            return self.head[:n]
        c = self.cycle
        reps = (n - len(self.head)) // len(c) + 1
        return self.head + (c * reps)[: n - len(self.head)]

    def phase(self, m: int) -> int:
        """Position of index ``m`` in the description; equal phases give equal futures."""
        if m < len(self.head):
            return m
        return len(self.head) + (m - len(self.head)) % len(self.cycle)

    def recurring(self) -> frozenset:
        """Entries occurring infinitely often."""
        return frozenset(self.cycle)

    def canonical(self) -> "Point":
        """Shortest head and shortest period describing the same sequence."""
        cyc = self.cycle
        n = len(cyc)
        for d in range(1, n + 1):
            if n % d == 0 and cyc == cyc[:d] * (n // d):
                cyc = cyc[:d]
                break
        head = self.head
        while head and head[-1] == cyc[-1]:
            cyc = (head[-1],) + cyc[:-1]
            head = head[:-1]
        tail = Constant(cyc[0]) if len(cyc) == 1 else Periodic(cyc)
        return Point(head, tail)

    def __str__(self) -> str:
        return format_point(self)


def point_eq(x: Point, y: Point) -> bool:
    """Exact equality of the induced sequences."""
    return x.canonical() == y.canonical()


def point_eq_to_depth(x: Point, y: Point, depth: int) -> bool:
    return x.prefix(depth) == y.prefix(depth)


def format_point(x: Point) -> str:
    if isinstance(x.tail, Constant):
        return f"{format_seq(x.head)}~const({x.tail.value})"
    return f"{format_seq(x.head)}~per({','.join(map(str, x.tail.pattern))})"


_POINT_RE = re.compile(r"\s*(\[[^\]]*\]|∅)\s*~\s*(const|per)\s*\(([^)]*)\)\s*")


def parse_point(text: str, line: int = 1) -> Point:
    m = _POINT_RE.fullmatch(text)
    if not m:
        raise ParseError(f"expected a point like [0,1]~const(0) or [0]~per(1,2), got {text!r}", line, 1)
    head = () if m.group(1) == "∅" else parse_seq(m.group(1), line, m.start(1) + 1)
    args = parse_seq("[" + m.group(3) + "]", line, m.start(3) + 1)
    if m.group(2) == "const":
        if len(args) != 1:
            raise ParseError("const(...) takes exactly one natural", line, m.start(3) + 1)
        return Point(head, Constant(args[0]))
    if not args:
        raise ParseError("per(...) needs a nonempty pattern", line, m.start(3) + 1)
    return Point(head, Periodic(args))


# ---------------------------------------------------------------------------
# dyadic values and the ultrametric


def dyadic(n: int) -> Fraction:
    """2^-n as an exact fraction."""
    return Fraction(1, 1 << n) if n >= 0 else Fraction(1 << -n)


def is_dyadic(q: Fraction) -> bool:
    q = Fraction(q)
    if q == 0:
        return True
    return q.numerator == 1 and q.denominator & (q.denominator - 1) == 0


def dyadic_exponent(q: Fraction) -> int:
    """n with q = 2^-n; q must be a nonzero power of two <= 1."""
    q = Fraction(q)
    if q <= 0 or not is_dyadic(q):
        raise ValueError(f"{q} is not of the form 2^-n")
    return q.denominator.bit_length() - 1


class Distance(NamedTuple):
    value: Fraction
    exact: bool


def first_difference(x: Point, y: Point, limit: int) -> int | None:
    for m in range(limit):
        if x[m] != y[m]:
            return m
    return None


def ultrametric_distance(x: Point, y: Point, horizon: int = 64) -> Distance:
    """d'(x, y) = 2^-n where n is the first index at which x and y differ.

    The scan runs to ``horizon``; past it the tails are unfolded to the point where
    both descriptions are periodic with a common period, which settles equality.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n = first_difference(x, y, horizon)
    if n is not None:
        return Distance(dyadic(n), True)
    bound = max(len(x.head), len(y.head)) + math.lcm(len(x.cycle), len(y.cycle))
    if bound > MAX_UNFOLD:
        return Distance(dyadic(horizon), False)
    for m in range(horizon, bound):
        if x[m] != y[m]:
            return Distance(dyadic(m), True)
    return Distance(Fraction(0), True)


def metric_normalize(d: Fraction) -> Fraction:
    """d/(1+d): a bounded metric with the same topology and ultrametric character."""
    d = Fraction(d)
    if d < 0:
        raise ValueError("distance must be nonnegative")
    return d / (1 + d)


def metric_denormalize(y: Fraction) -> Fraction:
    y = Fraction(y)
    if not 0 <= y < 1:
        raise ValueError("value must lie in [0, 1)")
    return y / (1 - y)


# ---------------------------------------------------------------------------
# pairing


def pair(i: int, j: int) -> int:
    """The bijection <i, j> = 2^i (2j + 1) - 1."""
    return (1 << i) * (2 * j + 1) - 1


def unpair(n: int) -> tuple[int, int]:
    n += 1
    i = (n & -n).bit_length() - 1
    return i, ((n >> i) - 1) // 2


# ---------------------------------------------------------------------------
# sample pools


def point_grid(head_len: int, branch: int, tail_value: int = 0) -> list[Point]:
    """All points with head length <= head_len, entries < branch and a constant tail."""
    return [Point(s, Constant(tail_value)) for s in all_sequences(head_len, branch)]


def random_points(rng, count: int, branch: int = 3, max_head: int = 4, max_period: int = 3,
                  distinct: bool = True) -> list[Point]:
    """Seeded pool of eventually periodic points (``rng`` is a ``random.Random``)."""
    out: list[Point] = []
    seen = set()
    attempts = 0
    while len(out) < count and attempts < 50 * count:
        attempts += 1
        head = tuple(rng.randrange(branch) for _ in range(rng.randint(0, max_head)))
        p = tuple(rng.randrange(branch) for _ in range(rng.randint(1, max_period)))
        x = Point(head, Constant(p[0]) if len(p) == 1 else Periodic(p))
        key = x.canonical()
        if distinct and key in seen:
            continue
        seen.add(key)
        out.append(x)
    return out
