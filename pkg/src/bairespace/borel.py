"""Borel codes over the cylinders of Baire space.

A code is a finite tree of :class:`Basic` cylinders, :class:`Union` nodes and
:class:`Complement` nodes. A union stands for a countable union presented by a
finite list; a union marked ``finite=True`` is a genuine finite union, which
matters for classification because finite unions preserve every Pi level.
Intersections are written with De Morgan (see :func:`intersection`).

The partition machinery turns families of Sigma codes into disjoint families
with the same union: plain disjointification, generalized reduction along the
pairing order, refinement into differences of two Pi codes, and partitions of
a Sigma_xi code into pieces of Pi level below xi.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .seq import (
    Constant,
    FinSeq,
    ParseError,
    Point,
    format_seq,
    pair,
    parse_seq,
)


class MalformedFamily(ValueError):
    pass


class RankTooHigh(ValueError):
    pass


@dataclass(frozen=True, eq=True)
class Basic:
    seq: FinSeq

    def __post_init__(self):
        object.__setattr__(self, "seq", tuple(self.seq))


@dataclass(frozen=True, eq=True)
class Union:
    children: tuple
    finite: bool = False

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("a union needs at least one child")


@dataclass(frozen=True, eq=True)
class Complement:
    child: object


BorelCode = Basic | Union | Complement  # type: ignore[operator]

WHOLE = Basic(())
EMPTY = Complement(WHOLE)


def finite_union(codes: Sequence) -> Union:
    return Union(tuple(codes), finite=True)


def intersection(*codes) -> Complement:
    """Finite intersection written as the complement of a finite union of complements."""
    return Complement(finite_union([Complement(c) for c in codes]))


def difference(a, b) -> Complement:
    """a minus b, i.e. the intersection of a with the complement of b."""
    return Complement(finite_union([Complement(a), b]))


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ClassTag:
    side: str  # "Sigma" or "Pi"
    level: int

    def __str__(self):
        return f"{self.side}^0_{self.level}"


def levels(c) -> tuple[int, int]:
    """(Sigma level, Pi level): syntactic upper bounds, never claimed exact."""
    memo: dict[int, tuple[int, int]] = {}

    def go(c):
        key = id(c)
        if key in memo:
            return memo[key]
        if isinstance(c, Basic):
            r = (1, 1)
        elif isinstance(c, Complement):
            s, p = go(c.child)
            r = (p, s)
        elif c.finite:
            tags = [go(ch) for ch in c.children]
            r = (max(t[0] for t in tags), max(t[1] for t in tags))
        else:
            s = max(min(cs, cp + 1) for cs, cp in map(go, c.children))
            r = (s, s + 1)
        memo[key] = r
        return r

    return go(c)


def classify(c) -> tuple[ClassTag, ClassTag]:
    s, p = levels(c)
    return ClassTag("Sigma", s), ClassTag("Pi", p)


def sigma_level(c) -> int:
    return levels(c)[0]


def pi_level(c) -> int:
    return levels(c)[1]


def is_clopen(c) -> bool:
    """Syntactically clopen: built from cylinders by complements and finite unions."""
    if isinstance(c, Basic):
        return True
    if isinstance(c, Complement):
        return is_clopen(c.child)
    return c.finite and all(is_clopen(ch) for ch in c.children)


def rank(c) -> int:
    """Pi level with clopen codes at level 0."""
    return 0 if is_clopen(c) else pi_level(c)


def size(c) -> int:
    seen = set()

    def go(c):
        if id(c) in seen:
            return 0
        seen.add(id(c))
        if isinstance(c, Basic):
            return 1
        if isinstance(c, Complement):
            return 1 + go(c.child)
        return 1 + sum(go(ch) for ch in c.children)

    return go(c)


# ---------------------------------------------------------------------------
# membership


class Verdict(enum.Enum):
    IN = "In"
    OUT = "Out"
    UNKNOWN = "Unknown"

    def __invert__(self):
        if self is Verdict.IN:
            return Verdict.OUT
        if self is Verdict.OUT:
            return Verdict.IN
        return self


def in_cylinder(s: FinSeq, x: Point) -> bool:
    return x.prefix(len(s)) == s


def eval_membership(c, x: Point, budget: int = 1_000_000) -> Verdict:
    """Kleene three-valued membership of x in the set coded by c.

    Shared subtrees are evaluated once; ``budget`` caps fresh node visits and
    whatever is left undecided when it runs out comes back Unknown.
    """
    memo: dict[int, Verdict] = {}
    remaining = [budget]

    def go(c) -> Verdict:
        key = id(c)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if remaining[0] <= 0:
            return Verdict.UNKNOWN
        remaining[0] -= 1
        if isinstance(c, Basic):
            r = Verdict.IN if in_cylinder(c.seq, x) else Verdict.OUT
        elif isinstance(c, Complement):
            r = ~go(c.child)
        else:
            r = Verdict.OUT
            for ch in c.children:
                v = go(ch)
                if v is Verdict.IN:
                    r = Verdict.IN
                    break
                if v is Verdict.UNKNOWN:
                    r = Verdict.UNKNOWN
        memo[key] = r
        return r

    return go(c)


def max_cylinder(c) -> tuple[int, int]:
    """(longest cylinder length, 1 + largest cylinder entry)."""
    depth, branch = 0, 1
    seen = set()
    stack = [c]
    while stack:
        c = stack.pop()
        if id(c) in seen:
            continue
        seen.add(id(c))
        if isinstance(c, Basic):
            depth = max(depth, len(c.seq))
            branch = max(branch, max(c.seq, default=-1) + 1)
        elif isinstance(c, Complement):
            stack.append(c.child)
        else:
            stack.extend(c.children)
    return depth, branch


def decision_grid(codes: Iterable, limit: int = 200_000) -> list[Point] | None:
    """Points deciding every code exactly, or None if the grid would be too large.

    Membership in a finite code depends only on the first ``depth`` entries, and
    entries >= ``branch`` behave alike, so one representative per truncated
    prefix (``branch`` standing for the bucket of large entries) suffices.
    """
    depth, branch = 0, 1
    for c in codes:
        d, b = max_cylinder(c)
        depth, branch = max(depth, d), max(branch, b)
    if (branch + 1) ** depth > limit:
        return None
    return [Point(p, Constant(0)) for p in itertools.product(range(branch + 1), repeat=depth)]


def semantically_empty(c, limit: int = 200_000) -> bool | None:
    grid = decision_grid([c], limit)
    if grid is None:
        return None
    return all(eval_membership(c, x) is Verdict.OUT for x in grid)


def semantically_equal(a, b, limit: int = 200_000) -> bool | None:
    grid = decision_grid([a, b], limit)
    if grid is None:
        return None
    return all(eval_membership(a, x) is eval_membership(b, x) for x in grid)


def clopen_normal_form(c, limit: int = 200_000):
    """The code as a FullSet: prefixes of its decision depth over the truncated alphabet."""
    from .full import BUCKET, FullSet

    depth, branch = max_cylinder(c)
    depth = max(depth, 1)
    if (branch + 1) ** depth > limit:
        return None
    prefixes = set()
    for p in itertools.product(range(branch + 1), repeat=depth):
        if eval_membership(c, Point(p, Constant(0))) is Verdict.IN:
            prefixes.add(tuple(BUCKET if v == branch else v for v in p))
    return FullSet(depth, branch, frozenset(prefixes))


# ---------------------------------------------------------------------------
# partitions


def disjointify(family: Sequence) -> list:
    """P_0 = C_0 and P_{n+1} = C_{n+1} minus (C_0 u ... u C_n)."""
    out = []
    for n, c in enumerate(family):
        out.append(c if n == 0 else difference(c, finite_union(family[:n])))
    return out


def _pi_children(c, xi: int | None) -> list:
    if isinstance(c, Union):
        kids = list(c.children)
    elif isinstance(c, Basic):
        kids = [c]
    else:
        raise MalformedFamily(f"expected a union of Pi codes, got {format_code(c)[:60]}")
    if xi is not None:
        bad = [k for k in kids if pi_level(k) > xi]
        if bad:
            raise MalformedFamily(f"child {format_code(bad[0])[:60]} has Pi level {pi_level(bad[0])} > {xi}")
    return kids


def _flatten(family: Sequence, xi: int | None) -> list[tuple[int, int, int, object]]:
    """(pairing index, n, m, P_{n,m}) sorted along the pairing order."""
    rows = []
    for n, c in enumerate(family):
        for m, p in enumerate(_pi_children(c, xi)):
            rows.append((pair(n, m), n, m, p))
    rows.sort(key=lambda r: r[0])
    return rows


def generalized_reduction(family: Sequence, xi: int | None = None) -> list:
    """Shrink each S_n to Q_n inside it so the Q_n are disjoint with the same union.

    Each S_n must be a union of children P_{n,m} of Pi level <= xi. Children are
    listed along the pairing order <n, m> and each one keeps only the part not
    covered by earlier children; Q_n collects the parts of S_n's children.
    """
    rows = _flatten(family, xi)
    parts: list[list] = [[] for _ in family]
    earlier: list = []
    for _, n, _, p in rows:
        parts[n].append(difference(p, finite_union(earlier)) if earlier else p)
        earlier.append(p)
    return [Union(tuple(ps)) if ps else EMPTY for ps in parts]


@dataclass
class Refinement:
    pieces: list
    parent: list[int]
    undecided: list[int]  # indices of pieces whose emptiness was not decided


def refine_to_two_pi(partition: Sequence, xi: int | None = None) -> Refinement:
    """Refine a partition into pieces R_j minus (union of earlier R_l).

    The R's are the children of the members in pairing order; pieces that are
    provably empty are skipped, undecidable ones are kept and listed.
    """
    rows = _flatten(partition, xi)
    pieces, parent, undecided = [], [], []
    earlier: list = []
    for _, n, _, r in rows:
        piece = difference(r, finite_union(earlier) if earlier else EMPTY)
        earlier.append(r)
        empty = semantically_empty(piece)
        if empty:
            continue
        if empty is None:
            undecided.append(len(pieces))
        pieces.append(piece)
        parent.append(n)
    return Refinement(pieces, parent, undecided)


def is_two_pi(piece, xi: int) -> bool:
    """Shape R minus U with R and U both of Pi level <= xi."""
    if not (isinstance(piece, Complement) and isinstance(piece.child, Union) and piece.child.finite):
        return False
    kids = piece.child.children
    if len(kids) != 2 or not isinstance(kids[0], Complement):
        return False
    return pi_level(kids[0].child) <= xi and pi_level(kids[1]) <= xi


def sigma_children(c, level: int) -> list[tuple[object, int]]:
    """Present c as a union of codes of rank < level, as (child, rank) pairs."""
    if is_clopen(c):
        return [(c, 0)]
    r = pi_level(c)
    if r < level:
        return [(c, r)]
    if isinstance(c, Union):
        return [kid for ch in c.children for kid in sigma_children(ch, level)]
    if isinstance(c, Complement):
        inner = c.child
        if isinstance(inner, Complement):
            return sigma_children(inner.child, level)
        if isinstance(inner, Union) and inner.finite:
            # complement of a finite union: intersect the complements, distributing
            options = [sigma_children(Complement(y), level) for y in inner.children]
            out = []
            for combo in itertools.product(*options):
                codes = [k for k, _ in combo]
                out.append((codes[0] if len(codes) == 1 else intersection(*codes), max(r for _, r in combo)))
            return out
    raise RankTooHigh(f"code is not a union of codes below level {level}: {format_code(c)[:80]}")


def pi_below_partition(c, xi: int) -> list[tuple[object, int]]:
    """Partition a Sigma_xi code into disjoint pieces of rank < xi.

    Level 1 disjointifies the clopen children. Above it the n-th child P_n is cut
    down to P_n intersected with R_n, the complement of the earlier children; R_n
    has lower Sigma level, is partitioned recursively and each of its pieces is
    intersected with P_n.
    """
    if xi < 1:
        raise ValueError("xi must be >= 1")
    kids = sigma_children(c, xi)
    too_high = [r for _, r in kids if r >= xi]
    if too_high:
        raise RankTooHigh(f"child of rank {too_high[0]} under level {xi}")
    codes = [k for k, _ in kids]
    if xi == 1:
        return [(p, 0) for p in disjointify(codes)]
    pieces = []
    for n, (p, nu_n) in enumerate(kids):
        if n == 0:
            pieces.append((p, nu_n))
            continue
        nu = max(r for _, r in kids[: n + 1])
        if nu == 0:
            pieces.append((difference(p, finite_union(codes[:n])), 0))
            continue
        rest = Complement(finite_union(codes[:n]))
        for q, mu in pi_below_partition(rest, nu):
            pieces.append((intersection(p, q), max(nu_n, mu)))
    return pieces


def glue_preimages(partition: Sequence, preimages: Sequence):
    """Union over n of (preimages[n] intersected with partition[n])."""
    if len(partition) != len(preimages):
        raise ValueError(f"{len(partition)} cells but {len(preimages)} preimages")
    return Union(tuple(intersection(f, c) for c, f in zip(partition, preimages)))


def limit_preimage_code(ball_preimages, m_count: int, k_count: int):
    """Union over m < M, n < K of the intersection of ball_preimages[m, k] for n <= k < K.

    The unions are cut at M and K (inner approximation) and the tail
    intersection at K (outer approximation).
    """
    try:
        table = {(m, k): ball_preimages[m, k] for m in range(m_count) for k in range(k_count)}
    except KeyError as e:
        raise KeyError(f"missing ball preimage {e.args[0]}") from None
    if m_count == 1 and k_count == 1:
        return table[0, 0]
    terms = []
    for m in range(m_count):
        for n in range(k_count):
            tail = [table[m, k] for k in range(n, k_count)]
            terms.append(tail[0] if len(tail) == 1 else intersection(*tail))
    return Union(tuple(terms))


# ---------------------------------------------------------------------------
# verification


@dataclass
class PartitionCheck:
    points: int
    evaluations: int = 0
    unknown: int = 0
    overlaps: int = 0
    union_mismatch: int = 0
    containment_failures: int = 0

    @property
    def ok(self) -> bool:
        return not (self.overlaps or self.union_mismatch or self.containment_failures)


def check_partition(pieces: Sequence, target, grid: Sequence[Point], parents: Sequence | None = None,
                    budget: int = 1_000_000) -> PartitionCheck:
    """Disjointness, union preservation and (optionally) containment of pieces in parents.

    Unknown verdicts never count as passes; a point with an Unknown anywhere is
    only tallied.
    """
    res = PartitionCheck(len(grid))
    for x in grid:
        vs = [eval_membership(p, x, budget) for p in pieces]
        tv = eval_membership(target, x, budget)
        res.evaluations += len(vs) + 1
        unknown = sum(v is Verdict.UNKNOWN for v in vs) + (tv is Verdict.UNKNOWN)
        res.unknown += unknown
        ins = sum(v is Verdict.IN for v in vs)
        if ins > 1:
            res.overlaps += 1
        if not unknown and (ins == 1) != (tv is Verdict.IN):
            res.union_mismatch += 1
        if parents is not None:
            for v, par in zip(vs, parents):
                if v is Verdict.IN and eval_membership(par, x, budget) is Verdict.OUT:
                    res.containment_failures += 1
    return res


# ---------------------------------------------------------------------------
# text format


def format_code(c) -> str:
    if isinstance(c, Basic):
        return f"(basic {format_seq(c.seq)})"
    if isinstance(c, Complement):
        return f"(compl {format_code(c.child)})"
    head = "finunion" if c.finite else "union"
    return f"({head} " + " ".join(format_code(ch) for ch in c.children) + ")"


def _tokenize(text: str):
    line, col, i = 1, 1, 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            yield ch, line, col
            i, col = i + 1, col + 1
            continue
        if ch == "[":
            j = text.find("]", i)
            if j < 0:
                raise ParseError("unterminated sequence", line, col)
            yield text[i: j + 1], line, col
            col += j + 1 - i
            i = j + 1
            continue
        j = i
        while j < len(text) and not text[j].isspace() and text[j] not in "()[;":
            j += 1
        yield text[i:j], line, col
        col += j - i
        i = j


def parse_codes(text: str) -> list:
    """All top-level codes in ``text``; ``(inter ...)``, ``(empty)``, ``(whole)`` are sugar."""
    toks = list(_tokenize(text))
    pos = 0

    def expr():
        nonlocal pos
        if pos >= len(toks):
            line, col = (toks[-1][1], toks[-1][2]) if toks else (1, 1)
            raise ParseError("unexpected end of input", line, col)
        tok, line, col = toks[pos]
        if tok != "(":
            raise ParseError(f"expected '(' but found {tok!r}", line, col)
        pos += 1
        if pos >= len(toks):
            raise ParseError("unexpected end of input", line, col)
        head, hl, hc = toks[pos]
        pos += 1
        if head == "basic":
            if pos >= len(toks) or not toks[pos][0].startswith("["):
                raise ParseError("basic expects a sequence like [0,1]", hl, hc)
            node = Basic(parse_seq(toks[pos][0], toks[pos][1], toks[pos][2]))
            pos += 1
        elif head in ("union", "finunion", "inter", "compl", "empty", "whole"):
            args = []
            while pos < len(toks) and toks[pos][0] != ")":
                args.append(expr())
            if head == "compl":
                if len(args) != 1:
                    raise ParseError("compl takes exactly one argument", hl, hc)
                node = Complement(args[0])
            elif head in ("empty", "whole"):
                if args:
                    raise ParseError(f"{head} takes no arguments", hl, hc)
                node = EMPTY if head == "empty" else WHOLE
            else:
                if not args:
                    raise ParseError(f"{head} needs at least one argument", hl, hc)
                node = intersection(*args) if head == "inter" else Union(tuple(args), head == "finunion")
        else:
            raise ParseError(f"unknown operator {head!r}", hl, hc)
        if pos >= len(toks) or toks[pos][0] != ")":
            raise ParseError("expected ')'", line, col)
        pos += 1
        return node

    out = []
    while pos < len(toks):
        out.append(expr())
    return out


def parse_code(text: str):
    codes = parse_codes(text)
    if len(codes) != 1:
        raise ParseError(f"expected one code, found {len(codes)}")
    return codes[0]
