"""Embedding a finite ultrametric space into Baire space through a Lusin scheme.

Node C_s of the scheme is a ball of radius 2^-lh(s). Its children are built
greedily: walk the labels of C_s in index order and open a ball of radius
2^-(lh(s)+1) around each label not yet covered. A label's branch reads off
which child holds it at every level. Branch distance d' then satisfies
d <= d' <= 2d.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .seq import Constant, FinSeq, ParseError, Point, dyadic, format_seq, is_dyadic, ultrametric_distance


class InvalidSpace(ValueError):
    pass


class Undefined(ValueError):
    pass


class SeparationFailure(ValueError):
    pass


@dataclass(frozen=True)
class UltraSpace:
    """Finitely many labels with a dyadic ultrametric given as a full matrix."""

    labels: tuple
    matrix: tuple  # matrix[i][j] as Fraction

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "matrix", tuple(tuple(Fraction(v) for v in row) for row in self.matrix))
        problems = validate_ultrametric(self.matrix)
        if problems:
            raise InvalidSpace(problems[0])

    @classmethod
    def from_function(cls, labels: Sequence, dist: Callable) -> "UltraSpace":
        return cls(tuple(labels), tuple(tuple(dist(a, b) for b in labels) for a in labels))

    def __len__(self):
        return len(self.labels)

    def d(self, i: int, j: int) -> Fraction:
        return self.matrix[i][j]


def validate_ultrametric(matrix: Sequence[Sequence[Fraction]]) -> list[str]:
    n = len(matrix)
    problems = []
    for i in range(n):
        if len(matrix[i]) != n:
            problems.append(f"row {i} has {len(matrix[i])} entries, expected {n}")
            return problems
    for i, j in itertools.product(range(n), repeat=2):
        v = matrix[i][j]
        if v != matrix[j][i]:
            problems.append(f"asymmetric at ({i},{j})")
        if (v == 0) != (i == j):
            problems.append(f"distance zero iff equal fails at ({i},{j})")
        if v > 1 or not is_dyadic(v):
            problems.append(f"distance {v} at ({i},{j}) is not 0 or 2^-n <= 1")
    for i, j, k in itertools.product(range(n), repeat=3):
        if matrix[i][k] > max(matrix[i][j], matrix[j][k]):
            problems.append(f"strong triangle inequality fails at ({i},{j},{k})")
    return problems


@dataclass
class SchemeNode:
    center: int  # label index
    radius: Fraction
    members: tuple  # label indices in the ball


@dataclass
class LusinScheme:
    space: UltraSpace
    depth: int
    nodes: dict = field(default_factory=dict)  # FinSeq -> SchemeNode; absent means Empty

    def node(self, s: Sequence[int]) -> SchemeNode | None:
        return self.nodes.get(tuple(s))

    def children(self, s: Sequence[int]) -> list[int]:
        s = tuple(s)
        out = []
        i = 0
        while s + (i,) in self.nodes:
            out.append(i)
            i += 1
        return out


def build_lusin_scheme(space: UltraSpace, depth: int) -> LusinScheme:
    """Greedy scheme: children of C_s are balls B(x_k, 2^-(lh(s)+1)) around uncovered labels."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    n = len(space)
    if n == 0:
        raise InvalidSpace("the space needs at least one label")
    scheme = LusinScheme(space, depth)
    scheme.nodes[()] = SchemeNode(0, Fraction(1), tuple(range(n)))
    frontier = [()]
    for level in range(depth):
        r = dyadic(level + 1)
        nxt = []
        for s in frontier:
            covered: set[int] = set()
            i = 0
            for k in scheme.nodes[s].members:
                if k in covered:
                    continue
                members = tuple(j for j in scheme.nodes[s].members if space.d(k, j) < r)
                covered.update(members)
                scheme.nodes[s + (i,)] = SchemeNode(k, r, members)
                nxt.append(s + (i,))
                i += 1
        frontier = nxt
    return scheme


@dataclass
class LusinCheck:
    nodes: int = 0
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def check_lusin_scheme(scheme: LusinScheme) -> LusinCheck:
    """C_empty = X, each C_s a ball of radius 2^-lh(s), nesting, diameters, covering, disjoint siblings."""
    space = scheme.space
    res = LusinCheck()
    if set(scheme.nodes[()].members) != set(range(len(space))):
        res.problems.append("root is not the whole space")
    for s, node in scheme.nodes.items():
        res.nodes += 1
        if s:
            r = dyadic(len(s))
            ball = tuple(j for j in range(len(space)) if space.d(node.center, j) < r)
            if node.radius != r or set(ball) != set(node.members):
                res.problems.append(f"{format_seq(s)} is not the ball B(x_{node.center}, {r})")
            if not set(node.members) <= set(scheme.nodes[s[:-1]].members):
                res.problems.append(f"{format_seq(s)} not inside its parent")
            if any(space.d(a, b) > r for a, b in itertools.combinations(node.members, 2)):
                res.problems.append(f"diameter of {format_seq(s)} exceeds {r}")
        if len(s) < scheme.depth:
            kids = [scheme.nodes[s + (i,)].members for i in scheme.children(s)]
            flat = [m for kid in kids for m in kid]
            if sorted(flat) != sorted(node.members):
                res.problems.append(f"children of {format_seq(s)} do not partition it")
    return res


def embed_h(scheme: LusinScheme, a: Sequence[int]):
    """The label at the end of branch a, once its ball has shrunk to one label."""
    a = tuple(a)
    if len(a) > scheme.depth:
        raise ValueError(f"branch longer than the scheme depth {scheme.depth}")
    node = scheme.node(a)
    if node is None:
        raise Undefined(f"branch {format_seq(a)} leaves the tree")
    if len(node.members) != 1:
        raise Undefined(f"node {format_seq(a)} still holds {len(node.members)} labels")
    return scheme.space.labels[node.members[0]]


def invert_h(scheme: LusinScheme, label, depth: int | None = None) -> FinSeq:
    """The branch of length ``depth`` whose nodes all contain ``label``."""
    depth = scheme.depth if depth is None else depth
    if depth > scheme.depth:
        raise ValueError(f"depth {depth} exceeds the scheme depth {scheme.depth}")
    k = scheme.space.labels.index(label)
    s: FinSeq = ()
    for _ in range(depth):
        for i in scheme.children(s):
            if k in scheme.nodes[s + (i,)].members:
                s = s + (i,)
                break
        else:
            raise Undefined(f"label {label!r} is in no child of {format_seq(s)}")
    return s


def branch_point(scheme: LusinScheme, label) -> Point:
    """h^-1(label) as a point of Baire space: past the separating depth every child is 0."""
    return Point(invert_h(scheme, label), Constant(0))


def separating_depth(space: UltraSpace) -> int:
    """Least depth at which every pair of labels sits in different nodes."""
    n = 0
    for i, j in itertools.combinations(range(len(space)), 2):
        n = max(n, 1, space.d(i, j).denominator.bit_length() - 1)
    return n


def induced_ultrametric(scheme: LusinScheme, u, v) -> Fraction:
    """d'(h^-1(u), h^-1(v))."""
    if u == v:
        return Fraction(0)
    a, b = branch_point(scheme, u), branch_point(scheme, v)
    d = ultrametric_distance(a, b).value
    if d == 0:
        raise SeparationFailure(f"{u!r} and {v!r} share a branch at depth {scheme.depth}")
    return d


@dataclass
class BiLipschitzReport:
    pairs: int = 0
    violations: list = field(default_factory=list)
    max_ratio_forward: Fraction = Fraction(0)  # d / d'
    max_ratio_inverse: Fraction = Fraction(0)  # d' / d
    tight_pairs: list = field(default_factory=list)  # pairs with d' = 2d

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_bilipschitz(scheme: LusinScheme) -> BiLipschitzReport:
    """d(u, v) <= d'(a_u, a_v) <= 2 d(u, v) for every pair of distinct labels."""
    space = scheme.space
    rep = BiLipschitzReport()
    for i, j in itertools.combinations(range(len(space)), 2):
        u, v = space.labels[i], space.labels[j]
        d = space.d(i, j)
        dd = induced_ultrametric(scheme, u, v)
        rep.pairs += 1
        rep.max_ratio_forward = max(rep.max_ratio_forward, d / dd)
        rep.max_ratio_inverse = max(rep.max_ratio_inverse, dd / d)
        if dd == 2 * d:
            rep.tight_pairs.append((u, v))
        if not (d <= dd <= 2 * d):
            rep.violations.append((u, v, d, dd))
    return rep


def random_dendrogram(rng: random.Random, max_leaves: int = 32, max_depth: int = 8) -> UltraSpace:
    """Random ultrametric: labels split into groups level by level, cross-group distance 2^-level."""
    n = rng.randint(2, max_leaves)
    matrix = [[Fraction(0)] * n for _ in range(n)]

    def split(group: list[int], level: int):
        if len(group) == 1:
            return
        if level == max_depth:
            parts = [[g] for g in group]
        else:
            cuts = sorted(rng.sample(range(1, len(group)), min(len(group) - 1, rng.randint(0, 2))))
            parts = [group[a:b] for a, b in zip([0] + cuts, cuts + [len(group)])]
        for p, q in itertools.combinations(parts, 2):
            for a in p:
                for b in q:
                    matrix[a][b] = matrix[b][a] = dyadic(level)
        for p in parts:
            split(p, level + 1)

    order = list(range(n))
    rng.shuffle(order)
    split(order, 0)
    return UltraSpace(tuple(f"x{i}" for i in range(n)), tuple(map(tuple, matrix)))


# ---------------------------------------------------------------------------
# full approximants pulled back to the space


def pullback_values(scheme: LusinScheme, g: Callable[[Point], int]) -> dict:
    """u -> g(h^-1(u))."""
    return {u: g(branch_point(scheme, u)) for u in scheme.space.labels}


def check_full_on_space(space: UltraSpace, values: dict, constant: Fraction) -> list:
    """Pairs closer than ``constant`` with different values (a full set contains those balls)."""
    bad = []
    for i, j in itertools.combinations(range(len(space)), 2):
        u, v = space.labels[i], space.labels[j]
        if space.d(i, j) < constant and values[u] != values[v]:
            bad.append((u, v))
    return bad


# ---------------------------------------------------------------------------
# text format

SPACE_HEADER = "ultraspace v1"


def _parse_dist(tok: str, line: int, col: int) -> Fraction:
    tok = tok.strip()
    if tok in ("0", "1"):
        return Fraction(int(tok))
    if tok.startswith("2^-") and tok[3:].isdigit():
        return dyadic(int(tok[3:]))
    raise ParseError(f"distance must be 0, 1 or 2^-n, got {tok!r}", line, col)


def _format_dist(v: Fraction) -> str:
    if v in (0, 1):
        return str(int(v))
    return f"2^-{v.denominator.bit_length() - 1}"


def parse_space(text: str) -> UltraSpace:
    """Header, label count, optional ``labels`` line, then rows 1..n-1 of the lower triangle."""
    rows, labels, count = [[]], None, None  # row 0 of the lower triangle is empty
    lines = text.splitlines()
    if not lines or lines[0].strip() != SPACE_HEADER:
        raise ParseError(f"expected header {SPACE_HEADER!r}", 1, 1)
    for ln, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if count is None:
            if not line.isdigit():
                raise ParseError("expected the label count", ln, 1)
            count = int(line)
            continue
        if line.startswith("labels"):
            labels = tuple(line.split()[1:])
            continue
        toks = line.split()
        row = [_parse_dist(t, ln, raw.find(t) + 1) for t in toks]
        if len(row) != len(rows):
            raise ParseError(f"row {len(rows)} needs {len(rows)} entries, got {len(row)}", ln, 1)
        rows.append(row)
    if count is None:
        raise ParseError("missing label count", 1, 1)
    if len(rows) != count:
        raise ParseError(f"expected {count} rows, got {len(rows)}", len(lines), 1)
    labels = labels or tuple(f"x{i}" for i in range(count))
    if len(labels) != count:
        raise ParseError(f"{len(labels)} labels for {count} points", 1, 1)
    matrix = [[Fraction(0)] * count for _ in range(count)]
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            matrix[i][j] = matrix[j][i] = v
    try:
        return UltraSpace(labels, tuple(map(tuple, matrix)))
    except InvalidSpace as e:
        raise ParseError(str(e), 1, 1) from None


def format_space(space: UltraSpace) -> str:
    lines = [SPACE_HEADER, str(len(space)), "labels " + " ".join(map(str, space.labels))]
    for i in range(1, len(space)):
        lines.append(" ".join(_format_dist(space.d(i, j)) for j in range(i)))
    return "\n".join(lines) + "\n"
