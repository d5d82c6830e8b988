"""Continuous functions on Baire space as monotone maps on finite sequences.

A :class:`SeqMap` is a map phi from finite sequences to finite sequences that
preserves the prefix order and whose outputs grow without bound along every
branch; it induces the continuous point map ``x -> union of phi(x|n)``.

Three concrete kinds exist:

* :class:`TableMap` - a finite table over a bounded domain plus a default rule;
* :class:`LetterMap` - a finite-state letter-to-letter transducer (Mealy machine).
  These are length preserving, certified by construction, and their induced
  points on eventually periodic inputs can be computed exactly;
* :class:`FuncMap` - any other rule given as a Python callable.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from .seq import (
    FinSeq,
    ParseError,
    Periodic,
    Constant,
    Point,
    all_sequences,
    comparable,
    format_seq,
    is_prefix,
    parse_seq,
)


class ViolationFound(Exception):
    def __init__(self, s: FinSeq, t: FinSeq, phi_s: FinSeq, phi_t: FinSeq):
        super().__init__(
            f"not monotone: {format_seq(s)} is a prefix of {format_seq(t)} but "
            f"{format_seq(phi_s)} is not a prefix of {format_seq(phi_t)}"
        )
        self.s, self.t = s, t


class Diverged(Exception):
    """Output did not reach the requested length within the evaluation budget."""

    def __init__(self, budget: int, reached: int):
        super().__init__(f"output length {reached} after {budget} input entries")
        self.budget = budget
        self.reached = reached


class IncoherentOracle(Exception):
    def __init__(self, s: FinSeq, t: FinSeq):
        super().__init__(f"guarantees for {format_seq(s)} and {format_seq(t)} are incomparable")
        self.s, self.t = s, t


class SeqMap:
    """Base class. Subclasses implement ``_apply``."""

    kind = "builtin"
    length_preserving = False

    def __init__(self, depth: int | None = None, branch: int | None = None,
                 name: str = "map", params: tuple = ()):
        # None means "certified by construction, no table bounds"
        self.depth = depth
        self.branch = branch
        self.name = name
        self.params = tuple(params)

    def __call__(self, s: Sequence[int]) -> FinSeq:
        return self._apply(tuple(s))

    def _apply(self, s: FinSeq) -> FinSeq:
        raise NotImplementedError

    def __repr__(self) -> str:
        args = " ".join(str(p) for p in self.params)
        return f"<{type(self).__name__} {self.name}{' ' + args if args else ''}>"


class FuncMap(SeqMap):
    def __init__(self, rule: Callable[[FinSeq], Sequence[int]], depth: int | None = None,
                 branch: int | None = None, name: str = "func", params: tuple = (),
                 length_preserving: bool = False):
        super().__init__(depth, branch, name, params)
        self.rule = rule
        self.length_preserving = length_preserving

    def _apply(self, s):
        return tuple(self.rule(s))


class TableMap(SeqMap):
    """Finite table on sequences of length <= depth with entries < branch.

    Outside the table the longest in-domain prefix ``p`` of ``s`` decides:
    ``default="copy"`` gives ``table[p] + s[len(p):]``, ``default="hold"`` gives
    ``table[p]``. Both preserve monotonicity of the table.
    """

    kind = "table"

    def __init__(self, table: dict, depth: int, branch: int, default: str = "copy", name: str = "table"):
        super().__init__(depth, branch, name)
        if default not in ("copy", "hold"):
            raise ValueError("default must be 'copy' or 'hold'")
        self.default = default
        self.table = {tuple(k): tuple(v) for k, v in table.items()}
        missing = [s for s in all_sequences(depth, branch) if s not in self.table]
        if missing:
            raise ValueError(f"table is missing {format_seq(missing[0])} (and {len(missing) - 1} more)")
        self.length_preserving = default == "copy" and all(len(v) == len(k) for k, v in self.table.items())

    def _apply(self, s):
        j = 0
        while j < len(s) and j < self.depth and s[j] < self.branch:
            j += 1
        out = self.table[s[:j]]
        if self.default == "copy":
            return out + s[j:]
        return out


class LetterMap(SeqMap):
    """Mealy machine: ``step(state, symbol) -> (state, output symbol)``.

    The state space reachable from ``start`` must be finite for the exact
    analyses (:func:`induced_point`) to terminate; all shipped machines are.
    Runs are memoized per prefix behind a lock, so instances may be shared
    between threads.
    """

    length_preserving = True
    CACHE_LIMIT = 200_000

    def __init__(self, start: Hashable, step: Callable[[Hashable, int], tuple[Hashable, int]],
                 name: str = "letter", params: tuple = ()):
        super().__init__(None, None, name, params)
        self.start = start
        self.step = step
        self._cache: dict[FinSeq, tuple[Hashable, FinSeq]] = {(): (start, ())}
        self._lock = threading.Lock()

    def run(self, s: FinSeq) -> tuple[Hashable, FinSeq]:
        """Final state and output after reading ``s``."""
        s = tuple(s)
        cache = self._cache
        hit = cache.get(s)
        if hit is not None:
            return hit
        k = len(s) - 1
        while k > 0 and s[:k] not in cache:
            k -= 1
        state, out = cache.get(s[:k], (self.start, ()))
        new = []
        for j in range(k, len(s)):
            state, o = self.step(state, s[j])
            out = out + (o,)
            new.append((s[: j + 1], (state, out)))
        with self._lock:
            if len(cache) > self.CACHE_LIMIT:
                cache.clear()
                cache[()] = (self.start, ())
            cache.update(new)
        return state, out

    def _apply(self, s):
        return self.run(s)[1]


# ---------------------------------------------------------------------------
# built-in rules

BUILTINS: dict[str, Callable[..., SeqMap]] = {}


def builtin(name: str):
    def register(factory):
        BUILTINS[name] = factory
        return factory

    return register


def make_builtin(name: str, *params) -> SeqMap:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin map {name!r}; known: {', '.join(sorted(BUILTINS))}") from None
    m = factory(*params)
    m.name, m.params = name, tuple(params)
    return m


@builtin("identity")
def identity() -> LetterMap:
    return LetterMap(0, lambda q, a: (q, a), "identity")


@builtin("const")
def constant_output(c: int) -> LetterMap:
    """Writes ``c`` for every input entry."""
    return LetterMap(0, lambda q, a: (q, c), "const", (c,))


@builtin("shift")
def shift(n: int = 1) -> FuncMap:
    """Drops the first ``n`` entries; Lipschitz with constant 2^n."""
    return FuncMap(lambda s: s[n:], name="shift", params=(n,))


# ---------------------------------------------------------------------------
# operations


@dataclass
class MonotoneReport:
    depth: int
    branch: int
    checked: int
    violation: tuple | None = None

    @property
    def certified(self) -> bool:
        return self.violation is None


def check_monotone(phi: SeqMap, depth: int, branch: int) -> MonotoneReport:
    """Exhaustively compare phi(s) with phi(s + (i,)) on the bounded domain.

    One-step extensions suffice since the prefix order is the transitive closure
    of them.
    """
    if phi.depth is not None and depth > phi.depth:
        raise ValueError(f"depth {depth} exceeds declared depth {phi.depth}")
    if phi.branch is not None and branch > phi.branch:
        raise ValueError(f"branch {branch} exceeds declared branch {phi.branch}")
    checked = 0
    for s in all_sequences(depth - 1, branch):
        out = phi(s)
        for i in range(branch):
            t = s + (i,)
            out_t = phi(t)
            checked += 1
            if not is_prefix(out, out_t):
                return MonotoneReport(depth, branch, checked, (s, t, out, out_t))
    return MonotoneReport(depth, branch, checked)


def validate_monotone(phi: SeqMap, depth: int, branch: int) -> MonotoneReport:
    report = check_monotone(phi, depth, branch)
    if report.violation:
        raise ViolationFound(*report.violation)
    return report


def induced_eval(phi: SeqMap, x: Point, n: int, budget: int) -> FinSeq:
    """First ``n`` entries of the induced point, reading at most ``budget`` entries of x."""
    reached = 0
    for m in range(budget + 1):
        out = phi(x.prefix(m))
        if len(out) >= n:
            return out[:n]
        reached = len(out)
    raise Diverged(budget, reached)


def check_productive(phi: SeqMap, branches: Iterable[Point], target: int, budget: int) -> list[Point]:
    """Points along which the output did not reach ``target`` within ``budget``."""
    stuck = []
    for x in branches:
        try:
            induced_eval(phi, x, target, budget)
        except Diverged:
            stuck.append(x)
    return stuck


def compose(phi: SeqMap, psi: SeqMap) -> SeqMap:
    """The map s -> psi(phi(s)), inducing f_psi after f_phi."""
    if isinstance(phi, LetterMap) and isinstance(psi, LetterMap):
        def step(q, a):
            p, r = q
            p, b = phi.step(p, a)
            r, c = psi.step(r, b)
            return (p, r), c

        return LetterMap((phi.start, psi.start), step, f"{psi.name}.{phi.name}")
    depth = phi.depth if phi.depth is not None else None
    return FuncMap(lambda s: psi(phi(s)), depth, phi.branch, f"{psi.name}.{phi.name}",
                   length_preserving=phi.length_preserving and psi.length_preserving)


def seqmap_from_prefix_oracle(g: Callable[[FinSeq], Sequence[int]], depth: int, branch: int = 2) -> SeqMap:
    """Canonical map from a guarantee oracle: g(s) = t asserts f(N_s) is inside N_t.

    The value at s is g(s) cut to length lh(s). Coherence of the guarantees and
    monotonicity of the result are checked on the bounded domain.
    """
    for s in all_sequences(depth - 1, branch):
        gs = tuple(g(s))
        for i in range(branch):
            t = s + (i,)
            if not comparable(gs, tuple(g(t))):
                raise IncoherentOracle(s, t)
    phi = FuncMap(lambda s: tuple(g(s))[: len(s)], depth, branch, "oracle")
    validate_monotone(phi, depth, branch)
    return phi


def induced_point(phi: SeqMap, x: Point, max_steps: int = 100_000) -> Point | None:
    """The induced point f_phi(x) as an eventually periodic :class:`Point`.

    Only available for letter maps: the pair (phase of x, machine state) evolves
    deterministically, so the first repeated pair past the head of x closes a
    cycle of the output. Returns None if no repetition shows up within
    ``max_steps`` (infinite state space in practice).
    """
    if not isinstance(phi, LetterMap):
        return None
    state = phi.start
    out: list[int] = []
    seen: dict[tuple, int] = {}
    for m in range(max_steps):
        if m >= len(x.head):
            key = (x.phase(m), state)
            if key in seen:
                start = seen[key]
                cyc = tuple(out[start:])
                tail = Constant(cyc[0]) if len(cyc) == 1 else Periodic(cyc)
                return Point(tuple(out[:start]), tail).canonical()
            seen[key] = m
        state, o = phi.step(state, x[m])
        out.append(o)
    return None


# ---------------------------------------------------------------------------
# file format


def _parse_param(tok: str, line: int):
    if tok.startswith("["):
        return parse_seq(tok, line)
    if tok.isdigit():
        return int(tok)
    raise ParseError(f"bad builtin parameter {tok!r}", line, 1)


def _tokens(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch.isspace() and depth == 0:
            if cur:
                out.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        out.append(cur)
    return out


def parse_seqmap(text: str) -> SeqMap:
    header: dict[str, str] = {}
    rows: dict[FinSeq, FinSeq] = {}
    builtin_line = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            lhs, rhs = line.split("->", 1)
            rows[parse_seq(lhs, lineno)] = parse_seq(rhs, lineno, raw.find("->") + 3)
            continue
        key, _, rest = line.partition(" ")
        if key == "builtin":
            toks = _tokens(rest)
            if not toks:
                raise ParseError("builtin needs a name", lineno, 9)
            builtin_line = (toks[0], tuple(_parse_param(t, lineno) for t in toks[1:]))
        elif key in ("kind", "depth", "branch", "default", "name"):
            header[key] = rest.strip()
        else:
            raise ParseError(f"unknown directive {key!r}", lineno, 1)
    kind = header.get("kind", "builtin" if builtin_line else "table")
    if kind == "builtin":
        if builtin_line is None:
            raise ParseError("builtin map file needs a 'builtin <name> <params>' line")
        return make_builtin(builtin_line[0], *builtin_line[1])
    if kind != "table":
        raise ParseError(f"unknown kind {kind!r}")
    try:
        depth, branch = int(header["depth"]), int(header["branch"])
    except (KeyError, ValueError):
        raise ParseError("table map needs integer 'depth' and 'branch' headers") from None
    try:
        return TableMap(rows, depth, branch, header.get("default", "copy"), header.get("name", "table"))
    except ValueError as e:
        raise ParseError(str(e)) from None


def format_seqmap(phi: SeqMap) -> str:
    if isinstance(phi, TableMap):
        lines = ["kind table", f"depth {phi.depth}", f"branch {phi.branch}", f"default {phi.default}"]
        for s in all_sequences(phi.depth, phi.branch):
            lines.append(f"{format_seq(s)} -> {format_seq(phi.table[s])}")
        return "\n".join(lines) + "\n"
    if phi.name not in BUILTINS:
        raise ValueError(f"{phi!r} has no textual form")
    params = " ".join(format_seq(p) if isinstance(p, tuple) else str(p) for p in phi.params)
    return f"kind builtin\nbuiltin {phi.name}{' ' + params if params else ''}\n"
