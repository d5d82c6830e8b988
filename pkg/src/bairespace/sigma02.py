"""Sigma^0_2 sets as reductions to S, and the control-function union combinator.

S is the set of points with only finitely many zero entries. A Sigma^0_2 set A
is given by a continuous reduction phi with ``x in A  <=>  f_phi(x) in S``.

Given reductions phi_0, ..., phi_{N-1} and a schedule n_0, n_1, ... listing every
index infinitely often, :func:`build_control` produces the control map and its
state function: at each step the currently scheduled reduction is asked for its
newest output; if that contains a zero the control map writes 0 and the state
moves to the next scheduled index, otherwise it writes 1 and keeps the state.
The control map then reduces the union of the sets to S, and a point lies in the
union exactly when its state trace is eventually constant.
"""
from __future__ import annotations

import enum
import itertools
import random
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .contmap import (
    BUILTINS,
    FuncMap,
    LetterMap,
    SeqMap,
    builtin,
    induced_point,
    make_builtin,
)
from .seq import FinSeq, Point, seq_diff

OMEGA = None  # family/schedule size marker for omega


def s_membership(x: Point) -> bool:
    """x in S iff the recurring part of x has no zero."""
    return 0 not in x.recurring()


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Schedule:
    """Enumeration of indices below ``size`` with infinite repetitions.

    Finite schedules are eventually periodic: ``head`` followed by ``cycle``
    forever. The omega staircase has no cycle and is produced by ``rule``.
    """

    size: int | None
    head: tuple = ()
    cycle: tuple | None = None
    rule: Callable[[int], int] | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.cycle is None and self.rule is None:
            raise ValueError("schedule needs a cycle or a rule")
        if self.size is not None and self.size < 1:
            raise ValueError("schedule size must be >= 1")

    def at(self, k: int) -> int:
        if self.cycle is None:
            return self.rule(k)
        if k < len(self.head):
            return self.head[k]
        return self.cycle[(k - len(self.head)) % len(self.cycle)]

    def phase(self, k: int) -> int:
        """Finite summary of position k: equal phases schedule identical futures."""
        if self.cycle is None:
            return k
        if k < len(self.head):
            return k
        return len(self.head) + (k - len(self.head)) % len(self.cycle)

    def prefix(self, n: int) -> list[int]:
        return [self.at(k) for k in range(n)]

    def validate(self, check: int = 256) -> None:
        """Adjacent entries differ (when size > 1) and every index recurs."""
        if self.size is not None:
            bad = [k for k in range(check) if not 0 <= self.at(k) < self.size]
            if bad:
                raise ValueError(f"schedule entry {self.at(bad[0])} out of range at position {bad[0]}")
            if self.cycle is not None and set(self.cycle) != set(range(self.size)):
                raise ValueError("every index must occur in the repeating part")
        if self.size != 1:
            limit = check if self.cycle is None else len(self.head) + 2 * len(self.cycle) + 1
            for k in range(limit):
                if self.at(k) == self.at(k + 1):
                    raise ValueError(f"consecutive schedule entries coincide at position {k}")


def _staircase(k: int) -> int:
    # blocks [0,1], [0,1,2], [0,1,2,3], ...
    block = 1
    while k > block:
        k -= block + 1
        block += 1
    return k


def round_robin(n: int) -> Schedule:
    return Schedule(n, (), tuple(range(n)), name="rr")


def staircase_schedule(n: int | None = OMEGA) -> Schedule:
    """0,1,0,1,2,0,1,2,3,... with entries >= n dropped when n is finite."""
    if n is None:
        return Schedule(None, rule=_staircase, name="stair")
    if n == 1:
        return Schedule(1, (), (0,), name="stair")
    head = tuple(itertools.chain.from_iterable(range(i + 1) for i in range(1, n - 1)))
    return Schedule(n, head, tuple(range(n)), name="stair")


def default_schedule(n: int | None) -> Schedule:
    """Round robin for finite n (constant 0 when n = 1), staircase for omega."""
    if n is None:
        return staircase_schedule(None)
    if n < 1:
        raise ValueError("a schedule needs at least one index")
    return round_robin(n)


def shuffled_schedule(n: int, seed: int, rounds: int = 3) -> Schedule:
    """Cycle made of ``rounds`` random permutations, reshuffled until it is valid."""
    if n == 1:
        return round_robin(1)
    rng = random.Random(seed)
    while True:
        cyc = []
        for _ in range(rounds):
            perm = list(range(n))
            rng.shuffle(perm)
            cyc.extend(perm)
        if all(cyc[i] != cyc[(i + 1) % len(cyc)] for i in range(len(cyc))):
            return Schedule(n, (), tuple(cyc), name=f"shuffle{seed}")


# ---------------------------------------------------------------------------
# control functions


class ControlFunction:
    """Control map and state function of a family of reductions.

    ``star(s)`` and ``state(s)`` follow the defining recursion literally and are
    memoized per prefix (internally synchronized). ``star_map`` is the control
    map as a :class:`SeqMap`; when every member is a letter map it is itself a
    letter map, so its induced points can be computed exactly.
    """

    CACHE_LIMIT = 200_000

    def __init__(self, family: Sequence[SeqMap], schedule: Schedule):
        if not family:
            raise ValueError("family must be nonempty")
        if schedule.size is not None and schedule.size != len(family):
            raise ValueError(f"schedule over {schedule.size} indices for a family of {len(family)}")
        schedule.validate()
        self.family = list(family)
        self.schedule = schedule
        # prefix -> (star value, schedule position k)
        self._memo: dict[FinSeq, tuple[FinSeq, int]] = {(): ((), 0)}
        self._lock = threading.Lock()
        self.star_map = self._make_star_map()

    def _lookup(self, s: FinSeq) -> tuple[FinSeq, int]:
        memo = self._memo
        hit = memo.get(s)
        if hit is not None:
            return hit
        k = len(s) - 1
        while k > 0 and s[:k] not in memo:
            k -= 1
        star, pos = memo[s[:k]] if s[:k] in memo else ((), 0)
        new = []
        for j in range(k, len(s)):
            active = self.family[self.schedule.at(pos)]
            u = seq_diff(active(s[: j + 1]), star)
            if 0 in u:
                star, pos = star + (0,), pos + 1
            else:
                star = star + (1,)
            new.append((s[: j + 1], (star, pos)))
        with self._lock:
            if len(memo) > self.CACHE_LIMIT:
                memo.clear()
                memo[()] = ((), 0)
            memo.update(new)
        return star, pos

    def star(self, s: Sequence[int]) -> FinSeq:
        return self._lookup(tuple(s))[0]

    def state(self, s: Sequence[int]) -> tuple[int, int]:
        """(family index, schedule position) of ``s``."""
        pos = self._lookup(tuple(s))[1]
        return self.schedule.at(pos), pos

    def sigma(self, s: Sequence[int]) -> int:
        return self.state(s)[0]

    def _make_star_map(self) -> SeqMap:
        if not all(isinstance(phi, LetterMap) for phi in self.family):
            return FuncMap(self.star, name="control", length_preserving=True)
        family, schedule = self.family, self.schedule

        def step(q, a):
            states, phase = q
            nxt = []
            out = None
            active = schedule.at(phase)
            for idx, phi in enumerate(family):
                st, o = phi.step(states[idx], a)
                nxt.append(st)
                if idx == active:
                    out = o
            if out == 0:
                return (tuple(nxt), schedule.phase(phase + 1)), 0
            return (tuple(nxt), phase), 1

        return LetterMap((tuple(phi.start for phi in family), 0), step, "control")


def build_control(family: Sequence[SeqMap], schedule: Schedule | None = None) -> ControlFunction:
    if schedule is None:
        schedule = default_schedule(len(family))
    return ControlFunction(family, schedule)


def state_trace(phi: ControlFunction, x: Point, m: int) -> list[int]:
    """Family indices sigma(x|i) for i = 0..m."""
    return [phi.sigma(x.prefix(i)) for i in range(m + 1)]


def position_trace(phi: ControlFunction, x: Point, m: int) -> list[int]:
    """Schedule positions of x|i for i = 0..m; they move exactly when a 0 is written."""
    return [phi.state(x.prefix(i))[1] for i in range(m + 1)]


class Stability(enum.Enum):
    PROVEN_STABLE = "ProvenStable"
    STABLE_THROUGH_HORIZON = "StableThroughHorizon"
    NOT_STABLE_AT_HORIZON = "NotStableAtHorizon"


def last_change(trace: Sequence[int]) -> int:
    m = 0
    for i in range(1, len(trace)):
        if trace[i] != trace[i - 1]:
            m = i
    return m


def stabilizing_point(phi: ControlFunction, x: Point, horizon: int,
                      ground_truths: Sequence[Callable[[Point], bool] | None] | None = None
                      ) -> tuple[int, Stability]:
    """Least m after which the state trace stays constant, as seen up to ``horizon``.

    Changes are read off the full state (index, schedule position): with a
    single-member family the index alone never moves. The trace counts as
    stable when its last change leaves at least half of the horizon unchanged.
    A stable trace whose state's ground truth holds at x is reported as proven.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    trace = position_trace(phi, x, horizon)
    m = last_change(trace)
    if m > horizon - max(1, horizon // 2):
        return m, Stability.NOT_STABLE_AT_HORIZON
    if ground_truths is not None:
        truth = ground_truths[phi.schedule.at(trace[m])]
        if truth is not None and truth(x):
            return m, Stability.PROVEN_STABLE
    return m, Stability.STABLE_THROUGH_HORIZON


# ---------------------------------------------------------------------------
# Sigma^0_2 sets


@dataclass
class Sigma02Set:
    reduction: SeqMap
    ground_truth: Callable[[Point], bool] | None = None
    name: str = "set"
    control: ControlFunction | None = field(default=None, repr=False)

    def contains(self, x: Point) -> bool:
        if self.ground_truth is None:
            raise ValueError(f"{self.name} has no ground truth")
        return self.ground_truth(x)


def induced_in_s(reduction: SeqMap, x: Point, horizon: int = 256) -> tuple[bool, bool]:
    """(f_reduction(x) in S, exact?).

    Exact when the induced point can be computed as an eventually periodic point;
    otherwise judged by the absence of zeros in the second half of a prefix of
    length ``horizon`` and flagged inexact.
    """
    y = induced_point(reduction, x)
    if y is not None:
        return s_membership(y), True
    out = reduction(x.prefix(horizon))
    return 0 not in out[len(out) // 2:], False


def union_reduction(family: Sequence[Sigma02Set], schedule: Schedule | None = None) -> Sigma02Set:
    ctrl = build_control([a.reduction for a in family], schedule)
    truths = [a.ground_truth for a in family]
    truth = None
    if all(t is not None for t in truths):
        truth = lambda x: any(t(x) for t in truths)  # noqa: E731
    name = "union(" + ",".join(a.name for a in family) + ")"
    return Sigma02Set(ctrl.star_map, truth, name, ctrl)


@dataclass
class SampleVerdict:
    point: Point
    member: bool
    induced_in_s: bool
    induced_exact: bool
    stable: bool
    stabilizing_point: int
    state: int
    state_truth: bool | None

    @property
    def ok(self) -> bool:
        if not (self.member == self.induced_in_s == self.stable):
            return False
        if self.stable and self.member and self.state_truth is not True:
            return False
        return True


@dataclass
class UnionReport:
    verdicts: list[SampleVerdict]

    @property
    def counterexamples(self) -> list[SampleVerdict]:
        return [v for v in self.verdicts if not v.ok]

    @property
    def inexact(self) -> int:
        return sum(not v.induced_exact for v in self.verdicts)

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def verify_union(phi: ControlFunction, family: Sequence[Sigma02Set], samples: Sequence[Point],
                 horizon: int = 64) -> UnionReport:
    """Check membership, induced membership in S and trace stability agree per sample.

    When the induced point is exact the horizon is widened past its pre-period
    and period, so the stability verdict is exact as well.
    """
    truths = [a.ground_truth for a in family]
    if any(t is None for t in truths):
        raise ValueError("every family member needs a ground truth")
    verdicts = []
    for x in samples:
        member = any(t(x) for t in truths)
        y = induced_point(phi.star_map, x)
        if y is not None:
            in_s, exact = s_membership(y), True
            h = max(horizon, 2 * (len(y.head) + len(y.cycle)) + 2)
        else:
            in_s, exact = induced_in_s(phi.star_map, x, 2 * horizon)
            h = horizon
        m, status = stabilizing_point(phi, x, h, truths)
        stable = status is not Stability.NOT_STABLE_AT_HORIZON
        idx = phi.sigma(x.prefix(m))
        state_truth = truths[idx](x) if stable else None
        verdicts.append(SampleVerdict(x, member, in_s, exact, stable, m, idx, state_truth))
    return UnionReport(verdicts)


# ---------------------------------------------------------------------------
# shipped Sigma^0_2 sets: letter-map reductions with independent ground truths


def first_index(x: Point, value: int) -> int | None:
    for m in range(len(x.head) + len(x.cycle)):
        if x[m] == value:
            return m
    return None


def zero_count(x: Point) -> float:
    if 0 in x.cycle:
        return float("inf")
    return x.head.count(0)


def _flag_map(name, params, start, update, out):
    """Letter map whose state is updated by ``update(state, a)`` before emitting ``out(state)``."""
    def step(q, a):
        q = update(q, a)
        return q, out(q)

    return LetterMap(start, step, name, params)


@builtin("no_zero")
def _no_zero():
    return _flag_map("no_zero", (), False, lambda q, a: q or a == 0, lambda q: 0 if q else 1)


@builtin("has_zero")
def _has_zero():
    return _flag_map("has_zero", (), False, lambda q, a: q or a == 0, lambda q: 1 if q else 0)


@builtin("zero_in_first")
def _zero_in_first(k: int):
    # state (entries read, capped at k; zero seen among the first k)
    return _flag_map("zero_in_first", (k,), (0, False),
                     lambda q, a: (min(q[0] + 1, k), q[1] or (q[0] < k and a == 0)),
                     lambda q: 1 if q[1] else 0)


@builtin("avoid")
def _avoid(c: int):
    return LetterMap(0, lambda q, a: (q, 0 if a == c else 1), "avoid", (c,))


@builtin("eventually_even")
def _eventually_even():
    return LetterMap(0, lambda q, a: (q, 0 if a % 2 else 1), "eventually_even")


@builtin("eventually_below")
def _eventually_below(b: int):
    return LetterMap(0, lambda q, a: (q, 0 if a >= b else 1), "eventually_below", (b,))


@builtin("cylinder")
def _cylinder(s: tuple):
    n = len(s)
    return _flag_map("cylinder", (s,), (0, True),
                     lambda q, a: (min(q[0] + 1, n), q[1] and (q[0] >= n or a == s[q[0]])),
                     lambda q: 1 if q[1] and q[0] >= n else 0)


@builtin("empty")
def _empty():
    return LetterMap(0, lambda q, a: (q, 0), "empty")


@builtin("whole")
def _whole():
    return LetterMap(0, lambda q, a: (q, 1), "whole")


def _first_zero_update(cap):
    # state (entries read capped at cap + 1, index of first zero or None)
    def update(q, a):
        pos, first = q
        if first is None and a == 0:
            first = pos
        return min(pos + 1, cap + 1), first

    return update


@builtin("first_zero_at")
def _first_zero_at(p: int):
    return _flag_map("first_zero_at", (p,), (0, None), _first_zero_update(p),
                     lambda q: 1 if q[1] == p else 0)


@builtin("first_zero_from")
def _first_zero_from(p: int):
    return _flag_map("first_zero_from", (p,), (0, None), _first_zero_update(p),
                     lambda q: 1 if q[1] is not None and q[1] >= p else 0)


@builtin("zero_count")
def _zero_count(j: int):
    return _flag_map("zero_count", (j,), 0, lambda q, a: min(q + (a == 0), j + 1),
                     lambda q: 1 if q == j else 0)


@builtin("zero_count_at_least")
def _zero_count_at_least(j: int):
    return _flag_map("zero_count_at_least", (j,), 0, lambda q, a: min(q + (a == 0), j),
                     lambda q: 1 if q >= j else 0)


GROUND_TRUTHS: dict[str, Callable[..., Callable[[Point], bool]]] = {
    "identity": lambda: s_membership,
    "no_zero": lambda: lambda x: 0 not in x.head and 0 not in x.cycle,
    "has_zero": lambda: lambda x: 0 in x.head or 0 in x.cycle,
    "zero_in_first": lambda k: lambda x: 0 in x.prefix(k),
    "avoid": lambda c: lambda x: c not in x.recurring(),
    "eventually_even": lambda: lambda x: all(v % 2 == 0 for v in x.cycle),
    "eventually_below": lambda b: lambda x: max(x.cycle) < b,
    "cylinder": lambda s: lambda x: x.prefix(len(s)) == tuple(s),
    "empty": lambda: lambda x: False,
    "whole": lambda: lambda x: True,
    "first_zero_at": lambda p: lambda x: first_index(x, 0) == p,
    "first_zero_from": lambda p: lambda x: first_index(x, 0) is not None and first_index(x, 0) >= p,
    "zero_count": lambda j: lambda x: zero_count(x) == j,
    "zero_count_at_least": lambda j: lambda x: zero_count(x) >= j,
}


def sigma02_set(name: str, *params) -> Sigma02Set:
    """A shipped Sigma^0_2 set: built-in reduction plus its decidable ground truth."""
    label = name + ("(" + ",".join(map(str, params)) + ")" if params else "")
    return Sigma02Set(make_builtin(name, *params), GROUND_TRUTHS[name](*params), label)


def ground_truth_for(phi: SeqMap) -> Callable[[Point], bool] | None:
    maker = GROUND_TRUTHS.get(phi.name) if phi.name in BUILTINS else None
    return maker(*phi.params) if maker else None


FAMILIES: dict[str, tuple[list[tuple], str]] = {
    "single-s": ([("identity",)], "rr"),
    "two-set": ([("no_zero",), ("zero_in_first", 3)], "rr"),
    "three": ([("eventually_even",), ("eventually_below", 2), ("cylinder", (1,))], "rr"),
    "four": ([("avoid", 1), ("no_zero",), ("empty",), ("cylinder", (2, 0))], "rr"),
    "stair-four": ([("eventually_even",), ("avoid", 2), ("zero_in_first", 2), ("eventually_below", 1)], "stair"),
}


def shipped_family(name: str) -> tuple[list[Sigma02Set], Schedule]:
    members, sched = FAMILIES[name]
    family = [sigma02_set(*m) for m in members]
    schedule = staircase_schedule(len(family)) if sched == "stair" else default_schedule(len(family))
    return family, schedule
