"""Command-line front end.

Every subcommand reads plain-text inputs, writes a tab-separated report with a
versioned header, and exits 0 when all checks pass, 2 when a check fails and
1 on bad input.
"""
from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import approx, borel, embed, sigma02
from .contmap import _parse_param, _tokens
from .full import check_preimages_partition, format_full
from .seq import ParseError, Point, format_point, format_seq, parse_point, point_grid, random_points

REPORT_VERSION = "v1"
EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2
TRACE_SHOWN = 16  # prefix lengths shown in the star and state columns


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None

    def validate(self):
        for k, v in self.params.items():
            if isinstance(v, int) and not isinstance(v, bool) and v < 1 and k not in ("n", "seed"):
                raise InputError(f"--{k} must be >= 1")


class Report:
    def __init__(self, name: str, columns: Sequence[str], meta: dict | None = None):
        self.lines = [f"# bairespace {name} report {REPORT_VERSION}"]
        if meta:
            self.lines.append("# " + " ".join(f"{k}={v}" for k, v in meta.items()))
        self.lines.append("\t".join(columns))
        self.summary: list[str] = []

    def row(self, *values):
        self.lines.append("\t".join(str(v) for v in values))

    def note(self, text: str):
        self.summary.append(text)

    def text(self) -> str:
        return "\n".join(self.lines + [f"# {s}" for s in self.summary]) + "\n"


def read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def read_points(path: str) -> list[Point]:
    out = []
    for ln, raw in enumerate(read_text(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(parse_point(line, ln))
    return out


def parse_k_range(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            ks = list(range(int(a), int(b) + 1))
        else:
            ks = [int(p) for p in text.split(",")]
    except ValueError:
        raise InputError(f"bad k range {text!r}; use 1..6 or 1,2,3") from None
    if not ks or min(ks) < 0:
        raise InputError(f"bad k range {text!r}")
    return ks


# ---------------------------------------------------------------------------
# families

FAMILY_HEADER = "family v1"


def parse_family(text: str) -> tuple[list[sigma02.Sigma02Set], sigma02.Schedule | None]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FAMILY_HEADER:
        raise ParseError(f"expected header {FAMILY_HEADER!r}", 1, 1)
    members, sched = [], None
    for ln, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = _tokens(line)
        if toks[0] == "member" and len(toks) >= 2:
            if toks[1] not in sigma02.GROUND_TRUTHS:
                raise ParseError(f"unknown set {toks[1]!r}", ln, raw.find(toks[1]) + 1)
            members.append((toks[1], tuple(_parse_param(t, ln) for t in toks[2:])))
        elif toks[0] == "schedule" and len(toks) >= 2:
            sched = tuple(toks[1:])
        else:
            raise ParseError("expected 'member <set> <params>' or 'schedule <kind>'", ln, 1)
    if not members:
        raise ParseError("family has no members", 1, 1)
    try:
        family = [sigma02.sigma02_set(name, *params) for name, params in members]
    except TypeError as e:
        raise ParseError(f"bad member parameters: {e}", 1, 1) from None
    return family, (make_schedule(sched, len(family)) if sched else None)


def format_family(family: Sequence[sigma02.Sigma02Set], schedule: sigma02.Schedule | None = None) -> str:
    lines = [FAMILY_HEADER]
    if schedule is not None:
        lines.append(f"schedule {schedule.name}")
    for a in family:
        red = a.reduction
        params = " ".join(format_seq(p) if isinstance(p, tuple) else str(p) for p in red.params)
        lines.append(f"member {red.name} {params}".rstrip())
    return "\n".join(lines) + "\n"


def make_schedule(spec: Sequence[str], n: int) -> sigma02.Schedule:
    kind = spec[0]
    if kind == "rr":
        return sigma02.round_robin(n)
    if kind == "stair":
        return sigma02.staircase_schedule(n)
    if kind.startswith("shuffle"):
        seed = spec[1] if len(spec) > 1 else kind[len("shuffle"):].lstrip(":") or "0"
        if not str(seed).isdigit():
            raise InputError(f"bad shuffle seed {seed!r}")
        return sigma02.shuffled_schedule(n, int(seed))
    raise InputError(f"unknown schedule {kind!r}; use rr, stair or shuffle:<seed>")


def load_family(ref: str):
    name = ref[1:] if ref.startswith("@") else ref
    if name in sigma02.FAMILIES and not Path(ref).exists():
        return sigma02.shipped_family(name)
    family, sched = parse_family(read_text(ref))
    return family, sched or sigma02.default_schedule(len(family))


def load_spec(ref: str) -> approx.Baire1Spec:
    name = ref[1:] if ref.startswith("@") else ref
    if name in approx.SPECS and not Path(ref).exists():
        return approx.shipped_spec(name)
    return approx.parse_spec(read_text(ref))


def load_codes(ref: str) -> list:
    text = ref if ref.lstrip().startswith("(") else read_text(ref)
    return borel.parse_codes(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_control_trace(args, out: Report) -> bool:
    family, schedule = load_family(args.family)
    if args.schedule:
        schedule = make_schedule(args.schedule.split(":"), len(family))
    if args.point:
        samples = [parse_point(p) for p in args.point]
    elif args.samples:
        samples = read_points(args.samples)
    else:
        samples = random_points(random.Random(args.seed), args.count)
    phi = sigma02.build_control([a.reduction for a in family], schedule)
    rep = sigma02.verify_union(phi, family, samples, args.horizon)
    shown = min(args.horizon, TRACE_SHOWN)
    for i, v in enumerate(rep.verdicts):
        states = "".join(map(str, sigma02.state_trace(phi, v.point, shown)))
        star = "".join(map(str, phi.star(v.point.prefix(shown))))
        out.row(i, format_point(v.point), int(v.member), int(v.stable), v.stabilizing_point, v.state,
                int(v.induced_in_s), int(v.induced_exact), star, states, "ok" if v.ok else "FAIL")
    out.note(f"samples={len(samples)} counterexamples={len(rep.counterexamples)} inexact={rep.inexact} "
             f"schedule={schedule.name}")
    return rep.ok


def cmd_eval_code(args, out: Report) -> bool:
    codes = load_codes(args.code)
    points = [parse_point(p) for p in args.point] if args.point else []
    if args.samples:
        points += read_points(args.samples)
    if not points:
        raise InputError("give --point or --samples")
    unknown = 0
    for ci, c in enumerate(codes):
        for x in points:
            v = borel.eval_membership(c, x, args.budget)
            unknown += v is borel.Verdict.UNKNOWN
            out.row(ci, format_point(x), v.value)
    out.note(f"codes={len(codes)} points={len(points)} unknown={unknown}")
    return True


def _partition_rows(out: Report, pieces, extra):
    for i, (p, e) in enumerate(zip(pieces, extra)):
        s, pi = borel.levels(p)
        out.row(i, e, s, pi, borel.format_code(p))


def _check_summary(out: Report, chk: borel.PartitionCheck):
    out.note(f"points={chk.points} evaluations={chk.evaluations} unknown={chk.unknown} "
              f"overlaps={chk.overlaps} union_mismatch={chk.union_mismatch} "
              f"containment_failures={chk.containment_failures}")


def run_partition(mode: str, codes: list, xi: int, out: Report, grid, pieces_out: str | None) -> bool:
    try:
        if mode == "reduce":
            pieces = borel.generalized_reduction(codes, xi)
            target = borel.Union(tuple(codes))
            chk = borel.check_partition(pieces, target, grid, parents=codes)
            _partition_rows(out, pieces, range(len(pieces)))
            ok = chk.ok and all(borel.sigma_level(q) <= xi + 1 for q in pieces)
        elif mode == "two-pi":
            ref = borel.refine_to_two_pi(codes, xi)
            pieces = ref.pieces
            target = borel.Union(tuple(codes))
            chk = borel.check_partition(pieces, target, grid, parents=[codes[p] for p in ref.parent])
            _partition_rows(out, pieces, ref.parent)
            shape = all(borel.is_two_pi(p, xi) for p in pieces)
            out.note(f"two_pi_shape={int(shape)} undecided_empty={len(ref.undecided)}")
            ok = chk.ok and shape
        elif mode == "pi-below":
            if len(codes) != 1:
                raise InputError("pi-below takes exactly one code")
            result = borel.pi_below_partition(codes[0], xi)
            pieces = [p for p, _ in result]
            chk = borel.check_partition(pieces, codes[0], grid)
            _partition_rows(out, pieces, [lvl for _, lvl in result])
            ok = chk.ok and all(lvl < xi for _, lvl in result)
        else:
            raise InputError(f"unknown mode {mode!r}")
    except (borel.MalformedFamily, borel.RankTooHigh) as e:
        raise InputError(f"{type(e).__name__}: {e}") from None
    _check_summary(out, chk)
    if pieces_out:
        Path(pieces_out).write_text("".join(borel.format_code(p) + "\n" for p in pieces))
    return ok


def cmd_partition_refine(args, out: Report) -> bool:
    grid = point_grid(3, 3)
    return run_partition(args.mode, load_codes(args.input), args.xi, out, grid, args.pieces_out)


def cmd_reduce_family(args, out: Report) -> bool:
    grid = point_grid(3, 3)
    return run_partition("reduce", load_codes(args.input), args.xi, out, grid, args.pieces_out)


def cmd_approx_run(args, out: Report) -> bool:
    spec = load_spec(args.spec)
    ks = parse_k_range(args.k)
    samples = read_points(args.samples) if args.samples else approx.sample_domain()
    M = max(args.M, max(ks))
    rep = approx.convergence_report(spec, ks, samples, args.n, M)
    ok = rep.ok
    for r in rep.rows:
        for k in sorted(r.values):
            node = approx.approximant_node(spec, r.point.prefix(k), k)
            out.row(r.index, format_point(r.point), k, r.values[k], spec.space.label(r.values[k]),
                    spec.space.label(r.truth), r.distances[k], format_seq(node), r.root_stability,
                    "-" if r.m is None else r.m)
    structural = True
    for k in ks:
        f = approx.baire1_to_full(spec, k)
        part = check_preimages_partition(f)
        count = len(f.values()) <= approx.value_count_bound(k)
        structural &= part and count
        out.note(f"k={k} values={len(f.values())} bound={approx.value_count_bound(k)} "
                 f"constant={f.constant} preimages_partition={int(part)}")
        if args.full_out and k == max(ks):
            Path(args.full_out).write_text(format_full(f))
    scheme = approx.check_scheme(spec.scheme)
    out.note(f"scheme_nodes={scheme.nodes} scheme_problems={len(scheme.problems)}")
    if args.step:
        if spec.level_codes is None:
            raise InputError(f"spec {spec.name} has no level codes for the step approximation")
        oracle = approx.spec_ball_oracle(spec)
        for k in ks:
            if k < 1:
                continue
            st = approx.step_approximation(oracle, spec.space, k, spec.space.size)
            try:
                errs = approx.step_error_report(st, spec.space, spec.truth, samples, spec.truth_slack)
            except approx.CoverGap as e:
                out.note(f"step k={k} cover_gap={format_point(e.point)}")
                ok = False
                continue
            bad = sum(not e[2] for e in errs)
            worst = max(e[1] for e in errs)
            out.note(f"step k={k} max_error={worst} bound={approx.dyadic(k)} violations={bad}")
            ok &= bad == 0
    out.note(f"samples={len(samples)} n={args.n} M={M} tolerance={rep.tolerance} "
             f"failures={len(rep.failures)}")
    return ok and structural and scheme.ok


def cmd_embed(args, out: Report) -> bool:
    space = embed.parse_space(read_text(args.space))
    depth = args.depth if args.depth is not None else embed.separating_depth(space)
    scheme = embed.build_lusin_scheme(space, depth)
    ok = True
    for u in space.labels:
        a = embed.invert_h(scheme, u)
        try:
            back = embed.embed_h(scheme, a)
        except embed.Undefined:
            back = "undefined"
        out.row(u, format_seq(a), back)
    if args.verify:
        chk = embed.check_lusin_scheme(scheme)
        out.note(f"scheme_nodes={chk.nodes} scheme_problems={len(chk.problems)}")
        try:
            rep = embed.verify_bilipschitz(scheme)
        except embed.SeparationFailure as e:
            out.note(f"separation_failure: {e}")
            return False
        out.note(f"pairs={rep.pairs} violations={len(rep.violations)} max_d_over_dprime={rep.max_ratio_forward} "
                 f"max_dprime_over_d={rep.max_ratio_inverse} tight_pairs={len(rep.tight_pairs)}")
        ok = chk.ok and rep.ok
    return ok


COMMANDS = {
    "control-trace": (cmd_control_trace, ["sample", "point", "member", "stable", "m", "state", "in_S",
                                          "exact", "star", "states", "verdict"]),
    "eval-code": (cmd_eval_code, ["code", "point", "verdict"]),
    "partition-refine": (cmd_partition_refine, ["piece", "parent_or_level", "sigma", "pi", "code"]),
    "reduce-family": (cmd_reduce_family, ["piece", "member", "sigma", "pi", "code"]),
    "approx-run": (cmd_approx_run, ["sample", "point", "k", "value_index", "value", "truth", "distance", "node",
                                    "root_stability", "m"]),
    "embed": (cmd_embed, ["label", "branch", "embed_h"]),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bairespace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--report", help="write the report here instead of stdout")
        return sp

    sp = common(sub.add_parser("control-trace", help="combine reductions of a family and check the union"))
    sp.add_argument("--family", required=True, help="@name of a shipped family or a family file")
    sp.add_argument("--point", action="append", help="sample point, e.g. [1]~const(1); repeatable")
    sp.add_argument("--samples", help="file with one point per line")
    sp.add_argument("--count", type=int, default=200, help="random samples when no points are given")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--horizon", type=int, default=64)
    sp.add_argument("--schedule", help="rr, stair or shuffle:<seed>")

    sp = common(sub.add_parser("eval-code", help="membership of points in Borel codes"))
    sp.add_argument("--code", required=True, help="code file or an inline s-expression")
    sp.add_argument("--point", action="append")
    sp.add_argument("--samples")
    sp.add_argument("--budget", type=int, default=1_000_000)

    for name, helptext in (("partition-refine", "disjoint refinements of a family of codes"),
                           ("reduce-family", "generalized reduction of a family of codes")):
        sp = common(sub.add_parser(name, help=helptext))
        sp.add_argument("--in", dest="input", required=True, help="file of codes, one s-expression each")
        if name == "partition-refine":
            sp.add_argument("--mode", choices=["reduce", "two-pi", "pi-below"], default="reduce")
        sp.add_argument("--xi", type=int, default=1)
        sp.add_argument("--pieces-out", help="write the resulting codes to this file")

    sp = common(sub.add_parser("approx-run", help="full approximants of a Baire class 1 function"))
    sp.add_argument("--spec", required=True, help="@name of a shipped spec or a spec file")
    sp.add_argument("--k", default="1..6", help="range like 1..6 or list like 1,3,5")
    sp.add_argument("--samples")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--M", type=int, default=24)
    sp.add_argument("--full-out", help="write the full function for the largest k here")
    sp.add_argument("--step", action="store_true", help="also check the step approximation bound")

    sp = common(sub.add_parser("embed", help="Lusin scheme embedding of an ultrametric space"))
    sp.add_argument("--space", required=True)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--verify", action="store_true")
    return p


def _config(args) -> RunConfig:
    skip = {"command", "report"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    return RunConfig(args.command, params=params, seed=getattr(args, "seed", 0), output=args.report)


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    handler, columns = COMMANDS[args.command]
    out = Report(args.command, columns)
    try:
        _config(args).validate()
        ok = handler(args, out)
    except (InputError, ParseError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=stderr)
        return EXIT_INPUT
    text = out.text()
    if args.report:
        Path(args.report).write_text(text)
        for s in out.summary:
            print(s, file=stdout)
    else:
        stdout.write(text)
    print("PASS" if ok else "FAIL: verification failed", file=stderr)
    return EXIT_OK if ok else EXIT_VERIFY


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
