"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from . import bimodule as bm
from . import bordism as bd
from . import rfa
from . import state_sum as ss
from . import yang_mills as ym

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
DEFAULT_TRUNC = 3


class UsageError(Exception):
    pass


# argument helpers -------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise UsageError("empty list")
    return vals


def _ints(text: str) -> list[int]:
    try:
        vals = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not vals or min(vals) < 0:
        raise UsageError(f"expected non-negative integers, got {text!r}")
    return vals


def _group(spec):
    """Preset name, a JSON table file path, or an already parsed table document."""
    if isinstance(spec, dict):
        return ym.parse_group_table(spec)
    spec = str(spec)
    if spec.endswith(".json"):
        try:
            with open(spec) as fh:
                return ym.parse_group_table(json.load(fh))
        except OSError as exc:
            raise UsageError(f"cannot read group table {spec!r}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{spec}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return ym.builtin_group(spec)


def _trunc(G, value):
    if G.finite:
        return None
    return DEFAULT_TRUNC if value is None else int(value)


def _label(G, trunc, text):
    labs = G.labels(trunc) if not G.finite else G.labels(None)
    for U in labs:
        if str(U) == str(text).strip():
            return U
    raise UsageError(f"{G.name}: {text!r} is not an irrep label in the truncation {labs}")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


class _Out:
    """Rows for CSV, or aligned text for ``--format pretty``."""

    def __init__(self, fmt: str, header: list[str]):
        self.fmt, self.header, self.rows = fmt, header, []

    def add(self, *row):
        self.rows.append([_fmt(v) if isinstance(v, float) else str(v) for v in row])

    def emit(self, stream=None):
        stream = stream or sys.stdout
        if self.fmt == "csv":
            w = csv.writer(stream, lineterminator="\n")
            w.writerow(self.header)
            w.writerows(self.rows)
            return
        widths = [max(len(h), *(len(r[k]) for r in self.rows)) if self.rows else len(h)
                  for k, h in enumerate(self.header)]
        print("  ".join(h.ljust(w) for h, w in zip(self.header, widths)), file=stream)
        for r in self.rows:
            print("  ".join(c.ljust(w) for c, w in zip(r, widths)), file=stream)


# subcommands ---------------------------------------------------------------------------------

def cmd_partition(args) -> int:
    G = _group(args.group)
    trunc = _trunc(G, args.trunc)
    out = _Out(args.format, ["group", "genus", "b_in", "b_out", "area", "trunc", "re", "im", "tail"])
    for g in _ints(args.genus):
        for a in _floats(args.area):
            if args.method == "statesum":
                d = ss.RfaData(G.block_rfa(trunc))
                if a == 0:
                    val = ss.closed_form(d, g, 0, 0, 0.0, zero_policy=True).to_matrix()[0, 0]
                else:
                    val = ss.evaluate(bd.normal_form(g, 0, 0, Fraction(a)), d).to_matrix()[0, 0]
                tail = 0.0 if G.finite else G.tail(trunc, a, 2 - 2 * g)
            else:
                amp = ym.amplitude(G, trunc, g, 0, 0, a)
                val, tail = complex(np.asarray(amp.value).reshape(-1)[0]), amp.tail
            if args.format == "pretty":
                print(f"{G.name} genus {g} area {a:g} trunc {trunc}: {val.real:.7f} ± {tail:.1e}")
            else:
                out.add(G.name, g, 0, 0, float(a), trunc, float(val.real), float(val.imag), float(tail))
    if args.format == "csv":
        out.emit()
    return EXIT_OK


def cmd_zeta(args) -> int:
    G = _group(args.group)
    sched = _ints(args.schedule)
    res = ym.witten_zeta(G, args.exponent, sched)
    out = _Out(args.format, ["group", "exponent", "value", "error"])
    out.add(G.name, float(args.exponent), float(res.value), float(res.error))
    out.emit()
    return EXIT_OK


def _loop_torus_values(G, trunc, lines, areas):
    """State-sum and character-formula values of a torus with parallel loops."""
    dd = ss.gauge_defect_data(G, trunc, {f"x{k}": ln for k, ln in enumerate(lines)})
    c = bd.loop_torus([(f"x{k}", 0) for k in range(len(lines))], [Fraction(a) for a in areas], dd.conditions)
    v = complex(ss.evaluate_defect(c, dd).to_matrix()[0, 0])
    return v, c


def cmd_wilson(args) -> int:
    G = _group(args.group)
    trunc = _trunc(G, args.trunc)
    labels = [_label(G, trunc, x) for x in str(args.labels).split(",")]
    areas = _floats(args.area)
    if len(areas) == 1:
        areas = areas * len(labels)
    if len(areas) != len(labels):
        raise UsageError("give one region area per loop")
    v, c = _loop_torus_values(G, trunc, [("wilson", V) for V in labels], areas)
    ref = complex(ym.loop_amplitude(G, trunc, ym.torus_with_loops(labels, areas)))
    dev = abs(v - ref)
    out = _Out(args.format, ["group", "loops", "areas", "trunc", "re", "im", "reference", "deviation", "tail"])
    out.add(G.name, " ".join(map(str, labels)), " ".join(map(_fmt, areas)), trunc, v.real, v.imag, ref.real, dev,
            float(ss.leakage_bound(G, trunc, c)) if not G.finite else 0.0)
    out.emit()
    return EXIT_OK if dev <= args.tol else EXIT_CHECK


def cmd_twist(args) -> int:
    G = _group(args.group)
    trunc = _trunc(G, args.trunc)
    names = G.automorphism_names()
    alpha = args.alpha or next((n for n in names if n != "id"), "id")
    if alpha not in names:
        raise UsageError(f"{G.name}: unknown automorphism {alpha!r}; choose from {names}")
    out = _Out(args.format, ["group", "alpha", "area", "trunc", "re", "im", "reference", "deviation"])
    worst = 0.0
    for a in _floats(args.area):
        v, _ = _loop_torus_values(G, trunc, [("twist", alpha)], [a])
        ref = complex(ym.twist_amplitude(G, trunc, alpha, ym.torus_with_loops([None], [a])))
        worst = max(worst, abs(v - ref))
        out.add(G.name, alpha, float(a), trunc, v.real, v.imag, ref.real, abs(v - ref))
    out.emit()
    return EXIT_OK if worst <= args.tol else EXIT_CHECK


def cmd_fuse(args) -> int:
    G = _group(args.group)
    trunc = _trunc(G, args.trunc)
    labels = [_label(G, trunc, x) for x in str(args.labels).split(",")]
    if len(labels) != 2:
        raise UsageError("fuse takes exactly two labels")
    outer = float(args.outer)
    dd = ss.gauge_defect_data(G, trunc, {"V": ("wilson", labels[0]), "W": ("wilson", labels[1]),
                                         "VW": ("fused", labels)})
    single = ss.evaluate_defect(bd.loop_torus([("VW", 0)], [Fraction(outer)], dd.conditions), dd).to_matrix()[0, 0]
    out = _Out(args.format, ["group", "labels", "middle_area", "outer_area", "trunc", "two_loops", "fused", "deviation"])
    devs = []
    for a in _floats(args.area):
        c = bd.loop_torus([("V", 0), ("W", 0)], [Fraction(a), Fraction(outer)], dd.conditions)
        two = ss.evaluate_defect(c, dd).to_matrix()[0, 0]
        devs.append(abs(two - single))
        out.add(G.name, " ".join(map(str, labels)), float(a), outer, trunc, float(two.real), float(single.real),
                float(devs[-1]))
    out.emit()
    ok = all(devs[k + 1] <= devs[k] for k in range(len(devs) - 1))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_check(args) -> int:
    G = _group(args.group)
    trunc = _trunc(G, args.trunc)
    A = G.block_rfa(trunc)
    kind = args.kind
    if kind == "rfa":
        rep = rfa.check_axioms(A, ((0.3, 0.2), (0.05, 0.7)), tol=args.tol)
    elif kind == "data":
        rep = ss.check_conditions(ss.RfaData(A), tol=args.tol)
    elif kind in ("bimodule", "dualpair"):
        if args.alpha:
            pr = bm.twisted_pair(A, bm.group_automorphism_matrix(G, A, args.alpha), name=args.alpha)
        else:
            labs = A.labels
            V = _label(G, trunc, args.label) if args.label else (labs[1] if len(labs) > 1 else labs[0])
            pr = bm.wilson_pair(G, V, A, trunc)
        rep = bm.check_bimodule(pr.U, tol=args.tol) if kind == "bimodule" else bm.check_dual_pair(pr, tol=args.tol)
    else:
        raise UsageError(f"unknown check {kind!r}")
    print(rep)
    print(f"{'PASS' if rep.ok else 'FAIL'} check {kind} ({G.name}, tol {args.tol:g})")
    return EXIT_OK if rep.ok else EXIT_CHECK


def _move_seeds(G, trunc, defects: bool):
    d = ss.RfaData(G.block_rfa(trunc))
    plain = ss.DefectStateSumData.plain(d)
    seeds = []
    for g, bi, bo in ((0, 1, 1), (1, 0, 0), (0, 0, 2), (1, 1, 0), (0, 1, 2)):
        seeds.append((bd.spread_area(bd.normal_form(g, bi, bo, 1), 1), plain))
    if defects:
        labs = G.labels(trunc) if not G.finite else G.labels(None)
        V = labs[1] if len(labs) > 1 else labs[0]
        dd = ss.gauge_defect_data(G, trunc, {"V": ("wilson", V)})
        seeds.append((bd.loop_cylinder([("V", Fraction(1, 5))], [Fraction(2, 5), Fraction(9, 10)], dd.conditions), dd))
        seeds.append((bd.loop_torus([("V", Fraction(1, 10))], [Fraction(3, 5)], dd.conditions), dd))
        seeds.append((bd.defect_cylinder([("V", True), ("V", False)], dd.conditions,
                                         face_area=(Fraction(3, 10), Fraction(1, 10), Fraction(1, 5))), dd))
    return seeds


def move_fuzz(G, trunc, n: int, seed: int, *, defects: bool = True, max_steps: int = 4):
    """``n`` comparisons of an amplitude before and after a random move; returns the deviations."""
    rng = np.random.default_rng(seed)
    seeds = _move_seeds(G, trunc, defects)
    refs = [ss.evaluate_defect(c, dd).to_matrix() for c, dd in seeds]
    state = [c for c, _ in seeds]
    devs = []
    while len(devs) < n:
        k = int(rng.integers(len(seeds)))
        steps = int(rng.integers(1, max_steps + 1))
        c = state[k]
        for _ in range(steps):
            r = bd.random_move(c, rng, max_faces=6)
            if r is None:
                c = seeds[k][0]
                break
            c = r[1]
            if len(devs) >= n:
                break
            devs.append(float(np.abs(ss.evaluate_defect(c, seeds[k][1]).to_matrix() - refs[k]).max()))
        state[k] = c
    return devs


def cmd_moves(args) -> int:
    G = _group(args.group)
    trunc = _trunc(G, args.trunc)
    devs = move_fuzz(G, trunc, args.fuzz, args.seed, defects=not args.no_defects)
    worst = max(devs) if devs else 0.0
    out = _Out(args.format, ["group", "trunc", "seed", "comparisons", "max_deviation"])
    out.add(G.name, trunc, args.seed, len(devs), worst)
    out.emit()
    return EXIT_OK if worst <= args.tol else EXIT_CHECK


def _doc_defect_lines(doc: dict, G, trunc) -> dict:
    lines = {}
    for x, spec in (doc.get("defects", {}).get("lines", {}) or {}).items():
        if "wilson" in spec:
            lines[x] = ("wilson", _label(G, trunc, spec["wilson"]))
        elif "twist" in spec:
            lines[x] = ("twist", str(spec["twist"]))
        elif "fused" in spec:
            lines[x] = ("fused", [_label(G, trunc, v) for v in spec["fused"]])
        else:
            raise UsageError(f"defects.lines.{x}: give one of 'wilson', 'twist' or 'fused'")
    return lines


def cmd_eval(args) -> int:
    try:
        text = sys.stdin.read() if args.doc == "-" else open(args.doc).read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.doc!r}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.doc}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise UsageError("document must be an object")
    G = _group(doc.get("group", args.group))
    job = doc.get("job", {}) or {}
    trunc = _trunc(G, args.trunc if args.trunc is not None else job.get("trunc"))
    c = bd.parse_bordism(doc)
    lines = _doc_defect_lines(doc, G, trunc)
    if c.has_defects:
        dd = ss.gauge_defect_data(G, trunc, lines, phase=_single_phase(c))
        M = ss.evaluate_defect(c, dd)
    else:
        M = ss.evaluate(c, ss.RfaData(G.block_rfa(trunc)))
    tail = 0.0 if G.finite else float(ss.leakage_bound(G, trunc, c))
    m = M.to_matrix()
    out = _Out(args.format, ["group", "trunc", "out", "in", "re", "im", "tail"])
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            if abs(m[i, j]) > 1e-15 or m.size == 1:
                out.add(G.name, trunc, i, j, float(m[i, j].real), float(m[i, j].imag), tail)
    out.emit()
    return EXIT_OK


def _single_phase(c) -> str:
    phases = set(c.conditions.phases) if c.conditions is not None else {"A"}
    if len(phases) != 1:
        raise UsageError("gauge-theory documents use a single phase")
    return next(iter(phases))


# parser ---------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", default="su2", help="su2, u1, s3, su3, cyclic:N or a JSON table file")
    common.add_argument("--trunc", type=int, default=None, help="largest label kept (infinite groups)")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "pretty"), default="csv")

    p = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval", parents=[common], help="amplitude of a bordism document")
    s.add_argument("doc", help="JSON document path, or - for stdin")
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("partition", parents=[common], help="closed-surface amplitudes")
    s.add_argument("--genus", default="2")
    s.add_argument("--area", default="1")
    s.add_argument("--method", choices=("characters", "statesum"), default="characters")
    s.set_defaults(fn=cmd_partition)

    s = sub.add_parser("wilson", parents=[common], help="torus with parallel Wilson loops")
    s.add_argument("--labels", default="2")
    s.add_argument("--area", default="1")
    s.set_defaults(fn=cmd_wilson)

    s = sub.add_parser("twist", parents=[common], help="torus with an automorphism twist line")
    s.add_argument("--alpha", default=None)
    s.add_argument("--area", default="1")
    s.set_defaults(fn=cmd_twist)

    s = sub.add_parser("zeta", parents=[common], help="Witten zeta function of the group")
    s.add_argument("--exponent", type=float, default=2.0)
    s.add_argument("--schedule", default="2500,5000,10000")
    s.set_defaults(fn=cmd_zeta)

    s = sub.add_parser("check", parents=[common], help="property suites")
    s.add_argument("kind", choices=("rfa", "data", "bimodule", "dualpair"))
    s.add_argument("--label", default=None, help="Wilson label for bimodule checks")
    s.add_argument("--alpha", default=None, help="use the twist bimodule of this automorphism")
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("moves", parents=[common], help="move-invariance fuzzing")
    s.add_argument("--fuzz", type=int, default=200)
    s.add_argument("--no-defects", action="store_true")
    s.set_defaults(fn=cmd_moves)

    s = sub.add_parser("fuse", parents=[common], help="collapse two parallel Wilson loops")
    s.add_argument("--labels", default="2,2")
    s.add_argument("--area", default="1e-1,1e-2,1e-3,1e-4")
    s.add_argument("--outer", default="1")
    s.set_defaults(fn=cmd_fuse)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if getattr(args, "tol", 1.0) <= 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except ss.ConditionFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (UsageError, bd.BordismError, ym.GroupError, ss.StateSumError, bm.BimoduleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except rfa.RFAError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
