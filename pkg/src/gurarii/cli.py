"""Command-line front end.

Exit codes: 0 when every certificate passes, 1 when a certificate or
invariant fails, 2 for unreadable or malformed input.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from fractions import Fraction

from . import io
from . import linalg as la
from .amalgam import amalgamate
from .certify import trace_to_json, universal_trace_to_json, verify_trace
from .engine import ChainSubspace, back_and_forth, embed_universal, schedule_make
from .errors import (CertificateError, DefectTooLarge, GurariiError, InputError, ScheduleError)
from .instances import random_h_space, random_space
from .kernel import describe_v, is_symmetric
from .linalg import qstr
from .operators import defect
from .spaces import norm

log = logging.getLogger("gurarii")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class Report:
    """Collects certificate values and named checks; printed as text or JSON."""

    def __init__(self, command: str, inputs: list[str]):
        self.command = command
        self.inputs = {os.path.basename(p): io.file_sha256(p) for p in inputs}
        self.values: dict = {}
        self.checks: list[tuple[str, bool]] = []
        self.rows: list[dict] = []
        self.messages: list[str] = []
        self.started = time.perf_counter()

    def value(self, key: str, v):
        self.values[key] = qstr(v) if isinstance(v, Fraction) else v

    def check(self, name: str, ok: bool):
        self.checks.append((name, bool(ok)))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "values": self.values,
            "rows": self.rows,
            "checks": {name: ("pass" if ok else "fail") for name, ok in self.checks},
            "messages": self.messages,
            "passed": self.passed,
            # excluded when comparing reruns
            "duration_seconds": f"{time.perf_counter() - self.started:.3f}",
        }

    def text(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'}"]
        for k in sorted(self.values):
            lines.append(f"  {k} = {self.values[k]}")
        for row in self.rows:
            lines.append("  " + "  ".join(f"{k}={row[k]}" for k in sorted(row)))
        for name, ok in self.checks:
            lines.append(f"  [{'pass' if ok else 'FAIL'}] {name}")
        lines.extend(f"  {m}" for m in self.messages)
        return "\n".join(lines)


def _emit(report: Report, args) -> int:
    if getattr(args, "out", None):
        os.makedirs(args.out, exist_ok=True)
        io.write_text(os.path.join(args.out, "report.json"), io.dumps(report.to_json()))
    if args.json:
        sys.stdout.write(io.dumps(report.to_json()))
    else:
        print(report.text())
    return EXIT_OK if report.passed else EXIT_FAIL


def _fraction(text: str) -> Fraction:
    try:
        return la.q(text)
    except (ValueError, TypeError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational p/q") from None


# ---------------------------------------------------------------------------
# commands

def cmd_space_validate(args) -> int:
    rep = Report("space-validate", [args.space])
    obj = io.load_json(args.space)
    try:
        space = io.space_from_json(obj, os.path.basename(args.space))
    except InputError:
        raise
    except GurariiError as exc:  # a geometric invariant, reported by name
        rep.check(str(exc), False)
        return _emit(rep, args)
    rep.value("dimension", space.dimension)
    rep.value("facets", len(space.ball_facets))
    rep.value("vertices", len(space.ball_vertices))
    rep.value("dual_vertices", len(space.dual_vertices))
    rep.check("symmetric", is_symmetric(space.ball_facets) and is_symmetric(space.ball_vertices))
    rep.check("bounded", space.dimension == 0 or len(space.ball_vertices) > 0)
    if space.dimension:
        extreme, facets = describe_v(space.ball_vertices)
        rep.check("vertex_facet_round_trip", extreme == space.ball_vertices and facets == space.ball_facets)
        rep.check("dual_vertices_are_facet_normals",
                  sorted(space.dual_vertices.points) == sorted(space.ball_facets.normals))
        rep.check("vertices_on_sphere", all(norm(space, v) == 1 for v in space.ball_vertices))
    return _emit(rep, args)


def cmd_amalgamate(args) -> int:
    rep = Report("amalgamate", [args.X, args.Y, args.map])
    X, Y = io.read_space(args.X), io.read_space(args.Y)
    f = io.read_map(args.map, X, Y)
    star = defect(f).epsilon_star
    rep.value("epsilon_star", star)
    rep.value("eps", args.eps)
    try:
        cert = amalgamate(X, Y, f, args.eps, shortcut=not args.no_shortcut)
    except DefectTooLarge as exc:
        rep.messages.append(f"eps must exceed the defect threshold {qstr(exc.threshold)}")
        rep.check("eps_above_defect", False)
        return _emit(rep, args)
    rep.check("eps_above_defect", True)
    rep.value("kind", cert.kind)
    rep.value("eps1", cert.eps1 if cert.eps1 is not None else "none")
    rep.value("bound_achieved", cert.bound_achieved)
    rep.value("bound_witness", [qstr(x) for x in cert.bound_witness])
    rep.value("Z_dimension", cert.Z.dimension)
    for name, ok in cert.checks().items():
        rep.check(name, ok)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        io.write_space(os.path.join(args.out, "Z.json"), cert.Z, name="Z")
        for label, m, dom in (("i", cert.i, X.name or "X"), ("j", cert.j, Y.name or "Y")):
            io.write_text(os.path.join(args.out, f"{label}.json"), io.dumps(io.map_to_json(m, dom, "Z")))
    return _emit(rep, args)


def _seed_subspace(E, f_obj, where):
    basis = f_obj.get("basis") if isinstance(f_obj, dict) else None
    stage0 = E.stages[0]
    if basis is None:
        cols = la.columns(la.identity(stage0.dimension), stage0.dimension)
    else:
        cols = [io.rational_list(c, f"{where}.basis[{k}]") for k, c in enumerate(basis)]
    return ChainSubspace.build(E, 0, cols, "X")


def cmd_back_and_forth(args) -> int:
    rep = Report("back-and-forth", [os.path.join(args.E, "index.json"),
                                    os.path.join(args.F, "index.json"), args.map])
    E, F = io.read_chain(args.E), io.read_chain(args.F)
    obj = io.load_json(args.map)
    X = _seed_subspace(E, obj, os.path.basename(args.map))
    f = io.map_from_json(obj, X.space, F.stages[0], os.path.basename(args.map), check_names=False)
    try:
        sched = schedule_make(args.target_eps, args.eps0, args.ratio, args.depth)
    except ScheduleError as exc:
        rep.value("deficit", exc.deficit)
        rep.messages.append(str(exc))
        rep.check("schedule_budget", False)
        return _emit(rep, args)
    rep.check("schedule_budget", True)
    rep.value("target_eps", sched.target_eps)
    rep.value("eps0", sched.eps0)
    rep.value("ratio", sched.ratio)
    rep.value("depth", sched.depth)
    rep.value("tail_bound", sched.tail_bound)
    rep.value("budget_total", sched.total)
    rep.value("seed_defect", defect(f).epsilon_star)
    try:
        trace = back_and_forth(E, F, X, f, sched, shortcut=not args.no_shortcut)
    except (DefectTooLarge, CertificateError) as exc:
        rep.messages.append(str(exc))
        rep.check("construction", False)
        return _emit(rep, args)
    for s in trace.steps:
        rep.rows.append({"n": s.n, "d_n": qstr(s.drift[0]), "dagger_bound": qstr(s.drift_bound),
                         "dim_X": s.incl_X.codomain.dimension, "dim_Y": s.incl_Y.codomain.dimension})
    rep.value("final_distance", trace.final_distance[0])
    rep.value("drift_sum", sum(trace.drifts, Fraction(0)))
    for name, ok in trace.checks().items():
        rep.check(name, ok)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        io.write_text(os.path.join(args.out, "trace.json"), io.dumps(trace_to_json(trace, f)))
    return _emit(rep, args)


def cmd_embed(args) -> int:
    rep = Report("embed", [os.path.join(args.X, "index.json"), os.path.join(args.G, "index.json")])
    Xc, G = io.read_chain(args.X), io.read_chain(args.G)
    try:
        trace = embed_universal(Xc, G, args.depth, shortcut=not args.no_shortcut)
    except (CertificateError, DefectTooLarge) as exc:
        rep.messages.append(str(exc))
        rep.check("construction", False)
        return _emit(rep, args)
    for s in trace.steps:
        rep.rows.append({"n": s.n, "defect": qstr(s.defect_next.epsilon_star), "threshold": qstr(s.threshold),
                         "drift": qstr(s.drift[0]), "drift_bound": qstr(s.drift_bound)})
    rep.value("depth", args.depth)
    rep.value("G_top_dimension", G.top.dimension)
    for name, ok in trace.checks().items():
        rep.check(name, ok)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        io.write_text(os.path.join(args.out, "trace.json"), io.dumps(universal_trace_to_json(trace)))
    return _emit(rep, args)


def cmd_verify(args) -> int:
    rep = Report("verify", [args.trace])
    data = io.load_json(args.trace)
    results = verify_trace(data)
    for name, ok, detail in results:
        rep.check(name, ok)
        if not ok and detail:
            rep.messages.append(f"{name}: {detail}")
    rep.value("checks", len(results))
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        rep.value("violated", failed)
        if not args.json:
            # keep the text output focused on what broke
            rep.checks = [(n, ok) for n, ok in rep.checks if not ok]
    elif not args.json:
        rep.checks = []
    return _emit(rep, args)


def _svg(space, scale: int) -> str:
    from math import atan2

    pts = sorted(space.ball_vertices.points, key=lambda v: atan2(float(v[1]), float(v[0])))
    reach = max(max(abs(x) for x in v) for v in pts)
    half = int(scale * reach) + 40
    size = 2 * half

    def px(v):
        return (half + v[0] * scale, half - v[1] * scale)

    def num(x: Fraction) -> str:
        return str(x.numerator) if x.denominator == 1 else f"{float(x):.6f}"

    poly = " ".join(f"{num(a)},{num(b)}" for a, b in map(px, pts))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<line x1="0" y1="{half}" x2="{size}" y2="{half}" stroke="#bbb"/>',
        f'<line x1="{half}" y1="0" x2="{half}" y2="{size}" stroke="#bbb"/>',
        f'<polygon points="{poly}" fill="#dde8f5" stroke="#1f4e79" stroke-width="1.5"/>',
    ]
    for k, v in enumerate(pts):
        x, y = px(v)
        out.append(f'<circle cx="{num(x)}" cy="{num(y)}" r="2.5" fill="#1f4e79">'
                   f'<title>({qstr(v[0])}, {qstr(v[1])})</title></circle>')
    for a in space.ball_facets.normals:
        on = [v for v in pts if a[0] * v[0] + a[1] * v[1] == 1]
        mx = sum((v[0] for v in on), Fraction(0)) / len(on)
        my = sum((v[1] for v in on), Fraction(0)) / len(on)
        x, y = px((mx * Fraction(11, 10), my * Fraction(11, 10)))
        out.append(f'<text x="{num(x)}" y="{num(y)}" font-size="10" text-anchor="middle">'
                   f'[{qstr(a[0])}, {qstr(a[1])}]</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_render(args) -> int:
    space = io.read_space(args.space)
    if space.dimension != 2:
        print(f"error: render needs a 2-dimensional space, got dimension {space.dimension}; "
              "projections are out of scope", file=sys.stderr)
        return EXIT_INPUT
    io.write_text(args.output, _svg(space, args.scale))
    print(f"wrote {args.output}: {len(space.ball_vertices)} vertices, {len(space.ball_facets)} facets")
    return EXIT_OK


def cmd_random_space(args) -> int:
    make = random_h_space if args.representation == "facets" else random_space
    space = make(args.seed, args.dimension, extra=args.extra, name=f"random{args.seed}")
    text = io.dumps(io.space_to_json(space, args.representation))
    if args.output:
        io.write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gurarii", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log construction progress")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--json", action="store_true", help="print the JSON report instead of text")
        if out:
            sp.add_argument("--out", help="directory for output files and report.json")

    sp = sub.add_parser("space-validate", help="check a space file")
    sp.add_argument("space")
    common(sp, out=False)
    sp.set_defaults(func=cmd_space_validate)

    sp = sub.add_parser("amalgamate", help="amalgamate an eps-isometry f: X -> Y")
    sp.add_argument("X")
    sp.add_argument("Y")
    sp.add_argument("map")
    sp.add_argument("--eps", type=_fraction, required=True)
    sp.add_argument("--no-shortcut", action="store_true",
                    help="use the cut-off norm even when f is an exact isometry")
    common(sp)
    sp.set_defaults(func=cmd_amalgamate)

    sp = sub.add_parser("back-and-forth", help="run the back-and-forth between two chains")
    sp.add_argument("E", help="chain directory of the domain side")
    sp.add_argument("F", help="chain directory of the target side")
    sp.add_argument("map", help="seed map from E's first stage (or its 'basis') into F's first stage")
    sp.add_argument("--target-eps", type=_fraction, required=True)
    sp.add_argument("--eps0", type=_fraction, default=None, help="first schedule term (default target/10)")
    sp.add_argument("--ratio", type=_fraction, default=Fraction(1, 4))
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--no-shortcut", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_back_and_forth)

    sp = sub.add_parser("embed", help="embed a chain starting at {0} into a chain G")
    sp.add_argument("X")
    sp.add_argument("G")
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--no-shortcut", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("verify", help="re-check a trace from its witnesses")
    sp.add_argument("trace")
    common(sp, out=False)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("render", help="draw a 2-dimensional unit ball as SVG")
    sp.add_argument("space")
    sp.add_argument("output")
    sp.add_argument("--scale", type=int, default=100, help="pixels per unit")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("random-space", help="write a random symmetric space file")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--dimension", type=int, default=2)
    sp.add_argument("--extra", type=int, default=2, help="random point (or slab) pairs")
    sp.add_argument("--representation", choices=("vertices", "facets"), default="vertices")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_random_space)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        where = f" (line {exc.line}, column {exc.column})" if exc.line is not None else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return EXIT_INPUT
    except GurariiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
