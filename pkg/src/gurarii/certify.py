"""Serialising construction traces and re-checking them from the file alone.

A trace stores every space (with both of its descriptions), every map, and
for each claimed quantity the value together with the witness vector that
attains it.  :func:`verify_trace` never re-runs a construction.  It:

* re-derives each space's facets from its vertices with the convex kernel,
* recomputes each operator norm and minimal gain from the serialized
  matrices and checks that the stored value and witness are the canonical
  maximiser (so altering a witness is always detected),
* re-evaluates every inequality of the theorem the trace certifies,
* checks a SHA-256 digest of the canonical payload.
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any

from . import linalg as la
from .engine import BackAndForthTrace, UniversalTrace, step_bound
from .errors import GurariiError, InputError
from .io import mat_json, parse_rational, rational_list, rational_matrix, vec_json
from .kernel import HalfspaceSystem, VertexSystem, describe_v, is_symmetric
from .linalg import ONE, ZERO, qstr
from .operators import DefectCertificate, LinearMap, defect, op_norm
from .spaces import PolyhedralSpace, norm

__all__ = ["trace_to_json", "universal_trace_to_json", "verify_trace", "payload_digest", "FORMAT"]

FORMAT = "gurarii-trace"
VERSION = 1


def payload_digest(payload: dict) -> str:
    body = {k: v for k, v in payload.items() if k != "digest"}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode("ascii")).hexdigest()


# ---------------------------------------------------------------------------
# writing

class _Registry:
    def __init__(self):
        self.spaces: dict[str, dict] = {}
        self.maps: dict[str, dict] = {}
        self._space_keys: dict = {}

    def space(self, s: PolyhedralSpace) -> str:
        key = (s.dimension, s.ball_facets)
        if key not in self._space_keys:
            name = f"S{len(self._space_keys)}"
            self._space_keys[key] = name
            self.spaces[name] = {
                "dimension": s.dimension,
                "facets": mat_json(s.ball_facets.normals),
                "vertices": mat_json(s.ball_vertices.points),
            }
        return self._space_keys[key]

    def map(self, f: LinearMap, label: str) -> str:
        if label in self.maps:
            raise ValueError(f"duplicate map label {label}")
        self.maps[label] = {"domain": self.space(f.domain), "codomain": self.space(f.codomain),
                            "matrix": mat_json(f.matrix)}
        return label


def _defect_json(c: DefectCertificate) -> dict:
    return {
        "sup": qstr(c.sup_value), "sup_witness": vec_json(c.sup_witness),
        "inf": qstr(c.inf_value), "inf_witness": vec_json(c.inf_witness),
        "epsilon_star": qstr(c.epsilon_star),
    }


def _norm_json(pair) -> dict:
    value, witness = pair
    return {"value": qstr(value), "witness": vec_json(witness)}


def _finish(payload: dict) -> dict:
    payload["digest"] = payload_digest(payload)
    return payload


def trace_to_json(trace: BackAndForthTrace, f_seed: LinearMap | None = None) -> dict:
    """Serialise a back-and-forth run.

    ``f_seed`` (the map given by the user, into the first stage of ``F``)
    is recorded with the inclusion of ``Y_0`` so that the verifier can tie
    ``f_0`` back to it.
    """
    reg = _Registry()
    s = trace.schedule
    steps = []
    reg.map(trace.f0, "f0")
    for st in trace.steps:
        n = st.n
        reg.map(st.g_n, f"g{n}")
        reg.map(st.f_next, f"f{n + 1}")
        reg.map(st.incl_X, f"iX{n}")
        reg.map(st.incl_Y, f"iY{n}")
        steps.append({
            "n": n,
            "eps_n": qstr(st.eps_n),
            "eps_next": qstr(st.eps_next),
            "f_n": f"f{n}", "g_n": f"g{n}", "f_next": f"f{n + 1}",
            "incl_X": f"iX{n}", "incl_Y": f"iY{n}",
            "defect_f": _defect_json(st.defect_f),
            "defect_g": _defect_json(st.defect_g),
            "defect_incl_X": _defect_json(defect(st.incl_X)),
            "defect_incl_Y": _defect_json(defect(st.incl_Y)),
            "cond3": _norm_json(st.cond3),
            "cond4": _norm_json(st.cond4),
            "drift": _norm_json(st.drift),
            "drift_bound": qstr(st.drift_bound),
        })
    N = len(trace.steps)
    reg.map(trace.X_to_top, "X_to_top")
    reg.map(trace.Y_to_top, "Y_to_top")
    seed = None
    if f_seed is not None:
        # Y_0 sits in F's first stage along the columns of the seed
        incl = LinearMap(trace.f0.codomain, f_seed.codomain, f_seed.matrix)
        reg.map(f_seed, "seed")
        reg.map(incl, "Y0_incl")
        seed = {"map": "seed", "incl": "Y0_incl", "defect_incl": _defect_json(defect(incl))}
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "kind": "back_and_forth",
        "schedule": {
            "target_eps": qstr(s.target_eps), "eps0": qstr(s.eps0), "ratio": qstr(s.ratio),
            "depth": s.depth, "terms": vec_json(s.terms), "step_bounds": vec_json(s.step_bounds),
            "tail_bound": qstr(s.tail_bound), "total": qstr(s.total),
        },
        "steps": steps,
        "final": {
            "h": f"f{N}",
            "defect_h": _defect_json(trace.defect_h),
            "X_to_top": "X_to_top",
            "Y_to_top": "Y_to_top",
            "distance": _norm_json(trace.final_distance),
            "drift_sum": qstr(sum(trace.drifts, ZERO)),
        },
        "seed": seed,
        "spaces": reg.spaces,
        "maps": reg.maps,
    }
    return _finish(payload)


def universal_trace_to_json(trace: UniversalTrace) -> dict:
    reg = _Registry()
    steps = []
    for st in trace.steps:
        n = st.n
        reg.map(st.incl, f"incl{n}")
        reg.map(st.f_n_local, f"f{n}_local{n}")
        reg.map(st.f_next_local, f"f{n + 1}_local{n}")
        steps.append({
            "n": n,
            "incl": f"incl{n}",
            "f_n": f"f{n}_local{n}",
            "f_next": f"f{n + 1}_local{n}",
            "defect_incl": _defect_json(defect(st.incl)),
            "defect_f_n": _defect_json(defect(st.f_n_local)),
            "defect_next": _defect_json(st.defect_next),
            "drift": _norm_json(st.drift),
            "threshold": qstr(st.threshold),
            "drift_bound": qstr(st.drift_bound),
        })
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "kind": "embed_universal",
        "depth": len(trace.steps),
        "steps": steps,
        "spaces": reg.spaces,
        "maps": reg.maps,
    }
    return _finish(payload)


# ---------------------------------------------------------------------------
# reading and checking

class _Checker:
    def __init__(self):
        self.results: list[tuple[str, bool, str]] = []

    def check(self, name: str, ok: bool, detail: str = ""):
        self.results.append((name, bool(ok), detail))
        return ok

    def guard(self, name: str, fn):
        """Run ``fn``; any exception is recorded as a failure of ``name``."""
        try:
            return fn()
        except (GurariiError, ValueError, KeyError, TypeError, IndexError, ZeroDivisionError) as exc:
            self.check(name, False, f"{type(exc).__name__}: {exc}")
            return None


def _load_space(obj: Any, where: str) -> PolyhedralSpace:
    dim = obj["dimension"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 0:
        raise InputError(f"{where}.dimension: expected a non-negative integer")
    facets = rational_matrix(obj["facets"], f"{where}.facets", dim)
    vertices = rational_matrix(obj["vertices"], f"{where}.vertices", dim)
    H = HalfspaceSystem.from_normals(dim, facets)
    V = VertexSystem(dim, vertices)
    if len(H) != len(facets) or len(V) != len(vertices):
        raise InputError(f"{where}: repeated facets or vertices")
    return PolyhedralSpace(dim, H, V, VertexSystem(dim, tuple(H.normals)), where)


def _space_consistent(space: PolyhedralSpace) -> bool:
    if space.dimension == 0:
        return not space.ball_facets.rows and not space.ball_vertices.points
    if not (is_symmetric(space.ball_facets) and is_symmetric(space.ball_vertices)):
        return False
    extreme, facets = describe_v(space.ball_vertices)
    return extreme == space.ball_vertices and facets == space.ball_facets


def _check_defect(ck: _Checker, name: str, f: LinearMap, obj: dict):
    sup = parse_rational(obj["sup"], f"{name}.sup")
    inf = parse_rational(obj["inf"], f"{name}.inf")
    star = parse_rational(obj["epsilon_star"], f"{name}.epsilon_star")
    sw = rational_list(obj["sup_witness"], f"{name}.sup_witness")
    iw = rational_list(obj["inf_witness"], f"{name}.inf_witness")
    d = f.domain.dimension
    if d == 0:
        ck.check(name, (sup, inf, star, sw, iw) == (ZERO, ONE, ZERO, (), ()), "zero-dimensional domain")
        return star
    # the witnesses alone: unit vectors whose images have the claimed norms
    ck.check(f"{name}.sup_witness", len(sw) == d and norm(f.domain, sw) == 1
             and norm(f.codomain, f(sw)) == sup)
    ck.check(f"{name}.inf_witness", len(iw) == d and norm(f.domain, iw) == 1
             and norm(f.codomain, f(iw)) == inf)
    # extremality, recomputed by the kernel on the serialized data
    fresh = defect(LinearMap(f.domain, f.codomain, f.matrix))
    ck.check(f"{name}.sup", fresh.sup_value == sup and fresh.sup_witness == sw,
             f"recomputed {qstr(fresh.sup_value)}")
    ck.check(f"{name}.inf", fresh.inf_value == inf and fresh.inf_witness == iw,
             f"recomputed {qstr(fresh.inf_value)}")
    ck.check(f"{name}.epsilon_star", inf > 0 and star == max(sup, 1 / inf) - 1)
    return star


def _check_norm(ck: _Checker, name: str, m: LinearMap, obj: dict):
    value = parse_rational(obj["value"], f"{name}.value")
    w = rational_list(obj["witness"], f"{name}.witness")
    if m.domain.dimension == 0:
        ck.check(name, value == 0 and w == ())
        return value
    ck.check(f"{name}.witness", len(w) == m.domain.dimension and w in set(m.domain.ball_vertices.points)
             and norm(m.codomain, m(w)) == value)
    fresh = op_norm(LinearMap(m.domain, m.codomain, m.matrix))
    ck.check(f"{name}.value", fresh == (value, w), f"recomputed {qstr(fresh[0])}")
    return value


class _Maps:
    """Spaces and maps of a trace, with each map's (domain, codomain) keys."""

    def __init__(self, data: dict, ck: _Checker):
        self.spaces: dict[str, PolyhedralSpace] = {}
        for key, obj in sorted(data["spaces"].items()):
            space = _load_space(obj, f"spaces.{key}")
            ok = ck.guard(f"spaces.{key}.consistent", lambda s=space: _space_consistent(s))
            if ok is not None:
                ck.check(f"spaces.{key}.consistent", ok)
            self.spaces[key] = space
        self.maps: dict[str, LinearMap] = {}
        self._ends: dict[str, tuple] = {}
        for key, obj in sorted(data["maps"].items()):
            dom, cod = self.spaces[obj["domain"]], self.spaces[obj["codomain"]]
            m = rational_matrix(obj["matrix"], f"maps.{key}.matrix", dom.dimension)
            if len(m) != cod.dimension:
                raise InputError(f"maps.{key}.matrix: wrong number of rows")
            self.maps[key] = LinearMap(dom, cod, m)
            self._ends[key] = (obj["domain"], obj["codomain"])

    def __getitem__(self, key) -> LinearMap:
        return self.maps[key]

    def ends(self, key: str) -> tuple:
        return self._ends[key]


def _combo(terms: list, maps: _Maps) -> LinearMap:
    """``sum coef * (M_1 M_2 ...)`` with domain and codomain checked."""
    dom = cod = None
    total = None
    for coef, names in terms:
        for a, b in zip(names, names[1:]):
            if maps.ends(a)[0] != maps.ends(b)[1]:
                raise InputError(f"maps {names} do not compose")
        d, c = maps.ends(names[-1])[0], maps.ends(names[0])[1]
        if dom is None:
            dom, cod = d, c
        elif (dom, cod) != (d, c):
            raise InputError("terms of a difference live in different spaces")
        ncols = maps.spaces[d].dimension
        m = maps[names[-1]].matrix
        for g in reversed(names[:-1]):
            m = la.matmul(maps[g].matrix, m, bcols=ncols) if maps[g].matrix else ()
        m = la.scale(coef, m)
        total = m if total is None else la.add(total, m)
    return LinearMap(maps.spaces[dom], maps.spaces[cod], total)


def _verify_back_and_forth(data: dict, ck: _Checker):
    maps = _Maps(data, ck)
    sch = data["schedule"]
    target = parse_rational(sch["target_eps"], "schedule.target_eps")
    eps0 = parse_rational(sch["eps0"], "schedule.eps0")
    r = parse_rational(sch["ratio"], "schedule.ratio")
    depth = sch["depth"]
    terms = rational_list(sch["terms"], "schedule.terms")
    bounds = rational_list(sch["step_bounds"], "schedule.step_bounds")
    tail = parse_rational(sch["tail_bound"], "schedule.tail_bound")
    total = parse_rational(sch["total"], "schedule.total")
    ck.check("schedule.ratio", 0 < r < 1)
    ck.check("schedule.terms", terms == tuple(eps0 * r ** n for n in range(depth + 1)))
    ck.check("schedule.step_bounds", bounds == tuple(step_bound(terms[n], terms[n + 1]) for n in range(depth)))
    closed = (eps0 * r ** depth / (1 - r) + eps0 * r ** (depth + 1) / (1 - r)
              + 2 * eps0 ** 2 * r ** (2 * depth + 1) / (1 - r ** 2))
    ck.check("schedule.tail_bound", tail == closed)
    ck.check("schedule.total", total == sum(bounds, ZERO) + tail)
    ck.check("schedule.budget", total - eps0 < target - eps0)
    steps = data["steps"]
    ck.check("steps.count", len(steps) == depth)
    partial = ZERO
    prev_f = "f0"
    for k, st in enumerate(steps):
        p = f"step[{k}]"
        ck.check(f"{p}.index", st["n"] == k)
        en = parse_rational(st["eps_n"], f"{p}.eps_n")
        en1 = parse_rational(st["eps_next"], f"{p}.eps_next")
        ck.check(f"{p}.eps", en == terms[k] and en1 == terms[k + 1])
        ck.check(f"{p}.chain", st["f_n"] == prev_f)
        f, g = maps[st["f_n"]], maps[st["g_n"]]
        iX, iY = maps[st["incl_X"]], maps[st["incl_Y"]]
        ef, eg, ef1 = maps.ends(st["f_n"]), maps.ends(st["g_n"]), maps.ends(st["f_next"])
        ex, ey = maps.ends(st["incl_X"]), maps.ends(st["incl_Y"])
        ck.check(f"{p}.shapes", ef[0] == ex[0] and ef[1] == ey[0]
                 and eg == (ey[0], ex[1]) and ef1 == (ex[1], ey[1]))
        s1 = _check_defect(ck, f"{p}.defect_f", f, st["defect_f"])
        s2 = _check_defect(ck, f"{p}.defect_g", g, st["defect_g"])
        sx = _check_defect(ck, f"{p}.defect_incl_X", iX, st["defect_incl_X"])
        sy = _check_defect(ck, f"{p}.defect_incl_Y", iY, st["defect_incl_Y"])
        ck.check(f"{p}.cond1", s1 < en)
        ck.check(f"{p}.cond2", s2 < en1)
        ck.check(f"{p}.incl_isometries", sx == 0 and sy == 0)
        c3 = _check_norm(ck, f"{p}.cond3", _combo([(ONE, [st["g_n"], st["f_n"]]), (-ONE, [st["incl_X"]])], maps),
                         st["cond3"])
        c4 = _check_norm(ck, f"{p}.cond4", _combo([(ONE, [st["f_next"], st["g_n"]]), (-ONE, [st["incl_Y"]])], maps),
                         st["cond4"])
        ck.check(f"{p}.cond3.bound", c3 <= en)
        ck.check(f"{p}.cond4.bound", c4 <= en1)
        dn = _check_norm(ck, f"{p}.drift",
                         _combo([(ONE, [st["f_next"], st["incl_X"]]), (-ONE, [st["incl_Y"], st["f_n"]])], maps),
                         st["drift"])
        db = parse_rational(st["drift_bound"], f"{p}.drift_bound")
        ck.check(f"{p}.drift_bound", db == bounds[k])
        ck.check(f"{p}.dagger", dn <= db)
        partial += dn
        ck.check(f"{p}.partial_sum", partial <= sum(bounds[: k + 1], ZERO))
        prev_f = st["f_next"]
    fin = data["final"]
    ck.check("final.h", fin["h"] == prev_f)
    h = maps[fin["h"]]
    sh = _check_defect(ck, "final.defect_h", h, fin["defect_h"])
    ck.check("final.cond1", sh < terms[-1])
    # the accumulated inclusions are the products of the step inclusions
    for side, key in (("X", "incl_X"), ("Y", "incl_Y")):
        top = maps[fin[f"{side}_to_top"]]
        start = maps.ends("f0")[0 if side == "X" else 1]
        expect = la.identity(maps.spaces[start].dimension)
        for st in steps:
            inc = maps[st[key]]
            expect = la.matmul(inc.matrix, expect, bcols=len(expect))
        ck.check(f"final.{side}_to_top", top.matrix == expect
                 and maps.ends(fin[f"{side}_to_top"])[0] == start)
    dist = _check_norm(ck, "final.distance",
                       _combo([(ONE, [fin["h"], fin["X_to_top"]]), (-ONE, [fin["Y_to_top"], "f0"])], maps),
                       fin["distance"])
    drift_sum = parse_rational(fin["drift_sum"], "final.drift_sum")
    ck.check("final.drift_sum", drift_sum == partial)
    ck.check("final.telescoped", dist <= partial)
    ck.check("final.budget", partial + tail < target)
    ck.check("final.distance.bound", dist < target)
    seed = data.get("seed")
    if seed is not None:
        incl = maps[seed["incl"]]
        ck.check("seed.factorisation", la.matmul(incl.matrix, maps["f0"].matrix,
                                                 bcols=maps["f0"].domain.dimension) == maps[seed["map"]].matrix)
        s0 = _check_defect(ck, "seed.defect_incl", incl, seed["defect_incl"])
        ck.check("seed.incl_isometry", s0 == 0)


def _verify_universal(data: dict, ck: _Checker):
    maps = _Maps(data, ck)
    steps = data["steps"]
    ck.check("steps.count", len(steps) == data["depth"])
    for k, st in enumerate(steps):
        p = f"step[{k}]"
        ck.check(f"{p}.index", st["n"] == k)
        inc, fn, fn1 = maps[st["incl"]], maps[st["f_n"]], maps[st["f_next"]]
        ei, en, en1 = maps.ends(st["incl"]), maps.ends(st["f_n"]), maps.ends(st["f_next"])
        ck.check(f"{p}.shapes", ei[0] == en[0] and ei[1] == en1[0] and en[1] == en1[1])
        th = parse_rational(st["threshold"], f"{p}.threshold")
        bound = parse_rational(st["drift_bound"], f"{p}.drift_bound")
        ck.check(f"{p}.threshold", th == Fraction(1, 2 ** (k + 1)))
        ck.check(f"{p}.drift_bound", bound == (1 + th) * Fraction(1, 2 ** k))
        si = _check_defect(ck, f"{p}.defect_incl", inc, st["defect_incl"])
        ck.check(f"{p}.incl_isometry", si == 0)
        sn = _check_defect(ck, f"{p}.defect_f_n", fn, st["defect_f_n"])
        ck.check(f"{p}.f_n_threshold", sn < Fraction(1, 2 ** k))
        s = _check_defect(ck, f"{p}.defect_next", fn1, st["defect_next"])
        ck.check(f"{p}.isometry_threshold", s < th)
        d = _check_norm(ck, f"{p}.drift", _combo([(ONE, [st["f_next"], st["incl"]]), (-ONE, [st["f_n"]])], maps),
                        st["drift"])
        ck.check(f"{p}.drift_strict", d < bound)
        ck.check(f"{p}.drift_double", bound <= 2 * Fraction(1, 2 ** k))


def verify_trace(data: Any) -> list[tuple[str, bool, str]]:
    """Re-check a serialized trace; returns ``(name, passed, detail)`` per check.

    Structural problems (missing fields, malformed rationals) are reported
    as failed checks rather than raised, so every tampering shows up as a
    named failure.
    """
    ck = _Checker()
    if not isinstance(data, dict):
        ck.check("format", False, "trace is not a JSON object")
        return ck.results
    ck.check("digest", data.get("digest") == payload_digest(data), "payload digest mismatch")
    if not ck.check("format", data.get("format") == FORMAT and data.get("version") == VERSION):
        return ck.results
    kind = data.get("kind")
    if kind == "back_and_forth":
        ck.guard("structure", lambda: _verify_back_and_forth(data, ck))
    elif kind == "embed_universal":
        ck.guard("structure", lambda: _verify_universal(data, ck))
    else:
        ck.check("kind", False, f"unknown trace kind {kind!r}")
    return ck.results
