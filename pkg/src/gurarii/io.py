"""JSON files for spaces, maps and chains.

Rationals are written as strings ``"p/q"`` (or integer strings) and never
as JSON numbers.  Output is canonical: sorted keys, fixed indentation and a
trailing newline, so equal objects give byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import os
from fractions import Fraction
from typing import Any

from . import linalg as la
from .engine import ChainSpace
from .errors import InputError
from .kernel import HalfspaceSystem, VertexSystem
from .linalg import qstr
from .operators import LinearMap
from .spaces import PolyhedralSpace, make_space, zero_space

__all__ = [
    "dumps", "load_json", "parse_rational", "rational_list", "rational_matrix",
    "space_to_json", "space_from_json", "read_space", "write_space",
    "map_to_json", "map_from_json", "read_map", "write_chain", "read_chain", "file_sha256",
]


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def file_sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from exc


def _reject_float(text: str):
    raise InputError(f"floating-point literal {text} is not allowed; write rationals as \"p/q\" strings")


def parse_rational(value: Any, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise InputError(f"{where}: expected a rational string \"p/q\", got {json.dumps(value)}")
    try:
        return la.q(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"{where}: cannot parse {json.dumps(value)} as a rational") from exc


def rational_list(value: Any, where: str) -> tuple:
    if not isinstance(value, list):
        raise InputError(f"{where}: expected a list")
    return tuple(parse_rational(x, f"{where}[{k}]") for k, x in enumerate(value))


def rational_matrix(value: Any, where: str, cols: int | None = None) -> tuple:
    if not isinstance(value, list):
        raise InputError(f"{where}: expected a list of rows")
    rows = tuple(rational_list(r, f"{where}[{k}]") for k, r in enumerate(value))
    width = cols if cols is not None else (len(rows[0]) if rows else 0)
    for k, r in enumerate(rows):
        if len(r) != width:
            raise InputError(f"{where}[{k}]: expected {width} entries, got {len(r)}")
    return rows


def _field(obj: Any, key: str, where: str, kind=None):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    if key not in obj:
        raise InputError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool)):
        raise InputError(f"{where}.{key}: wrong type")
    return value


def vec_json(v) -> list:
    return [qstr(x) for x in v]


def mat_json(m) -> list:
    return [vec_json(r) for r in m]


# ---------------------------------------------------------------------------
# spaces

def space_to_json(space: PolyhedralSpace, representation: str = "facets", name: str | None = None) -> dict:
    if representation == "facets":
        data = space.ball_facets.normals
    elif representation == "vertices":
        data = space.ball_vertices.points
    else:
        raise ValueError("representation must be 'facets' or 'vertices'")
    return {
        "name": space.name if name is None else name,
        "dimension": space.dimension,
        "representation": representation,
        "data": mat_json(data),
    }


def space_from_json(obj: Any, where: str = "space") -> PolyhedralSpace:
    """Parse a SpaceFile object; geometric failures propagate as kernel errors."""
    dim = _field(obj, "dimension", where, int)
    if dim < 0:
        raise InputError(f"{where}.dimension: must be non-negative")
    rep = _field(obj, "representation", where, str)
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise InputError(f"{where}.name: wrong type")
    data = rational_matrix(_field(obj, "data", where, list), f"{where}.data", dim)
    if dim == 0:
        return zero_space(name)
    if rep == "facets":
        return make_space(HalfspaceSystem.from_normals(dim, data), name)
    if rep == "vertices":
        return make_space(VertexSystem(dim, data), name)
    raise InputError(f"{where}.representation: must be \"vertices\" or \"facets\", got {rep!r}")


def read_space(path: str) -> PolyhedralSpace:
    return space_from_json(load_json(path), os.path.basename(path))


def write_space(path: str, space: PolyhedralSpace, representation: str = "facets", name: str | None = None):
    write_text(path, dumps(space_to_json(space, representation, name)))


# ---------------------------------------------------------------------------
# maps

def map_to_json(f: LinearMap, domain: str, codomain: str) -> dict:
    return {"domain": domain, "codomain": codomain, "matrix": mat_json(f.matrix)}


def map_from_json(obj: Any, domain: PolyhedralSpace, codomain: PolyhedralSpace,
                  where: str = "map", check_names: bool = True) -> LinearMap:
    for key, space in (("domain", domain), ("codomain", codomain)):
        label = obj.get(key) if isinstance(obj, dict) else None
        if check_names and label and space.name and label != space.name:
            raise InputError(f"{where}.{key}: names {label!r} but the space given is {space.name!r}")
    m = rational_matrix(_field(obj, "matrix", where, list), f"{where}.matrix", domain.dimension)
    if len(m) != codomain.dimension:
        raise InputError(f"{where}.matrix: expected {codomain.dimension} rows, got {len(m)}")
    return LinearMap(domain, codomain, m)


def read_map(path: str, domain: PolyhedralSpace, codomain: PolyhedralSpace) -> LinearMap:
    return map_from_json(load_json(path), domain, codomain, os.path.basename(path))


# ---------------------------------------------------------------------------
# chains: a directory with one SpaceFile per stage and index.json

def write_chain(path: str, chain: ChainSpace):
    os.makedirs(path, exist_ok=True)
    files = []
    for k, stage in enumerate(chain.stages):
        fname = f"stage{k}.json"
        write_space(os.path.join(path, fname), stage, name=stage.name or f"stage{k}")
        files.append(fname)
    index = {
        "name": chain.name,
        "finite": chain.finite,
        "stages": files,
        "inclusions": [mat_json(inc.matrix) for inc in chain.inclusions],
    }
    write_text(os.path.join(path, "index.json"), dumps(index))


def read_chain(path: str) -> ChainSpace:
    where = os.path.join(path, "index.json")
    index = load_json(where)
    files = _field(index, "stages", where, list)
    if not files:
        raise InputError(f"{where}.stages: a chain needs at least one stage")
    stages = []
    for k, fname in enumerate(files):
        if not isinstance(fname, str):
            raise InputError(f"{where}.stages[{k}]: expected a file name")
        stages.append(read_space(os.path.join(path, fname)))
    mats = _field(index, "inclusions", where, list)
    if len(mats) != len(stages) - 1:
        raise InputError(f"{where}.inclusions: expected {len(stages) - 1} matrices, got {len(mats)}")
    incs = []
    for k, m in enumerate(mats):
        matrix = rational_matrix(m, f"{where}.inclusions[{k}]", stages[k].dimension)
        if len(matrix) != stages[k + 1].dimension:
            raise InputError(f"{where}.inclusions[{k}]: expected {stages[k + 1].dimension} rows")
        incs.append(LinearMap(stages[k], stages[k + 1], matrix))
    finite = index.get("finite", True)
    if not isinstance(finite, bool):
        raise InputError(f"{where}.finite: expected true or false")
    name = index.get("name", "") or os.path.basename(os.path.normpath(path))
    return ChainSpace(stages, incs, name=name, finite=finite)
