"""Seeded random instances: spaces, maps and chains with exact rational data."""
from __future__ import annotations

import random
from fractions import Fraction

from . import linalg as la
from .engine import ChainSpace
from .kernel import HalfspaceSystem, VertexSystem
from .operators import LinearMap
from .spaces import PolyhedralSpace, make_space, zero_space

__all__ = ["random_space", "random_h_space", "random_map", "random_injective_map",
           "random_chain", "random_subspace_basis"]


def _rng(seed_or_rng) -> random.Random:
    if isinstance(seed_or_rng, random.Random):
        return seed_or_rng
    return random.Random(seed_or_rng)


def _point(rng: random.Random, d: int, bound: int) -> tuple:
    return tuple(Fraction(rng.randint(-bound, bound), rng.randint(1, 3)) for _ in range(d))


def random_space(seed, dimension: int, extra: int = 2, bound: int = 3, name: str = "") -> PolyhedralSpace:
    """Symmetric hull of the coordinate vectors (randomly rescaled) and ``extra`` random pairs.

    The rescaled basis keeps the ball full-dimensional whatever else is drawn.
    """
    rng = _rng(seed)
    if dimension == 0:
        return zero_space(name)
    pts = []
    for k in range(dimension):
        e = [Fraction(0)] * dimension
        e[k] = Fraction(rng.randint(1, 3), rng.randint(1, 2))
        pts.append(tuple(e))
    for _ in range(extra):
        p = _point(rng, dimension, bound)
        if not la.is_zero(p):
            pts.append(p)
    pts += [la.vscale(-1, p) for p in pts]
    return make_space(VertexSystem(dimension, tuple(pts)), name)


def random_h_space(seed, dimension: int, extra: int = 2, bound: int = 3, name: str = "") -> PolyhedralSpace:
    """Ball cut out by ``|x_k| <= 1`` (randomly scaled) and ``extra`` random slabs."""
    rng = _rng(seed)
    if dimension == 0:
        return zero_space(name)
    normals = []
    for k in range(dimension):
        e = [Fraction(0)] * dimension
        e[k] = Fraction(rng.randint(1, 2), rng.randint(1, 3))
        normals.append(tuple(e))
    for _ in range(extra):
        a = _point(rng, dimension, bound)
        if not la.is_zero(a):
            normals.append(a)
    normals += [la.vscale(-1, a) for a in normals]
    return make_space(HalfspaceSystem.from_normals(dimension, normals), name)


def random_map(seed, domain: PolyhedralSpace, codomain: PolyhedralSpace, bound: int = 3) -> LinearMap:
    rng = _rng(seed)
    m = tuple(tuple(Fraction(rng.randint(-bound, bound), rng.randint(1, 2))
                    for _ in range(domain.dimension)) for _ in range(codomain.dimension))
    return LinearMap(domain, codomain, m)


def random_injective_map(seed, domain: PolyhedralSpace, codomain: PolyhedralSpace,
                         bound: int = 3, tries: int = 100) -> LinearMap:
    if domain.dimension > codomain.dimension:
        raise ValueError("no injective map into a smaller space")
    rng = _rng(seed)
    for _ in range(tries):
        f = random_map(rng, domain, codomain, bound)
        if f.is_injective():
            return f
    raise RuntimeError("failed to draw an injective map")


def random_subspace_basis(seed, dimension: int, k: int, bound: int = 2) -> list:
    rng = _rng(seed)
    while True:
        basis = [tuple(Fraction(rng.randint(-bound, bound)) for _ in range(dimension)) for _ in range(k)]
        if len(la.independent_subset(basis)) == k:
            return basis


def random_chain(seed, dims, name: str = "", finite: bool = True) -> ChainSpace:
    """Chain whose stage ``k+1`` adds one direction to stage ``k``.

    Each new stage is the hull of the old ball (on the leading coordinates)
    and one pair ``+-(u, c)`` with ``c != 0``; the section at last
    coordinate 0 is the old ball, so ``[I; 0]`` is an exact isometry.
    ``dims`` lists the dimensions and must grow by 0 or 1 each time.
    """
    rng = _rng(seed)
    stages = [random_space(rng, dims[0])]
    incs = []
    for d in dims[1:]:
        old = stages[-1]
        if d == old.dimension:
            stages.append(old)
            incs.append(LinearMap(old, old, la.identity(d)))
            continue
        if d != old.dimension + 1:
            raise ValueError("random chains grow one dimension at a time")
        pts = [tuple(v) + (Fraction(0),) for v in old.ball_vertices.points]
        top = _point(rng, old.dimension, 2) + (Fraction(rng.randint(1, 3), rng.randint(1, 2)),)
        pts += [top, la.vscale(-1, top)]
        new = make_space(VertexSystem(d, tuple(pts)))
        stages.append(new)
        incs.append(LinearMap(old, new, la.vstack(la.identity(old.dimension), la.zeros(1, old.dimension))))
    return ChainSpace(stages, incs, name=name, finite=finite)
