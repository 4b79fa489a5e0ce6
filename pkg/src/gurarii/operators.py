"""Linear maps between polyhedral spaces: operator norms, minimal gains, defects.

A map ``f`` is an eps-isometry when ``1/(1+eps) < ||f x|| < 1+eps`` on the
unit sphere.  :func:`defect` returns the closed threshold ``epsilon_star``;
``f`` is an eps-isometry exactly when ``eps > epsilon_star``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg as la
from .errors import DimensionMismatch, NotInjectiveError, SingularError
from .kernel import HalfspaceSystem, lp_solve, vertex_enumeration
from .linalg import ONE, ZERO, q
from .spaces import PolyhedralSpace, norm, same_ball

__all__ = [
    "LinearMap", "DefectCertificate", "op_norm", "min_gain", "defect", "compose",
    "restrict", "invert", "min_gain_lp", "map_distance", "difference", "identity_map", "is_eps_isometry",
]


@dataclass(frozen=True, eq=False)
class LinearMap:
    domain: PolyhedralSpace
    codomain: PolyhedralSpace
    matrix: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        m = la.mat(self.matrix)
        if len(m) != self.codomain.dimension:
            raise DimensionMismatch(
                f"matrix has {len(m)} rows, codomain has dimension {self.codomain.dimension}")
        if any(len(row) != self.domain.dimension for row in m):
            raise DimensionMismatch(
                f"matrix rows must have length {self.domain.dimension}")
        object.__setattr__(self, "matrix", m)

    def __call__(self, x: Sequence) -> tuple:
        x = la.vec(x)
        if len(x) != self.domain.dimension:
            raise DimensionMismatch("argument does not live in the domain")
        return la.matvec(self.matrix, x)

    @property
    def shape(self) -> tuple[int, int]:
        return self.codomain.dimension, self.domain.dimension

    def is_injective(self) -> bool:
        if self.domain.dimension == 0:
            return True
        return la.rank(self.matrix) == self.domain.dimension if self.matrix else False

    def _cached(self, key, compute):
        # recompute-equal semantics: a racing second computation stores the same value
        if key not in self._cache:
            self._cache[key] = compute()
        return self._cache[key]


@dataclass(frozen=True)
class DefectCertificate:
    """``sup``/``inf`` of ``||f x||`` over the unit sphere, with attaining points.

    On a zero-dimensional domain the sphere is empty; the certificate is then
    ``sup = 0, inf = 1, epsilon_star = 0`` with empty witnesses.
    """
    sup_value: Fraction
    sup_witness: tuple
    inf_value: Fraction
    inf_witness: tuple
    epsilon_star: Fraction

    @property
    def is_isometry(self) -> bool:
        return self.epsilon_star == 0


def identity_map(space: PolyhedralSpace, codomain: PolyhedralSpace | None = None) -> LinearMap:
    return LinearMap(space, codomain or space, la.identity(space.dimension))


def _op_norm(f: LinearMap):
    if f.domain.dimension == 0:
        return ZERO, ()
    best = None
    for v in reversed(f.domain.ball_vertices.points):
        val = norm(f.codomain, f(v))
        if best is None or val > best[0]:
            best = (val, v)
    return best


def op_norm(f: LinearMap) -> tuple[Fraction, tuple]:
    """Largest ``||f v||`` over the domain's ball vertices.

    The witness is the lexicographically largest maximising vertex.
    """
    return f._cached("op_norm", lambda: _op_norm(f))


def _half_facets(space: PolyhedralSpace):
    # facets come in +-a pairs on a symmetric ball; one of each pair suffices
    out = []
    for a in space.ball_facets.normals:
        lead = next(x for x in a if x != 0)
        if lead > 0:
            out.append(a)
    return out


def _pullback_vertices(f: LinearMap):
    # vertices of {x : |<l, f x>| <= 1 for every dual vertex l of the codomain}
    images = [la.vecmat(ell, f.matrix) for ell in f.codomain.dual_vertices]
    return vertex_enumeration(HalfspaceSystem.from_normals(f.domain.dimension, images))


def _min_gain(f: LinearMap):
    if f.domain.dimension == 0:
        return None, ()
    if not f.is_injective():
        raise NotInjectiveError("map is not injective; its minimal gain is 0")
    best = None
    for v in reversed(_pullback_vertices(f).points):
        val = norm(f.domain, v)
        if best is None or val > best[0]:
            best = (val, v)
    top, v = best
    return 1 / top, la.vscale(1 / top, v)


def min_gain_lp(f: LinearMap) -> tuple[Fraction, tuple]:
    """:func:`min_gain` computed by linear programming instead of vertex enumeration.

    One LP per facet pair of the domain ball: minimise ``t`` subject to
    ``|<l, f x>| <= t`` for every dual vertex ``l`` of the codomain, with
    ``x`` confined to the facet.  Kept as an independent cross-check.
    """
    d = f.domain.dimension
    if d == 0:
        return None, ()
    if not f.is_injective():
        raise NotInjectiveError("map is not injective; its minimal gain is 0")
    images = [la.vecmat(ell, f.matrix) for ell in f.codomain.dual_vertices]
    base = [(tuple(row) + (Fraction(-1),), ZERO) for row in images]
    base += [(tuple(a) + (ZERO,), ONE) for a in f.domain.ball_facets.normals]
    objective = (ZERO,) * d + (ONE,)
    best = None
    for a in _half_facets(f.domain):
        rows = base + [(tuple(-x for x in a) + (ZERO,), Fraction(-1))]
        sol = lp_solve(objective, HalfspaceSystem(d + 1, tuple(rows)), sense="min")
        if best is None or sol.value < best[0]:
            best = (sol.value, sol.point[:d])
    return best


def min_gain(f: LinearMap) -> tuple[Fraction, tuple]:
    """Smallest ``||f x||`` over the domain's unit sphere.

    ``||f x||`` is the gauge of the pulled-back ball ``P = f^-1(B)``, so the
    minimum over the sphere is ``1 / max ||v||`` over the vertices ``v`` of
    ``P``; the witness is the maximising vertex rescaled onto the sphere.
    """
    return f._cached("min_gain", lambda: _min_gain(f))


def defect(f: LinearMap) -> DefectCertificate:
    def compute():
        if f.domain.dimension == 0:
            return DefectCertificate(ZERO, (), ONE, (), ZERO)
        sup, sw = op_norm(f)
        inf, iw = min_gain(f)
        return DefectCertificate(sup, sw, inf, iw, max(sup, 1 / inf) - 1)
    return f._cached("defect", compute)


def is_eps_isometry(f: LinearMap, eps) -> bool:
    return q(eps) > defect(f).epsilon_star


def _check_same(a: PolyhedralSpace, b: PolyhedralSpace, what: str):
    if not same_ball(a, b):
        raise DimensionMismatch(f"{what}: spaces do not match")


def compose(g: LinearMap, f: LinearMap) -> LinearMap:
    """``g o f``."""
    _check_same(f.codomain, g.domain, "compose")
    return LinearMap(f.domain, g.codomain,
                     la.matmul(g.matrix, f.matrix, bcols=f.domain.dimension)
                     if g.matrix else la.zeros(0, f.domain.dimension))


def restrict(f: LinearMap, inclusion: LinearMap) -> LinearMap:
    """``f`` restricted to a subspace, given by that subspace's inclusion map."""
    return compose(f, inclusion)


def invert(f: LinearMap) -> LinearMap:
    if f.domain.dimension != f.codomain.dimension:
        raise SingularError("only bijective maps can be inverted")
    return LinearMap(f.codomain, f.domain, la.inverse(f.matrix))


def difference(f: LinearMap, g: LinearMap) -> LinearMap:
    """``f - g`` for maps with common domain and codomain."""
    _check_same(f.domain, g.domain, "difference")
    _check_same(f.codomain, g.codomain, "difference")
    return LinearMap(f.domain, f.codomain, la.sub(f.matrix, g.matrix))


def map_distance(f: LinearMap, g: LinearMap) -> Fraction:
    return op_norm(difference(f, g))[0]
