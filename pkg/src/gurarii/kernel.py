"""Exact convex geometry: rational LP, vertex/facet enumeration, polarity.

Polytopes come in two flavours, :class:`HalfspaceSystem` (H-form) and
:class:`VertexSystem` (V-form).  Both canonicalise themselves on
construction so that two descriptions of the same polytope, once made
irredundant by :func:`vertex_enumeration` / :func:`facet_enumeration`,
compare equal with ``==``.

Vertex enumeration uses the double description method on the homogenised
cone, carried out in primitive integer vectors with bitset incidence.  The
LP solver is a dense two-phase tableau simplex over Fractions with Bland's
rule, which makes every pivot sequence (and hence every witness)
reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from .errors import (AsymmetricError, CertificateError, DegenerateError, DimensionMismatch,
                     InfeasibleError, UnboundedError)
from .linalg import (ONE, ZERO, dot, independent_subset, inverse, primitive_int,
                     q, vec)

__all__ = [
    "HalfspaceSystem", "VertexSystem", "LPSolution", "lp_solve", "standard_form_lp",
    "vertex_enumeration", "facet_enumeration", "polar_dual", "hull_vertices",
    "contains", "is_symmetric",
]


def _canonical_row(normal: tuple, offset: Fraction) -> tuple[tuple, Fraction] | None:
    if all(a == 0 for a in normal):
        # 0 <= offset is vacuous; a negative offset is kept as an infeasible marker
        return None if offset >= 0 else ((ZERO,) * len(normal), Fraction(-1))
    if offset != 0:
        s = abs(offset)
        return tuple(a / s for a in normal), offset / s
    return tuple(Fraction(a) for a in primitive_int(normal)), ZERO


@dataclass(frozen=True)
class HalfspaceSystem:
    """``{x : <normal, x> <= offset}`` for every row, in canonical form.

    Rows with nonzero offset are scaled to offset +-1, rows through the
    origin to a primitive integer normal; duplicates are dropped and rows
    sorted, so equal row *sets* give equal objects.
    """
    dimension: int
    rows: tuple = ()

    def __post_init__(self):
        seen = set()
        for normal, offset in self.rows:
            if len(normal) != self.dimension:
                raise DimensionMismatch(
                    f"row of length {len(normal)} in a {self.dimension}-dimensional system")
            row = _canonical_row(vec(normal), q(offset))
            if row is not None:
                seen.add(row)
        object.__setattr__(self, "rows", tuple(sorted(seen)))

    @classmethod
    def from_normals(cls, dimension: int, normals: Iterable[Sequence]) -> "HalfspaceSystem":
        """System ``<a, x> <= 1`` for each normal ``a``."""
        return cls(dimension, tuple((vec(a), ONE) for a in normals))

    @property
    def normals(self) -> list[tuple]:
        return [n for n, _ in self.rows]

    @property
    def offsets(self) -> list[Fraction]:
        return [b for _, b in self.rows]

    def contains(self, x: Sequence) -> bool:
        return all(dot(n, x) <= b for n, b in self.rows)

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class VertexSystem:
    """A finite point set, deduplicated and sorted."""
    dimension: int
    points: tuple = ()

    def __post_init__(self):
        pts = set()
        for p in self.points:
            if len(p) != self.dimension:
                raise DimensionMismatch(
                    f"point of length {len(p)} in a {self.dimension}-dimensional system")
            pts.add(vec(p))
        object.__setattr__(self, "points", tuple(sorted(pts)))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


# ---------------------------------------------------------------------------
# linear programming

@dataclass(frozen=True)
class LPSolution:
    """Optimal value with a primal point and a dual certificate.

    For ``max <c, x>`` s.t. ``A x <= b`` the dual is ``y >= 0`` with
    ``A^T y = c`` and ``<b, y> = value``.  For a minimisation the dual
    certifies ``max <-c, x>`` instead, i.e. ``A^T y = -c`` and
    ``<b, y> = -value``.
    """
    value: Fraction
    point: tuple
    dual: tuple
    sense: str = "max"

    def check(self, objective: Sequence, system: HalfspaceSystem) -> bool:
        c = vec(objective)
        sign = 1 if self.sense == "max" else -1
        if dot(c, self.point) != self.value:
            return False
        if not system.contains(self.point):
            return False
        if any(y < 0 for y in self.dual):
            return False
        normals, offsets = system.normals, system.offsets
        for k in range(system.dimension):
            if sum((y * n[k] for y, n in zip(self.dual, normals)), ZERO) != sign * c[k]:
                return False
        return dot(offsets, self.dual) == sign * self.value


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], basis: list[int]):
        self.t = rows
        self.basis = basis

    def pivot(self, r: int, c: int, z: list[Fraction]):
        t = self.t
        prow = t[r]
        p = prow[c]
        if p != 1:
            prow = [x / p for x in prow]
            t[r] = prow
        nz = [(k, x) for k, x in enumerate(prow) if x != 0]
        for i, row in enumerate(t):
            if i != r:
                f = row[c]
                if f != 0:
                    for k, x in nz:
                        row[k] -= f * x
        f = z[c]
        if f != 0:
            for k, x in nz:
                z[k] -= f * x
        self.basis[r] = c

    def reduced_costs(self, cost: list[Fraction]) -> list[Fraction]:
        z = list(cost) + [ZERO]
        for i, bi in enumerate(self.basis):
            cb = cost[bi]
            if cb != 0:
                for k, x in enumerate(self.t[i]):
                    if x != 0:
                        z[k] -= cb * x
        return z

    def run(self, cost: list[Fraction], allowed: int) -> str:
        """Bland's rule on columns ``< allowed``.  Returns 'optimal' or 'unbounded'."""
        z = self.reduced_costs(cost)
        t = self.t
        while True:
            c = next((j for j in range(allowed) if z[j] < 0), None)
            if c is None:
                return "optimal"
            best = None
            for i, row in enumerate(t):
                a = row[c]
                if a > 0:
                    key = (row[-1] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], c, z)


def standard_form_lp(cost: Sequence, m: Sequence[Sequence], r: Sequence):
    """Solve ``min <cost, y>`` s.t. ``m y = r``, ``y >= 0``.

    Returns ``(status, y, multipliers)`` where status is ``"optimal"``,
    ``"infeasible"`` or ``"unbounded"``.  The multipliers ``pi`` satisfy
    ``cost - m^T pi >= 0`` with equality on the support of ``y``.
    """
    cost = [q(c) for c in cost]
    nrows, ncols = len(m), len(cost)
    signs = [1 if q(ri) >= 0 else -1 for ri in r]
    rows = []
    for i in range(nrows):
        s = signs[i]
        row = [s * q(x) for x in m[i]]
        row += [ONE if k == i else ZERO for k in range(nrows)]
        row.append(s * q(r[i]))
        rows.append(row)
    tab = _Tableau(rows, [ncols + i for i in range(nrows)])
    phase1 = [ZERO] * ncols + [ONE] * nrows
    tab.run(phase1, ncols + nrows)
    if any(tab.t[i][-1] != 0 for i, b in enumerate(tab.basis) if b >= ncols):
        return "infeasible", None, None
    dummy = [ZERO] * (ncols + nrows + 1)
    for i, b in enumerate(tab.basis):
        if b >= ncols:
            c = next((j for j in range(ncols) if tab.t[i][j] != 0), None)
            if c is not None:
                tab.pivot(i, c, dummy)
    phase2 = cost + [ZERO] * nrows
    if tab.run(phase2, ncols) == "unbounded":
        return "unbounded", None, None
    y = [ZERO] * ncols
    for i, b in enumerate(tab.basis):
        if b < ncols:
            y[b] = tab.t[i][-1]
    z = tab.reduced_costs(phase2)
    pi = tuple(-signs[k] * z[ncols + k] for k in range(nrows))
    return "optimal", tuple(y), pi


def lp_solve(objective: Sequence, system: HalfspaceSystem, sense: str = "max") -> LPSolution:
    """Optimise a linear objective over ``system``, exactly.

    Solved through the dual in standard form, so the returned point is the
    simplex multiplier vector and the dual certificate comes for free.
    """
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', not {sense!r}")
    c = vec(objective)
    if len(c) != system.dimension:
        raise DimensionMismatch(
            f"objective of length {len(c)} for a {system.dimension}-dimensional system")
    if sense == "min":
        c = tuple(-x for x in c)
    normals, offsets = system.normals, system.offsets
    d = system.dimension
    at = [[n[k] for n in normals] for k in range(d)]
    status, y, pi = standard_form_lp(offsets, at, c)
    if status == "unbounded":
        raise InfeasibleError("linear program is infeasible")
    if status == "infeasible":
        status0, _, _ = standard_form_lp(offsets, at, [ZERO] * d)
        if status0 == "unbounded":
            raise InfeasibleError("linear program is infeasible")
        raise UnboundedError("linear objective is unbounded")
    value = dot(c, pi)
    if sense == "min":
        value = -value
    sol = LPSolution(value, pi, y, sense)
    if not sol.check(objective, system):
        raise CertificateError("LP certificate failed its exact re-check")
    return sol


# ---------------------------------------------------------------------------
# double description

def _mask_rank(rows: list[tuple[int, ...]], mask: int, cap: int) -> int:
    """Rank of the integer rows selected by ``mask``, stopping once it reaches ``cap``.

    Fraction-free elimination keeps everything in Python ints.
    """
    basis: list[tuple[int, list[int]]] = []
    idx = 0
    while mask and len(basis) < cap:
        if mask & 1:
            w = list(rows[idx])
            for pc, b in basis:
                c = w[pc]
                if c:
                    bp = b[pc]
                    w = [x * bp - c * y for x, y in zip(w, b)]
            pc = next((k for k, x in enumerate(w) if x), None)
            if pc is not None:
                g = 0
                for x in w:
                    g = gcd(g, x)
                if g > 1:
                    w = [x // g for x in w]
                basis.append((pc, w))
        mask >>= 1
        idx += 1
    return len(basis)


def _extreme_rays(rows: list[tuple[int, ...]], n: int) -> list[tuple[tuple[int, ...], int]]:
    """Extreme rays of the pointed cone ``{y : <row, y> >= 0}``.

    Each ray is returned with the bitmask of the rows it makes tight.
    """
    init = independent_subset(rows)[:n]
    if len(init) < n:
        raise UnboundedError("cone is not pointed (the polyhedron is unbounded)")
    inv = inverse(tuple(tuple(Fraction(x) for x in rows[i]) for i in init))
    full_init = 0
    for i in init:
        full_init |= 1 << i
    rays = []
    zsets = []
    for k in range(n):
        rays.append(primitive_int(tuple(inv[j][k] for j in range(n))))
        zsets.append(full_init & ~(1 << init[k]))
    init_set = set(init)
    need = n - 2
    adj_cache: dict[int, bool] = {}
    for idx, row in enumerate(rows):
        if idx in init_set:
            continue
        bit = 1 << idx
        vals = [sum(a * b for a, b in zip(row, r)) for r in rays]
        pos = [k for k, s in enumerate(vals) if s > 0]
        neg = [k for k, s in enumerate(vals) if s < 0]
        zer = [k for k, s in enumerate(vals) if s == 0]
        if not neg:
            for k in zer:
                zsets[k] |= bit
            continue
        new_rays = []
        new_z = []
        for p in pos:
            zp = zsets[p]
            for m in neg:
                common = zp & zsets[m]
                if common.bit_count() < need:
                    continue
                adjacent = adj_cache.get(common)
                if adjacent is None:
                    adjacent = _mask_rank(rows, common, need) == need
                    adj_cache[common] = adjacent
                if not adjacent:
                    continue
                sp, sm = vals[p], -vals[m]
                r = tuple(sp * a + sm * b for a, b in zip(rays[m], rays[p]))
                new_rays.append(primitive_int(r))
                new_z.append(common | bit)
        keep = pos + zer
        rays_next = [rays[k] for k in keep] + new_rays
        z_next = [zsets[k] for k in pos] + [zsets[k] | bit for k in zer] + new_z
        rays, zsets = rays_next, z_next
    return list(zip(rays, zsets))


def _enumerate(normals: Sequence[Sequence], offsets: Sequence) -> tuple[list[tuple], list[int]]:
    """Vertices of ``{x : <a_i, x> <= b_i}`` (all ``b_i > 0``) and the
    indices of the irredundant rows."""
    d = len(normals[0])
    int_rows = [primitive_int((q(b),) + tuple(-q(a) for a in n)) for n, b in zip(normals, offsets)]
    int_rows.append((1,) + (0,) * d)
    rays = _extreme_rays(int_rows, d + 1)
    vertices = []
    for r, _ in rays:
        if r[0] == 0:
            raise UnboundedError("polyhedron is unbounded")
        t = Fraction(r[0])
        vertices.append(tuple(Fraction(x) / t for x in r[1:]))
    facets = []
    ray_rows = [r for r, _ in rays]
    seen: dict[int, bool] = {}
    for i in range(len(normals)):
        tight = 0
        for k, (_, z) in enumerate(rays):
            if z >> i & 1:
                tight |= 1 << k
        ok = seen.get(tight)
        if ok is None:
            ok = tight.bit_count() >= d and _mask_rank(ray_rows, tight, d) == d
            seen[tight] = ok
        if ok:
            facets.append(i)
    return vertices, facets


def vertex_enumeration(system: HalfspaceSystem) -> VertexSystem:
    """Vertices of a bounded H-polytope containing the origin in its interior."""
    if system.dimension == 0:
        return VertexSystem(0, ())
    if not system.rows:
        raise UnboundedError("empty halfspace system is unbounded")
    if any(b <= 0 for b in system.offsets):
        raise DegenerateError("origin is not an interior point of the halfspace system")
    vertices, _ = _enumerate(system.normals, system.offsets)
    return VertexSystem(system.dimension, tuple(vertices))


def describe_h(system: HalfspaceSystem) -> tuple[VertexSystem, HalfspaceSystem]:
    """Vertices and the irredundant rows of an H-polytope, in one pass."""
    if system.dimension == 0:
        return VertexSystem(0, ()), system
    if not system.rows:
        raise UnboundedError("empty halfspace system is unbounded")
    if any(b <= 0 for b in system.offsets):
        raise DegenerateError("origin is not an interior point of the halfspace system")
    vertices, facets = _enumerate(system.normals, system.offsets)
    return (VertexSystem(system.dimension, tuple(vertices)),
            HalfspaceSystem(system.dimension, tuple(system.rows[i] for i in facets)))


def irredundant(system: HalfspaceSystem) -> HalfspaceSystem:
    """Drop every row that is not a facet."""
    return describe_h(system)[1]


def describe_v(points: VertexSystem) -> tuple[VertexSystem, HalfspaceSystem]:
    """Extreme points and facets of the hull of ``points``, in one pass."""
    if points.dimension == 0:
        return points, HalfspaceSystem(0, ())
    normals, extreme = _hull(points)
    return (VertexSystem(points.dimension, tuple(extreme)),
            HalfspaceSystem.from_normals(points.dimension, normals))


def _hull(points: VertexSystem) -> tuple[list[tuple], list[tuple]]:
    if not points.points:
        raise DegenerateError("empty point set has no interior")
    try:
        normals, extreme = _enumerate(points.points, [ONE] * len(points.points))
    except UnboundedError as exc:
        raise DegenerateError(
            "convex hull is lower-dimensional or does not contain the origin in its interior"
        ) from exc
    return normals, [points.points[i] for i in extreme]


def facet_enumeration(points: VertexSystem) -> HalfspaceSystem:
    """Facets ``<a, x> <= 1`` of the hull of ``points`` (origin must be interior)."""
    if points.dimension == 0:
        return HalfspaceSystem(0, ())
    normals, _ = _hull(points)
    return HalfspaceSystem.from_normals(points.dimension, normals)


def hull_vertices(points: VertexSystem) -> VertexSystem:
    """The extreme points among ``points``."""
    if points.dimension == 0:
        return points
    _, extreme = _hull(points)
    return VertexSystem(points.dimension, tuple(extreme))


def is_symmetric(p: HalfspaceSystem | VertexSystem) -> bool:
    if isinstance(p, HalfspaceSystem):
        rows = set(p.rows)
        return all((tuple(-a for a in n), b) in rows for n, b in p.rows)
    pts = set(p.points)
    return all(tuple(-a for a in x) in pts for x in p.points)


def polar_dual(p: HalfspaceSystem | VertexSystem) -> HalfspaceSystem | VertexSystem:
    """Polar of a symmetric polytope, returned in the same representation.

    For an H-form ``{<a_i, x> <= 1}`` the polar is ``{<v, y> <= 1 : v vertex}``;
    for a V-form the polar's vertices are the facet normals of the hull.
    """
    if not is_symmetric(p):
        raise AsymmetricError("polar duality needs a centrally symmetric polytope")
    if isinstance(p, HalfspaceSystem):
        verts = vertex_enumeration(p)
        return HalfspaceSystem.from_normals(p.dimension, verts.points)
    facets = facet_enumeration(p)
    return VertexSystem(p.dimension, tuple(facets.normals))


def contains(points: VertexSystem, x: Sequence) -> bool:
    """Membership of ``x`` in the hull of ``points`` by an LP feasibility test."""
    x = vec(x)
    if len(x) != points.dimension:
        raise DimensionMismatch("point and polytope dimensions differ")
    if points.dimension == 0:
        return True
    pts = points.points
    m = [[p[k] for p in pts] for k in range(points.dimension)]
    m.append([ONE] * len(pts))
    status, _, _ = standard_form_lp([ZERO] * len(pts), m, list(x) + [ONE])
    return status == "optimal"
