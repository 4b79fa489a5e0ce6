"""Amalgamating an eps-isometry into a pair of isometries, and l1-pushouts.

Given an eps-isometry ``f: X -> Y`` these constructions produce a space
``Z`` with isometric copies ``i: X -> Z`` and ``j: Y -> Z`` such that
``||j f - i|| <= eps``.  Everything is exact; each result carries a
certificate object whose :meth:`checks` recompute every claim with fresh
maps (no cached values are trusted).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import linalg as la
from .errors import CertificateError, DefectTooLarge, NotInjectiveError, SingularError
from .kernel import HalfspaceSystem, VertexSystem, lp_solve
from .linalg import ONE, ZERO, q
from .operators import (LinearMap, compose, defect, difference, identity_map, map_distance,
                        op_norm)
from .spaces import PolyhedralSpace, dual_norm, make_space, same_ball, subspace, zero_space

__all__ = [
    "AmalgamCertificate", "PushoutCertificate", "ExtensionCertificate",
    "amalgamate_bijective", "amalgamate", "pushout_l1", "extend_isometry",
    "trivial_amalgam", "quotient_norm_lp", "cutoff",
]


def cutoff(eps) -> Fraction:
    """``eps / (1 + eps)``, the weight of the plain-norm terms in the amalgam norm."""
    eps = q(eps)
    return eps / (1 + eps)


def _fresh(f: LinearMap) -> LinearMap:
    return LinearMap(f.domain, f.codomain, f.matrix)


@dataclass(frozen=True)
class AmalgamCertificate:
    Z: PolyhedralSpace
    i: LinearMap
    j: LinearMap
    f: LinearMap
    epsilon_used: Fraction
    bound_achieved: Fraction
    bound_witness: tuple
    eps1: Optional[Fraction] = None
    kind: str = "bijective"  # "bijective", "quotient" or "trivial"
    inner: Optional["AmalgamCertificate"] = None

    def checks(self) -> dict[str, bool]:
        i, j, f = _fresh(self.i), _fresh(self.j), _fresh(self.f)
        gap = difference(compose(j, f), i)
        bound, _ = op_norm(gap)
        return {
            "i_isometry": defect(i).epsilon_star == 0,
            "j_isometry": defect(j).epsilon_star == 0,
            "bound_reproduced": bound == self.bound_achieved,
            "bound_within_eps": bound <= self.epsilon_used,
        }

    def verify(self) -> "AmalgamCertificate":
        failed = [k for k, ok in self.checks().items() if not ok]
        if failed:
            raise CertificateError(f"amalgam certificate failed: {', '.join(failed)}")
        return self


def _require_eps(f: LinearMap, eps: Fraction) -> Fraction:
    star = defect(f).epsilon_star
    if eps <= star:
        raise DefectTooLarge(
            f"eps = {la.qstr(eps)} must exceed the isometry defect {la.qstr(star)} of the map",
            star)
    return star


def _finish(Z, X, Y, f, eps, eps1, kind, inner=None) -> AmalgamCertificate:
    n, m = X.dimension, Y.dimension
    i = LinearMap(X, Z, la.vstack(la.identity(n), la.zeros(m, n)))
    j = LinearMap(Y, Z, la.vstack(la.zeros(n, m), la.identity(m)))
    gap = difference(compose(j, LinearMap(X, Y, f.matrix)), i)
    bound, witness = op_norm(gap)
    cert = AmalgamCertificate(Z, i, j, f, eps, bound, witness, eps1, kind, inner)
    if defect(i).epsilon_star != 0 or defect(j).epsilon_star != 0 or bound > eps:
        raise CertificateError("amalgam construction violated its own certificate")
    return cert


def amalgamate_bijective(X: PolyhedralSpace, Y: PolyhedralSpace, f: LinearMap, eps) -> AmalgamCertificate:
    """Amalgam over a bijective eps-isometry ``f: X -> Y``.

    ``Z = X + Y`` carries the norm
    ``max{phi_X, phi_Y, eps1 ||x||_X, eps1 ||y||_Y}`` with
    ``phi_X(x, y) = max_{x*} |x*(x) + xbar*(y) / ||xbar*||_Y*|``,
    ``xbar* = x* f^-1``, and symmetrically for ``phi_Y``.  The maxima run over
    the extreme points of the dual balls only, which keeps ``Z`` polyhedral;
    ``i`` and ``j`` stay isometric because dual norms are attained there.
    """
    eps = q(eps)
    n = X.dimension
    if Y.dimension != n or f.shape != (n, n):
        raise SingularError("amalgamate_bijective needs a square map between equal dimensions")
    if n and la.rank(f.matrix) != n:
        raise SingularError("map is not bijective")
    _require_eps(f, eps)
    eps1 = cutoff(eps)
    if n == 0:
        return _finish(zero_space(), X, Y, f, eps, eps1, "bijective")
    minv = la.inverse(f.matrix)
    rows = []
    for xs in X.dual_vertices:
        xbar = la.vecmat(xs, minv)
        rows.append(xs + la.vscale(1 / dual_norm(Y, xbar), xbar))
    for ys in Y.dual_vertices:
        ybar = la.vecmat(ys, f.matrix)
        rows.append(la.vscale(1 / dual_norm(X, ybar), ybar) + ys)
    zn, zm = (ZERO,) * n, (ZERO,) * n
    for xs in X.dual_vertices:
        rows.append(la.vscale(eps1, xs) + zm)
    for ys in Y.dual_vertices:
        rows.append(zn + la.vscale(eps1, ys))
    Z = make_space(HalfspaceSystem.from_normals(2 * n, rows))
    return _finish(Z, X, Y, f, eps, eps1, "bijective")


def amalgamate(X: PolyhedralSpace, Y: PolyhedralSpace, f: LinearMap, eps,
               shortcut: bool = False) -> AmalgamCertificate:
    """Amalgam over an injective eps-isometry ``f: X -> Y``.

    With ``shortcut`` an exact isometry is served by :func:`trivial_amalgam`
    (bound 0) instead of the cut-off norm (bound ``eps / (1 + eps)``).

    Onto maps go straight to :func:`amalgamate_bijective`.  Otherwise the
    bijective amalgam of ``f: X -> f[X]`` gives a norm on ``X + f[X]``, and
    ``Z = X + Y`` gets the quotient norm
    ``inf_v ||(x, f v)||' + ||y - f v||_Y``, whose unit ball is the convex
    hull of the two embedded balls.
    """
    eps = q(eps)
    n, m = X.dimension, Y.dimension
    if shortcut and same_ball(f.domain, X) and same_ball(f.codomain, Y) \
            and f.is_injective() and defect(f).epsilon_star == 0:
        return trivial_amalgam(f, eps)
    if n == m:
        return amalgamate_bijective(X, Y, f, eps)
    if not f.is_injective():
        raise NotInjectiveError("amalgamate needs an injective map")
    _require_eps(f, eps)
    image, _ = subspace(Y, la.columns(f.matrix, n))
    inner = amalgamate_bijective(X, image, LinearMap(X, image, la.identity(n)), eps)
    points = []
    for v in inner.Z.ball_vertices:
        points.append(v[:n] + la.matvec(f.matrix, v[n:]))
    for w in Y.ball_vertices:
        points.append((ZERO,) * n + w)
    Z = make_space(VertexSystem(n + m, tuple(points)))
    return _finish(Z, X, Y, f, eps, inner.eps1, "quotient", inner)


def trivial_amalgam(f: LinearMap, eps) -> AmalgamCertificate:
    """``Z = Y``, ``i = f``, ``j = id``: valid when ``f`` is already an isometry."""
    eps = q(eps)
    if defect(f).epsilon_star != 0:
        raise DefectTooLarge("the trivial amalgam needs an exact isometry", defect(f).epsilon_star)
    j = identity_map(f.codomain)
    bound, witness = op_norm(difference(compose(j, f), f))
    return AmalgamCertificate(f.codomain, f, j, f, eps, bound, witness, None, "trivial")


def quotient_norm_lp(cert: AmalgamCertificate, x, y) -> Fraction:
    """``inf_v ||(x, f v)||' + ||y - f v||_Y`` evaluated by a direct LP.

    An oracle independent of the convex-hull ball of ``cert.Z``; only valid
    for quotient-type certificates.
    """
    if cert.inner is None:
        raise ValueError("not a quotient amalgam")
    x, y = la.vec(x), la.vec(y)
    n = cert.f.domain.dimension
    M = cert.f.matrix
    rows = []
    # variables (v_1..v_n, s, t): |l(x, v)| <= s, |eta(y - M v)| <= t
    for ell in cert.inner.Z.dual_vertices:
        lx, lv = ell[:n], ell[n:]
        rows.append((lv + (Fraction(-1), ZERO), -la.dot(lx, x)))
    for eta in cert.f.codomain.dual_vertices:
        rows.append((tuple(-c for c in la.vecmat(eta, M)) + (ZERO, Fraction(-1)), -la.dot(eta, y)))
    objective = (ZERO,) * n + (ONE, ONE)
    return lp_solve(objective, HalfspaceSystem(n + 2, tuple(rows)), sense="min").value


@dataclass(frozen=True)
class PushoutCertificate:
    W: PolyhedralSpace
    f_prime: LinearMap
    y_embed: LinearMap
    inclusion: LinearMap
    f: LinearMap
    weight: Fraction
    complement: tuple

    def checks(self) -> dict[str, bool]:
        fp, ye = _fresh(self.f_prime), _fresh(self.y_embed)
        inc, f = _fresh(self.inclusion), _fresh(self.f)
        lhs = compose(fp, inc).matrix
        rhs = compose(ye, f).matrix
        dims = self.W.dimension == (inc.codomain.dimension + f.codomain.dimension
                                    - inc.domain.dimension)
        return {
            "extension_exact": lhs == rhs,
            "y_embed_isometry": defect(ye).epsilon_star == 0,
            "f_prime_defect": defect(fp).epsilon_star <= defect(f).epsilon_star,
            "dimension": dims,
        }

    def verify(self) -> "PushoutCertificate":
        failed = [k for k, ok in self.checks().items() if not ok]
        if failed:
            raise CertificateError(f"pushout certificate failed: {', '.join(failed)}")
        return self


def _complement(M: tuple, rows: int, cols: int) -> list[int]:
    """Standard basis indices completing the columns of ``M`` to a basis, greedily."""
    vecs = la.columns(M, cols) + [tuple(ONE if i == k else ZERO for i in range(rows))
                                  for k in range(rows)]
    chosen = la.independent_subset(vecs)
    return [k - cols for k in chosen if k >= cols]


def pushout_l1(X0: PolyhedralSpace, X1: PolyhedralSpace, inclusion: LinearMap,
               Y0: PolyhedralSpace, f: LinearMap) -> PushoutCertificate:
    """The pushout ``W = (X1 + Y0) / {(z, -f z)}`` under a weighted l1 norm.

    The sum carries ``lam ||x|| + ||y||`` with ``lam = max(1, ||f||)``; for
    ``||f|| <= 1`` this is the plain l1 sum.  The weight keeps ``Y0``
    isometric inside ``W`` when ``f`` expands.  Coordinates on ``W`` are
    those of ``X1`` followed by a standard-basis complement of ``f[X0]`` in
    ``Y0``.
    """
    n0, n1, m0 = X0.dimension, X1.dimension, Y0.dimension
    if inclusion.shape != (n1, n0) or f.shape != (m0, n0):
        raise SingularError("pushout maps have mismatched shapes")
    if defect(inclusion).epsilon_star != 0:
        raise CertificateError("pushout needs an isometric inclusion X0 -> X1")
    if not f.is_injective():
        raise NotInjectiveError("pushout needs an injective map X0 -> Y0")
    lam = max(ONE, op_norm(f)[0])
    K = _complement(f.matrix, m0, n0)
    basis = la.hstack(f.matrix, tuple(tuple(ONE if i == k else ZERO for k in K)
                                      for i in range(m0))) if m0 else ()
    qinv = la.inverse(basis) if m0 else ()
    zpart, cpart = qinv[:n0], qinv[n0:]
    dimW = n1 + len(K)
    top = la.matmul(inclusion.matrix, zpart, bcols=m0) if n1 else ()
    y_matrix = la.vstack(top, cpart)
    fp_matrix = la.vstack(la.identity(n1), la.zeros(len(K), n1))
    if dimW == 0:
        W = zero_space()
    else:
        points = [la.vscale(1 / lam, v) + (ZERO,) * len(K) for v in X1.ball_vertices]
        points += [la.matvec(y_matrix, w) for w in Y0.ball_vertices]
        W = make_space(VertexSystem(dimW, tuple(points)))
    cert = PushoutCertificate(W, LinearMap(X1, W, fp_matrix), LinearMap(Y0, W, y_matrix),
                              inclusion, f, lam, tuple(K))
    return cert.verify()


@dataclass(frozen=True)
class ExtensionCertificate:
    Y1: PolyhedralSpace
    g: LinearMap
    y_embed: LinearMap
    distance: Fraction
    epsilon: Fraction
    pushout: PushoutCertificate
    amalgam: AmalgamCertificate

    def checks(self) -> dict[str, bool]:
        g, ye = _fresh(self.g), _fresh(self.y_embed)
        inc, f = _fresh(self.pushout.inclusion), _fresh(self.pushout.f)
        dist = map_distance(compose(g, inc), compose(ye, f))
        return {
            "g_isometry": defect(g).epsilon_star == 0,
            "y_embed_isometry": defect(ye).epsilon_star == 0,
            "distance_reproduced": dist == self.distance,
            "distance_below_eps": dist < self.epsilon,
        }

    def verify(self) -> "ExtensionCertificate":
        failed = [k for k, ok in self.checks().items() if not ok]
        if failed:
            raise CertificateError(f"extension certificate failed: {', '.join(failed)}")
        return self


def extend_isometry(X0: PolyhedralSpace, X1: PolyhedralSpace, inclusion: LinearMap,
                    Y0: PolyhedralSpace, f: LinearMap, eps, shortcut: bool = True) -> ExtensionCertificate:
    """Extend an eps-isometry ``f: X0 -> Y0`` to an isometry ``g: X1 -> Y1``.

    ``Y1`` contains ``Y0`` isometrically (via ``y_embed``) and
    ``||g|X0 - f|| < eps``.  With ``shortcut`` set, an isometric pushout map
    is amalgamated trivially, which avoids doubling the dimension.
    """
    eps = q(eps)
    _require_eps(f, eps)
    po = pushout_l1(X0, X1, inclusion, Y0, f)
    if shortcut and defect(po.f_prime).epsilon_star == 0:
        am = trivial_amalgam(po.f_prime, eps)
    else:
        am = amalgamate(X1, po.W, po.f_prime, eps)
    g = am.i
    y_embed = compose(am.j, po.y_embed)
    dist = map_distance(compose(g, inclusion), compose(y_embed, f))
    if not dist < eps:
        raise CertificateError(
            f"extension distance {la.qstr(dist)} is not below eps = {la.qstr(eps)}")
    return ExtensionCertificate(am.Z, g, y_embed, dist, eps, po, am)
