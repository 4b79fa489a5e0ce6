"""Finite-dimensional normed spaces whose unit ball is a rational symmetric polytope."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import kernel
from .errors import AsymmetricError, DegenerateError, DimensionMismatch, SingularError
from .kernel import HalfspaceSystem, VertexSystem
from .linalg import ONE, ZERO, dot, independent_subset, vec

__all__ = [
    "PolyhedralSpace", "Functional", "make_space", "norm", "gauge", "dual_norm",
    "subspace", "zero_space", "linf", "l1", "polar_space", "same_ball",
]


@dataclass(frozen=True, eq=False)
class PolyhedralSpace:
    """A normed space ``(R^d, ||.||)`` with a polyhedral unit ball.

    ``ball_facets`` are rows ``<a, x> <= 1``; their normals are exactly the
    extreme points of the dual ball and are kept again as ``dual_vertices``.
    """
    dimension: int
    ball_facets: HalfspaceSystem
    ball_vertices: VertexSystem
    dual_vertices: VertexSystem
    name: str = ""

    def norm(self, x: Sequence) -> Fraction:
        return norm(self, x)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return (f"<PolyhedralSpace{label} dim={self.dimension} "
                f"facets={len(self.ball_facets)} vertices={len(self.ball_vertices)}>")


@dataclass(frozen=True)
class Functional:
    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients", vec(self.coefficients))

    def __call__(self, x: Sequence) -> Fraction:
        return dot(self.coefficients, x)


def _validate_symmetric(description):
    if not kernel.is_symmetric(description):
        raise AsymmetricError("ball not symmetric: the description is not closed under x -> -x")


def make_space(description: HalfspaceSystem | VertexSystem, name: str = "") -> PolyhedralSpace:
    """Build a space from either description of its unit ball.

    Raises :class:`AsymmetricError`, :class:`DegenerateError` or
    :class:`~gurarii.errors.UnboundedError` naming the violated invariant.
    """
    d = description.dimension
    if d == 0:
        return zero_space(name)
    if isinstance(description, HalfspaceSystem):
        _validate_symmetric(description)
        if any(b != 1 for b in description.offsets):
            raise DegenerateError("ball does not contain the origin in its interior")
        vertices, facets = kernel.describe_h(description)
    elif isinstance(description, VertexSystem):
        _validate_symmetric(description)
        vertices, facets = kernel.describe_v(description)
    else:
        raise TypeError(f"expected a HalfspaceSystem or VertexSystem, got {type(description).__name__}")
    dual = VertexSystem(d, tuple(facets.normals))
    return PolyhedralSpace(d, facets, vertices, dual, name)


def zero_space(name: str = "") -> PolyhedralSpace:
    return PolyhedralSpace(0, HalfspaceSystem(0), VertexSystem(0), VertexSystem(0), name)


def linf(d: int, name: str = "") -> PolyhedralSpace:
    normals = []
    for k in range(d):
        for s in (1, -1):
            normals.append(tuple(s if i == k else 0 for i in range(d)))
    return make_space(HalfspaceSystem.from_normals(d, normals), name or f"linf{d}")


def l1(d: int, name: str = "") -> PolyhedralSpace:
    points = []
    for k in range(d):
        for s in (1, -1):
            points.append(tuple(s if i == k else 0 for i in range(d)))
    return make_space(VertexSystem(d, tuple(points)), name or f"l1_{d}")


def _check_dim(space: PolyhedralSpace, x: Sequence):
    if len(x) != space.dimension:
        raise DimensionMismatch(
            f"vector of length {len(x)} in a {space.dimension}-dimensional space")


def norm(space: PolyhedralSpace, x: Sequence) -> Fraction:
    """``max |<v*, x>|`` over the dual vertices."""
    x = vec(x)
    _check_dim(space, x)
    return max((dot(v, x) for v in space.dual_vertices), default=ZERO)


def gauge(space: PolyhedralSpace, x: Sequence) -> Fraction:
    """``min{lambda >= 0 : x in lambda * ball}``, by an LP over the ball's vertices.

    Independent of :func:`norm`: it only reads ``ball_vertices``.
    """
    x = vec(x)
    _check_dim(space, x)
    if space.dimension == 0:
        return ZERO
    pts = space.ball_vertices.points
    m = [[p[k] for p in pts] for k in range(space.dimension)]
    status, mu, _ = kernel.standard_form_lp([ONE] * len(pts), m, x)
    if status != "optimal":
        raise DegenerateError("gauge LP failed; ball vertices do not span the space")
    return sum(mu, ZERO)


def dual_norm(space: PolyhedralSpace, phi: Functional | Sequence) -> Fraction:
    coeffs = phi.coefficients if isinstance(phi, Functional) else vec(phi)
    _check_dim(space, coeffs)
    return max((dot(coeffs, v) for v in space.ball_vertices), default=ZERO)


def polar_space(space: PolyhedralSpace, name: str = "") -> PolyhedralSpace:
    """The dual space, whose unit ball is the polar of ``space``'s ball."""
    if space.dimension == 0:
        return zero_space(name)
    return PolyhedralSpace(
        space.dimension,
        HalfspaceSystem.from_normals(space.dimension, space.ball_vertices.points),
        space.dual_vertices,
        space.ball_vertices,
        name,
    )


def same_ball(a: PolyhedralSpace, b: PolyhedralSpace) -> bool:
    return a is b or (a.dimension == b.dimension and a.ball_facets == b.ball_facets)


def subspace(space: PolyhedralSpace, basis: Sequence[Sequence], name: str = ""):
    """Induced norm on ``span(basis)``, in basis coordinates.

    Returns ``(sub, inclusion)`` where ``inclusion`` maps coordinates to
    vectors of ``space`` and is an exact isometry by construction.
    """
    from .operators import LinearMap

    basis = [vec(b) for b in basis]
    for b in basis:
        _check_dim(space, b)
    if len(independent_subset(basis)) != len(basis):
        raise SingularError("subspace basis is linearly dependent")
    k = len(basis)
    matrix = tuple(tuple(b[i] for b in basis) for i in range(space.dimension))
    if k == 0:
        sub = zero_space(name)
    else:
        normals = [tuple(dot(v, b) for b in basis) for v in space.dual_vertices]
        sub = make_space(HalfspaceSystem.from_normals(k, normals), name)
    return sub, LinearMap(sub, space, matrix)
