"""Exact linear algebra over the rationals.

Vectors are tuples of :class:`fractions.Fraction`, matrices are tuples of
row tuples.  Nothing in here ever touches a float.
"""
from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, Sequence

from .errors import DimensionMismatch, SingularError

Vector = tuple  # tuple[Fraction, ...]
Matrix = tuple  # tuple[Vector, ...], row major

ZERO = Fraction(0)
ONE = Fraction(1)


def q(value) -> Fraction:
    """Coerce ``value`` to a Fraction, refusing floats.

    Accepts ints, Fractions and strings such as ``"3/7"`` or ``"-2"``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def qstr(value: Fraction) -> str:
    value = q(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def vec(values: Iterable) -> Vector:
    return tuple(q(v) for v in values)


def mat(rows: Iterable[Iterable]) -> Matrix:
    return tuple(vec(r) for r in rows)


def shape(m: Matrix, ncols: int | None = None) -> tuple[int, int]:
    """Shape of ``m``; ``ncols`` disambiguates matrices with zero rows."""
    rows = len(m)
    if rows == 0:
        return 0, (ncols or 0)
    return rows, len(m[0])


def zeros(rows: int, cols: int) -> Matrix:
    return tuple((ZERO,) * cols for _ in range(rows))


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def dot(u: Sequence, v: Sequence) -> Fraction:
    if len(u) != len(v):
        raise DimensionMismatch(f"dot of lengths {len(u)} and {len(v)}")
    return sum((a * b for a, b in zip(u, v)), ZERO)


def matvec(m: Matrix, v: Sequence) -> Vector:
    return tuple(dot(row, v) for row in m)


def vecmat(v: Sequence, m: Matrix) -> Vector:
    """Row vector times matrix, i.e. ``m.T @ v``."""
    if len(v) != len(m):
        raise DimensionMismatch(f"vector of length {len(v)} against {len(m)} rows")
    if not m:
        return ()
    return tuple(sum((v[i] * m[i][j] for i in range(len(m))), ZERO) for j in range(len(m[0])))


def transpose(m: Matrix, ncols: int = 0) -> Matrix:
    if not m:
        return tuple(() for _ in range(ncols))
    return tuple(zip(*m))


def matmul(a: Matrix, b: Matrix, inner: int | None = None, bcols: int | None = None) -> Matrix:
    """``a @ b``.  ``bcols`` is needed only when ``b`` has no rows."""
    if a and b and len(a[0]) != len(b):
        raise DimensionMismatch(f"matmul {len(a)}x{len(a[0])} @ {len(b)}x{len(b[0])}")
    if not b:
        cols = bcols or 0
        return tuple((ZERO,) * cols for _ in a)
    bt = transpose(b)
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def add(a: Matrix, b: Matrix) -> Matrix:
    if len(a) != len(b):
        raise DimensionMismatch("matrix sum of different shapes")
    return tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(a, b))


def sub(a: Matrix, b: Matrix) -> Matrix:
    if len(a) != len(b):
        raise DimensionMismatch("matrix difference of different shapes")
    return tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(a, b))


def scale(c, m: Matrix) -> Matrix:
    c = q(c)
    return tuple(tuple(c * x for x in row) for row in m)


def vsub(u: Sequence, v: Sequence) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def vscale(c, v: Sequence) -> Vector:
    c = q(c)
    return tuple(c * x for x in v)


def hstack(*blocks: Matrix) -> Matrix:
    rows = len(blocks[0])
    return tuple(tuple(x for b in blocks for x in b[i]) for i in range(rows))


def vstack(*blocks: Matrix) -> Matrix:
    return tuple(row for b in blocks for row in b)


def columns(m: Matrix, ncols: int | None = None) -> list[Vector]:
    return list(transpose(m, ncols or 0))


def from_columns(cols: Sequence[Sequence], nrows: int) -> Matrix:
    if not cols:
        return tuple(() for _ in range(nrows))
    return tuple(tuple(q(c[i]) for c in cols) for i in range(nrows))


def rref(m: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and the pivot columns."""
    a = [list(map(q, row)) for row in m]
    if not a:
        return a, []
    nrows, ncols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        piv = a[r][c]
        a[r] = [x / piv for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a, pivots


def rank(m: Sequence[Sequence]) -> int:
    return len(rref(m)[1])


def independent_subset(vectors: Sequence[Sequence]) -> list[int]:
    """Indices of a greedily chosen maximal independent subfamily, in order."""
    chosen: list[int] = []
    basis: list[list[Fraction]] = []  # echelon rows with their pivot positions
    pivcols: list[int] = []
    for idx, v in enumerate(vectors):
        w = list(map(q, v))
        for row, pc in zip(basis, pivcols):
            if w[pc] != 0:
                f = w[pc]
                w = [x - f * y for x, y in zip(w, row)]
        pc = next((k for k, x in enumerate(w) if x != 0), None)
        if pc is None:
            continue
        w = [x / w[pc] for x in w]
        basis.append(w)
        pivcols.append(pc)
        chosen.append(idx)
    return chosen


def solve(a: Matrix, b: Sequence) -> Vector:
    """Unique solution of ``a x = b``; raises if there is none or it is not unique."""
    n = len(a[0]) if a else 0
    aug = [list(row) + [q(bi)] for row, bi in zip(a, b)]
    red, piv = rref(aug)
    if n in piv:
        raise SingularError("inconsistent linear system")
    if len(piv) < n:
        raise SingularError("linear system has no unique solution")
    x = [ZERO] * n
    for row, c in zip(red, piv):
        x[c] = row[n]
    return tuple(x)


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    if any(len(row) != n for row in a):
        raise SingularError("only square matrices can be inverted")
    if n == 0:
        return ()
    aug = [list(row) + list(e) for row, e in zip(a, identity(n))]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise SingularError("matrix is singular")
    return tuple(tuple(row[n:]) for row in red)


def nullspace(m: Sequence[Sequence], ncols: int) -> list[Vector]:
    red, piv = rref(m) if m else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    out = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for row, c in zip(red, piv):
            v[c] = -row[f]
        out.append(tuple(v))
    return out


def primitive_int(v: Sequence) -> tuple[int, ...]:
    """Positive rescaling of a rational vector to a primitive integer vector."""
    if all(type(x) is int for x in v):
        g = reduce(gcd, v, 0)
        return tuple(x // g for x in v) if g > 1 else tuple(v)
    fr = [q(x) for x in v]
    den = reduce(lambda a, b: a * b // gcd(a, b), (x.denominator for x in fr), 1)
    ints = [int(x * den) for x in fr]
    g = reduce(gcd, (abs(i) for i in ints), 0)
    if g > 1:
        ints = [i // g for i in ints]
    return tuple(ints)


def is_zero(v: Sequence) -> bool:
    return all(x == 0 for x in v)
