"""Exact rational linear algebra.

Everything here works on ``fractions.Fraction``; no floating point enters a
verdict. Subspaces are stored by the non-zero rows of their reduced row
echelon form, which makes two subspaces equal exactly when their dataclasses
compare equal.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.exceptions import DimensionMismatchError, ExtensionError, InvalidParameterError

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]


def to_fraction(value: Any) -> Fraction:
    """Coerce ints, strings such as ``"-3/4"`` and exact floats to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidParameterError(f"boolean {value!r} is not a rational number")
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidParameterError(f"cannot parse {value!r} as a rational: {e}") from e
    if isinstance(value, np.integer):
        return Fraction(int(value))
    try:
        return Fraction(value)
    except (TypeError, ValueError) as e:
        raise InvalidParameterError(f"cannot convert {value!r} to a rational: {e}") from e


def as_vector(values: Iterable[Any]) -> Vector:
    return tuple(to_fraction(v) for v in values)


def zero_vector(n: int) -> Vector:
    return tuple(Fraction(0) for _ in range(n))


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(u, v)), Fraction(0))


def rational_sqrt(value: Fraction) -> Optional[Fraction]:
    """Exact square root of a non-negative rational, or None if it is irrational."""
    value = to_fraction(value)
    if value < 0:
        return None
    num, den = value.numerator, value.denominator
    root_num, root_den = math.isqrt(num), math.isqrt(den)
    if root_num * root_num == num and root_den * root_den == den:
        return Fraction(root_num, root_den)
    return None


def euclidean_norm(vector: Sequence[Any]) -> Union[Fraction, float]:
    """|v|_2, exact when the squared norm is a rational square."""
    squared = sum((to_fraction(x) ** 2 for x in vector), Fraction(0))
    root = rational_sqrt(squared)
    return root if root is not None else math.sqrt(squared)


@dataclass(frozen=True)
class RatMatrix:
    entries: Tuple[Vector, ...]

    def __post_init__(self):
        rows = tuple(as_vector(row) for row in self.entries)
        if not rows or not rows[0]:
            raise DimensionMismatchError("a matrix needs at least one row and one column")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise DimensionMismatchError(f"row {i} has {len(row)} entries, expected {width}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[Any]]) -> "RatMatrix":
        return cls(tuple(tuple(r) for r in rows))

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RatMatrix":
        return cls(tuple(zero_vector(cols) for _ in range(rows)))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def apply(self, vector: Sequence[Any]) -> Vector:
        vector = as_vector(vector)
        if len(vector) != self.cols:
            raise DimensionMismatchError(f"vector of length {len(vector)} for a matrix with {self.cols} columns")
        return tuple(dot(row, vector) for row in self.entries)

    def transpose(self) -> "RatMatrix":
        return RatMatrix(tuple(zip(*self.entries)))


def _reduce(rows: Sequence[Sequence[Fraction]], ncols: int) -> Tuple[List[List[Fraction]], List[int]]:
    """Gauss-Jordan elimination; returns the reduced rows and the pivot columns."""
    rows = [list(r) for r in rows]
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r == len(rows):
            break
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        lead = rows[r][c]
        if lead != 1:
            rows[r] = [x / lead for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                factor = rows[i][c]
                rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return rows, pivots


def rref(mat: RatMatrix) -> RatMatrix:
    reduced, _ = _reduce(mat.entries, mat.cols)
    return RatMatrix.from_rows(reduced)


def rank(mat: RatMatrix) -> int:
    _, pivots = _reduce(mat.entries, mat.cols)
    return len(pivots)


def solve(mat: RatMatrix, rhs: Sequence[Any]) -> Optional[Vector]:
    """One solution of ``mat @ x = rhs`` (free variables set to zero), or None."""
    rhs = as_vector(rhs)
    if len(rhs) != mat.rows:
        raise DimensionMismatchError(f"right-hand side of length {len(rhs)} for {mat.rows} equations")
    augmented = [row + (b,) for row, b in zip(mat.entries, rhs)]
    reduced, pivots = _reduce(augmented, mat.cols + 1)
    if pivots and pivots[-1] == mat.cols:
        return None
    solution = [Fraction(0)] * mat.cols
    for row, p in zip(reduced, pivots):
        solution[p] = row[-1]
    return tuple(solution)


@dataclass(frozen=True)
class Subspace:
    """A subspace of Q^n given by the non-zero rows of its rref."""

    ambient_dim: int
    basis: Tuple[Vector, ...] = ()

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise DimensionMismatchError(f"ambient dimension must be positive, got {self.ambient_dim}")
        basis = tuple(as_vector(v) for v in self.basis)
        for v in basis:
            if len(v) != self.ambient_dim:
                raise DimensionMismatchError(f"basis vector of length {len(v)} in Q^{self.ambient_dim}")
        object.__setattr__(self, "basis", basis)

    @classmethod
    def span(cls, vectors: Iterable[Sequence[Any]], ambient_dim: int) -> "Subspace":
        vectors = [as_vector(v) for v in vectors]
        if not vectors:
            return cls(ambient_dim)
        reduced, pivots = _reduce(vectors, ambient_dim)
        return cls(ambient_dim, tuple(tuple(row) for row in reduced[: len(pivots)]))

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim)

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, RatMatrix.identity(ambient_dim).entries)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_zero(self) -> bool:
        return not self.basis

    @cached_property
    def pivots(self) -> Tuple[int, ...]:
        return tuple(next(i for i, x in enumerate(v) if x != 0) for v in self.basis)

    def residual(self, vector: Sequence[Any]) -> Vector:
        vector = as_vector(vector)
        if len(vector) != self.ambient_dim:
            raise DimensionMismatchError(f"vector of length {len(vector)} tested against Q^{self.ambient_dim}")
        out = list(vector)
        for p, row in zip(self.pivots, self.basis):
            coeff = vector[p]
            if coeff != 0:
                out = [x - coeff * y for x, y in zip(out, row)]
        return tuple(out)

    def contains(self, vector: Sequence[Any]) -> bool:
        return all(x == 0 for x in self.residual(vector))

    def coordinates(self, vector: Sequence[Any]) -> Optional[Vector]:
        """Coefficients of ``vector`` in the rref basis; None if it is not a member."""
        vector = as_vector(vector)
        if not self.contains(vector):
            return None
        return tuple(vector[p] for p in self.pivots)

    def residual_rows(self, rows: np.ndarray) -> np.ndarray:
        """Row-wise residual for a 2-d array of candidates (object or float dtype)."""
        if self.is_zero:
            return rows
        dtype = object if rows.dtype == object else float
        basis = np.array(self.basis, dtype=object)
        if dtype is float:
            basis = basis.astype(float)
        coeffs = rows[:, list(self.pivots)]
        return rows - coeffs.dot(basis)

    def complement_basis(self) -> List[Vector]:
        """Standard basis vectors at the non-pivot columns; they span a complement."""
        taken = set(self.pivots)
        return [
            tuple(Fraction(int(i == c)) for i in range(self.ambient_dim))
            for c in range(self.ambient_dim)
            if c not in taken
        ]


def kernel(mat: RatMatrix) -> Subspace:
    reduced, pivots = _reduce(mat.entries, mat.cols)
    free = [c for c in range(mat.cols) if c not in pivots]
    vectors = []
    for f in free:
        v = [Fraction(0)] * mat.cols
        v[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            v[p] = -row[f]
        vectors.append(v)
    return Subspace.span(vectors, mat.cols)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatchError(f"cannot add subspaces of Q^{a.ambient_dim} and Q^{b.ambient_dim}")
    return Subspace.span(a.basis + b.basis, a.ambient_dim)


def intersect(a: Subspace, b: Subspace) -> Subspace:
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatchError(f"cannot intersect subspaces of Q^{a.ambient_dim} and Q^{b.ambient_dim}")
    if a.is_zero or b.is_zero:
        return Subspace.zero(a.ambient_dim)
    # x_1 a_1 + ... + x_p a_p = y_1 b_1 + ... + y_q b_q
    columns = list(a.basis) + [tuple(-x for x in v) for v in b.basis]
    relations = kernel(RatMatrix(tuple(zip(*columns))))
    vectors = []
    for rel in relations.basis:
        combo = [Fraction(0)] * a.ambient_dim
        for coeff, v in zip(rel[: a.dim], a.basis):
            if coeff != 0:
                combo = [x + coeff * y for x, y in zip(combo, v)]
        vectors.append(combo)
    return Subspace.span(vectors, a.ambient_dim)


def extend_functional(
    ambient_dim: int,
    e_space: Subspace,
    f_space: Subspace,
    psi_on_e_basis: Sequence[Any],
) -> Vector:
    """Extend psi from E to all of Q^n so that it vanishes on F.

    ``psi_on_e_basis`` lists the values of psi on ``e_space.basis``. The
    extension is zero on the complement of E+F spanned by the standard
    vectors at the non-pivot columns of E+F, which makes the result unique.
    """
    psi = as_vector(psi_on_e_basis)
    if e_space.ambient_dim != ambient_dim or f_space.ambient_dim != ambient_dim:
        raise DimensionMismatchError(f"E and F must both live in Q^{ambient_dim}")
    if len(psi) != e_space.dim:
        raise DimensionMismatchError(f"{len(psi)} values given for a {e_space.dim}-dimensional E")

    for vec in intersect(e_space, f_space).basis:
        value = dot(e_space.coordinates(vec), psi)
        if value != 0:
            raise ExtensionError(
                f"functional takes the value {value} on {list(map(str, vec))} in E∩F", vector=vec, value=value
            )

    complement = subspace_sum(e_space, f_space).complement_basis()
    constraints = list(e_space.basis) + list(f_space.basis) + complement
    rhs = list(psi) + [Fraction(0)] * (f_space.dim + len(complement))
    if not constraints:
        return zero_vector(ambient_dim)
    solution = solve(RatMatrix(tuple(constraints)), rhs)
    if solution is None:
        raise ExtensionError("extension system is inconsistent although psi vanishes on E∩F")
    logger.debug(f"extended functional from dim E={e_space.dim}, dim F={f_space.dim} to Q^{ambient_dim}")
    return solution
