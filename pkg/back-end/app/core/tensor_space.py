"""The spaces V and V⊗R^ℓ, the vectors D_j, and the maps φ and Φ.

A tensor in V⊗R^ℓ is an m×ℓ matrix whose row j is the R^ℓ value attached to
digit j; it flattens row-major, so entry (j, k) sits at index (j-1)·ℓ + k.
Digits are 1-based throughout.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exact_linalg import (
    RatMatrix,
    Subspace,
    Vector,
    as_vector,
    dot,
    kernel,
    rank,
    solve,
    zero_vector,
)
from app.exceptions import (
    DependentBasisError,
    DimensionMismatchError,
    InvalidParameterError,
    NotInSubspaceError,
    PhiRangeError,
    TensorValidationError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelParams:
    m: int
    ell: int

    def __post_init__(self):
        if self.m < 2:
            raise InvalidParameterError(f"branching factor m must be at least 2, got {self.m}")
        if self.ell < 1:
            raise InvalidParameterError(f"target dimension ell must be at least 1, got {self.ell}")

    @property
    def tensor_dim(self) -> int:
        return self.m * self.ell

    def check_digit(self, j: int) -> None:
        if not 1 <= j <= self.m:
            raise InvalidParameterError(f"digit {j} outside [1..{self.m}]")


@dataclass(frozen=True)
class TensorVW:
    entries: Tuple[Vector, ...]

    def __post_init__(self):
        rows = tuple(as_vector(row) for row in self.entries)
        if len(rows) < 2 or not rows[0]:
            raise DimensionMismatchError(f"a tensor needs m >= 2 rows and ell >= 1 columns, got {len(rows)} rows")
        ell = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != ell:
                raise DimensionMismatchError(f"row {i + 1} has {len(row)} entries, expected {ell}")
        for k in range(ell):
            total = sum((row[k] for row in rows), Fraction(0))
            if total != 0:
                raise TensorValidationError(f"column {k + 1} sums to {total}, expected 0", column=k + 1, total=total)
        object.__setattr__(self, "entries", rows)

    @classmethod
    def zero(cls, params: ModelParams) -> "TensorVW":
        return cls(tuple(zero_vector(params.ell) for _ in range(params.m)))

    @classmethod
    def from_flat(cls, vector: Sequence[Any], params: ModelParams) -> "TensorVW":
        vector = as_vector(vector)
        if len(vector) != params.tensor_dim:
            raise DimensionMismatchError(f"flat tensor of length {len(vector)}, expected {params.tensor_dim}")
        ell = params.ell
        return cls(tuple(vector[i * ell:(i + 1) * ell] for i in range(params.m)))

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def ell(self) -> int:
        return len(self.entries[0])

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.m, self.ell)

    def flatten(self) -> Vector:
        return tuple(x for row in self.entries for x in row)

    def __add__(self, other: "TensorVW") -> "TensorVW":
        return TensorVW(tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def __sub__(self, other: "TensorVW") -> "TensorVW":
        return self + (-other)

    def __mul__(self, scalar: Any) -> "TensorVW":
        c = as_vector([scalar])[0]
        return TensorVW(tuple(tuple(c * x for x in row) for row in self.entries))

    __rmul__ = __mul__

    def __neg__(self) -> "TensorVW":
        return self * -1

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=object)


def _check_shape(tensor: TensorVW, params: ModelParams) -> None:
    if tensor.m != params.m or tensor.ell != params.ell:
        raise DimensionMismatchError(f"tensor of shape {tensor.m}x{tensor.ell}, expected {params.m}x{params.ell}")


@dataclass(frozen=True)
class WSpace:
    params: ModelParams
    basis: Tuple[TensorVW, ...] = ()

    def __post_init__(self):
        basis = tuple(self.basis)
        for tensor in basis:
            _check_shape(tensor, self.params)
        for i in range(1, len(basis) + 1):
            if rank(RatMatrix(tuple(t.flatten() for t in basis[:i]))) < i:
                raise DependentBasisError(f"basis tensor {i} is a combination of the previous ones", index=i - 1)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def zero(cls, params: ModelParams) -> "WSpace":
        return cls(params)

    @classmethod
    def full(cls, params: ModelParams) -> "WSpace":
        """All of V⊗R^ℓ, spanned by (e_i - e_m)⊗e_k."""
        tensors = []
        for i in range(params.m - 1):
            for k in range(params.ell):
                rows = [list(zero_vector(params.ell)) for _ in range(params.m)]
                rows[i][k] = Fraction(1)
                rows[-1][k] = Fraction(-1)
                tensors.append(TensorVW(tuple(tuple(r) for r in rows)))
        return cls(params, tuple(tensors))

    @classmethod
    def spanned_by(cls, params: ModelParams, tensors: Iterable[TensorVW]) -> "WSpace":
        """Keep tensors in order, dropping those dependent on earlier ones."""
        kept: List[TensorVW] = []
        for tensor in tensors:
            candidate = kept + [tensor]
            if rank(RatMatrix(tuple(t.flatten() for t in candidate))) == len(candidate):
                kept.append(tensor)
        return cls(params, tuple(kept))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def subspace(self) -> Subspace:
        return Subspace.span((t.flatten() for t in self.basis), self.params.tensor_dim)

    def contains(self, tensor: TensorVW) -> bool:
        _check_shape(tensor, self.params)
        return self.subspace.contains(tensor.flatten())

    def coordinates(self, tensor: TensorVW) -> Optional[Vector]:
        """Coefficients of ``tensor`` in this space's own basis, or None."""
        _check_shape(tensor, self.params)
        if not self.contains(tensor):
            return None
        if not self.basis:
            return ()
        columns = RatMatrix(tuple(zip(*(t.flatten() for t in self.basis))))
        return solve(columns, tensor.flatten())


@dataclass(frozen=True)
class PhiMap:
    domain: WSpace
    images: Tuple[Vector, ...] = ()

    def __post_init__(self):
        images = tuple(as_vector(v) for v in self.images)
        if len(images) != self.domain.dim:
            raise DimensionMismatchError(f"{len(images)} images given for a {self.domain.dim}-dimensional W")
        m = self.domain.params.m
        for i, image in enumerate(images):
            if len(image) != m:
                raise PhiRangeError(f"image {i + 1} has length {len(image)}, expected {m}", index=i)
            if sum(image, Fraction(0)) != 0:
                raise PhiRangeError(f"image {i + 1} has coordinate sum {sum(image, Fraction(0))}, not in V", index=i)
        object.__setattr__(self, "images", images)

    @property
    def params(self) -> ModelParams:
        return self.domain.params

    @cached_property
    def images_on_rref_basis(self) -> Tuple[Vector, ...]:
        m = self.params.m
        out = []
        for row in self.domain.subspace.basis:
            coeffs = self.domain.coordinates(TensorVW.from_flat(row, self.params))
            out.append(tuple(dot(coeffs, [image[i] for image in self.images]) for i in range(m)))
        return tuple(out)

    @cached_property
    def linear_matrix(self) -> np.ndarray:
        """(mℓ × m) matrix L with φ(t) = flat(t) @ L for every t in W."""
        mat = np.full((self.params.tensor_dim, self.params.m), Fraction(0), dtype=object)
        for p, image in zip(self.domain.subspace.pivots, self.images_on_rref_basis):
            mat[p, :] = image
        return mat


@dataclass(frozen=True)
class ExtendedMap:
    """Φ: V⊗R^ℓ → R^m, stored as m functionals on Q^{mℓ}."""

    params: ModelParams
    functionals: Tuple[Vector, ...]

    def __post_init__(self):
        rows = tuple(as_vector(v) for v in self.functionals)
        if len(rows) != self.params.m:
            raise DimensionMismatchError(f"{len(rows)} functionals given, expected m={self.params.m}")
        for row in rows:
            if len(row) != self.params.tensor_dim:
                raise DimensionMismatchError(f"functional of length {len(row)}, expected {self.params.tensor_dim}")
        object.__setattr__(self, "functionals", rows)

    @classmethod
    def zero(cls, params: ModelParams) -> "ExtendedMap":
        return cls(params, tuple(zero_vector(params.tensor_dim) for _ in range(params.m)))

    def apply(self, tensor: TensorVW) -> Vector:
        _check_shape(tensor, self.params)
        flat = tensor.flatten()
        return tuple(dot(row, flat) for row in self.functionals)

    @cached_property
    def linear_matrix(self) -> np.ndarray:
        return np.array(self.functionals, dtype=object).T

    def coefficient(self, j: int, i: int) -> Vector:
        """Coefficients g with (Φ(D_j⊗a))_i = g·a."""
        self.params.check_digit(j)
        self.params.check_digit(i)
        d = nasty_vector(j, self.params)
        ell = self.params.ell
        row = self.functionals[i - 1]
        return tuple(sum((d[r] * row[r * ell + k] for r in range(self.params.m)), Fraction(0)) for k in range(ell))

    def with_entry_shifted(self, i: int, index: int, delta: Any) -> "ExtendedMap":
        """Copy with functional i (1-based) changed by ``delta`` at flat ``index``."""
        rows = [list(r) for r in self.functionals]
        rows[i - 1][index] += as_vector([delta])[0]
        return ExtendedMap(self.params, tuple(tuple(r) for r in rows))


def nasty_vector(j: int, params: ModelParams) -> Vector:
    params.check_digit(j)
    return tuple(Fraction(params.m - 1) if i == j else Fraction(-1) for i in range(1, params.m + 1))


def rank_one(v: Sequence[Any], a: Sequence[Any]) -> TensorVW:
    v, a = as_vector(v), as_vector(a)
    if sum(v, Fraction(0)) != 0:
        raise NotInSubspaceError(f"vector {[str(x) for x in v]} is not in V (coordinate sum {sum(v, Fraction(0))})")
    return TensorVW(tuple(tuple(vj * ak for ak in a) for vj in v))


def nasty_subspace(j: int, params: ModelParams) -> Subspace:
    """𝔇_j = {D_j⊗a} as a subspace of Q^{mℓ}."""
    d = nasty_vector(j, params)
    unit = [tuple(Fraction(int(k == t)) for k in range(params.ell)) for t in range(params.ell)]
    return Subspace.span((rank_one(d, e).flatten() for e in unit), params.tensor_dim)


def nasty_slice(j: int, w: WSpace) -> Subspace:
    """A_j = {a in R^ℓ : D_j⊗a in W}."""
    params = w.params
    d = nasty_vector(j, params)
    ell = params.ell
    # unknowns (c, a): sum_r c_r w_r - D_j⊗a = 0
    columns = list(w.subspace.basis)
    for t in range(ell):
        columns.append(tuple(-d[r] if k == t else Fraction(0) for r in range(params.m) for k in range(ell)))
    relations = kernel(RatMatrix(tuple(zip(*columns))))
    offset = w.subspace.dim
    return Subspace.span((rel[offset:] for rel in relations.basis), ell)


def apply_phi(phi: PhiMap, tensor: TensorVW) -> Vector:
    coeffs = phi.domain.coordinates(tensor)
    if coeffs is None:
        raise NotInSubspaceError("tensor is not in W, φ is undefined there")
    m = phi.params.m
    return tuple(dot(coeffs, [image[i] for image in phi.images]) for i in range(m))


def has_equal_coordinates(v: Sequence[Any]) -> bool:
    """True when at least m-1 of the coordinates of v coincide."""
    v = as_vector(v)
    return max(Counter(v).values()) >= len(v) - 1


def nasty_multiple(v: Sequence[Any]) -> Optional[Tuple[int, Fraction]]:
    """(j, c) with v = c·D_j for the first such j, if v in V has m-1 equal coordinates."""
    v = as_vector(v)
    if sum(v, Fraction(0)) != 0:
        raise NotInSubspaceError("vector is not in V")
    m = len(v)
    for j in range(1, m + 1):
        others = [x for i, x in enumerate(v, start=1) if i != j]
        if all(x == others[0] for x in others):
            return j, -others[0]
    return None
