"""Finite-depth martingales on the m-adic tree and the operators acting on them.

A martingale stopped at depth N is stored through its leaf values F_N; every
F_n with n < N is obtained by averaging, so the martingale property holds by
construction. Leaves are either a dense numpy array of shape (m^N, ℓ), with
``Fraction`` objects for exact work or float64 for monitoring, or a sparse
mapping from leaf index to value for atomic martingales whose depth makes
m^N too large to materialise.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from sympy import integer_nthroot

from app.config import settings
from app.core.exact_linalg import euclidean_norm, to_fraction
from app.core.tensor_space import ExtendedMap, ModelParams, PhiMap, WSpace
from app.core.tree_model import Atom
from app.exceptions import (
    DepthTooLargeError,
    DimensionMismatchError,
    InvalidParameterError,
    SobolevViolationError,
)

logger = logging.getLogger(__name__)

Scalar = Union[Fraction, float]
LinearMap = Union[PhiMap, ExtendedMap]


def _zeros(shape: Any, exact: bool) -> np.ndarray:
    if exact:
        return np.full(shape, Fraction(0), dtype=object)
    return np.zeros(shape, dtype=float)


def _is_zero(values: np.ndarray, exact: bool) -> np.ndarray:
    """Boolean mask over the first axis: rows that vanish (exactly or to FLOAT_TOL)."""
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if exact:
        return np.array([all(x == 0 for x in row) for row in values], dtype=bool)
    return np.all(np.abs(values.astype(float)) <= settings.FLOAT_TOL, axis=1)


@dataclass(eq=False)
class FiniteMartingale:
    params: ModelParams
    depth: int
    dense: Optional[np.ndarray] = None
    sparse: Optional[Dict[int, Tuple[Fraction, ...]]] = None

    def __post_init__(self):
        if self.depth < 0:
            raise InvalidParameterError(f"depth must be non-negative, got {self.depth}")
        if (self.dense is None) == (self.sparse is None):
            raise InvalidParameterError("exactly one of dense or sparse leaf storage must be given")
        m, ell = self.params.m, self.params.ell
        if self.dense is not None:
            if self.dense.shape != (m ** self.depth, ell):
                raise DimensionMismatchError(f"leaf array of shape {self.dense.shape}, expected {(m ** self.depth, ell)}")
        else:
            for leaf, value in self.sparse.items():
                if not 0 <= leaf < m ** self.depth or len(value) != ell:
                    raise DimensionMismatchError(f"sparse leaf {leaf} with value of length {len(value)} is out of shape")

    @classmethod
    def from_leaves(cls, params: ModelParams, depth: int, leaves: Any, exact: bool = True) -> "FiniteMartingale":
        if exact:
            raw = np.asarray(leaves, dtype=object).reshape(params.m ** depth, params.ell)
            array = np.vectorize(to_fraction, otypes=[object])(raw)
        else:
            array = np.asarray(leaves, dtype=float).reshape(params.m ** depth, params.ell)
        return cls(params, depth, dense=array)

    @classmethod
    def from_support(cls, params: ModelParams, depth: int, support: Mapping[int, Sequence[Any]]) -> "FiniteMartingale":
        cleaned = {}
        for leaf, value in support.items():
            value = tuple(to_fraction(x) for x in value)
            if any(x != 0 for x in value):
                cleaned[int(leaf)] = value
        return cls(params, depth, sparse=cleaned)

    @classmethod
    def constant(cls, params: ModelParams, depth: int, value: Sequence[Any]) -> "FiniteMartingale":
        row = [to_fraction(x) for x in value]
        return cls.from_leaves(params, depth, [row] * params.m ** depth)

    @property
    def is_sparse(self) -> bool:
        return self.sparse is not None

    @property
    def exact(self) -> bool:
        return self.sparse is not None or self.dense.dtype == object

    @property
    def leaf_values(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        count = self.params.m ** self.depth
        if count > settings.DENSE_LEAF_LIMIT:
            raise DepthTooLargeError(f"{count} leaves exceed DENSE_LEAF_LIMIT={settings.DENSE_LEAF_LIMIT}")
        leaves = _zeros((count, self.params.ell), exact=True)
        for leaf, value in self.sparse.items():
            leaves[leaf] = value
        return leaves

    def densified(self) -> "FiniteMartingale":
        return FiniteMartingale(self.params, self.depth, dense=self.leaf_values)

    def value_at(self, atom: Atom) -> np.ndarray:
        if atom.generation != self.depth:
            raise InvalidParameterError(f"atom {atom} is not a depth-{self.depth} atom")
        return self.atom_mean(self.depth, atom.index)

    def atom_mean(self, n: int, index: int) -> np.ndarray:
        """F_n on the depth-n atom with lexicographic ``index``."""
        self._check_level(n)
        span = self.params.m ** (self.depth - n)
        if self.dense is not None:
            return self.dense[index * span:(index + 1) * span].sum(axis=0) / span
        total = _zeros(self.params.ell, exact=True)
        for leaf, value in self.sparse.items():
            if leaf // span == index:
                total = total + np.array(value, dtype=object)
        return total / span

    def level(self, n: int) -> np.ndarray:
        """F_n as an (m^n, ℓ) array in lexicographic atom order."""
        self._check_level(n)
        m, ell = self.params.m, self.params.ell
        span = m ** (self.depth - n)
        if self.dense is not None:
            return self.dense.reshape(m ** n, span, ell).sum(axis=1) / span
        if m ** n > settings.DENSE_LEAF_LIMIT:
            raise DepthTooLargeError(f"level {n} has {m ** n} atoms, above DENSE_LEAF_LIMIT")
        out = _zeros((m ** n, ell), exact=True)
        for leaf, value in self.sparse.items():
            out[leaf // span] = out[leaf // span] + np.array(value, dtype=object)
        return out / span

    def difference_tensor(self, n: int, parent_index: int) -> np.ndarray:
        """f_{n+1} restricted to the children of a depth-n atom, as an m×ℓ array."""
        if not 0 <= n < self.depth:
            raise InvalidParameterError(f"level {n} outside [0, {self.depth})")
        m = self.params.m
        parent = self.atom_mean(n, parent_index)
        return np.array([self.atom_mean(n + 1, parent_index * m + i) - parent for i in range(m)])

    def active_atoms(self) -> List[Tuple[int, int]]:
        """(level, index) pairs of atoms whose children may carry a non-zero difference."""
        m = self.params.m
        if self.dense is not None:
            return [(n, i) for n in range(self.depth) for i in range(m ** n)]
        seen = set()
        for leaf in self.sparse:
            for n in range(self.depth):
                seen.add((n, leaf // m ** (self.depth - n)))
        return sorted(seen)

    def scaled(self, c: Any) -> "FiniteMartingale":
        if self.sparse is not None:
            c = to_fraction(c)
            return FiniteMartingale.from_support(self.params, self.depth, {k: [c * x for x in v] for k, v in self.sparse.items()})
        factor = to_fraction(c) if self.exact else float(c)
        return FiniteMartingale(self.params, self.depth, dense=self.dense * factor)

    def __add__(self, other: "FiniteMartingale") -> "FiniteMartingale":
        if other.params != self.params or other.depth != self.depth:
            raise DimensionMismatchError("martingales of different shapes cannot be added")
        if self.sparse is not None and other.sparse is not None:
            merged: Dict[int, Any] = dict(self.sparse)
            for leaf, value in other.sparse.items():
                base = merged.get(leaf, (Fraction(0),) * self.params.ell)
                merged[leaf] = tuple(x + y for x, y in zip(base, value))
            return FiniteMartingale.from_support(self.params, self.depth, merged)
        return FiniteMartingale(self.params, self.depth, dense=self.leaf_values + other.leaf_values)

    def _check_level(self, n: int) -> None:
        if not 0 <= n <= self.depth:
            raise InvalidParameterError(f"level {n} outside [0, {self.depth}]")


@dataclass(eq=False)
class ScalarTreeFunction:
    params: ModelParams
    depth: int
    values: np.ndarray = field(repr=False)

    def value_at(self, atom: Atom) -> Scalar:
        return self.values[atom.index]

    def __add__(self, other: "ScalarTreeFunction") -> "ScalarTreeFunction":
        return ScalarTreeFunction(self.params, self.depth, self.values + other.values)


@dataclass(frozen=True)
class SobolevVerdict:
    valid: bool
    level: Optional[int] = None
    atom: Optional[Atom] = None


def difference(f: FiniteMartingale, n: int) -> np.ndarray:
    """f_n on the depth-n atoms (f_0 = F_0)."""
    if not 0 <= n <= f.depth:
        raise InvalidParameterError(f"difference index {n} outside [0, {f.depth}]")
    if n == 0:
        return f.level(0)
    return f.level(n) - np.repeat(f.level(n - 1), f.params.m, axis=0)


def validate_sobolev(f: FiniteMartingale, w: WSpace) -> SobolevVerdict:
    if w.params != f.params:
        raise DimensionMismatchError(f"martingale with {f.params} checked against W with {w.params}")
    m, ell = f.params.m, f.params.ell
    if f.is_sparse:
        for n, index in f.active_atoms():
            tensor = f.difference_tensor(n, index).reshape(1, m * ell)
            if not _is_zero(w.subspace.residual_rows(tensor), exact=True)[0]:
                return SobolevVerdict(False, n, Atom.from_index(index, n, m))
        return SobolevVerdict(True)
    for n in range(f.depth):
        diffs = difference(f, n + 1).reshape(m ** n, m * ell)
        ok = _is_zero(w.subspace.residual_rows(diffs), f.exact)
        if not ok.all():
            index = int(np.argmin(ok))
            return SobolevVerdict(False, n, Atom.from_index(index, n, m))
    return SobolevVerdict(True)


def _random_rationals(rng: np.random.Generator, shape: Any, exact: bool) -> np.ndarray:
    numerators = rng.integers(-4, 5, size=shape)
    denominators = rng.integers(1, 4, size=shape)
    if exact:
        return np.frompyfunc(Fraction, 2, 1)(numerators.astype(object), denominators.astype(object))
    return numerators / denominators


def random_sobolev(w: WSpace, depth: int, seed: Any, exact: bool = True) -> FiniteMartingale:
    """Random member of the martingale Sobolev space of W, deterministic in ``seed``."""
    params = w.params
    m, ell = params.m, params.ell
    rng = np.random.default_rng(seed)
    start = _random_rationals(rng, ell, exact)
    leaves = np.repeat(start.reshape(1, ell), m ** depth, axis=0)
    if w.dim:
        basis = np.array([t.entries for t in w.basis], dtype=object)
        if not exact:
            basis = basis.astype(float)
        for n in range(depth):
            coeffs = _random_rationals(rng, (m ** n, w.dim), exact)
            tensors = np.tensordot(coeffs, basis, axes=1).reshape(m ** (n + 1), ell)
            leaves = leaves + np.repeat(tensors, m ** (depth - n - 1), axis=0)
    logger.debug(f"sampled Sobolev martingale: m={m}, ell={ell}, depth={depth}, dim W={w.dim}, exact={exact}")
    return FiniteMartingale(params, depth, dense=leaves)


def lp_norm(values: Any, p: Union[int, float], count: Optional[int] = None) -> float:
    """L_p norm of level data on equally likely atoms, Euclidean on R^ℓ.

    ``count`` is the number of atoms when ``values`` lists only the non-zero
    ones; it defaults to the number of rows.
    """
    if not (p == math.inf or p >= 1):
        raise InvalidParameterError(f"exponent p must lie in [1, ∞], got {p}")
    data = np.asarray(values).astype(float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    norms = np.sqrt((data ** 2).sum(axis=1))
    count = len(norms) if count is None else count
    if count < len(norms) or count == 0:
        raise DimensionMismatchError(f"{len(norms)} values on {count} atoms")
    if p == math.inf:
        return float(norms.max()) if norms.size else 0.0
    return (math.fsum(norms ** p) / count) ** (1.0 / p)


def sparse_difference(f: FiniteMartingale, n: int) -> Dict[int, np.ndarray]:
    """Non-zero part of f_n for a sparse martingale, keyed by depth-n atom index."""
    if not 0 <= n <= f.depth:
        raise InvalidParameterError(f"difference index {n} outside [0, {f.depth}]")
    if n == 0:
        return {0: f.atom_mean(0, 0)}
    m = f.params.m
    parents = sorted({leaf // m ** (f.depth - n + 1) for leaf in (f.sparse or {})})
    out = {}
    for parent in parents:
        tensor = f.difference_tensor(n - 1, parent)
        for i, row in enumerate(tensor):
            if any(x != 0 for x in row):
                out[parent * m + i] = row
    return out


def sobolev_norm(f: FiniteMartingale) -> Scalar:
    """‖F‖ in the Sobolev space at finite depth, i.e. ‖F_N‖_{L_1}."""
    if f.is_sparse:
        total: Scalar = Fraction(0)
        for value in f.sparse.values():
            total = total + euclidean_norm(value)
        return total / f.params.m ** f.depth
    return lp_norm(f.leaf_values, 1)


def riesz_factor(m: int, alpha: Any) -> Scalar:
    """m^{-alpha}, exact whenever it is rational."""
    if isinstance(alpha, float) and not math.isfinite(alpha):
        raise InvalidParameterError(f"alpha must be finite, got {alpha}")
    exact_alpha: Optional[Fraction] = None
    if isinstance(alpha, float):
        candidate = Fraction(alpha)
        if candidate.denominator <= 64:
            exact_alpha = candidate
    else:
        exact_alpha = to_fraction(alpha)
    value = exact_alpha if exact_alpha is not None else alpha
    if value < 0:
        raise InvalidParameterError(f"alpha must be non-negative, got {alpha}")
    if exact_alpha is not None:
        root, is_exact = integer_nthroot(m ** exact_alpha.numerator, exact_alpha.denominator)
        if is_exact:
            return Fraction(1, int(root))
    return float(m) ** (-float(value))


def riesz_potential(f: FiniteMartingale, alpha: Any) -> FiniteMartingale:
    """I_alpha[F]: the martingale whose k-th difference is m^{-alpha k} f_k."""
    q = riesz_factor(f.params.m, alpha)
    exact = f.exact and isinstance(q, Fraction)
    m, N = f.params.m, f.depth
    leaves = _zeros((m ** N, f.params.ell), exact)
    weight: Scalar = Fraction(1) if exact else 1.0
    for k in range(N + 1):
        diff = difference(f, k)
        if not exact:
            diff = diff.astype(float)
        leaves = leaves + np.repeat(diff * weight, m ** (N - k), axis=0)
        weight = weight * q
    return FiniteMartingale(f.params, N, dense=leaves)


def _linear_matrix(map_: LinearMap, f: FiniteMartingale, w: Optional[WSpace]) -> np.ndarray:
    if map_.params != f.params:
        raise DimensionMismatchError(f"map with {map_.params} applied to a martingale with {f.params}")
    # φ is only defined on W, Φ on all of V⊗R^ℓ
    if isinstance(map_, PhiMap):
        verdict = validate_sobolev(f, w if w is not None else map_.domain)
        if not verdict.valid:
            raise SobolevViolationError(
                f"difference at level {verdict.level} on atom {verdict.atom} is not in W",
                level=verdict.level,
                atom=verdict.atom,
            )
    matrix = map_.linear_matrix
    return matrix if f.exact else matrix.astype(float)


def transform_summands(f: FiniteMartingale, map_: LinearMap, w: Optional[WSpace] = None) -> List[ScalarTreeFunction]:
    """Per-level summands m^{-n} Σ_ω J_ω[map(J_ω^{-1}[f_{n+1}|_ω])], n < N, on depth-N atoms."""
    matrix = _linear_matrix(map_, f, w)
    m, ell, N = f.params.m, f.params.ell, f.depth
    out = []
    for n in range(N):
        diffs = difference(f, n + 1).reshape(m ** n, m * ell)
        if not f.exact:
            diffs = diffs.astype(float)
        weight: Scalar = Fraction(1, m ** n) if f.exact else 1.0 / m ** n
        child_values = diffs.dot(matrix).reshape(m ** (n + 1)) * weight
        out.append(ScalarTreeFunction(f.params, N, np.repeat(child_values, m ** (N - n - 1))))
    return out


def transform(f: FiniteMartingale, map_: LinearMap, w: Optional[WSpace] = None) -> ScalarTreeFunction:
    total = ScalarTreeFunction(f.params, f.depth, _zeros(f.params.m ** f.depth, f.exact))
    for summand in transform_summands(f, map_, w):
        total = total + summand
    return total


def transform_at(f: FiniteMartingale, map_: LinearMap, atom: Atom, w: Optional[WSpace] = None) -> Scalar:
    """The transform on one depth-N atom, walking only along its path."""
    if atom.generation != f.depth or atom.m != f.params.m:
        raise InvalidParameterError(f"atom {atom} is not a depth-{f.depth} atom of the {f.params.m}-adic tree")
    m, ell = f.params.m, f.params.ell
    domain = None
    if isinstance(map_, PhiMap):
        domain = w if w is not None else map_.domain
    matrix = map_.linear_matrix if f.exact else map_.linear_matrix.astype(float)
    total: Scalar = Fraction(0) if f.exact else 0.0
    for n in range(f.depth):
        parent = atom.prefix(n)
        tensor = f.difference_tensor(n, parent.index).reshape(1, m * ell)
        if domain is not None and not _is_zero(domain.subspace.residual_rows(tensor), f.exact)[0]:
            raise SobolevViolationError(f"difference at level {n} on atom {parent} is not in W", level=n, atom=parent)
        y = tensor.dot(matrix)[0]
        weight: Scalar = Fraction(1, m ** n) if f.exact else 1.0 / m ** n
        total = total + y[atom.digits[n] - 1] * weight
    return total


def stronger_embedding_lhs(f: FiniteMartingale, p: Union[int, float]) -> float:
    """Σ_{n=0}^{N} m^{-n(p-1)/p} ‖f_n‖_{L_p}."""
    if not (p == math.inf or p > 1):
        raise InvalidParameterError(f"exponent p must lie in (1, ∞], got {p}")
    exponent = 1.0 if p == math.inf else (p - 1) / p
    m = f.params.m
    terms = []
    for n in range(f.depth + 1):
        if f.is_sparse:
            nonzero = sparse_difference(f, n)
            rows = list(nonzero.values()) or [np.zeros(f.params.ell)]
            norm = lp_norm(np.array(rows, dtype=object), p, count=m ** n)
        else:
            norm = lp_norm(difference(f, n), p)
        terms.append(m ** (-n * exponent) * norm)
    return math.fsum(terms)


def embedding_lhs(f: FiniteMartingale, p: Union[int, float]) -> float:
    """‖I_{(p-1)/p}[F]‖_{L_p}, evaluated on the depth-N element."""
    if not (p == math.inf or p > 1):
        raise InvalidParameterError(f"exponent p must lie in (1, ∞], got {p}")
    if p == math.inf:
        alpha: Any = 1
    elif float(p).is_integer():
        alpha = Fraction(int(p) - 1, int(p))
    else:
        alpha = (p - 1) / p
    return lp_norm(riesz_potential(f, alpha).leaf_values, p)
