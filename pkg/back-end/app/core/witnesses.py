"""Atomic measures, the necessity counterexample and the exact transform norm.

On a delta martingale a·δ_t only one tensor D_j⊗a per level enters the
transform, so every value it takes is g·a for a coefficient vector g built
from ``ExtendedMap.coefficient``. The functions below work with those
coefficient vectors instead of enumerating atoms: an evaluation atom x is
described by the level k at which it leaves the path t and the digit d it
takes there.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple, Union

from app.core.exact_linalg import Vector, as_vector, dot, euclidean_norm, rational_sqrt
from app.core.martingale import (
    FiniteMartingale,
    sobolev_norm,
    stronger_embedding_lhs,
    transform_at,
)
from app.core.tensor_space import (
    ExtendedMap,
    ModelParams,
    PhiMap,
    WSpace,
    apply_phi,
    nasty_vector,
    rank_one,
)
from app.core.tree_model import Atom, TreePath
from app.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    InvariantBreachError,
    NoBlowUpError,
    NotInSubspaceError,
)

logger = logging.getLogger(__name__)

Scalar = Union[Fraction, float]


@dataclass(frozen=True)
class AtomicMeasure:
    params: ModelParams
    support: Tuple[Tuple[TreePath, Vector], ...] = ()

    def __post_init__(self):
        cleaned = []
        for path, weight in self.support:
            weight = as_vector(weight)
            if path.m != self.params.m:
                raise DimensionMismatchError(f"path of the {path.m}-adic tree in a measure with m={self.params.m}")
            if len(weight) != self.params.ell:
                raise DimensionMismatchError(f"weight of length {len(weight)}, expected ell={self.params.ell}")
            cleaned.append((path, weight))
        object.__setattr__(self, "support", tuple(cleaned))

    @classmethod
    def delta(cls, path: TreePath, a: Sequence[Any], params: ModelParams) -> "AtomicMeasure":
        return cls(params, ((path, as_vector(a)),))

    def total_variation(self) -> Scalar:
        total: Scalar = Fraction(0)
        for _, weight in self.support:
            total = total + euclidean_norm(weight)
        return total

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        if other.params != self.params:
            raise DimensionMismatchError("measures on different models cannot be added")
        return AtomicMeasure(self.params, self.support + other.support)


@dataclass(frozen=True)
class CurvePoint:
    depth: int
    lhs: Fraction
    rhs: Scalar
    ratio: Scalar


@dataclass(frozen=True)
class WitnessReport:
    j: int
    a: Vector
    theta: Fraction
    curve: Tuple[CurvePoint, ...]


@dataclass(frozen=True)
class DisjointSupportVerdict:
    holds: bool
    level: Optional[int] = None
    digit: Optional[int] = None
    value: Optional[Fraction] = None


@dataclass(frozen=True)
class TransformNorm:
    depth: int
    squared: Fraction
    value: Scalar


def _check_depth(N: int) -> None:
    if N < 1:
        raise InvalidParameterError(f"depth N must be at least 1, got {N}")


def measure_to_martingale(mu: AtomicMeasure, N: int) -> FiniteMartingale:
    """F_n = Σ_ω μ(ω)·m^n χ_ω, stopped at depth N."""
    if N < 0:
        raise InvalidParameterError(f"depth N must be non-negative, got {N}")
    scale = mu.params.m ** N
    support: Dict[int, List[Fraction]] = {}
    for path, weight in mu.support:
        leaf = path.truncate(N).index
        current = support.setdefault(leaf, [Fraction(0)] * mu.params.ell)
        for k, x in enumerate(weight):
            current[k] += x * scale
    return FiniteMartingale.from_support(mu.params, N, support)


def delta_martingale(path: TreePath, a: Sequence[Any], N: int, params: ModelParams) -> FiniteMartingale:
    _check_depth(N)
    return measure_to_martingale(AtomicMeasure.delta(path, a, params), N)


def necessity_martingale(j: int, a: Sequence[Any], N: int, params: ModelParams) -> FiniteMartingale:
    params.check_digit(j)
    return delta_martingale(TreePath.constant(j, params.m), a, N, params)


def blow_up_curve(w: WSpace, phi: PhiMap, j: int, a: Sequence[Any], N_max: int) -> WitnessReport:
    params = w.params
    params.check_digit(j)
    _check_depth(N_max)
    a = as_vector(a)
    tensor = rank_one(nasty_vector(j, params), a)
    if not w.contains(tensor):
        raise NotInSubspaceError(f"D_{j}⊗{[str(x) for x in a]} is not in W")
    theta = apply_phi(phi, tensor)[j - 1]
    if theta == 0:
        raise NoBlowUpError(f"(φ(D_{j}⊗a))_{j} = 0, the transform stays bounded on this family")

    curve = []
    for N in range(1, N_max + 1):
        f = necessity_martingale(j, a, N, params)
        lhs = transform_at(f, phi, Atom((j,) * N, params.m), w)
        if lhs != N * theta:
            raise InvariantBreachError(f"transform on the all-{j} atom is {lhs} at N={N}, expected {N * theta}")
        rhs = sobolev_norm(f)
        curve.append(CurvePoint(N, lhs, rhs, abs(lhs) / rhs))
        logger.debug(f"blow-up curve: N={N}, lhs={lhs}, rhs={rhs}")
    logger.info(f"blow-up curve for j={j}: θ={theta}, {N_max} points")
    return WitnessReport(j, a, theta, tuple(curve))


def _delta_digits(path: TreePath, N: int) -> Tuple[int, ...]:
    return path.truncate(N).digits


def disjoint_support_check(ext: ExtendedMap, path: TreePath, a: Sequence[Any], N: int) -> DisjointSupportVerdict:
    """Check that the level-n summand of the delta martingale's transform vanishes on ω_{n+1}.

    The summand is evaluated from the martingale itself: the difference on
    ω_n is pushed through Φ and read at the child that continues the path.
    """
    _check_depth(N)
    params = ext.params
    a = as_vector(a)
    f = delta_martingale(path, a, N, params)
    digits = _delta_digits(path, N)
    for n in range(N):
        parent = Atom(digits[:n], params.m)
        child = digits[n]
        flat = tuple(x for row in f.difference_tensor(n, parent.index) for x in row)
        value = dot(ext.functionals[child - 1], flat) / params.m ** n
        if value != 0:
            logger.debug(f"summand at level {n} is {value} on atom {Atom(digits[:n + 1], params.m)}")
            return DisjointSupportVerdict(False, n, child, value)
    return DisjointSupportVerdict(True)


def summand_overlap(ext: ExtendedMap, path: TreePath, a: Sequence[Any], N: int) -> int:
    """Largest number of levels whose summand is non-zero at a single depth-N atom."""
    _check_depth(N)
    params = ext.params
    a = as_vector(a)
    digits = _delta_digits(path, N)
    on_path = [dot(ext.coefficient(t, t), a) != 0 for t in digits]
    best = sum(on_path)
    for k, t in enumerate(digits):
        before = sum(on_path[:k])
        for d in range(1, params.m + 1):
            if d != t:
                best = max(best, before + int(dot(ext.coefficient(t, d), a) != 0))
    return best


def _squared(v: Sequence[Fraction]) -> Fraction:
    return sum((x * x for x in v), Fraction(0))


def _norm_from_squared(squared: Fraction) -> Scalar:
    root = rational_sqrt(squared)
    return root if root is not None else math.sqrt(squared)


def transform_norm(ext: ExtendedMap, N: int) -> TransformNorm:
    """sup ‖transform(F_μ)‖_∞ over measures of total variation at most one, at depth N.

    A delta at t evaluated at an atom that leaves t at level k with digit d
    gives Σ_{n<k} g(t_{n+1}, t_{n+1}) + g(t_{k+1}, d); staying on t gives the
    full on-path sum. Equal prefix sums are merged level by level.
    """
    _check_depth(N)
    m = ext.params.m
    g = {(j, i): ext.coefficient(j, i) for j in range(1, m + 1) for i in range(1, m + 1)}
    best = Fraction(0)
    prefixes: Set[Vector] = {tuple(Fraction(0) for _ in range(ext.params.ell))}
    for level in range(N):
        following: Set[Vector] = set()
        for prefix in prefixes:
            for j in range(1, m + 1):
                for i in range(1, m + 1):
                    total = tuple(x + y for x, y in zip(prefix, g[(j, i)]))
                    if i == j:
                        following.add(total)
                    else:
                        best = max(best, _squared(total))
        prefixes = following
        logger.debug(f"transform norm: level {level}, {len(prefixes)} distinct on-path sums")
    for prefix in prefixes:
        best = max(best, _squared(prefix))
    return TransformNorm(N, best, _norm_from_squared(best))


def disjoint_support_constant(ext: ExtendedMap) -> Scalar:
    """max over j and i ≠ j of |a ↦ (Φ(D_j⊗a))_i|."""
    m = ext.params.m
    squared = max(
        (_squared(ext.coefficient(j, i)) for j in range(1, m + 1) for i in range(1, m + 1) if i != j),
        default=Fraction(0),
    )
    return _norm_from_squared(squared)


def embedding_ratio_curve(
    params: ModelParams, j: int, a: Sequence[Any], depths: Sequence[int], p: Union[int, float] = math.inf
) -> List[Tuple[int, float]]:
    """stronger_embedding_lhs / ‖F_N‖_{L1} along the necessity family."""
    out = []
    for N in depths:
        f = necessity_martingale(j, a, N, params)
        norm = float(sobolev_norm(f))
        if norm == 0:
            raise InvalidParameterError("the necessity family needs a ≠ 0")
        out.append((N, stronger_embedding_lhs(f, p) / norm))
    return out
