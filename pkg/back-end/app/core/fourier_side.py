"""Translation-invariant W over a finite abelian group acting on the digits.

The digits 1..m are identified with the elements of G = Z_{n_1} × ... × Z_{n_k}
by mixed-radix decoding of j-1 (most significant component first), so digit
1 is the identity. Fourier coefficients use ŵ(γ) = Σ_x w(x)·conj(χ_γ(x))
without a prefactor.

Over elementary abelian 2-groups the characters are ±1 and every verdict is
computed in exact rationals; otherwise complex floating point is used with
the rank threshold ``settings.FOURIER_TOL``.
"""

import cmath
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import settings
from app.core.exact_linalg import RatMatrix, Subspace, Vector, dot, intersect, solve
from app.core.tensor_space import PhiMap, TensorVW, WSpace, apply_phi
from app.exceptions import (
    GroupMismatchError,
    InvalidParameterError,
    InvariantBreachError,
    TranslationInvarianceError,
)

logger = logging.getLogger(__name__)

Element = Tuple[int, ...]


@dataclass(frozen=True)
class GroupStructure:
    cyclic_orders: Tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(n) for n in self.cyclic_orders)
        if not orders:
            raise InvalidParameterError("a group needs at least one cyclic factor")
        for n in orders:
            if n < 2:
                raise InvalidParameterError(f"cyclic factor of order {n}, expected at least 2")
        object.__setattr__(self, "cyclic_orders", orders)

    @classmethod
    def cyclic(cls, m: int) -> "GroupStructure":
        return cls((m,))

    @property
    def order(self) -> int:
        return math.prod(self.cyclic_orders)

    @property
    def is_elementary_2group(self) -> bool:
        return all(n == 2 for n in self.cyclic_orders)

    @cached_property
    def elements(self) -> Tuple[Element, ...]:
        """All elements in digit order."""
        return tuple(itertools.product(*(range(n) for n in self.cyclic_orders)))

    def element(self, digit: int) -> Element:
        if not 1 <= digit <= self.order:
            raise InvalidParameterError(f"digit {digit} outside [1..{self.order}]")
        return self.elements[digit - 1]

    def digit(self, x: Element) -> int:
        index = 0
        for xi, n in zip(x, self.cyclic_orders):
            index = index * n + xi % n
        return index + 1

    def add(self, x: Element, y: Element) -> Element:
        return tuple((a + b) % n for a, b, n in zip(x, y, self.cyclic_orders))

    def subtract(self, x: Element, y: Element) -> Element:
        return tuple((a - b) % n for a, b, n in zip(x, y, self.cyclic_orders))

    def translation(self, g: Element) -> List[int]:
        """perm[i] = 0-based position of x_i + g."""
        return [self.digit(self.add(x, g)) - 1 for x in self.elements]

    def check_order(self, m: int) -> None:
        if self.order != m:
            raise GroupMismatchError(f"group of order {self.order} {self.cyclic_orders} acting on m={m} digits")


@dataclass(frozen=True)
class Character:
    gamma: Element
    group: GroupStructure = field(repr=False)

    def __call__(self, x: Element) -> complex:
        phase = sum(gi * xi / n for gi, xi, n in zip(self.gamma, x, self.group.cyclic_orders))
        return cmath.exp(2j * math.pi * phase)

    @property
    def is_trivial(self) -> bool:
        return not any(self.gamma)

    def values(self) -> np.ndarray:
        return np.array([self(x) for x in self.group.elements], dtype=complex)


@dataclass(frozen=True)
class CharacterFiber:
    gamma: Element
    basis: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class InvarianceVerdict:
    invariant: bool
    element: Optional[Element] = None


@dataclass(frozen=True)
class FourierVerdict:
    holds: bool
    intersection_dim: int
    exact: bool
    residual: float = 0.0


@dataclass(frozen=True)
class FourierReport:
    group: Tuple[int, ...]
    exact: bool
    fiber_dims: Dict[str, int]
    cancelling: FourierVerdict
    weakly_cancelling: Optional[FourierVerdict] = None


def characters(g: GroupStructure) -> List[Character]:
    return [Character(gamma, g) for gamma in g.elements]


def character_table(g: GroupStructure) -> np.ndarray:
    """table[γ, x] = χ_γ(x), rows and columns in digit order."""
    return np.array([c.values() for c in characters(g)])


def _sign_table(g: GroupStructure) -> List[List[int]]:
    """Exact ±1 character table of an elementary abelian 2-group."""
    return [[(-1) ** sum(a * b for a, b in zip(gamma, x)) for x in g.elements] for gamma in g.elements]


def _permute_rows(rows: Sequence, perm: Sequence[int]) -> list:
    out = [None] * len(rows)
    for i, row in enumerate(rows):
        out[perm[i]] = row
    return out


def translate_tensor(tensor: TensorVW, g: GroupStructure, by: Element) -> TensorVW:
    """(τ_g w)(x + g) = w(x)."""
    g.check_order(tensor.m)
    return TensorVW(tuple(_permute_rows(tensor.entries, g.translation(by))))


def is_translation_invariant(w: WSpace, g: GroupStructure) -> InvarianceVerdict:
    g.check_order(w.params.m)
    for by in g.elements[1:]:
        moved = Subspace.span((translate_tensor(t, g, by).flatten() for t in w.basis), w.params.tensor_dim)
        if moved != w.subspace:
            return InvarianceVerdict(False, by)
    return InvarianceVerdict(True)


def is_phi_translation_invariant(phi: PhiMap, g: GroupStructure) -> InvarianceVerdict:
    """φ∘τ_g = τ_g∘φ on the basis of W; requires W itself to be invariant."""
    w = phi.domain
    if not is_translation_invariant(w, g).invariant:
        raise TranslationInvarianceError("φ cannot commute with translations on a W that is not invariant")
    for by in g.elements[1:]:
        perm = g.translation(by)
        for tensor, image in zip(w.basis, phi.images):
            if apply_phi(phi, translate_tensor(tensor, g, by)) != tuple(_permute_rows(image, perm)):
                return InvarianceVerdict(False, by)
    return InvarianceVerdict(True)


def fourier_coefficients(values: np.ndarray, g: GroupStructure) -> np.ndarray:
    """ŵ as an (m, ℓ) complex array, row γ in digit order."""
    values = np.asarray(values)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    g.check_order(values.shape[0])
    return np.conj(character_table(g)) @ values.astype(float)


def _require_invariant(w: WSpace, g: GroupStructure) -> None:
    verdict = is_translation_invariant(w, g)
    if not verdict.invariant:
        raise TranslationInvarianceError(f"W is not invariant under translation by {verdict.element}")


def _row_space(rows: np.ndarray, ell: int) -> np.ndarray:
    if rows.size == 0:
        return np.zeros((0, ell), dtype=complex)
    _, s, vh = np.linalg.svd(rows)
    r = int(np.sum(s > settings.FOURIER_TOL))
    return vh[:r]


def fibers(w: WSpace, g: GroupStructure) -> List[CharacterFiber]:
    """W_γ for every γ ≠ 0, each with an orthonormal row basis."""
    _require_invariant(w, g)
    ell = w.params.ell
    coeffs = [fourier_coefficients(t.as_array(), g) for t in w.basis]
    out = []
    for index, gamma in enumerate(g.elements):
        if index == 0:
            continue
        rows = np.array([c[index] for c in coeffs], dtype=complex).reshape(len(coeffs), ell)
        out.append(CharacterFiber(gamma, _row_space(rows, ell)))
    return out


def intersect_complex(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Intersection of two row spans given by orthonormal rows."""
    ell = a.shape[1]
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((0, ell), dtype=complex)
    residual = a @ (np.eye(ell) - b.conj().T @ b)
    u, s, _ = np.linalg.svd(residual)
    r = int(np.sum(s > settings.FOURIER_TOL))
    return u[:, r:].conj().T @ a


def _complex_intersection(fibers_: Sequence[CharacterFiber], ell: int) -> np.ndarray:
    current = np.eye(ell, dtype=complex)
    for fiber in fibers_:
        current = intersect_complex(current, fiber.basis)
    return current


def fiber_functionals(phi: PhiMap, g: GroupStructure) -> Dict[Element, np.ndarray]:
    """u_γ with φ_γ[ŵ(γ)] = u_γ·ŵ(γ) (bilinear) on W_γ, for γ ≠ 0."""
    w = phi.domain
    if not is_phi_translation_invariant(phi, g).invariant:
        raise TranslationInvarianceError("φ does not commute with the group translations")
    ell = w.params.ell
    table = np.conj(character_table(g))
    out = {}
    for index, gamma in enumerate(g.elements):
        if index == 0:
            continue
        rows = np.array(
            [fourier_coefficients(t.as_array(), g)[index] for t in w.basis], dtype=complex
        ).reshape(len(w.basis), ell)
        targets = np.array([table[index] @ np.array(image, dtype=float) for image in phi.images], dtype=complex)
        if rows.size == 0:
            out[gamma] = np.zeros(ell, dtype=complex)
            continue
        u, *_ = np.linalg.lstsq(rows, targets, rcond=None)
        if np.max(np.abs(rows @ u - targets), initial=0.0) > settings.FOURIER_TOL:
            raise InvariantBreachError(f"fiber functional at γ={gamma} does not reproduce φ")
        out[gamma] = u
    return out


def _exact_fibers(w: WSpace, g: GroupStructure) -> Dict[Element, Subspace]:
    ell = w.params.ell
    table = _sign_table(g)
    out = {}
    for index, gamma in enumerate(g.elements):
        if index == 0:
            continue
        vectors = [
            tuple(sum((table[index][x] * t.entries[x][k] for x in range(g.order)), 0) for k in range(ell))
            for t in w.basis
        ]
        out[gamma] = Subspace.span(vectors, ell)
    return out


def _exact_intersection(spaces: Sequence[Subspace], ell: int) -> Subspace:
    current = Subspace.full(ell)
    for space in spaces:
        current = intersect(current, space)
    return current


def _use_exact(g: GroupStructure, exact: Optional[bool]) -> bool:
    if exact is None:
        return g.is_elementary_2group
    if exact and not g.is_elementary_2group:
        raise InvalidParameterError(f"exact Fourier verdicts need an elementary abelian 2-group, got {g.cyclic_orders}")
    return exact


def fourier_cancelling(w: WSpace, g: GroupStructure, exact: Optional[bool] = None) -> FourierVerdict:
    """⋂_{γ≠0} W_γ = {0}."""
    _require_invariant(w, g)
    ell = w.params.ell
    if _use_exact(g, exact):
        meet = _exact_intersection(list(_exact_fibers(w, g).values()), ell)
        return FourierVerdict(meet.is_zero, meet.dim, exact=True)
    meet = _complex_intersection(fibers(w, g), ell)
    return FourierVerdict(meet.shape[0] == 0, meet.shape[0], exact=False)


def _exact_fiber_functionals(phi: PhiMap, g: GroupStructure) -> Dict[Element, Vector]:
    w = phi.domain
    ell = w.params.ell
    table = _sign_table(g)
    out = {}
    for index, gamma in enumerate(g.elements):
        if index == 0:
            continue
        rows = [
            tuple(sum((table[index][x] * t.entries[x][k] for x in range(g.order)), 0) for k in range(ell))
            for t in w.basis
        ]
        targets = [sum((table[index][x] * image[x] for x in range(g.order)), 0) for image in phi.images]
        if not rows:
            out[gamma] = tuple(0 for _ in range(ell))
            continue
        u = solve(RatMatrix(tuple(rows)), targets)
        if u is None:
            raise InvariantBreachError(f"fiber functional at γ={gamma} does not reproduce φ")
        out[gamma] = u
    return out


def fourier_weak_cancelling(w: WSpace, phi: PhiMap, g: GroupStructure, exact: Optional[bool] = None) -> FourierVerdict:
    """Σ_{γ≠0} φ_γ[a] = 0 for every a in ⋂_{γ≠0} W_γ."""
    if phi.domain != w:
        raise InvalidParameterError("φ is defined on a different W")
    _require_invariant(w, g)
    ell = w.params.ell
    if _use_exact(g, exact):
        meet = _exact_intersection(list(_exact_fibers(w, g).values()), ell)
        functionals = _exact_fiber_functionals(phi, g)
        for a in meet.basis:
            total = sum((dot(u, a) for u in functionals.values()), 0)
            if total != 0:
                return FourierVerdict(False, meet.dim, exact=True, residual=float(abs(total)))
        return FourierVerdict(True, meet.dim, exact=True)

    meet = _complex_intersection(fibers(w, g), ell)
    functionals = fiber_functionals(phi, g)
    residual = 0.0
    for a in meet:
        total = sum(u @ a for u in functionals.values())
        residual = max(residual, abs(total))
    return FourierVerdict(residual <= settings.FOURIER_TOL, meet.shape[0], exact=False, residual=residual)


def fourier_report(w: WSpace, phi: Optional[PhiMap], g: GroupStructure) -> FourierReport:
    _require_invariant(w, g)
    exact = g.is_elementary_2group
    if exact:
        dims = {str(gamma): space.dim for gamma, space in _exact_fibers(w, g).items()}
    else:
        dims = {str(fiber.gamma): fiber.dim for fiber in fibers(w, g)}
    cancelling = fourier_cancelling(w, g)
    weak = None
    if phi is not None:
        weak = fourier_weak_cancelling(w, phi, g)
    logger.info(f"Fourier side over {g.cyclic_orders}: cancelling={cancelling.holds}, weak={weak and weak.holds}")
    return FourierReport(g.cyclic_orders, exact, dims, cancelling, weak)
