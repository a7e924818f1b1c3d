"""Cancellation and weak cancellation checkers, and the extension Φ."""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from app.core.exact_linalg import Vector, extend_functional
from app.core.tensor_space import (
    ExtendedMap,
    PhiMap,
    WSpace,
    apply_phi,
    nasty_slice,
    nasty_subspace,
    nasty_vector,
    rank_one,
)
from app.exceptions import WeakCancellationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CancellationVerdict:
    cancelling: bool
    j: Optional[int] = None
    a: Optional[Vector] = None


@dataclass(frozen=True)
class WeakWitness:
    j: int
    a: Vector
    theta: Fraction


@dataclass(frozen=True)
class WeakCancellationVerdict:
    weakly_cancelling: bool
    witness: Optional[WeakWitness] = None


def is_cancelling(w: WSpace) -> CancellationVerdict:
    for j in range(1, w.params.m + 1):
        slice_j = nasty_slice(j, w)
        if not slice_j.is_zero:
            return CancellationVerdict(False, j, slice_j.basis[0])
    return CancellationVerdict(True)


def find_weak_witness(w: WSpace, phi: PhiMap) -> Optional[WeakWitness]:
    """First (lowest j, first slice basis vector) violation of (φ(D_j⊗a))_j = 0."""
    for j in range(1, w.params.m + 1):
        d = nasty_vector(j, w.params)
        for a in nasty_slice(j, w).basis:
            theta = apply_phi(phi, rank_one(d, a))[j - 1]
            if theta != 0:
                return WeakWitness(j, a, theta)
    return None


def is_weakly_cancelling(w: WSpace, phi: PhiMap) -> WeakCancellationVerdict:
    witness = find_weak_witness(w, phi)
    return WeakCancellationVerdict(witness is None, witness)


def build_extension(w: WSpace, phi: PhiMap) -> ExtendedMap:
    witness = find_weak_witness(w, phi)
    if witness is not None:
        raise WeakCancellationError(
            f"weak cancellation fails at j={witness.j}, a={[str(x) for x in witness.a]}: θ={witness.theta}",
            witness=witness,
        )
    params = w.params
    images = phi.images_on_rref_basis
    functionals: List[Vector] = []
    for j in range(1, params.m + 1):
        psi = [image[j - 1] for image in images]
        functionals.append(extend_functional(params.tensor_dim, w.subspace, nasty_subspace(j, params), psi))
        logger.debug(f"built Φ_{j} on Q^{params.tensor_dim}")
    return ExtendedMap(params, tuple(functionals))


def extension_contract_holds(w: WSpace, phi: PhiMap, ext: ExtendedMap) -> bool:
    """Φ agrees with φ on the basis of W and (Φ(D_j⊗e_k))_j = 0 for all j, k."""
    for tensor, image in zip(w.basis, phi.images):
        if ext.apply(tensor) != image:
            return False
    for j in range(1, w.params.m + 1):
        if any(g != 0 for g in ext.coefficient(j, j)):
            return False
    return True
