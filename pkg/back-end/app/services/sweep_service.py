"""Randomised property sweep over generated problem instances.

Sub-seeds come from ``numpy.random.SeedSequence(seed).spawn(count)``: instance
i of the plain sweep uses child i of the first spawn, translation-invariant
instance i uses child i of a second spawn from the same root, and the
embedding monitor uses a third. Results are merged in instance order, so the
report does not depend on how the thread pool schedules work.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from app.core.cancellation import (
    build_extension,
    extension_contract_holds,
    is_cancelling,
    is_weakly_cancelling,
)
from app.core.exact_linalg import RatMatrix, kernel
from app.core.fourier_side import (
    GroupStructure,
    fourier_cancelling,
    fourier_weak_cancelling,
    is_phi_translation_invariant,
    is_translation_invariant,
    translate_tensor,
)
from app.core.martingale import random_sobolev, sobolev_norm, stronger_embedding_lhs, transform
from app.core.tensor_space import (
    ExtendedMap,
    ModelParams,
    PhiMap,
    TensorVW,
    WSpace,
    nasty_vector,
    rank_one,
)
from app.core.tree_model import TreePath
from app.core.witnesses import (
    disjoint_support_check,
    disjoint_support_constant,
    embedding_ratio_curve,
    summand_overlap,
    transform_norm,
)
from app.exceptions import ModelError
from app.schemas import (
    CheckTally,
    EmbeddingStats,
    GrowthPoint,
    SweepFailure,
    SweepReport,
    SweepRequest,
)
from app.services.problem_service import problem_service

logger = logging.getLogger(__name__)

TI_GROUPS: Tuple[Tuple[int, ...], ...] = ((2,), (3,), (4,), (6,), (2, 2))

CheckResult = Optional[Tuple[bool, str]]


@dataclass(frozen=True)
class Instance:
    index: int
    w: WSpace
    phi: PhiMap
    check_seed: int
    delta_count: int
    depth: int
    group: Optional[GroupStructure] = None


def _small_int(rng: np.random.Generator, low: int = -2, high: int = 2) -> Fraction:
    return Fraction(int(rng.integers(low, high + 1)))


def random_tensor(rng: np.random.Generator, params: ModelParams) -> TensorVW:
    rows = [[_small_int(rng) for _ in range(params.ell)] for _ in range(params.m - 1)]
    rows.append([-sum(col, Fraction(0)) for col in zip(*rows)])
    return TensorVW(tuple(tuple(r) for r in rows))


def random_vector(rng: np.random.Generator, length: int) -> Tuple[Fraction, ...]:
    return tuple(_small_int(rng) for _ in range(length))


def random_v(rng: np.random.Generator, m: int) -> Tuple[Fraction, ...]:
    head = random_vector(rng, m - 1)
    return head + (-sum(head, Fraction(0)),)


def random_w(rng: np.random.Generator, params: ModelParams, plant: bool) -> WSpace:
    """Random W, optionally containing a rank-one tensor D_j⊗a."""
    tensors = []
    if plant:
        j = int(rng.integers(1, params.m + 1))
        a = random_vector(rng, params.ell)
        if any(a):
            tensors.append(rank_one(nasty_vector(j, params), a))
    full_dim = (params.m - 1) * params.ell
    for _ in range(int(rng.integers(0, min(full_dim, 4) + 1))):
        tensors.append(random_tensor(rng, params))
    return WSpace.spanned_by(params, tensors)


def random_phi(rng: np.random.Generator, w: WSpace) -> PhiMap:
    return PhiMap(w, tuple(random_v(rng, w.params.m) for _ in range(w.dim)))


def weakly_cancelling_phi(rng: np.random.Generator, w: WSpace) -> PhiMap:
    """Restriction to W of a random Φ into V whose coordinate j vanishes on every D_j⊗a."""
    params = w.params
    m, n = params.m, params.tensor_dim
    rows = []
    # unknowns: Φ_1, ..., Φ_m concatenated, m·n of them
    for j in range(1, m + 1):
        d = nasty_vector(j, params)
        for k in range(params.ell):
            row = [Fraction(0)] * (m * n)
            for r in range(m):
                row[(j - 1) * n + r * params.ell + k] = d[r]
            rows.append(row)
    for c in range(n):
        rows.append([Fraction(int(q % n == c)) for q in range(m * n)])
    solutions = kernel(RatMatrix(tuple(tuple(r) for r in rows)))
    coeffs = [_small_int(rng) for _ in solutions.basis]
    flat = [sum((c * v[q] for c, v in zip(coeffs, solutions.basis)), Fraction(0)) for q in range(m * n)]
    ext = ExtendedMap(params, tuple(tuple(flat[i * n:(i + 1) * n]) for i in range(m)))
    return PhiMap(w, tuple(ext.apply(t) for t in w.basis))


def random_instance(rng: np.random.Generator, index: int, request: SweepRequest) -> Instance:
    m = int(rng.integers(2, request.max_m + 1))
    ell = int(rng.integers(1, request.max_ell + 1))
    params = ModelParams(m, ell)
    w = random_w(rng, params, plant=bool(rng.integers(0, 2)))
    phi = weakly_cancelling_phi(rng, w) if rng.integers(0, 3) else random_phi(rng, w)
    return Instance(index, w, phi, int(rng.integers(0, 2**32)), request.delta_martingales, request.depth)


def convolution_phi(rng: np.random.Generator, w: WSpace, g: GroupStructure, balanced: bool) -> PhiMap:
    """φ(w)(x) = Σ_y Σ_k K_k(x - y) w(y)_k, which commutes with translations."""
    m, ell = w.params.m, w.params.ell
    kernel_values = [list(random_vector(rng, ell)) for _ in range(m)]
    if balanced:
        # m·K_k(0) = Σ_z K_k(z) makes (φ(D_j⊗a))_j vanish for every a
        for k in range(ell):
            kernel_values[0][k] = sum((kernel_values[z][k] for z in range(1, m)), Fraction(0)) / (m - 1)
    elements = g.elements

    def apply(tensor: TensorVW) -> Tuple[Fraction, ...]:
        out = []
        for x in range(m):
            total = Fraction(0)
            for y in range(m):
                shift = g.digit(g.subtract(elements[x], elements[y])) - 1
                total += sum((kernel_values[shift][k] * tensor.entries[y][k] for k in range(ell)), Fraction(0))
            out.append(total)
        return tuple(out)

    return PhiMap(w, tuple(apply(t) for t in w.basis))


def translation_invariant_instance(rng: np.random.Generator, index: int, request: SweepRequest) -> Instance:
    group = GroupStructure(TI_GROUPS[int(rng.integers(0, len(TI_GROUPS)))])
    params = ModelParams(group.order, int(rng.integers(1, request.max_ell + 1)))
    generators = [random_tensor(rng, params) for _ in range(int(rng.integers(1, 3)))]
    if rng.integers(0, 2):
        a = random_vector(rng, params.ell)
        if any(a):
            generators.append(rank_one(nasty_vector(1, params), a))
    translates = [translate_tensor(t, group, by) for t in generators for by in group.elements]
    w = WSpace.spanned_by(params, translates)
    phi = convolution_phi(rng, w, group, balanced=bool(rng.integers(0, 2)))
    return Instance(index, w, phi, int(rng.integers(0, 2**32)), request.delta_martingales, request.depth, group)


def _sym(x: Fraction) -> sympy.Rational:
    return sympy.Rational(x.numerator, x.denominator)


def oracle_verdicts(w: WSpace, phi: PhiMap) -> Tuple[bool, bool]:
    """(cancelling, weakly cancelling) from a symbolic solve of Σ c_r w_r = D_j⊗a with a left free."""
    params = w.params
    m, ell = params.m, params.ell
    a = sympy.symbols(f"a1:{ell + 1}")
    c = sympy.symbols(f"c1:{w.dim + 1}") if w.dim else ()
    cancelling, weak = True, True
    for j in range(1, m + 1):
        d = nasty_vector(j, params)
        equations = [
            sum((_sym(t.entries[r][k]) * ci for ci, t in zip(c, w.basis)), sympy.Integer(0)) - _sym(d[r]) * a[k]
            for r in range(m)
            for k in range(ell)
        ]
        (solution,) = sympy.linsolve(equations, list(c) + list(a))
        if any(sympy.expand(x) != 0 for x in solution[w.dim:]):
            cancelling = False
        theta = sum((ci * _sym(image[j - 1]) for ci, image in zip(solution[: w.dim], phi.images)), sympy.Integer(0))
        if sympy.expand(theta) != 0:
            weak = False
    return cancelling, weak


def _rng(inst: Instance, salt: int) -> np.random.Generator:
    return np.random.default_rng([inst.check_seed, salt])


def _random_path(rng: np.random.Generator, m: int, depth: int) -> TreePath:
    prefix = tuple(int(d) for d in rng.integers(1, m + 1, size=int(rng.integers(0, depth + 1))))
    return TreePath(prefix, int(rng.integers(1, m + 1)), m)


def check_oracle(inst: Instance) -> CheckResult:
    expected = oracle_verdicts(inst.w, inst.phi)
    got = (is_cancelling(inst.w).cancelling, is_weakly_cancelling(inst.w, inst.phi).weakly_cancelling)
    return got == expected, f"checker {got} vs symbolic oracle {expected}"


def check_cancel_implies_weak(inst: Instance) -> CheckResult:
    if not is_cancelling(inst.w).cancelling:
        return None
    return is_weakly_cancelling(inst.w, inst.phi).weakly_cancelling, "cancelling W but weak cancellation fails"


def check_basis_change(inst: Instance) -> CheckResult:
    rng = _rng(inst, 1)
    d = inst.w.dim
    mixed, images = [], []
    for i in range(d):
        tensor, image = inst.w.basis[i], list(inst.phi.images[i])
        for k in range(i + 1, d):
            c = _small_int(rng)
            tensor = tensor + c * inst.w.basis[k]
            image = [x + c * y for x, y in zip(image, inst.phi.images[k])]
        mixed.append(tensor)
        images.append(tuple(image))
    w2 = WSpace(inst.w.params, tuple(mixed))
    phi2 = PhiMap(w2, tuple(images))
    before = (is_cancelling(inst.w), is_weakly_cancelling(inst.w, inst.phi))
    after = (is_cancelling(w2), is_weakly_cancelling(w2, phi2))
    return before == after, f"verdicts change under a change of basis: {before} vs {after}"


def _extension(inst: Instance) -> Optional[ExtendedMap]:
    if not is_weakly_cancelling(inst.w, inst.phi).weakly_cancelling:
        return None
    return build_extension(inst.w, inst.phi)


def check_extension_contract(inst: Instance) -> CheckResult:
    ext = _extension(inst)
    if ext is None:
        return None
    return extension_contract_holds(inst.w, inst.phi, ext), "Φ breaks Φ|_W = φ or (Φ(D_j⊗e_k))_j = 0"


def check_disjoint_support(inst: Instance) -> CheckResult:
    ext = _extension(inst)
    if ext is None:
        return None
    rng = _rng(inst, 2)
    params = inst.w.params
    for _ in range(inst.delta_count):
        path = _random_path(rng, params.m, inst.depth)
        a = random_vector(rng, params.ell)
        verdict = disjoint_support_check(ext, path, a, inst.depth)
        if not verdict.holds:
            return False, f"summand at level {verdict.level} is {verdict.value} on its own atom (path {path})"
        overlap = summand_overlap(ext, path, a, inst.depth)
        if overlap > 1:
            return False, f"{overlap} levels contribute on one atom (path {path})"
    return True, ""


def check_norm_stabilization(inst: Instance) -> CheckResult:
    ext = _extension(inst)
    if ext is None:
        return None
    norms = [transform_norm(ext, n) for n in range(2, 6)]
    constant = disjoint_support_constant(ext)
    same = all(n.squared == norms[0].squared for n in norms)
    close = abs(float(norms[0].value) - float(constant)) <= 1e-12 * max(1.0, float(constant))
    return same and close, f"norms {[str(n.squared) for n in norms]}, single-summand bound {constant}"


def check_transform_extension(inst: Instance) -> CheckResult:
    ext = _extension(inst)
    if ext is None:
        return None
    f = random_sobolev(inst.w, 3, _rng(inst, 3))
    via_phi = transform(f, inst.phi, inst.w).values
    via_ext = transform(f, ext).values
    doubled = transform(f.scaled(2), ext).values
    ok = list(via_phi) == list(via_ext) and list(doubled) == [2 * x for x in via_ext]
    return ok, "transform through φ and through Φ disagree on a Sobolev martingale, or is not homogeneous"


def check_planted_fault(inst: Instance) -> CheckResult:
    ext = _extension(inst)
    if ext is None:
        return None
    rng = _rng(inst, 4)
    params = ext.params
    j = int(rng.integers(1, params.m + 1))
    k = int(rng.integers(0, params.ell))
    faulty = ext.with_entry_shifted(j, (j - 1) * params.ell + k, 1)
    a = tuple(Fraction(int(i == k)) for i in range(params.ell))
    verdict = disjoint_support_check(faulty, TreePath.constant(j, params.m), a, inst.depth)
    theta = Fraction(params.m - 1)
    grows = all(transform_norm(faulty, n).squared >= (n * theta) ** 2 for n in range(2, 5))
    detected = not verdict.holds and verdict.level == 0 and verdict.digit == j and grows
    return detected, f"planted fault at (j={j}, k={k}) not detected: {verdict}"


def check_translation_invariance(inst: Instance) -> CheckResult:
    if inst.group is None:
        return None
    ok = is_translation_invariant(inst.w, inst.group).invariant and is_phi_translation_invariant(inst.phi, inst.group).invariant
    return ok, "generated instance is not translation invariant"


def check_fourier_cancelling(inst: Instance) -> CheckResult:
    if inst.group is None:
        return None
    spatial = is_cancelling(inst.w).cancelling
    fourier = fourier_cancelling(inst.w, inst.group).holds
    return spatial == fourier, f"spatial cancelling={spatial}, Fourier={fourier}"


def check_fourier_weak(inst: Instance) -> CheckResult:
    if inst.group is None:
        return None
    spatial = is_weakly_cancelling(inst.w, inst.phi).weakly_cancelling
    fourier = fourier_weak_cancelling(inst.w, inst.phi, inst.group)
    return spatial == fourier.holds, f"spatial weak={spatial}, Fourier={fourier.holds} (residual {fourier.residual:.3e})"


CHECKS: Tuple[Tuple[str, Callable[[Instance], CheckResult]], ...] = (
    ("oracle_agreement", check_oracle),
    ("cancelling_implies_weak", check_cancel_implies_weak),
    ("basis_change", check_basis_change),
    ("extension_contract", check_extension_contract),
    ("disjoint_support", check_disjoint_support),
    ("norm_stabilization", check_norm_stabilization),
    ("transform_extension", check_transform_extension),
    ("planted_fault", check_planted_fault),
    ("translation_invariance", check_translation_invariance),
    ("fourier_cancelling", check_fourier_cancelling),
    ("fourier_weak_cancelling", check_fourier_weak),
)


def _run_check(check: Callable[[Instance], CheckResult], inst: Instance) -> CheckResult:
    try:
        return check(inst)
    except ModelError as e:
        return False, f"{type(e).__name__}: {e}"


def _drop_basis(inst: Instance, i: int) -> Instance:
    basis = inst.w.basis[:i] + inst.w.basis[i + 1:]
    images = inst.phi.images[:i] + inst.phi.images[i + 1:]
    w = WSpace(inst.w.params, basis)
    return replace(inst, w=w, phi=PhiMap(w, images))


def shrink(check: Callable[[Instance], CheckResult], inst: Instance) -> Instance:
    """Remove basis tensors one at a time while the check keeps failing."""
    current = inst
    progress = True
    while progress and current.w.dim:
        progress = False
        for i in range(current.w.dim):
            candidate = _drop_basis(current, i)
            # a candidate that no longer meets the check's preconditions is not a smaller failure
            try:
                result = check(candidate)
            except ModelError:
                continue
            if result is not None and not result[0]:
                current = candidate
                progress = True
                break
    return current


def _evaluate(inst: Instance) -> List[Tuple[str, CheckResult]]:
    return [(name, _run_check(check, inst)) for name, check in CHECKS]


class SweepService:
    """Property sweep over random and translation-invariant instances"""

    def run_sweep(self, request: SweepRequest) -> SweepReport:
        logger.info(
            f"Sweep: seed={request.seed}, {request.instances} random + {request.ti_instances} "
            f"translation-invariant instances, {request.workers} workers"
        )
        root = np.random.SeedSequence(request.seed)
        plain_seeds, ti_seeds, monitor_seed = root.spawn(3)

        instances = [
            random_instance(np.random.default_rng(s), i, request)
            for i, s in enumerate(plain_seeds.spawn(request.instances))
        ]
        instances += [
            translation_invariant_instance(np.random.default_rng(s), request.instances + i, request)
            for i, s in enumerate(ti_seeds.spawn(request.ti_instances))
        ]

        with ThreadPoolExecutor(max_workers=request.workers) as pool:
            outcomes = list(pool.map(_evaluate, instances))

        tallies: Dict[str, CheckTally] = {name: CheckTally(name=name) for name, _ in CHECKS}
        failures: List[SweepFailure] = []
        checks = dict(CHECKS)
        for inst, results in zip(instances, outcomes):
            for name, result in results:
                if result is None:
                    continue
                ok, message = result
                if ok:
                    tallies[name].passed += 1
                    continue
                tallies[name].failed += 1
                logger.warning(f"Check {name} failed on instance {inst.index}: {message}; shrinking")
                small = shrink(checks[name], inst)
                failures.append(
                    SweepFailure(
                        check=name,
                        instance=inst.index,
                        message=message,
                        config=problem_service.from_objects(
                            small.w, small.phi.images, small.group, depth=small.depth, seed=request.seed
                        ),
                    )
                )

        report = SweepReport(
            seed=request.seed,
            instances=request.instances,
            ti_instances=request.ti_instances,
            checks=list(tallies.values()),
            failures=failures,
        )
        if request.monitor_embedding:
            report.embedding, report.necessity_growth = self.monitor_embedding(request.embedding_samples, monitor_seed)
        logger.info(f"Sweep finished: {sum(t.passed for t in report.checks)} passed, {len(failures)} failed")
        return report

    def monitor_embedding(
        self,
        samples: int,
        seed: np.random.SeedSequence,
        depths: Sequence[int] = (2, 4, 6, 8, 10),
        exponents: Sequence[float] = (2, math.inf),
    ) -> Tuple[List[EmbeddingStats], List[GrowthPoint]]:
        """Ratio of the stronger embedding's left side to ‖F_N‖_{L1} on a cancelling and a non-cancelling W."""
        params = ModelParams(3, 2)
        cancelling_w = WSpace(
            params,
            (
                TensorVW(((1, 0), (-1, 0), (0, 0))),
                TensorVW(((0, 0), (0, 1), (0, -1))),
            ),
        )
        groups = [(p, depth) for p in exponents for depth in depths]
        per_group = math.ceil(samples / len(groups))
        children = seed.spawn(len(groups) * per_group)
        stats = []
        for g_index, (p, depth) in enumerate(groups):
            ratios = []
            for s in children[g_index * per_group:(g_index + 1) * per_group]:
                f = random_sobolev(cancelling_w, depth, s, exact=False)
                norm = float(sobolev_norm(f))
                if norm > 0:
                    ratios.append(stronger_embedding_lhs(f, p) / norm)
            stats.append(
                EmbeddingStats(
                    p="inf" if p == math.inf else str(p),
                    depth=depth,
                    samples=len(ratios),
                    max_ratio=max(ratios, default=0.0),
                    mean_ratio=math.fsum(ratios) / len(ratios) if ratios else 0.0,
                )
            )
            logger.debug(f"embedding monitor p={p}, N={depth}: max ratio {stats[-1].max_ratio:.4f}")
        curve = embedding_ratio_curve(params, 1, (1, 0), range(1, 13), math.inf)
        return stats, [GrowthPoint(depth=n, ratio=r) for n, r in curve]


sweep_service = SweepService()
