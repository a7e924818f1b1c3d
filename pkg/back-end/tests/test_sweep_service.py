import numpy as np
import pytest

from app.core.cancellation import is_cancelling, is_weakly_cancelling
from app.core.fourier_side import is_phi_translation_invariant, is_translation_invariant
from app.core.tensor_space import ModelParams, PhiMap, WSpace
from app.schemas import SweepRequest
from app.services.sweep_service import (
    CHECKS,
    Instance,
    check_planted_fault,
    oracle_verdicts,
    random_instance,
    random_w,
    shrink,
    sweep_service,
    translation_invariant_instance,
    weakly_cancelling_phi,
)


@pytest.fixture
def small_request() -> SweepRequest:
    return SweepRequest(seed=7, instances=12, ti_instances=8, delta_martingales=3, depth=3, max_m=4, max_ell=2, workers=2)


class TestGenerators:
    @pytest.mark.parametrize("seed", range(10))
    def test_weakly_cancelling_phi(self, seed):
        rng = np.random.default_rng(seed)
        w = random_w(rng, ModelParams(3, 2), plant=True)
        assert is_weakly_cancelling(w, weakly_cancelling_phi(rng, w)).weakly_cancelling

    def test_planted_w_is_not_cancelling(self):
        found = 0
        for seed in range(10):
            w = random_w(np.random.default_rng(seed), ModelParams(3, 1), plant=True)
            found += not is_cancelling(w).cancelling
        assert found > 0

    @pytest.mark.parametrize("seed", range(10))
    def test_translation_invariant_instances(self, seed, small_request):
        inst = translation_invariant_instance(np.random.default_rng(seed), seed, small_request)
        assert is_translation_invariant(inst.w, inst.group).invariant
        assert is_phi_translation_invariant(inst.phi, inst.group).invariant

    def test_same_seed_same_instance(self, small_request):
        a = random_instance(np.random.default_rng(3), 0, small_request)
        b = random_instance(np.random.default_rng(3), 0, small_request)
        assert a.w.basis == b.w.basis
        assert a.phi.images == b.phi.images


class TestOracle:
    def test_weak_example(self, d1_space, weak_phi):
        assert oracle_verdicts(d1_space, weak_phi) == (False, True)

    def test_blow_up_example(self, d1_space, identity_phi):
        assert oracle_verdicts(d1_space, identity_phi) == (False, False)

    def test_zero_space(self):
        w = WSpace.zero(ModelParams(3, 2))
        assert oracle_verdicts(w, PhiMap(w)) == (True, True)

    @pytest.mark.parametrize("seed", range(8))
    def test_agrees_with_checker(self, seed, small_request):
        inst = random_instance(np.random.default_rng(seed), seed, small_request)
        expected = oracle_verdicts(inst.w, inst.phi)
        assert expected == (is_cancelling(inst.w).cancelling, is_weakly_cancelling(inst.w, inst.phi).weakly_cancelling)


class TestShrink:
    def test_removes_basis_tensors_while_failing(self):
        request = SweepRequest(max_m=3, max_ell=2)
        inst = next(
            inst
            for inst in (random_instance(np.random.default_rng(s), s, request) for s in range(50))
            if inst.w.dim >= 2
        )
        small = shrink(lambda i: (i.w.dim == 0, "non-empty W"), inst)
        assert small.w.dim == 1

    def test_planted_fault_is_detected(self, d1_space, weak_phi):
        result = check_planted_fault(Instance(0, d1_space, weak_phi, 11, 3, 4))
        assert result[0], result[1]


class TestRunSweep:
    def test_all_checks_pass(self, small_request):
        report = sweep_service.run_sweep(small_request)
        assert report.all_passed, [f.message for f in report.failures]
        assert [t.name for t in report.checks] == [name for name, _ in CHECKS]
        fourier = next(t for t in report.checks if t.name == "fourier_weak_cancelling")
        assert fourier.passed == small_request.ti_instances

    def test_deterministic(self, small_request):
        first = sweep_service.run_sweep(small_request)
        second = sweep_service.run_sweep(small_request.model_copy(update={"workers": 1}))
        assert first.model_dump() == second.model_dump()

    def test_empty_sweep(self):
        report = sweep_service.run_sweep(SweepRequest(instances=0, ti_instances=0))
        assert report.all_passed
        assert all(t.passed == 0 for t in report.checks)

    @pytest.mark.slow
    def test_embedding_monitor(self):
        report = sweep_service.run_sweep(SweepRequest(instances=0, ti_instances=0, monitor_embedding=True, embedding_samples=40))
        assert {(e.p, e.depth) for e in report.embedding} == {(p, n) for p in ("2", "inf") for n in (2, 4, 6, 8, 10)}
        growth = [g.ratio for g in report.necessity_growth]
        assert growth == sorted(growth)
        assert all(0 < e.max_ratio < float("inf") for e in report.embedding)
