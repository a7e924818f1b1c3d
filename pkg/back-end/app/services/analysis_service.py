import logging
from typing import Any, Dict, Optional

from app.config import settings
from app.core.cancellation import (
    build_extension,
    extension_contract_holds,
    is_cancelling,
    is_weakly_cancelling,
)
from app.core.fourier_side import fourier_report, is_phi_translation_invariant, is_translation_invariant
from app.core.witnesses import blow_up_curve, disjoint_support_constant, transform_norm
from app.exceptions import (
    ConfigValidationError,
    InvalidParameterError,
    InvariantBreachError,
    WeakCancellationHoldsError,
)
from app.schemas import (
    Command,
    CurveRow,
    FourierSummary,
    NormEntry,
    RankOneWitness,
    RunReport,
    Verdicts,
    WeakWitnessModel,
)
from app.services.problem_service import Problem

logger = logging.getLogger(__name__)


class AnalysisService:
    """Runs the single-problem subcommands and assembles their reports"""

    def _base(self, problem: Problem, command: Command) -> Dict[str, Any]:
        cancel = is_cancelling(problem.w)
        weak = is_weakly_cancelling(problem.w, problem.phi)
        fields: Dict[str, Any] = {
            "command": command,
            "m": problem.params.m,
            "ell": problem.params.ell,
            "w_dim": problem.w.dim,
            "verdicts": Verdicts(cancelling=cancel.cancelling, weakly_cancelling=weak.weakly_cancelling),
        }
        if not cancel.cancelling:
            fields["cancellation_witness"] = RankOneWitness(j=cancel.j, a=list(cancel.a))
        if weak.witness is not None:
            fields["weak_witness"] = WeakWitnessModel(j=weak.witness.j, a=list(weak.witness.a), theta=weak.witness.theta)
        logger.info(
            f"{command.value}: m={problem.params.m}, ell={problem.params.ell}, dim W={problem.w.dim}, "
            f"cancelling={cancel.cancelling}, weakly_cancelling={weak.weakly_cancelling}"
        )
        return fields

    def _fourier_fields(self, problem: Problem, fields: Dict[str, Any]) -> None:
        group = problem.group
        report = fourier_report(problem.w, problem.phi if is_phi_translation_invariant(problem.phi, group).invariant else None, group)
        verdicts: Verdicts = fields["verdicts"]
        verdicts.fourier_cancelling = report.cancelling.holds
        agreement = report.cancelling.holds == verdicts.cancelling
        weak_residual = None
        if report.weakly_cancelling is not None:
            verdicts.fourier_weakly_cancelling = report.weakly_cancelling.holds
            agreement = agreement and report.weakly_cancelling.holds == verdicts.weakly_cancelling
            weak_residual = report.weakly_cancelling.residual
        else:
            logger.warning("φ does not commute with the group translations; only the cancelling verdict is compared")
        verdicts.fourier_agreement = agreement
        fields["fourier"] = FourierSummary(
            group=list(report.group),
            exact=report.exact,
            fiber_dims=report.fiber_dims,
            intersection_dim=report.cancelling.intersection_dim,
            weak_residual=weak_residual,
        )

    def run_check(self, problem: Problem) -> RunReport:
        fields = self._base(problem, Command.CHECK)
        if problem.group is not None and is_translation_invariant(problem.w, problem.group).invariant:
            self._fourier_fields(problem, fields)
        return RunReport(**fields)

    def run_witness(self, problem: Problem, n_max: Optional[int] = None) -> RunReport:
        n_max = n_max or problem.config.depth or settings.WITNESS_MAX_DEPTH
        fields = self._base(problem, Command.WITNESS)
        witness = fields.get("weak_witness")
        if witness is None:
            raise WeakCancellationHoldsError("W and φ are weakly cancelling, the transform admits no blow-up family")
        report = blow_up_curve(problem.w, problem.phi, witness.j, witness.a, n_max)
        fields["curve"] = [CurveRow(N=p.depth, lhs=p.lhs, rhs=p.rhs, ratio=p.ratio) for p in report.curve]
        return RunReport(**fields)

    def run_extend(self, problem: Problem) -> RunReport:
        fields = self._base(problem, Command.EXTEND)
        ext = build_extension(problem.w, problem.phi)
        if not extension_contract_holds(problem.w, problem.phi, ext):
            raise InvariantBreachError("the constructed Φ violates its defining identities")
        fields["extension"] = [list(row) for row in ext.functionals]
        fields["extension_contract"] = True
        fields["disjoint_support_constant"] = disjoint_support_constant(ext)
        return RunReport(**fields)

    def run_norm(self, problem: Problem, depth: Optional[int] = None) -> RunReport:
        depth = depth or problem.config.depth or settings.DEFAULT_DEPTH
        if depth < 2:
            raise InvalidParameterError(f"norm needs depth N >= 2, got {depth}")
        fields = self._base(problem, Command.NORM)
        ext = build_extension(problem.w, problem.phi)
        norms = [transform_norm(ext, n) for n in range(2, depth + 1)]
        constant = disjoint_support_constant(ext)
        if any(norm.squared != norms[0].squared for norm in norms):
            raise InvariantBreachError(f"transform norm moves with depth: {[str(n.squared) for n in norms]}")
        if abs(float(norms[-1].value) - float(constant)) > settings.FLOAT_TOL * max(1.0, float(constant)):
            raise InvariantBreachError(f"transform norm {norms[-1].value} differs from the single-summand bound {constant}")
        fields["extension"] = [list(row) for row in ext.functionals]
        fields["extension_contract"] = extension_contract_holds(problem.w, problem.phi, ext)
        fields["norms"] = [NormEntry(depth=n.depth, squared=n.squared, value=n.value) for n in norms]
        fields["stabilized_norm"] = norms[-1].value
        fields["disjoint_support_constant"] = constant
        return RunReport(**fields)

    def run_fourier(self, problem: Problem) -> RunReport:
        if problem.group is None:
            raise ConfigValidationError("the fourier command needs a group", location="group")
        fields = self._base(problem, Command.FOURIER)
        self._fourier_fields(problem, fields)
        return RunReport(**fields)


analysis_service = AnalysisService()
