from typing import Callable, Optional

from fastapi import APIRouter, HTTPException
from app.schemas import ProblemConfig, RunReport, SweepReport, SweepRequest
from app.exceptions import InvariantBreachError, PreconditionError, ValidationFailure
from app.services.analysis_service import analysis_service
from app.services.problem_service import Problem, problem_service
from app.services.sweep_service import sweep_service
import logging

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/analysis", tags=["analysis"])


def _run(name: str, config: ProblemConfig, action: Callable[[Problem], RunReport]) -> RunReport:
    try:
        logger.info(f"{name}: m={config.m}, ell={config.ell}, {len(config.w_basis)} basis tensors")
        return action(problem_service.build(config))
    except ValidationFailure as e:
        raise HTTPException(status_code=422, detail=str(e))
    except PreconditionError as e:
        raise HTTPException(status_code=409, detail=str(e))
    except InvariantBreachError as e:
        logger.error(f"{name} hit an invariant breach: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=str(e))
    except Exception as e:
        logger.error(f"{name} failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/check", response_model=RunReport)
def check(config: ProblemConfig):
    """
    Decide cancellation and weak cancellation for (W, φ).

    When the config names a group and W is translation invariant, the
    Fourier verdicts and their agreement are reported as well.
    """
    return _run("check", config, analysis_service.run_check)


@router.post("/witness", response_model=RunReport)
def witness(config: ProblemConfig, depth: Optional[int] = None):
    """
    Blow-up curve of the necessity counterexample for N = 1..depth.
    """
    return _run("witness", config, lambda problem: analysis_service.run_witness(problem, depth))


@router.post("/extend", response_model=RunReport)
def extend(config: ProblemConfig):
    """
    Build the extension Φ of φ and verify its defining identities.
    """
    return _run("extend", config, analysis_service.run_extend)


@router.post("/norm", response_model=RunReport)
def norm(config: ProblemConfig, depth: Optional[int] = None):
    """
    Exact finite-depth transform norm for depths 2..depth.
    """
    return _run("norm", config, lambda problem: analysis_service.run_norm(problem, depth))


@router.post("/fourier", response_model=RunReport)
def fourier(config: ProblemConfig):
    """
    Spatial and Fourier verdicts over the configured group.
    """
    return _run("fourier", config, analysis_service.run_fourier)


@router.post("/sweep", response_model=SweepReport)
def sweep(request: SweepRequest):
    """
    Randomised property sweep; failing instances are shrunk before reporting.
    """
    try:
        return sweep_service.run_sweep(request)
    except Exception as e:
        logger.error(f"Sweep failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=str(e))
