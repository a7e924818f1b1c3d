import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

from app.core.fourier_side import GroupStructure
from app.core.tensor_space import ModelParams, PhiMap, TensorVW, WSpace
from app.exceptions import (
    ConfigValidationError,
    DependentBasisError,
    GroupMismatchError,
    InvalidParameterError,
    PhiRangeError,
    TensorValidationError,
)
from app.schemas import ProblemConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Problem:
    config: ProblemConfig
    params: ModelParams
    w: WSpace
    phi: PhiMap
    group: Optional[GroupStructure] = None


class ProblemService:
    """Load, validate and serialise problem configurations"""

    def load(self, path: Union[str, Path]) -> ProblemConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigValidationError(f"cannot read config: {e}", location=str(path)) from e
        config = ProblemConfig.model_validate_json(text)
        logger.info(f"Loaded config {path}: m={config.m}, ell={config.ell}, dim W={len(config.w_basis)}")
        return config

    def parse(self, data: Union[str, Dict[str, Any]]) -> ProblemConfig:
        if isinstance(data, str):
            return ProblemConfig.model_validate_json(data)
        return ProblemConfig.model_validate(data)

    def build(self, config: ProblemConfig) -> Problem:
        """Turn a config into exact objects, re-checking every algebraic invariant."""
        params = ModelParams(config.m, config.ell)

        tensors = []
        for i, matrix in enumerate(config.w_basis):
            try:
                tensors.append(TensorVW(tuple(tuple(row) for row in matrix)))
            except TensorValidationError as e:
                raise ConfigValidationError(f"column {e.column} sums to {e.total}, expected 0", location=f"w_basis[{i}]") from e

        try:
            w = WSpace(params, tuple(tensors))
        except DependentBasisError as e:
            raise ConfigValidationError(str(e), location=f"w_basis[{e.index}]") from e

        try:
            phi = PhiMap(w, tuple(tuple(image) for image in config.phi_images))
        except PhiRangeError as e:
            raise ConfigValidationError(str(e), location=f"phi_images[{e.index}]") from e

        group = None
        if config.group is not None:
            try:
                group = GroupStructure(tuple(config.group))
                group.check_order(config.m)
            except (InvalidParameterError, GroupMismatchError) as e:
                raise ConfigValidationError(str(e), location="group") from e

        logger.debug(f"Built problem: {params}, dim W={w.dim}, group={config.group}")
        return Problem(config, params, w, phi, group)

    def serialize(self, config: ProblemConfig) -> str:
        return config.model_dump_json(indent=2, exclude_none=True)

    def from_objects(
        self,
        w: WSpace,
        phi_images: Any,
        group: Optional[GroupStructure] = None,
        depth: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> ProblemConfig:
        return ProblemConfig(
            m=w.params.m,
            ell=w.params.ell,
            w_basis=[[list(row) for row in t.entries] for t in w.basis],
            phi_images=[list(image) for image in phi_images],
            group=list(group.cyclic_orders) if group else None,
            depth=depth,
            seed=seed,
        )


problem_service = ProblemService()
