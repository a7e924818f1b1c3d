from datetime import datetime
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, BeforeValidator, Field, computed_field, model_validator
from typing_extensions import Annotated

from app.config import settings


def canonical_rational(value: Any) -> str:
    """Normalise 3, "6/8", 0.1 or Fraction(3, 4) to the canonical text "p/q".

    JSON numbers are read by their decimal text, so 0.1 is 1/10.
    """
    if isinstance(value, bool):
        raise ValueError(f"boolean {value!r} is not a rational number")
    if isinstance(value, float):
        value = repr(value)
    try:
        return str(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"cannot parse {value!r} as a rational: {e}") from e


def scalar_text(value: Any) -> str:
    """Exact rationals as "p/q", floats by their shortest round-trip repr."""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return value
    return str(Fraction(value))


Rational = Annotated[str, BeforeValidator(canonical_rational)]
Scalar = Annotated[str, BeforeValidator(scalar_text)]


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class Command(str, Enum):
    CHECK = "check"
    WITNESS = "witness"
    EXTEND = "extend"
    NORM = "norm"
    FOURIER = "fourier"
    SWEEP = "sweep"


class ProblemConfig(BaseModel):
    m: int = Field(..., ge=2, description="Branching factor of the filtration")
    ell: int = Field(..., ge=1, description="Dimension of the target space R^ell")
    w_basis: List[List[List[Rational]]] = Field(
        default_factory=list, description="Basis of W as m x ell matrices with zero column sums"
    )
    phi_images: List[List[Rational]] = Field(
        default_factory=list, description="Image of each basis tensor under phi, a length-m vector summing to 0"
    )
    group: Optional[List[int]] = Field(None, description="Cyclic orders of the group acting on the digits")
    depth: Optional[int] = Field(None, ge=1, description="Depth N of the stopped martingales")
    seed: Optional[int] = Field(None, description="Seed for randomised runs")

    @model_validator(mode="after")
    def check_shapes(self) -> "ProblemConfig":
        for i, tensor in enumerate(self.w_basis):
            if len(tensor) != self.m:
                raise ValueError(f"w_basis[{i}] has {len(tensor)} rows, expected m={self.m}")
            for r, row in enumerate(tensor):
                if len(row) != self.ell:
                    raise ValueError(f"w_basis[{i}][{r}] has {len(row)} entries, expected ell={self.ell}")
        if len(self.phi_images) != len(self.w_basis):
            raise ValueError(f"{len(self.phi_images)} phi_images for {len(self.w_basis)} basis tensors")
        for i, image in enumerate(self.phi_images):
            if len(image) != self.m:
                raise ValueError(f"phi_images[{i}] has {len(image)} entries, expected m={self.m}")
        return self


class RankOneWitness(BaseModel):
    j: int = Field(..., description="Digit j with D_j x a in W")
    a: List[Rational]


class WeakWitnessModel(BaseModel):
    j: int
    a: List[Rational]
    theta: Rational = Field(..., description="(phi(D_j x a))_j, non-zero")


class Verdicts(BaseModel):
    cancelling: bool
    weakly_cancelling: Optional[bool] = None
    fourier_cancelling: Optional[bool] = None
    fourier_weakly_cancelling: Optional[bool] = None
    fourier_agreement: Optional[bool] = None


class CurveRow(BaseModel):
    N: int
    lhs: Rational
    rhs: Scalar
    ratio: Scalar


class NormEntry(BaseModel):
    depth: int
    squared: Rational
    value: Scalar


class FourierSummary(BaseModel):
    group: List[int]
    exact: bool
    fiber_dims: Dict[str, int]
    intersection_dim: int
    weak_residual: Optional[float] = None


class RunReport(BaseModel):
    command: Command
    m: int
    ell: int
    w_dim: int
    verdicts: Verdicts
    cancellation_witness: Optional[RankOneWitness] = None
    weak_witness: Optional[WeakWitnessModel] = None
    extension: Optional[List[List[Rational]]] = Field(None, description="Phi as m rows of length m*ell")
    extension_contract: Optional[bool] = None
    norms: List[NormEntry] = Field(default_factory=list)
    stabilized_norm: Optional[Scalar] = None
    disjoint_support_constant: Optional[Scalar] = None
    curve: List[CurveRow] = Field(default_factory=list)
    fourier: Optional[FourierSummary] = None

    @model_validator(mode="after")
    def check_consistency(self) -> "RunReport":
        if (self.cancellation_witness is None) != self.verdicts.cancelling:
            raise ValueError("a cancellation witness must be present exactly when W is not cancelling")
        if self.verdicts.weakly_cancelling is not None:
            if (self.weak_witness is None) != self.verdicts.weakly_cancelling:
                raise ValueError("a weak witness must be present exactly when weak cancellation fails")
        elif self.weak_witness is not None:
            raise ValueError("weak witness given without a weak cancellation verdict")
        return self


class SweepRequest(BaseModel):
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED)
    instances: int = Field(default_factory=lambda: settings.SWEEP_INSTANCES, ge=0)
    ti_instances: int = Field(default_factory=lambda: settings.SWEEP_TI_INSTANCES, ge=0)
    delta_martingales: int = Field(default_factory=lambda: settings.SWEEP_DELTA_MARTINGALES, ge=0)
    depth: int = Field(default_factory=lambda: settings.SWEEP_DEPTH, ge=2)
    max_m: int = Field(default_factory=lambda: settings.SWEEP_MAX_M, ge=2)
    max_ell: int = Field(default_factory=lambda: settings.SWEEP_MAX_ELL, ge=1)
    workers: int = Field(default_factory=lambda: settings.SWEEP_WORKERS, ge=1)
    monitor_embedding: bool = False
    embedding_samples: int = Field(default_factory=lambda: settings.SWEEP_EMBEDDING_SAMPLES, ge=1)


class CheckTally(BaseModel):
    name: str
    passed: int = 0
    failed: int = 0


class SweepFailure(BaseModel):
    check: str
    instance: int
    message: str
    config: ProblemConfig = Field(..., description="Smallest failing instance after shrinking")


class EmbeddingStats(BaseModel):
    p: str
    depth: int
    samples: int
    max_ratio: float
    mean_ratio: float


class GrowthPoint(BaseModel):
    depth: int
    ratio: float


class SweepReport(BaseModel):
    seed: int
    instances: int
    ti_instances: int
    checks: List[CheckTally]
    failures: List[SweepFailure] = Field(default_factory=list)
    embedding: List[EmbeddingStats] = Field(default_factory=list)
    necessity_growth: List[GrowthPoint] = Field(default_factory=list)

    @computed_field
    @property
    def all_passed(self) -> bool:
        return all(tally.failed == 0 for tally in self.checks)


class HealthResponse(BaseModel):
    status: str
    version: str
    timestamp: datetime
