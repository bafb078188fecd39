"""Pydantic models for run configuration and reports."""

import math
from fractions import Fraction
from typing import Annotated, Literal

from pydantic import BaseModel, BeforeValidator, PlainSerializer, field_validator, model_validator
from pydantic.fields import Field

from app.config.settings import settings


def canonical_rational(value) -> str:
    """Exact rational in ``p/q`` form; floats are read through their decimal repr."""
    if isinstance(value, float):
        value = repr(value)
    try:
        frac = Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise ValueError(f"'{value}' is not a rational number") from e
    return f"{frac.numerator}/{frac.denominator}"


def canonical_float(value: float) -> float:
    """Round to the configured number of significant digits."""
    return float(f"{value:.{settings.float_digits}g}")


Rational = Annotated[str, BeforeValidator(canonical_rational)]
Float12 = Annotated[float, PlainSerializer(canonical_float, return_type=float)]

Command = Literal[
    "rate", "codec", "entropy", "steer", "digitize", "counterexample", "additivity"
]


def _split(value):
    if isinstance(value, str):
        return [v for v in value.split(",") if v.strip()]
    return value


class ExperimentConfig(BaseModel):
    """Per-run configuration, built from a JSON file merged with CLI flags."""

    dist: list[Rational] = Field(
        default_factory=lambda: ["1/2", "1/2"],
        description="Source distribution p (exact rationals, comma separated on the CLI)",
        examples=[["9/10", "1/10"], ["1/2", "1/2"]],
    )
    dist2: list[Rational] | None = Field(
        default=None,
        description="Second source q, used by the additivity check",
        examples=[["1", "0"]],
    )
    eps: list[Rational] = Field(
        default_factory=lambda: ["1/10"],
        description="Epsilon grid, each value in (0, 2)",
        examples=[["1/20", "1/50"]],
    )
    n: int | None = Field(default=None, ge=1, description="Single message length (codec)")
    n_min: int = Field(default=1, ge=1, description="Smallest message length of a sweep")
    n_max: int = Field(default=8, ge=1, description="Largest message length of a sweep")
    delta: Rational = Field(
        default=settings.default_delta, validate_default=True, description="Typical-set width"
    )
    seed: int = Field(default=settings.default_seed, description="Seed for samplers and oracles")
    samples: int = Field(default=50, ge=0, description="Sample count for randomized checks")
    a_size: int = Field(default=5, ge=2, description="Size of the digitized system")
    b_size: int = Field(default=2, ge=2, description="Size of the reference system")
    out: str | None = Field(default=None, description="CSV output path")
    report: str | None = Field(default=None, description="JSON report path")
    memory_bound_log2: int = Field(
        default=settings.memory_bound_log2, ge=1, le=40, description="log2 of the entry bound"
    )
    jobs: int = Field(default=settings.jobs, ge=1, description="Worker processes for sweeps")

    @field_validator("dist", "dist2", "eps", mode="before")
    @classmethod
    def split_lists(cls, value):
        return _split(value)

    @field_validator("dist", "dist2")
    @classmethod
    def check_distribution(cls, value: list[str] | None) -> list[str] | None:
        if value is None:
            return value
        probs = [Fraction(v) for v in value]
        if len(probs) < 2:
            raise ValueError("a distribution needs at least two entries")
        if any(v < 0 for v in probs):
            raise ValueError("distribution entries must be non-negative")
        if sum(probs) != 1:
            raise ValueError(f"distribution sums to {sum(probs)}, expected 1")
        return value

    @field_validator("eps")
    @classmethod
    def check_epsilon(cls, value: list[str]) -> list[str]:
        if not value:
            raise ValueError("epsilon grid is empty")
        for v in value:
            if not 0 < Fraction(v) < 2:
                raise ValueError(f"epsilon {v} outside (0, 2)")
        return value

    @field_validator("delta")
    @classmethod
    def check_delta(cls, value: str) -> str:
        if Fraction(value) <= 0:
            raise ValueError("delta must be positive")
        return value

    @model_validator(mode="after")
    def check_range(self) -> "ExperimentConfig":
        if self.n_min > self.n_max:
            raise ValueError(f"n_min={self.n_min} is above n_max={self.n_max}")
        # the spectrum holds one entry per composition of N into len(dist) parts
        n_top = self.n if self.n is not None else self.n_max
        types = math.comb(n_top + len(self.dist) - 1, len(self.dist) - 1)
        if types > 2**self.memory_bound_log2:
            raise ValueError(f"N={n_top} needs {types} spectrum entries, above the memory bound")
        return self

    @property
    def probabilities(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v) for v in self.dist)

    @property
    def epsilons(self) -> list[Fraction]:
        return [Fraction(v) for v in self.eps]

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "example": {
                "dist": ["9/10", "1/10"],
                "eps": ["1/20", "1/50"],
                "n_max": 18,
                "out": "rates.csv",
            }
        },
    }


class RateRow(BaseModel):
    """One row of the rate table."""

    N: int = Field(ge=1)
    epsilon: Float12
    M_min: int = Field(ge=1)
    rate: Float12
    target: Float12
    gap: Float12


class EntropyResponse(BaseModel):
    """Entropies of a source and of its messages."""

    dist: list[Rational]
    H: Float12
    S1: Float12
    S2: Float12
    S3: Float12
    S1_oracle: Float12
    S2_oracle: Float12
    oracle_tests: int
    sreg_at_n: dict[int, Float12]
    sreg_limit: Float12
    superadditivity_single: Float12
    superadditivity_double: Float12
    tolerance: float


class CodecResponse(BaseModel):
    """Typical-set codec summary."""

    dist: list[Rational]
    N: int
    M: int
    delta: Rational
    rate: Float12
    target: Float12
    typical_strings: int
    typical_mass: Rational
    fom_tilde: Rational
    fom_tilde_float: Float12
    exact_m_min: dict[str, int] = Field(description="Minimal M per epsilon")
    norm_path_checked: bool
    dilation_max_error: Rational | None = None
    fallback_codeword: str
    fallback_string: str


class SteeringResponse(BaseModel):
    """Steering completeness over sampled dilations."""

    dist: list[Rational]
    samples: int
    ancilla_sizes: list[int]
    reproduced: int
    seed: int


class DigitizerResponse(BaseModel):
    """Digitization of a system into copies of another."""

    a_size: int
    b_size: int
    k: int
    register_size: int
    exact_round_trip: bool
    asymptotic: dict[int, int] = Field(description="k1 -> M2_min(k1)")
    log_ratio: Float12


class CounterexampleRow(BaseModel):
    N: int
    epsilon: Rational
    M_min: int
    M_min_mixed: int
    best_retained: dict[int, Rational]


class CounterexampleResponse(BaseModel):
    """Permutation-restricted compression of a bit source."""

    dist: list[Rational]
    threshold: Rational
    entropy: Float12
    rows: list[CounterexampleRow]


class AdditivityResponse(BaseModel):
    """Rates of a composite source against the sum of the single-source targets."""

    dist: list[Rational]
    dist2: list[Rational]
    epsilon: Rational
    composite_entropy: Float12
    target_sum: Float12
    rows: list[RateRow]
    limsup: Float12


class AcceptanceResult(BaseModel):
    """Outcome of one named acceptance target."""

    criterion: int = Field(ge=1, le=12)
    name: str
    passed: bool
    elapsed_ms: float
    details: dict[str, str | int | float | bool | None] = Field(default_factory=dict)
