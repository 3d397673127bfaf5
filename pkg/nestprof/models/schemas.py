# nestprof/models/schemas.py
import json
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum
from fractions import Fraction
from typing import Annotated, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class InputFormat(str, Enum):
    JSON_LINES = "json-lines"
    JSON_ARRAY = "json-array"


class UnrollMode(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class DependencyKind(str, Enum):
    IND = "ind"
    FD = "fd"


class Algorithm(str, Enum):
    SPIDER = "spider"
    DEMARCHI = "demarchi"
    TANE = "tane"
    FDEP = "fdep"

    @property
    def kind(self) -> DependencyKind:
        if self in (Algorithm.SPIDER, Algorithm.DEMARCHI):
            return DependencyKind.IND
        return DependencyKind.FD


class MiningRequest(BaseModel):
    kind: DependencyKind
    algorithm: Algorithm
    unroll: UnrollMode = UnrollMode.DYNAMIC
    threshold: float = Field(default=0.99, gt=0.0, le=1.0)
    max_lhs: int = Field(default=3, ge=1)
    threads: int = Field(default=1, ge=1)
    include_unsatisfied: bool = False

    @model_validator(mode="after")
    def algorithm_matches_kind(self) -> "MiningRequest":
        if self.algorithm.kind != self.kind:
            raise ValueError(
                f"algorithm {self.algorithm.value!r} mines {self.algorithm.kind.value} dependencies, "
                f"not {self.kind.value}"
            )
        return self

    @property
    def threshold_fraction(self) -> Fraction:
        # repr keeps 0.99 as 99/100 instead of the binary float expansion
        return Fraction(repr(self.threshold))

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "kind": "ind",
                "algorithm": "spider",
                "unroll": "dynamic",
                "threshold": 0.99,
            }
        }
    )


def format_strength(strength: Fraction) -> str:
    """Fixed six-digit decimal rendering used by every output record."""
    exact = Decimal(strength.numerator) / Decimal(strength.denominator)
    return str(exact.quantize(Decimal("0.000001"), rounding=ROUND_HALF_EVEN))


class DependencyRecord(BaseModel):
    kind: Literal["nind", "nfd"]
    lhs: List[str]
    rhs: str
    strength: Fraction
    satisfied: bool

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def sort_key(self):
        return (self.lhs, self.rhs)

    def to_json_line(self) -> str:
        # hand-assembled so strength keeps its fixed width
        fields = [
            f'"kind": {json.dumps(self.kind)}',
            f'"lhs": {json.dumps(self.lhs, ensure_ascii=False)}',
            f'"rhs": {json.dumps(self.rhs, ensure_ascii=False)}',
            f'"strength": {format_strength(self.strength)}',
            f'"satisfied": {json.dumps(self.satisfied)}',
        ]
        return "{" + ", ".join(fields) + "}"


class TimingRecord(BaseModel):
    phase_collect_s: float
    phase_mine_s: float
    rows_processed: int
    expansion_factor: float

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "phase_collect_s": round(self.phase_collect_s, 6),
                "phase_mine_s": round(self.phase_mine_s, 6),
                "rows_processed": self.rows_processed,
                "expansion_factor": round(self.expansion_factor, 6),
            }
        )


class PlantedDependency(BaseModel):
    kind: DependencyKind
    lhs: str
    rhs: str


class GenSpec(BaseModel):
    seed: int = 0
    n_docs: int = Field(default=100, ge=1)
    n_scalar_keys: int = Field(default=2, ge=0)
    n_array_keys: int = Field(default=2, ge=0)
    array_len: int = Field(default=10, ge=1)
    nesting_depth: int = Field(default=1, ge=1)
    domain_size: int = Field(default=1000, ge=1)
    planted: List[PlantedDependency] = Field(default_factory=list)
    violation_rate: float = Field(default=0.0, ge=0.0, lt=1.0)

    @field_validator("planted")
    @classmethod
    def no_self_plants(cls, planted: List[PlantedDependency]) -> List[PlantedDependency]:
        for plant in planted:
            if plant.lhs == plant.rhs:
                raise ValueError(f"planted dependency uses {plant.lhs!r} on both sides")
        return planted

    @property
    def expected_expansion_factor(self) -> int:
        return self.array_len ** self.n_array_keys

    @property
    def scalar_keys(self) -> List[str]:
        return [f"s{i}" for i in range(self.n_scalar_keys)]

    @property
    def array_keys(self) -> List[str]:
        return [f"a{i}" for i in range(self.n_array_keys)]

    @property
    def wrapper_keys(self) -> List[str]:
        """Objects the scalar keys are nested under, outermost first."""
        return [f"l{level}" for level in range(1, self.nesting_depth)]

    def path_of(self, key: str) -> str:
        if key in self.array_keys:
            return f"$.{key}[*]"
        if key in self.scalar_keys:
            return "$" + "".join(f".{name}" for name in self.wrapper_keys + [key])
        raise ValueError(f"unknown generated key {key!r}")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "seed": 7,
                "n_docs": 1000,
                "n_scalar_keys": 3,
                "n_array_keys": 2,
                "array_len": 10,
                "planted": [{"kind": "ind", "lhs": "s1", "rhs": "s0"}],
                "violation_rate": 0.01,
            }
        }
    )


PositiveInt = Annotated[int, Field(ge=1)]


class BenchRequest(BaseModel):
    algorithms: List[Algorithm] = Field(default_factory=lambda: list(Algorithm), min_length=1)
    unroll_modes: List[UnrollMode] = Field(default_factory=lambda: list(UnrollMode), min_length=1)
    sizes: List[PositiveInt] = Field(default_factory=lambda: [100, 1000], min_length=1)
    # document complexity axes, swept alongside sizes
    array_lens: List[PositiveInt] = Field(default_factory=lambda: [10], min_length=1)
    nesting_depths: List[PositiveInt] = Field(default_factory=lambda: [1], min_length=1)
    n_array_keys: int = Field(default=2, ge=0)
    threshold: float = Field(default=0.99, gt=0.0, le=1.0)
    max_lhs: int = Field(default=2, ge=1)
    fd_size_limit: Optional[int] = Field(default=2000, ge=2)
    seed: int = 0


class CollectionStats(BaseModel):
    """Shape of a collection: size, attribute values, nesting and expansion."""

    n_docs: int
    n_paths: int
    avg_size_bytes: float
    avg_attribute_values: float
    avg_nesting: float
    max_nesting: int
    expansion_factor: float

    def to_json_line(self) -> str:
        return json.dumps(
            {name: round(value, 6) if isinstance(value, float) else value for name, value in self.model_dump().items()}
        )
