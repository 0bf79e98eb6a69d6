# app/schemas/results.py
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt


class Regime(str, enum.Enum):
    generic = "generic"
    series_near_zero = "series_near_zero"
    series_near_wall = "series_near_wall"


class PotentialValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    regime: Regime = Regime.generic


class SpectralTruncation(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_index: PositiveInt
    tail_bound: NonNegativeFloat


class Branch(str, enum.Enum):
    abs_j = "abs_j"
    signed_j = "signed_j"
    maslov = "maslov"


class WrapPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    lattice_terms: PositiveInt = 12
    branch: Branch = Branch.abs_j
    shift_applied: bool = False


class OrbitTriple(BaseModel):
    """Radii of the X, Y and X+Y orbits."""

    model_config = ConfigDict(frozen=True)

    r1: NonNegativeFloat
    r2: NonNegativeFloat
    r: NonNegativeFloat


class EFunctionValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    in_support: bool


class Scheme(str, enum.Enum):
    geodesic_walk = "geodesic_walk"
    flat_walk_fk = "flat_walk_fk"


class WalkConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    step_count: PositiveInt = 200
    sample_count: PositiveInt = 100_000
    t: PositiveFloat
    seed: int = Field(default=0, ge=0, lt=2**64)
    scheme: Scheme = Scheme.geodesic_walk
    # paths per RNG stream; fixes the partition so results do not depend on threads
    block_size: PositiveInt = 4096

    @property
    def dt(self) -> float:
        return self.t / self.step_count


@dataclass(frozen=True, eq=False)
class MCEstimate:
    grid: np.ndarray
    edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    effective_samples: float
    killed_mass: float = 0.0
    weight_range: Tuple[float, float] = (1.0, 1.0)
    samples: int = 0
    steps: int = 0
    seed: int = 0


@dataclass(frozen=True, eq=False)
class KernelEvaluation:
    """Kernel values on a grid, tagged with the method that produced them."""

    space: str
    n: int
    t: float
    coordinate: np.ndarray
    values: np.ndarray
    method: str
    err_est: np.ndarray
    extra: str = ""
    meta: Dict[str, object] = field(default_factory=dict)

    def rows(self) -> List[Dict[str, object]]:
        err = np.broadcast_to(np.asarray(self.err_est, dtype=float), self.values.shape)
        return [
            {
                "space": self.space,
                "n": self.n,
                "t": self.t,
                "coordinate": float(x),
                "method": self.method,
                "value": float(v),
                "err_est": float(e),
                "extra": self.extra,
            }
            for x, v, e in zip(self.coordinate, self.values, err)
        ]


class Verdict(BaseModel):
    criterion: int
    name: str
    passed: bool
    measured: Dict[str, float] = Field(default_factory=dict)
    threshold: Optional[str] = None
    detail: Optional[str] = None


class RunStatus(str, enum.Enum):
    ok = "ok"
    failed = "failed"
    invalid = "invalid"


class RunReport(BaseModel):
    command: str
    status: RunStatus = RunStatus.ok
    rows: int = 0
    output: Optional[str] = None
    error: Optional[str] = None
    verdicts: List[Verdict] = Field(default_factory=list)
    summary: Dict[str, float] = Field(default_factory=dict)
    format: Literal["csv", "json"] = "csv"
