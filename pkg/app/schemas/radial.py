# app/schemas/radial.py
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal, Mapping, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveInt, model_validator
from scipy.interpolate import CubicSpline

from app.schemas.space import SpaceSpec

MeasureWeight = Literal["none", "delta0", "delta"]

_GRID_RE = re.compile(r"^\s*([^:]+):([^:]+):(\d+)\s*$")


class GridSpec(BaseModel):
    """Uniform grid written as ``start:stop:count``."""

    model_config = ConfigDict(frozen=True)

    start: float
    stop: float
    count: PositiveInt

    @model_validator(mode="after")
    def _ordered(self) -> "GridSpec":
        if self.start < 0:
            raise ValueError("grid start must be non-negative")
        if self.count > 1 and not self.stop > self.start:
            raise ValueError("grid stop must exceed start")
        return self

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        m = _GRID_RE.match(text)
        if not m:
            raise ValueError(f"grid must look like start:stop:count, got {text!r}")
        return cls(start=float(m.group(1)), stop=float(m.group(2)), count=int(m.group(3)))

    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def __str__(self) -> str:
        return f"{self.start!r}:{self.stop!r}:{self.count}"


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Values of a K-invariant function on a radial grid in the closed positive chamber.

    Calling the object interpolates with a cubic spline (zero slope at the
    origin when the grid starts there) and returns 0 beyond the last grid point.
    """

    grid: np.ndarray
    values: np.ndarray
    measure_weight: MeasureWeight = "none"
    meta: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or values.shape != grid.shape:
            raise ValueError("grid and values must be 1-d arrays of the same length")
        if grid.size < 2:
            raise ValueError("a radial function needs at least two grid points")
        if grid[0] < 0:
            raise ValueError("grid must start at or above 0")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def from_callable(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        grid: np.ndarray,
        measure_weight: MeasureWeight = "none",
    ) -> "RadialFunction":
        grid = np.asarray(grid, dtype=float)
        return cls(grid=grid, values=np.asarray(fn(grid), dtype=float), measure_weight=measure_weight)

    @cached_property
    def _spline(self) -> CubicSpline:
        if self.grid[0] == 0.0:
            return CubicSpline(self.grid, self.values, bc_type=((1, 0.0), "not-a-knot"))
        return CubicSpline(self.grid, self.values)

    @property
    def spacing(self) -> float:
        return float(np.max(np.diff(self.grid)))

    @property
    def is_uniform(self) -> bool:
        d = np.diff(self.grid)
        return bool(np.allclose(d, d[0], rtol=1e-9, atol=0.0))

    def __call__(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        inside = r <= self.grid[-1]
        if np.any(inside):
            out[inside] = self._spline(r[inside])
        return out if out.ndim else float(out)


RadialInput = Union[RadialFunction, Callable[[np.ndarray], np.ndarray]]


class RadialOperator(BaseModel):
    model_config = ConfigDict(frozen=True)

    space: SpaceSpec
    side: Literal["tangent", "manifold"] = "manifold"
    form: Literal["direct", "conjugated"] = "direct"
