# app/schemas/space.py
from __future__ import annotations

import enum
import math
from functools import lru_cache
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator


class SpaceKind(str, enum.Enum):
    sphere = "sphere"
    hyperbolic = "hyperbolic"
    compact_group_SU2 = "compact_group_SU2"
    circle = "circle"
    complex_group_rank1 = "complex_group_rank1"
    preset_by_name = "preset_by_name"
    # concrete kinds produced by presets
    euclidean = "euclidean"
    compact_group = "compact_group"
    complex_group = "complex_group"
    projective = "projective"


class Root(BaseModel):
    model_config = ConfigDict(frozen=True)

    coefficients: Tuple[float, ...]
    multiplicity: PositiveInt


class RestrictedRootSystem(BaseModel):
    """Positive restricted roots with multiplicities on a rank-l flat.

    Roots are stored as coefficient vectors ``a``; the pairing with a point
    ``h`` of the flat is ``a @ gram @ h`` and ``<a, b> = a @ gram @ b``.
    A root counts as 2α exactly when its half is also a positive root.
    """

    model_config = ConfigDict(frozen=True)

    rank: PositiveInt
    positive_roots: Tuple[Root, ...] = ()
    gram: Tuple[Tuple[float, ...], ...]

    @model_validator(mode="after")
    def _check(self) -> "RestrictedRootSystem":
        g = np.asarray(self.gram, dtype=float)
        if g.shape != (self.rank, self.rank):
            raise ValueError(f"gram must be {self.rank}x{self.rank}, got {g.shape}")
        if not np.allclose(g, g.T, atol=1e-14):
            raise ValueError("gram must be symmetric")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise ValueError("gram must be positive definite") from exc
        for root in self.positive_roots:
            if len(root.coefficients) != self.rank:
                raise ValueError(f"root {root.coefficients} does not have {self.rank} coefficients")
        a = np.asarray([r.coefficients for r in self.positive_roots], dtype=float).reshape(-1, self.rank)
        for i in range(len(a)):
            if not np.any(a[i]):
                raise ValueError("zero root")
            for k in range(i + 1, len(a)):
                if np.linalg.matrix_rank(np.vstack([a[i], a[k]]), tol=1e-12) < 2:
                    ratio = float(np.dot(a[k], a[i]) / np.dot(a[i], a[i]))
                    # only the pair (α, 2α) may be proportional
                    if not (math.isclose(ratio, 2.0) or math.isclose(ratio, 0.5)):
                        raise ValueError(
                            f"roots {tuple(a[i])} and {tuple(a[k])} are proportional with ratio {ratio}"
                        )
        return self

    @property
    def gram_matrix(self) -> np.ndarray:
        return _derived(self)["gram"]

    @property
    def coefficient_matrix(self) -> np.ndarray:
        return _derived(self)["coefficients"]

    @property
    def multiplicities(self) -> np.ndarray:
        return _derived(self)["multiplicities"]

    @property
    def root_norms_sq(self) -> np.ndarray:
        return _derived(self)["norms_sq"]

    @property
    def rho(self) -> np.ndarray:
        return _derived(self)["rho"]

    @property
    def rho_norm_sq(self) -> float:
        return float(_derived(self)["rho_norm_sq"])

    @property
    def multipliable(self) -> Tuple[int, ...]:
        """Indices of roots α whose double 2α is also a positive root (the set Σ_m)."""
        return _derived(self)["multipliable"]

    def double_of(self, i: int) -> Optional[int]:
        return _derived(self)["doubles"].get(i)

    def inner(self, a, b) -> float:
        return float(np.asarray(a, float) @ self.gram_matrix @ np.asarray(b, float))

    @property
    def multiplicity_total(self) -> int:
        return int(sum(r.multiplicity for r in self.positive_roots))


@lru_cache(maxsize=256)
def _derived(roots: RestrictedRootSystem) -> dict:
    g = np.asarray(roots.gram, dtype=float)
    a = np.asarray([r.coefficients for r in roots.positive_roots], dtype=float).reshape(-1, roots.rank)
    m = np.asarray([r.multiplicity for r in roots.positive_roots], dtype=float)
    norms = np.einsum("ij,jk,ik->i", a, g, a)
    rho = 0.5 * (m[:, None] * a).sum(axis=0) if len(a) else np.zeros(roots.rank)
    doubles = {}
    for i in range(len(a)):
        for k in range(len(a)):
            if k != i and np.allclose(2.0 * a[i], a[k]):
                doubles[i] = k
    for arr in (g, a, m, norms, rho):
        arr.flags.writeable = False
    return {
        "gram": g,
        "coefficients": a,
        "multiplicities": m,
        "norms_sq": norms,
        "rho": rho,
        "rho_norm_sq": float(rho @ g @ rho),
        "multipliable": tuple(sorted(doubles)),
        "doubles": doubles,
    }


class SpaceSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: SpaceKind
    dim: PositiveInt
    curvature_sign: Literal[1, -1, 0]
    roots: RestrictedRootSystem
    fundamental_radius: float = Field(gt=0)
    convention: Literal["half_laplacian"] = "half_laplacian"
    provenance: Optional[str] = None

    @field_validator("kind")
    @classmethod
    def _concrete(cls, v: SpaceKind) -> SpaceKind:
        if v is SpaceKind.preset_by_name:
            raise ValueError("preset_by_name selects a preset; it is not a concrete kind")
        return v

    @model_validator(mode="after")
    def _invariants(self) -> "SpaceSpec":
        roots = self.roots
        # flat ℝⁿ is modelled radially with one root of multiplicity n-1 and zero curvature
        if roots.rank + roots.multiplicity_total != self.dim:
            raise ValueError(
                f"{self.name}: rank + Σ m_α = {roots.rank + roots.multiplicity_total} != dim {self.dim}"
            )
        if self.kind in (SpaceKind.complex_group, SpaceKind.complex_group_rank1, SpaceKind.compact_group,
                         SpaceKind.compact_group_SU2):
            if roots.multipliable or any(r.multiplicity != 2 for r in roots.positive_roots):
                raise ValueError(f"{self.name}: group presets need all multiplicities 2 and no multipliable roots")
        if self.curvature_sign == 1 and roots.rank == 1:
            norms = np.sqrt(roots.root_norms_sq) if roots.positive_roots else np.array([1.0])
            expected = math.pi / float(norms.max())
            if not math.isclose(self.fundamental_radius, expected, rel_tol=1e-12):
                raise ValueError(f"{self.name}: fundamental radius must be {expected}")
        if self.curvature_sign <= 0 and not math.isinf(self.fundamental_radius):
            raise ValueError(f"{self.name}: non-compact spaces have infinite fundamental radius")
        return self

    @property
    def rank(self) -> int:
        return self.roots.rank

    @property
    def is_compact(self) -> bool:
        return self.curvature_sign == 1

    @property
    def is_group(self) -> bool:
        return self.kind in (SpaceKind.compact_group, SpaceKind.compact_group_SU2,
                             SpaceKind.complex_group, SpaceKind.complex_group_rank1)

    @property
    def is_complex_group(self) -> bool:
        return self.kind in (SpaceKind.complex_group, SpaceKind.complex_group_rank1)
