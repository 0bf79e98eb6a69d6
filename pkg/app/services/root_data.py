# app/services/root_data.py
"""Restricted-root presets and the geometric scalar fields j, δ, δ₀ and ‖ρ‖².

Rank-one spaces fix |α| = 1, so spheres have fundamental domain (0, π).
Points of the flat are given as radii on rank one and as coefficient
vectors (same basis as the roots) on higher rank.
"""
from __future__ import annotations

import configparser
import logging
import math
from pathlib import Path
from typing import Callable, Dict, Iterable, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.schemas.space import RestrictedRootSystem, Root, SpaceKind, SpaceSpec
from app.services.errors import BranchDomainError, ConfigError, DomainError, UnsupportedSpaceError

logger = logging.getLogger(__name__)

SERIES_SWITCH = 1e-4
PROJECTIVE_PROVENANCE = "rank-one compact classification tables (not derived here); potentials only"

_SQRT3_2 = math.sqrt(3.0) / 2.0
_A2_ROOTS = ((1.0, 0.0), (-0.5, _SQRT3_2), (0.5, _SQRT3_2))


# ---------------------------
# Scalar building blocks
# ---------------------------

def sinc_factor(x, curvature: int) -> np.ndarray:
    """sin x / x (curvature +1), sinh x / x (curvature -1) or 1 (flat), series-switched near 0."""
    x = np.asarray(x, dtype=float)
    if curvature == 0:
        return np.ones_like(x)
    small = np.abs(x) < SERIES_SWITCH
    safe = np.where(small, 1.0, x)
    x2 = x * x
    if curvature > 0:
        return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return np.where(small, 1.0 + x2 / 6.0 + x2 * x2 / 120.0, np.sinh(safe) / safe)


def curved(x, curvature: int) -> np.ndarray:
    """sin, sinh or the identity, by curvature sign."""
    x = np.asarray(x, dtype=float)
    if curvature > 0:
        return np.sin(x)
    if curvature < 0:
        return np.sinh(x)
    return x


def root_arguments(space: SpaceSpec, H) -> np.ndarray:
    """α(H) for every positive root; trailing axis runs over roots."""
    h = np.asarray(H, dtype=float)
    pair = space.roots.coefficient_matrix @ space.roots.gram_matrix
    if space.rank == 1:
        return h[..., None] * pair[:, 0]
    if h.shape[-1:] != (space.rank,):
        raise DomainError(f"{space.name}: points of the flat need {space.rank} coordinates, got shape {h.shape}")
    return h @ pair.T


def _finish(values: np.ndarray):
    return float(values) if np.ndim(values) == 0 else values


# ---------------------------
# Presets
# ---------------------------

def _system(roots: Iterable[Tuple[Sequence[float], int]], gram: Sequence[Sequence[float]]) -> RestrictedRootSystem:
    return RestrictedRootSystem(
        rank=len(gram),
        positive_roots=tuple(Root(coefficients=tuple(float(c) for c in a), multiplicity=m) for a, m in roots),
        gram=tuple(tuple(float(v) for v in row) for row in gram),
    )


def _rank_one(name: str, kind: SpaceKind, dim: int, curvature: int, roots, provenance: Optional[str] = None) -> SpaceSpec:
    system = _system([((c,), m) for c, m in roots], [[1.0]])
    if curvature == 1:
        radius = math.pi / max([abs(c) for c, _ in roots] or [1.0])
    else:
        radius = math.inf
    return SpaceSpec(
        name=name,
        kind=kind,
        dim=dim,
        curvature_sign=curvature,
        roots=system,
        fundamental_radius=radius,
        provenance=provenance,
    )


def _a2_group(name: str, curvature: int) -> SpaceSpec:
    kind = SpaceKind.compact_group if curvature == 1 else SpaceKind.complex_group
    return SpaceSpec(
        name=name,
        kind=kind,
        dim=8,
        curvature_sign=curvature,
        roots=_system([(a, 2) for a in _A2_ROOTS], [[1.0, 0.0], [0.0, 1.0]]),
        fundamental_radius=math.pi if curvature == 1 else math.inf,
    )


def build_space(kind: Union[str, SpaceKind], n: Union[int, str, None] = None) -> SpaceSpec:
    try:
        kind = SpaceKind(kind)
    except ValueError as exc:
        raise UnsupportedSpaceError(f"unknown space kind {kind!r}") from exc

    if kind is SpaceKind.preset_by_name:
        if not isinstance(n, str):
            raise UnsupportedSpaceError("preset_by_name needs a preset name")
        return preset(n)
    optional_dim = (SpaceKind.compact_group_SU2, SpaceKind.complex_group_rank1, SpaceKind.circle)
    if isinstance(n, str) or (n is None and kind not in optional_dim):
        raise UnsupportedSpaceError(f"{kind.value} needs an integer dimension, got {n!r}")
    if n is not None and n < 1:
        raise UnsupportedSpaceError(f"dimension must be >= 1, got {n}")

    if kind is SpaceKind.circle or (kind is SpaceKind.sphere and n == 1):
        if n not in (None, 1):
            raise UnsupportedSpaceError(f"circle is one-dimensional, got n={n}")
        return _rank_one("S1", SpaceKind.circle, 1, 1, [])
    if kind is SpaceKind.sphere:
        return _rank_one(f"S{n}", SpaceKind.sphere, n, 1, [(1.0, n - 1)])
    if kind is SpaceKind.hyperbolic:
        if n < 2:
            raise UnsupportedSpaceError("hyperbolic space needs n >= 2")
        return _rank_one(f"H{n}", SpaceKind.hyperbolic, n, -1, [(1.0, n - 1)])
    if kind is SpaceKind.compact_group_SU2:
        if n not in (None, 3):
            raise UnsupportedSpaceError(f"SU(2) is three-dimensional, got n={n}")
        return _rank_one("SU2", SpaceKind.compact_group_SU2, 3, 1, [(1.0, 2)])
    if kind is SpaceKind.complex_group_rank1:
        if n not in (None, 3):
            raise UnsupportedSpaceError(f"SL(2,C)/SU(2) is three-dimensional, got n={n}")
        return _rank_one("SL2C", SpaceKind.complex_group_rank1, 3, -1, [(1.0, 2)])
    if kind is SpaceKind.euclidean:
        return _rank_one(f"R{n}", SpaceKind.euclidean, n, 0, [(1.0, n - 1)] if n > 1 else [])
    raise UnsupportedSpaceError(f"{kind.value} spaces are only available as named presets")


_BUILTINS: Dict[str, Callable[[], SpaceSpec]] = {
    **{f"S{n}": (lambda n=n: build_space(SpaceKind.sphere, n)) for n in range(1, 6)},
    **{f"H{n}": (lambda n=n: build_space(SpaceKind.hyperbolic, n)) for n in range(2, 6)},
    **{f"R{n}": (lambda n=n: build_space(SpaceKind.euclidean, n)) for n in range(1, 4)},
    "SU2": lambda: build_space(SpaceKind.compact_group_SU2, 3),
    "SL2C": lambda: build_space(SpaceKind.complex_group_rank1, 3),
    "SU3": lambda: _a2_group("SU3", 1),
    "SL3C": lambda: _a2_group("SL3C", -1),
    "CP2": lambda: _rank_one("CP2", SpaceKind.projective, 4, 1, [(1.0, 2), (2.0, 1)], PROJECTIVE_PROVENANCE),
    "CP3": lambda: _rank_one("CP3", SpaceKind.projective, 6, 1, [(1.0, 4), (2.0, 1)], PROJECTIVE_PROVENANCE),
    "HP2": lambda: _rank_one("HP2", SpaceKind.projective, 8, 1, [(1.0, 4), (2.0, 3)], PROJECTIVE_PROVENANCE),
    "OP2": lambda: _rank_one("OP2", SpaceKind.projective, 16, 1, [(1.0, 8), (2.0, 7)], PROJECTIVE_PROVENANCE),
}


def list_presets(extra: Optional[Mapping[str, SpaceSpec]] = None) -> list[str]:
    return sorted(set(_BUILTINS) | set(extra or {}))


def preset(name: str, extra: Optional[Mapping[str, SpaceSpec]] = None) -> SpaceSpec:
    key = name.strip().upper()
    for k, v in (extra or {}).items():
        if k.upper() == key:
            return v
    factory = _BUILTINS.get(key)
    if factory is None:
        raise UnsupportedSpaceError(f"unknown preset {name!r}; known: {', '.join(list_presets(extra))}")
    return factory()


def resolve_space(
    selector: str,
    dim: Optional[int] = None,
    presets: Optional[Mapping[str, SpaceSpec]] = None,
) -> SpaceSpec:
    """Resolve a CLI-style selector: a kind name (with ``dim``) or a preset name."""
    kinds = {k.value for k in SpaceKind} - {SpaceKind.preset_by_name.value}
    if selector in kinds:
        return build_space(selector, dim)
    return preset(selector, presets)


def _parse_roots(text: str) -> list[Tuple[Tuple[float, ...], int]]:
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        coeffs, _, mult = chunk.partition(":")
        if not mult:
            raise ConfigError(f"root {chunk!r} must look like 'coeffs:multiplicity'")
        out.append((tuple(float(c) for c in coeffs.split(",")), int(mult)))
    return out


def load_presets(path: Union[str, Path]) -> Dict[str, SpaceSpec]:
    """Read space presets from an INI file, one section per preset name.

    Keys: kind, dim, curvature, roots ("c1,c2:m; ..."), gram (row-major),
    optional radius and provenance.
    """
    parser = configparser.ConfigParser()
    read = parser.read(Path(path), encoding="utf-8")
    if not read:
        raise ConfigError(f"preset file {path} could not be read")

    presets: Dict[str, SpaceSpec] = {}
    for name in parser.sections():
        sec = parser[name]
        try:
            roots = _parse_roots(sec.get("roots", ""))
            rank = len(roots[0][0]) if roots else sec.getint("rank", 1)
            flat = [float(v) for v in sec.get("gram", "1").replace(";", ",").split(",") if v.strip()]
            if len(flat) != rank * rank:
                raise ConfigError(f"[{name}] gram needs {rank * rank} entries, got {len(flat)}")
            gram = [flat[i * rank:(i + 1) * rank] for i in range(rank)]
            curvature = sec.getint("curvature")
            system = _system(roots, gram)
            if "radius" in sec:
                radius = float(sec.get("radius"))
            elif curvature == 1:
                norms = np.sqrt(system.root_norms_sq) if roots else np.array([1.0])
                radius = math.pi / float(norms.max())
            else:
                radius = math.inf
            presets[name] = SpaceSpec(
                name=name,
                kind=SpaceKind(sec.get("kind")),
                dim=sec.getint("dim"),
                curvature_sign=curvature,
                roots=system,
                fundamental_radius=radius,
                provenance=sec.get("provenance"),
            )
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"[{name}] invalid preset: {exc}") from exc
    logger.debug("loaded %d presets from %s", len(presets), path)
    return presets


# ---------------------------
# Geometric scalars
# ---------------------------

def j_eval(space: SpaceSpec, H, *, half_angle: bool = False):
    """Π (sin or sinh α(H) / α(H))^{m_α/2}; ``half_angle`` evaluates the α(H)/2 group form."""
    x = root_arguments(space, H)
    if half_angle:
        x = 0.5 * x
    factors = sinc_factor(x, space.curvature_sign)
    if np.any(factors <= 0.0):
        raise BranchDomainError(
            f"{space.name}: j is not real-valued at H={np.asarray(H).tolist()} (a factor sin α(H)/α(H) is <= 0)"
        )
    m = space.roots.multiplicities
    return _finish(np.prod(factors ** (0.5 * m), axis=-1))


def density_eval(space: SpaceSpec, H, which: Literal["delta", "delta0"] = "delta"):
    x = root_arguments(space, H)
    if np.any(x < -1e-15):
        raise DomainError(f"{space.name}: H lies outside the closed positive chamber")
    m = space.roots.multiplicities
    if which == "delta0":
        return _finish(np.prod(x ** m, axis=-1))
    if which != "delta":
        raise ValueError(f"which must be 'delta' or 'delta0', got {which!r}")
    if space.curvature_sign == 1 and np.any(x > math.pi * (1 + 1e-15)):
        raise DomainError(f"{space.name}: H lies beyond the first wall α(H) = π")
    return _finish(np.prod(curved(x, space.curvature_sign) ** m, axis=-1))


def rho_norm_sq(space: SpaceSpec) -> float:
    return space.roots.rho_norm_sq


def fundamental_radius(space: SpaceSpec) -> float:
    return space.fundamental_radius


def is_split_rank(space: SpaceSpec) -> bool:
    """All restricted multiplicities even."""
    return all(r.multiplicity % 2 == 0 for r in space.roots.positive_roots)


def sphere_volume(n: int) -> float:
    """Area of the unit sphere S^{n-1} in ℝⁿ."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
