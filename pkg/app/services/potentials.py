# app/services/potentials.py
"""Closed forms of the potential Ω* = j⁻¹ L𝔭 j.

For every space

    Ω*(H) = σ‖ρ‖² + Σ_α (k_α² − k_α)|α|² Q(α(H)) + Σ_{α∈Σm} ½ m_α m_2α |α|² Q(α(H))

with k_α = m_α/2, σ = −1 and Q(x) = csc²x − 1/x² on compact spaces,
σ = +1 and Q(x) = csch²x − 1/x² on non-compact spaces, and Ω* = 0 on flat
ones. On compact spaces the multipliable term equals
m_α m_2α|α|² (cot x cot 2x + 1 − 1/(2x²)); cross terms between
non-proportional roots cancel (see ``op_identity_residual``).
"""
from __future__ import annotations

import logging
import math
from typing import List, Literal, Tuple

import numpy as np

from app.schemas.results import PotentialValue, Regime
from app.schemas.space import RestrictedRootSystem, SpaceSpec
from app.services.errors import DomainError, PoleError, UnsupportedSpaceError
from app.services.root_data import curved, root_arguments

logger = logging.getLogger(__name__)

SERIES_SWITCH = 1e-3
WALL_WINDOW = 1e-3


def _q_compact(x: np.ndarray) -> np.ndarray:
    small = np.abs(x) < SERIES_SWITCH
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = 1.0 / 3.0 + x2 / 15.0 + 2.0 * x2 ** 2 / 189.0 + x2 ** 3 / 675.0
    return np.where(small, series, 1.0 / np.sin(safe) ** 2 - 1.0 / safe ** 2)


def _q_noncompact(x: np.ndarray) -> np.ndarray:
    small = np.abs(x) < SERIES_SWITCH
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = -1.0 / 3.0 + x2 / 15.0 - 2.0 * x2 ** 2 / 189.0 + x2 ** 3 / 675.0
    return np.where(small, series, 1.0 / np.sinh(safe) ** 2 - 1.0 / safe ** 2)


def q_term(x, curvature: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if curvature > 0:
        return _q_compact(x)
    if curvature < 0:
        return _q_noncompact(x)
    return np.zeros_like(x)


def root_coefficients(roots: RestrictedRootSystem) -> np.ndarray:
    """Coefficient of Q(α(H)) for every positive root."""
    m = roots.multiplicities
    k = 0.5 * m
    coeff = (k * k - k) * roots.root_norms_sq
    for i in roots.multipliable:
        coeff[i] = coeff[i] + 0.5 * m[i] * m[roots.double_of(i)] * roots.root_norms_sq[i]
    return coeff


def _baseline(space: SpaceSpec) -> float:
    if space.curvature_sign == 0:
        return 0.0
    return -space.curvature_sign * space.roots.rho_norm_sq


_REGIMES = (Regime.generic, Regime.series_near_zero, Regime.series_near_wall)


def _evaluate(space: SpaceSpec, H) -> Tuple[np.ndarray, np.ndarray]:
    """Ω* values and regime codes (indices into ``_REGIMES``)."""
    x = root_arguments(space, H)
    shape = x.shape[:-1]
    base = _baseline(space)
    codes = np.zeros(shape, dtype=np.int8)
    if space.curvature_sign == 0 or x.shape[-1] == 0:
        return np.full(shape, base), codes

    coeff = root_coefficients(space.roots)
    ax = np.abs(x)
    active = coeff != 0.0
    parked = np.zeros(ax.shape, dtype=bool)

    if space.curvature_sign > 0:
        if np.any(ax > math.pi + 1e-12):
            raise DomainError(f"{space.name}: H lies beyond the first wall α(H) = π")
        at_wall = np.abs(ax - math.pi) < 1e-12
        hits = at_wall & active
        if np.any(hits):
            idx = int(np.argwhere(hits)[0][-1])
            root = space.roots.coefficient_matrix[idx]
            raise PoleError(f"{space.name}: Ω* diverges at α(H) = π for root {tuple(root)}", root=root)
        near_wall = np.abs(ax - math.pi) < WALL_WINDOW
        codes[np.any(near_wall & ~active, axis=-1)] = 2
        if np.any(near_wall & active):
            logger.warning("%s: Ω* evaluated within %.0e of a pole", space.name, WALL_WINDOW)
        # inactive roots on the wall contribute nothing; keep csc² away from them
        parked = at_wall & ~active

    near_zero = np.any((ax < SERIES_SWITCH) & active, axis=-1)
    codes[near_zero & (codes == 0)] = 1

    q = q_term(np.where(parked, 1.0, x), space.curvature_sign)
    values = base + np.sum(np.where(active, coeff * q, 0.0), axis=-1)
    return values, codes


def omega_star_grid(space: SpaceSpec, H) -> Tuple[np.ndarray, List[Regime]]:
    """Vectorized Ω* with a regime tag per point."""
    values, codes = _evaluate(space, H)
    return values, [_REGIMES[c] for c in np.ravel(codes)]


def omega_star(space: SpaceSpec, H) -> PotentialValue:
    values, codes = _evaluate(space, H)
    if np.ndim(values) != 0:
        raise DomainError("omega_star takes a single point; use omega_star_grid for arrays")
    return PotentialValue(value=float(values), regime=_REGIMES[int(codes)])


def omega_star_values(space: SpaceSpec, H) -> np.ndarray:
    return _evaluate(space, H)[0]


def omega_star_limit(space: SpaceSpec) -> float:
    """H → 0 limit of Ω* for spaces without multipliable roots."""
    roots = space.roots
    if roots.multipliable:
        raise UnsupportedSpaceError(
            f"{space.name} has multipliable roots; evaluate omega_star near 0 instead"
        )
    if space.curvature_sign == 0:
        return 0.0
    m = roots.multiplicities
    f_limit = float(np.sum(m * (m - 2.0) / 12.0 * roots.root_norms_sq))
    # csch² − 1/x² → −1/3 flips the sign of the F-limit on non-compact spaces
    return -space.curvature_sign * (roots.rho_norm_sq - f_limit)


def op_identity_residual(
    roots: RestrictedRootSystem,
    H,
    which: Literal["rational", "compact", "noncompact"] = "rational",
) -> float:
    """Σ over non-proportional α ≠ β of m_α m_β ⟨α,β⟩ · term(α(H), β(H)); vanishes identically."""
    a = roots.coefficient_matrix
    n = len(a)
    if n < 2:
        return 0.0
    h = np.asarray(H, dtype=float).reshape(roots.rank)
    x = a @ roots.gram_matrix @ h
    if np.any(np.abs(x) < 1e-12):
        raise DomainError("H lies on a root hyperplane")
    if which == "compact" and np.any(np.abs(np.sin(x)) < 1e-12):
        raise DomainError("H lies on an affine wall where cot is singular")
    m = roots.multiplicities
    g = roots.gram_matrix
    total = 0.0
    for i in range(n):
        for k in range(n):
            if i == k or np.linalg.matrix_rank(np.vstack([a[i], a[k]]), tol=1e-12) < 2:
                continue
            if which == "rational":
                term = 1.0 / (x[i] * x[k])
            elif which == "noncompact":
                term = 1.0 / (np.tanh(x[i]) * np.tanh(x[k])) - 1.0
            elif which == "compact":
                term = 1.0 / (np.tan(x[i]) * np.tan(x[k])) + 1.0
            else:
                raise ValueError(f"unknown identity {which!r}")
            total += m[i] * m[k] * float(a[i] @ g @ a[k]) * term
    return float(total)


def drift(space: SpaceSpec, r, side: Literal["tangent", "manifold"] = "manifold") -> np.ndarray:
    """Log-derivative δ'/δ (manifold) or δ₀'/δ₀ (tangent) of the radial density, rank one."""
    r = np.asarray(r, dtype=float)
    roots = space.roots
    out = np.zeros_like(r)
    curvature = space.curvature_sign if side == "manifold" else 0
    for c, m in zip(roots.coefficient_matrix[:, 0], roots.multiplicities):
        x = c * r
        if curvature > 0:
            out = out + m * c / np.tan(x)
        elif curvature < 0:
            out = out + m * c / np.tanh(x)
        else:
            out = out + m / r
    return out


def drift_derivative(space: SpaceSpec, r, side: Literal["tangent", "manifold"] = "manifold") -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    curvature = space.curvature_sign if side == "manifold" else 0
    for c, m in zip(space.roots.coefficient_matrix[:, 0], space.roots.multiplicities):
        s = curved(c * r, curvature) if curvature else c * r
        out = out - m * c * c / s ** 2
    return out


def radial_potential(space: SpaceSpec, r, side: Literal["tangent", "manifold"] = "manifold") -> np.ndarray:
    """δ^{-1/2} (δ^{1/2})'' on rank one, i.e. ½D' + ¼D² with D the radial log-derivative.

    S² gives −¼ − ¼ csc²θ; ℝ² gives −¼ r⁻².
    """
    if space.rank != 1:
        raise UnsupportedSpaceError("radial potentials are implemented for rank one")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("the radial potential is singular at r = 0")
    d = drift(space, r, side)
    return 0.5 * drift_derivative(space, r, side) + 0.25 * d * d
