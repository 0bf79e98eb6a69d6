# app/services/spectral.py
"""Reference heat kernels.

Spheres S¹, S², S³ use eigenfunction expansions; rank-one complex groups use
the closed form. Everything follows the probabilist convention (generator
½Δ), so an eigenvalue λ contributes e^{−λt/2}.
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import quad, simpson
from scipy.special import eval_chebyu, eval_legendre

from app.schemas.radial import RadialFunction
from app.schemas.results import SpectralTruncation
from app.schemas.space import SpaceSpec
from app.services.errors import DomainError, ResolutionError, UnsupportedSpaceError
from app.services.root_data import j_eval

logger = logging.getLogger(__name__)

SPHERE_DIMS = (1, 2, 3)
NYQUIST_FRACTION = 1.0 / 8.0


def sphere_eigenvalue(n: int, l: int) -> int:
    """‖lα + ρ‖² − ‖ρ‖² on Sⁿ (ρ = (n−1)/2), in exact arithmetic."""
    rho = Fraction(n - 1, 2)
    value = (l + rho) ** 2 - rho ** 2
    if value.denominator != 1:
        raise ValueError(f"non-integral eigenvalue {value}")
    return int(value)


def _eigen_bounds(n: int, idx: np.ndarray, t: float) -> np.ndarray:
    """Sup-norm bound of the idx-th term of the Sⁿ expansion."""
    if n == 1:
        return np.where(idx == 0, 1.0 / (2 * math.pi), np.exp(-0.5 * idx ** 2 * t) / math.pi)
    if n == 2:
        return (2 * idx + 1) / (4 * math.pi) * np.exp(-0.5 * idx * (idx + 1) * t)
    return (idx + 1) ** 2 * _s3_constant() * np.exp(-0.5 * ((idx + 1) ** 2 - 1) * t)


def _truncate(n: int, t: float, tol: float) -> SpectralTruncation:
    cap = int(math.ceil(math.sqrt(2.0 * (60.0 + abs(math.log(tol))) / t))) + 16
    idx = np.arange(cap + 3, dtype=float)
    bounds = _eigen_bounds(n, idx, t)
    stop = tol * 1e-2
    above = np.nonzero(bounds >= stop)[0]
    last = int(above[-1]) if above.size else 0
    max_index = max(last, 1)
    nxt, after = bounds[max_index + 1], bounds[max_index + 2]
    ratio = after / nxt if nxt > 0 else 0.0
    tail = nxt / (1.0 - ratio) if ratio < 1.0 else math.inf
    return SpectralTruncation(max_index=max_index, tail_bound=float(tail))


@lru_cache(maxsize=None)
def _s3_constant() -> float:
    # unit mass of the constant mode against 4π sin²θ dθ
    mass, _ = quad(lambda th: 4.0 * math.pi * math.sin(th) ** 2, 0.0, math.pi, epsabs=1e-14, epsrel=1e-14)
    return 1.0 / mass


def _angles(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -1e-12) or np.any(theta > math.pi + 1e-12):
        raise DomainError("θ must lie in [0, π]")
    return np.clip(theta, 0.0, math.pi)


def _check(n: int, t: float) -> None:
    if n not in SPHERE_DIMS:
        raise UnsupportedSpaceError(f"spectral sphere kernels exist for n in {SPHERE_DIMS}, got {n}")
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")


def heat_kernel_sphere(n: int, theta, t: float, tol: float = 1e-12) -> Tuple[np.ndarray, SpectralTruncation]:
    """h_t(θ) on Sⁿ against the Riemannian volume, with the truncation used."""
    _check(n, t)
    th = _angles(theta)
    trunc = _truncate(n, t, tol)
    idx = np.arange(trunc.max_index + 1, dtype=float)
    degrees = np.arange(trunc.max_index + 1)
    shape = (-1,) + (1,) * th.ndim
    c = np.cos(th)

    if n == 1:
        weights = np.where(idx == 0, 1.0, 2.0) * np.exp(-0.5 * idx ** 2 * t) / (2 * math.pi)
        values = np.sum(weights.reshape(shape) * np.cos(np.multiply.outer(idx, th)), axis=0)
    elif n == 2:
        weights = (2 * idx + 1) / (4 * math.pi) * np.exp(-0.5 * idx * (idx + 1) * t)
        values = np.sum(weights.reshape(shape) * eval_legendre(degrees.reshape(shape), c), axis=0)
    else:
        weights = (idx + 1) * _s3_constant() * np.exp(-0.5 * ((idx + 1) ** 2 - 1) * t)
        values = np.sum(weights.reshape(shape) * eval_chebyu(degrees.reshape(shape), c), axis=0)

    logger.debug("S%d kernel t=%g: %d terms, tail %.2e", n, t, trunc.max_index + 1, trunc.tail_bound)
    return values, trunc


def sphere_cdf(n: int, theta, t: float, tol: float = 1e-12) -> np.ndarray:
    """P(d(o, B_t) ≤ θ) on Sⁿ from the same expansion."""
    _check(n, t)
    th = _angles(theta)
    trunc = _truncate(n, t, tol)
    shape = (-1,) + (1,) * th.ndim

    if n == 1:
        k = np.arange(1, trunc.max_index + 1, dtype=float)
        terms = (np.exp(-0.5 * k ** 2 * t) / k).reshape(shape) * np.sin(np.multiply.outer(k, th))
        return th / math.pi + (2.0 / math.pi) * np.sum(terms, axis=0)
    if n == 2:
        l = np.arange(1, trunc.max_index + 1).reshape(shape)
        c = np.cos(th)
        e = np.exp(-0.5 * l * (l + 1.0) * t)
        series = np.sum(e * (eval_legendre(l - 1, c) - eval_legendre(l + 1, c)), axis=0)
        return 0.5 * ((1.0 - c) + series)

    a = np.arange(1, trunc.max_index + 2, dtype=float)
    e = np.exp(-0.5 * (a ** 2 - 1) * t)
    ath = np.multiply.outer(a, th)
    # ∫₀^θ sin(aφ) sin φ dφ
    first = np.where(a.reshape(shape) == 1.0, th, np.sin(ath - th) / np.maximum(a - 1.0, 1.0).reshape(shape))
    integral = 0.5 * (first - np.sin(ath + th) / (a + 1.0).reshape(shape))
    return 4.0 * math.pi * _s3_constant() * np.sum((a * e).reshape(shape) * integral, axis=0)


def flat_heat_kernel(n: int, r, t: float) -> np.ndarray:
    """(2πt)^{−n/2} exp(−r²/2t)."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    r = np.asarray(r, dtype=float)
    return (2.0 * math.pi * t) ** (-0.5 * n) * np.exp(-0.5 * r * r / t)


# ---------------------------
# Complex groups
# ---------------------------

def _require_complex(space: SpaceSpec, rank_one: bool = False) -> None:
    ok = space.curvature_sign == -1 and not space.roots.multipliable and all(
        r.multiplicity == 2 for r in space.roots.positive_roots
    )
    if not ok:
        raise UnsupportedSpaceError(f"{space.name} is not a complex-group space")
    if rank_one and space.rank != 1:
        raise UnsupportedSpaceError(f"{space.name}: spherical functions are implemented for rank one")


def _norm_sq(space: SpaceSpec, H) -> np.ndarray:
    h = np.asarray(H, dtype=float)
    if space.rank == 1:
        return h * h
    return np.einsum("...i,ij,...j->...", h, space.roots.gram_matrix, h)


def heat_kernel_complex_group(space: SpaceSpec, r, t: float) -> np.ndarray:
    """(2πt)^{−n/2} e^{−t‖ρ‖²/2} e^{−|H|²/2t} / j(H)."""
    _require_complex(space)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    n = space.dim
    j = np.asarray(j_eval(space, r), dtype=float)
    gauss = np.exp(-0.5 * _norm_sq(space, r) / t)
    return (2.0 * math.pi * t) ** (-0.5 * n) * math.exp(-0.5 * t * space.roots.rho_norm_sq) * gauss / j


def spherical_function_complex(space: SpaceSpec, lam, r) -> np.ndarray:
    """φ_λ(r) = sin(λr) / (λr) · r / sinh r, normalized by φ_λ(0) = 1."""
    _require_complex(space, rank_one=True)
    lam = np.asarray(lam, dtype=float)
    r = np.asarray(r, dtype=float)
    j = np.asarray(j_eval(space, r), dtype=float)
    return np.sinc(lam * r / math.pi) / j


def plancherel_density(space: SpaceSpec, lam) -> np.ndarray:
    """|c(λ)|⁻² = (⟨λ,α⟩/⟨ρ,α⟩)² on rank-one complex spaces."""
    _require_complex(space, rank_one=True)
    lam = np.asarray(lam, dtype=float)
    rho_alpha = space.roots.inner(space.roots.rho, space.roots.coefficient_matrix[0])
    return (lam / rho_alpha) ** 2


def spherical_transform(space: SpaceSpec, f: RadialFunction, lam) -> np.ndarray:
    """∫ f(r) φ_λ(r) δ(r) dr times the area of the unit sphere in 𝔭 ⊖ 𝔞."""
    _require_complex(space, rank_one=True)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam < 0):
        raise DomainError("λ must be non-negative")
    h = f.spacing
    if float(np.max(lam)) * h > math.pi * NYQUIST_FRACTION:
        raise ResolutionError(
            f"grid spacing {h:.3g} cannot resolve λ up to {float(np.max(lam)):.3g}"
        )
    r = f.grid
    c = space.roots.coefficient_matrix[0, 0]
    weight = 4.0 * math.pi * np.sinh(c * r) ** 2 * f.values
    phi = spherical_function_complex(space, lam[:, None], r[None, :])
    return simpson(weight[None, :] * phi, x=r, axis=-1)


def spherical_inversion(
    space: SpaceSpec,
    fhat: Callable[[np.ndarray], np.ndarray],
    r,
    *,
    lam_max: float = 40.0,
    count: int = 4001,
) -> np.ndarray:
    """(2π²)⁻¹ ∫ f̂(λ) φ_λ(r) |c(λ)|⁻² dλ on [0, lam_max]."""
    _require_complex(space, rank_one=True)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    lam = np.linspace(0.0, lam_max, count)
    integrand = (
        np.asarray(fhat(lam), dtype=float)[None, :]
        * spherical_function_complex(space, lam[None, :], r[:, None])
        * plancherel_density(space, lam)[None, :]
    )
    return simpson(integrand, x=lam, axis=-1) / (2.0 * math.pi ** 2)


# ---------------------------
# Dispatch
# ---------------------------

def reference_kernel(space: SpaceSpec, r, t: float, tol: float = 1e-12) -> Tuple[np.ndarray, Optional[SpectralTruncation]]:
    """Exact heat kernel of a preset when one is available (spheres up to S³, complex groups)."""
    if space.rank == 1 and space.curvature_sign == 1 and not space.roots.multipliable:
        mult = space.roots.multiplicity_total
        if space.dim in SPHERE_DIMS and mult == space.dim - 1:
            return heat_kernel_sphere(space.dim, r, t, tol)
    if space.curvature_sign == 0:
        return flat_heat_kernel(space.dim, r, t), None
    if space.curvature_sign == -1:
        return heat_kernel_complex_group(space, r, t), None
    raise UnsupportedSpaceError(f"no reference kernel for {space.name}")
