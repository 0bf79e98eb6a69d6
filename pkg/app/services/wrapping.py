# app/services/wrapping.py
"""Wrapping radial functions from the tangent space onto the space.

Compact rank-one spaces sum over the lattice 2πℤ; non-compact and flat
spaces bend (divide by j). The ρ-shift converts between the shifted kernel
that wrapping produces and the standard heat kernel.
"""
from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np

from app.schemas.radial import RadialInput
from app.schemas.results import Branch, KernelEvaluation, WrapPolicy
from app.schemas.space import SpaceSpec
from app.services.errors import BranchDomainError, DomainError, UnsupportedSpaceError
from app.services.root_data import j_eval, sinc_factor
from app.services.spectral import flat_heat_kernel, reference_kernel

logger = logging.getLogger(__name__)

LATTICE_PERIOD = 2.0 * math.pi


def _require_lattice(space: SpaceSpec) -> None:
    if space.curvature_sign != 1 or space.rank != 1 or space.roots.multipliable:
        raise UnsupportedSpaceError(
            f"{space.name}: lattice wrapping is implemented for compact rank-one spaces without multipliable roots"
        )


def _translate_j(space: SpaceSpec, x: np.ndarray, k: int, branch: Branch) -> np.ndarray:
    """j at a lattice translate x = θ + 2πk under the branch policy."""
    out = np.ones_like(x)
    for c, m in zip(space.roots.coefficient_matrix[:, 0], space.roots.multiplicities):
        s = sinc_factor(c * x, 1)
        if np.any(np.abs(s) < 1e-15):
            raise DomainError(f"{space.name}: a lattice translate hits a zero of j")
        m = int(m)
        if m % 2 == 0:
            out = out * s ** (m // 2)
            continue
        if branch is Branch.signed_j and np.any(s < 0):
            raise BranchDomainError(
                f"{space.name}: (sin x / x)^{m}/2 is not real at lattice index k={k}; use abs_j or maslov"
            )
        factor = np.abs(s) ** (0.5 * m)
        if branch is Branch.maslov:
            factor = factor * (-1.0) ** (k * m)
        out = out * factor
    return out


def _radial(mu: RadialInput, x: np.ndarray) -> np.ndarray:
    return np.asarray(mu(np.abs(x)), dtype=float)


def wrap_compact(space: SpaceSpec, mu: RadialInput, theta, policy: WrapPolicy = WrapPolicy()) -> np.ndarray:
    """Σ_{|k|≤K} (μ/j)(θ + 2πk)."""
    _require_lattice(space)
    th = np.asarray(theta, dtype=float)
    total = np.zeros_like(th)
    for k in range(-policy.lattice_terms, policy.lattice_terms + 1):
        x = th + LATTICE_PERIOD * k
        total = total + _radial(mu, x) / _translate_j(space, x, k, policy.branch)
    return total


def _lattice_tail(space: SpaceSpec, mu: RadialInput, theta, policy: WrapPolicy) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    k = policy.lattice_terms + 1
    tail = np.zeros_like(th)
    for kk in (-k, k):
        x = th + LATTICE_PERIOD * kk
        tail = tail + np.abs(_radial(mu, x) / _translate_j(space, x, kk, Branch.abs_j))
    return tail


def wrap_noncompact(space: SpaceSpec, phi: RadialInput, r) -> np.ndarray:
    """(φ/j)(r); no lattice sum."""
    if space.curvature_sign == 1:
        raise UnsupportedSpaceError(f"{space.name} is compact; use wrap_compact")
    r = np.asarray(r, dtype=float)
    return _radial(phi, r) / np.asarray(j_eval(space, r), dtype=float)


def apply_rho_shift(value, space: SpaceSpec, t: float, direction: Literal["to_standard", "to_shifted"]):
    """Multiply by e^{±‖ρ‖²t/2}; ``to_standard`` takes a wrapped (shifted) kernel to the heat kernel."""
    if direction not in ("to_standard", "to_shifted"):
        raise ValueError(f"unknown shift direction {direction!r}")
    exponent = 0.5 * space.curvature_sign * space.roots.rho_norm_sq * t
    factor = math.exp(exponent if direction == "to_standard" else -exponent)
    return np.asarray(value, dtype=float) * factor if np.ndim(value) else float(value) * factor


def wrapped_gaussian(space: SpaceSpec, t: float, theta, policy: WrapPolicy = WrapPolicy()) -> KernelEvaluation:
    """Φ(p_t): the flat Gaussian of the tangent space wrapped onto the space."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    n = space.dim

    def gaussian(r):
        return flat_heat_kernel(n, r, t)

    if space.curvature_sign == 1:
        values = wrap_compact(space, gaussian, th, policy)
        err = _lattice_tail(space, gaussian, th, policy)
        extra = f"branch={policy.branch.value}"
    else:
        values = wrap_noncompact(space, gaussian, th)
        err = np.zeros_like(th)
        extra = "bend"
    meta = {"lattice_terms": policy.lattice_terms, "branch": policy.branch.value}
    if policy.shift_applied:
        values = apply_rho_shift(values, space, t, "to_standard")
        meta["shift"] = "to_standard"
    logger.debug("%s: wrapped Gaussian t=%g on %d points (%s)", space.name, t, th.size, extra)
    return KernelEvaluation(
        space=space.name, n=n, t=t, coordinate=th, values=np.asarray(values), method="gaussian_wrap",
        err_est=np.asarray(err), extra=extra, meta=meta,
    )


def standard_kernel(space: SpaceSpec, t: float, theta, tol: float = 1e-12) -> KernelEvaluation:
    """Exact heat kernel from the spectral expansion or the closed form."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    values, trunc = reference_kernel(space, th, t, tol)
    tail = trunc.tail_bound if trunc is not None else 0.0
    extra = f"tail_bound={tail:.3e}" if trunc is not None else "closed_form"
    return KernelEvaluation(
        space=space.name, n=space.dim, t=t, coordinate=th, values=np.asarray(values), method="spectral",
        err_est=np.full(th.shape, tail), extra=extra,
        meta={"max_index": trunc.max_index} if trunc is not None else {},
    )


def shifted_kernel(space: SpaceSpec, t: float, theta, tol: float = 1e-12) -> KernelEvaluation:
    """e^{∓‖ρ‖²t/2} times the heat kernel: what an exact wrap would produce."""
    std = standard_kernel(space, t, theta, tol)
    return KernelEvaluation(
        space=std.space, n=std.n, t=t, coordinate=std.coordinate,
        values=apply_rho_shift(std.values, space, t, "to_shifted"), method="shifted",
        err_est=apply_rho_shift(std.err_est, space, t, "to_shifted"), extra=std.extra, meta=dict(std.meta),
    )
