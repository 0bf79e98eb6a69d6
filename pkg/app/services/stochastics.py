# app/services/stochastics.py
"""Brownian samplers: geodesic random walks and flat walks with Feynman–Kač weights.

Paths are split into fixed blocks of ``WalkConfig.block_size``; block b draws
from Philox keyed by (seed, b), so a result depends on the seed only, never
on the thread count.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import gammaln
from scipy.stats import kstest

from app.config import thread_count
from app.schemas.results import MCEstimate, WalkConfig
from app.schemas.space import SpaceSpec
from app.services.errors import ConfigError, ReliabilityError, UnsupportedSpaceError
from app.services.potentials import omega_star_values
from app.services.root_data import sphere_volume
from app.services.spectral import SPHERE_DIMS, heat_kernel_complex_group, sphere_cdf

logger = logging.getLogger(__name__)

KILL_BUFFER = 0.05
MAX_KILLED = 1e-2
WARN_KILLED = 1e-4


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _blocks(config: WalkConfig) -> List[tuple[int, int]]:
    out = []
    start, b = 0, 0
    while start < config.sample_count:
        size = min(config.block_size, config.sample_count - start)
        out.append((b, size))
        start += size
        b += 1
    return out


def _run_blocks(config: WalkConfig, work: Callable[[int, int], object]) -> list:
    blocks = _blocks(config)
    workers = min(thread_count(), len(blocks))
    if workers <= 1:
        return [work(b, size) for b, size in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map keeps block order
        return list(pool.map(lambda bs: work(*bs), blocks))


def _mean_step(n: int, dt: float) -> float:
    return math.sqrt(2.0 * dt) * math.exp(gammaln(0.5 * (n + 1)) - gammaln(0.5 * n))


def _walk_kind(space: SpaceSpec) -> int:
    roots = space.roots
    plain = space.rank == 1 and not roots.multipliable and all(
        abs(c - 1.0) < 1e-12 for c in roots.coefficient_matrix[:, 0]
    )
    if not plain or roots.multiplicity_total != space.dim - 1 or space.curvature_sign == 0:
        raise UnsupportedSpaceError(f"{space.name}: geodesic walks run on spheres and hyperbolic spaces")
    return space.curvature_sign


# ---------------------------
# Geodesic random walk
# ---------------------------

def geodesic_walk(space: SpaceSpec, config: WalkConfig) -> np.ndarray:
    """End-point distances d(o, B_t) of ``sample_count`` geodesic random walks.

    Each step draws ξ ~ N(0, dt Iₙ) in the tangent space and moves a
    geodesic length |ξ|; only the distance to the origin is tracked.
    """
    curvature = _walk_kind(space)
    n = space.dim
    dt = config.dt
    step = _mean_step(n, dt)
    if curvature > 0 and step >= space.fundamental_radius / 20.0:
        raise ConfigError(
            f"mean geodesic step {step:.3g} is not below {space.fundamental_radius / 20.0:.3g}; raise step_count"
        )

    def work(block: int, size: int) -> np.ndarray:
        rng = block_rng(config.seed, block)
        rho = np.zeros(size)
        for _ in range(config.step_count):
            xi = rng.standard_normal((size, n)) * math.sqrt(dt)
            ell = np.sqrt(np.sum(xi * xi, axis=1))
            cos_psi = np.divide(xi[:, 0], ell, out=np.zeros(size), where=ell > 0)
            if curvature > 0:
                c = np.cos(rho) * np.cos(ell) - np.sin(rho) * np.sin(ell) * cos_psi
                rho = np.arccos(np.clip(c, -1.0, 1.0))
            else:
                c = np.cosh(rho) * np.cosh(ell) + np.sinh(rho) * np.sinh(ell) * cos_psi
                rho = np.arccosh(np.maximum(c, 1.0))
        return rho

    samples = np.concatenate(_run_blocks(config, work))
    logger.debug("%s: %d geodesic walks x %d steps", space.name, samples.size, config.step_count)
    return samples


def mean_square_displacement(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    return float(np.mean(samples * samples))


def ks_against_spectral(space: SpaceSpec, samples, t: float) -> float:
    """Kolmogorov–Smirnov distance between radial samples and the exact radial law."""
    samples = np.asarray(samples, dtype=float)
    curvature = _walk_kind(space)
    if curvature > 0:
        if space.dim not in SPHERE_DIMS:
            raise UnsupportedSpaceError(f"no spectral radial law for {space.name}")

        def cdf(x):
            return sphere_cdf(space.dim, np.clip(x, 0.0, math.pi), t)

    else:
        top = max(float(np.max(samples)) * 1.5, 10.0 * math.sqrt(t) + 1.0)
        r = np.linspace(0.0, top, 20001)
        law = heat_kernel_complex_group(space, r, t) * sphere_volume(space.dim) * np.sinh(r) ** (space.dim - 1)
        table = cumulative_trapezoid(law, r, initial=0.0)
        table = table / table[-1]

        def cdf(x):
            return np.interp(x, r, table)

    return float(kstest(samples, cdf).statistic)


# ---------------------------
# Flat walk with Feynman–Kač weights
# ---------------------------

@dataclass
class _FKBlock:
    radius: np.ndarray
    weight: np.ndarray
    killed: int
    omega_min: float
    omega_max: float


def freedman_diaconis_edges(values: np.ndarray, top: float) -> np.ndarray:
    edges = np.histogram_bin_edges(values, bins="fd", range=(0.0, top))
    if edges.size < 3:
        edges = np.linspace(0.0, top, 3)
    return edges


def flat_walk_feynman_kac(
    space: SpaceSpec,
    config: WalkConfig,
    grid: Optional[Sequence[float]] = None,
    *,
    zero_potential: bool = False,
) -> MCEstimate:
    """Density of weighted flat Brownian end points against the tangent measure ω_n r^{n−1} dr.

    Paths run in the tangent space of dimension n from the origin; each carries
    exp(−½∫Ω*(|X_s|)ds) (trapezoid rule). Paths reaching the wall buffer are
    killed. ``grid`` gives histogram edges; Freedman–Diaconis is used otherwise.
    """
    if space.rank != 1:
        raise UnsupportedSpaceError(f"{space.name}: flat walks are implemented for rank one")
    n = 1 + space.roots.multiplicity_total
    dt = config.dt
    kill = space.fundamental_radius - KILL_BUFFER if space.curvature_sign > 0 else math.inf

    def potential(r: np.ndarray) -> np.ndarray:
        if zero_potential:
            return np.zeros_like(r)
        return np.asarray(omega_star_values(space, np.minimum(r, kill)), dtype=float)

    def work(block: int, size: int) -> _FKBlock:
        rng = block_rng(config.seed, block)
        x = np.zeros((size, n))
        alive = np.ones(size, dtype=bool)
        prev = potential(np.zeros(size))
        lo, hi = float(prev.min()), float(prev.max())
        integral = np.zeros(size)
        for _ in range(config.step_count):
            x += rng.standard_normal((size, n)) * math.sqrt(dt)
            r = np.sqrt(np.sum(x * x, axis=1))
            alive &= r < kill
            cur = potential(r)
            integral += 0.5 * dt * (prev + cur)
            prev = cur
            if np.any(alive):
                lo = min(lo, float(cur[alive].min()))
                hi = max(hi, float(cur[alive].max()))
        weight = np.where(alive, np.exp(-0.5 * integral), 0.0)
        return _FKBlock(radius=np.sqrt(np.sum(x * x, axis=1)), weight=weight,
                        killed=int(size - alive.sum()), omega_min=lo, omega_max=hi)

    parts: List[_FKBlock] = _run_blocks(config, work)
    radius = np.concatenate([p.radius for p in parts])
    weight = np.concatenate([p.weight for p in parts])
    killed = sum(p.killed for p in parts) / config.sample_count
    omega_min = min(p.omega_min for p in parts)
    omega_max = max(p.omega_max for p in parts)

    if killed > MAX_KILLED:
        raise ReliabilityError(f"{space.name}: {killed:.2%} of paths left the fundamental domain; reduce t")
    if killed > WARN_KILLED:
        logger.warning("%s: killed mass %.2e above %.0e", space.name, killed, WARN_KILLED)

    live = weight > 0
    w_lo = float(weight[live].min()) if np.any(live) else 1.0
    w_hi = float(weight[live].max()) if np.any(live) else 1.0
    bound_lo = math.exp(-0.5 * omega_max * config.t)
    bound_hi = math.exp(-0.5 * omega_min * config.t)
    if w_lo < bound_lo * (1 - 1e-9) or w_hi > bound_hi * (1 + 1e-9):
        raise ReliabilityError(
            f"weights [{w_lo:.6g}, {w_hi:.6g}] escape the bounds [{bound_lo:.6g}, {bound_hi:.6g}]"
        )

    top = min(kill, float(np.max(radius[live])) if np.any(live) else 1.0)
    edges = np.asarray(grid, dtype=float) if grid is not None else freedman_diaconis_edges(radius[live], top)
    shell = sphere_volume(n) * (edges[1:] ** n - edges[:-1] ** n) / n
    idx = np.digitize(radius, edges) - 1
    inside = live & (idx >= 0) & (idx < shell.size)
    total = np.bincount(idx[inside], weights=weight[inside], minlength=shell.size)
    total_sq = np.bincount(idx[inside], weights=weight[inside] ** 2, minlength=shell.size)
    N = config.sample_count
    mean = total / N
    var = np.maximum(total_sq / N - mean ** 2, 0.0)
    ess = float(weight.sum() ** 2 / max(float((weight ** 2).sum()), 1e-300))
    logger.debug("%s: FK walk, killed %.2e, ESS %.0f, %d bins", space.name, killed, ess, shell.size)
    return MCEstimate(
        grid=0.5 * (edges[:-1] + edges[1:]),
        edges=edges,
        density=mean / shell,
        stderr=np.sqrt(var / N) / shell,
        effective_samples=ess,
        killed_mass=killed,
        weight_range=(w_lo, w_hi),
        samples=N,
        steps=config.step_count,
        seed=config.seed,
    )


def bin_average(fn: Callable[[np.ndarray], np.ndarray], edges, weight: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """∫_bin fn·w / ∫_bin w per bin with 16-point Gauss–Legendre."""
    edges = np.asarray(edges, dtype=float)
    x, w = np.polynomial.legendre.leggauss(16)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    ww = 0.5 * (b - a) * w[None, :] * weight(nodes)
    return np.sum(ww * fn(nodes), axis=1) / np.sum(ww, axis=1)
