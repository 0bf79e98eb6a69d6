# app/services/pde_radial.py
"""Radial Laplacians, the intertwining check and the perturbed radial heat solver.

All operators act on rank-one radial profiles. The manifold side carries the
drift D(r) = Σ m_α α cot α(r) (coth on non-compact spaces); the tangent side
carries Σ m_α / r.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from app.schemas.radial import GridSpec, RadialFunction, RadialInput, RadialOperator
from app.schemas.space import SpaceSpec
from app.services.errors import DomainError, ReliabilityError, ResolutionError, UnsupportedSpaceError
from app.services.potentials import drift, omega_star_values, radial_potential
from app.services.root_data import density_eval, j_eval, sphere_volume
from app.services.spectral import flat_heat_kernel

logger = logging.getLogger(__name__)

WALL_BUFFER = 0.05
MAX_BOUNDARY_LOSS = 5e-3
INTERTWINING_POINTS = 2048


def _require_rank_one(space: SpaceSpec) -> None:
    if space.rank != 1:
        raise UnsupportedSpaceError(f"{space.name}: radial operators are implemented for rank one")


def _tangent_dim(space: SpaceSpec) -> int:
    return 1 + int(space.roots.multiplicity_total)


def _stencil(ext: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Fourth-order first and second derivatives at ext[2:-2]."""
    fm2, fm1, f0, fp1, fp2 = ext[:-4], ext[1:-3], ext[2:-2], ext[3:-1], ext[4:]
    d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
    d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h)
    return d1, d2


def _check_wall(op: RadialOperator, grid: np.ndarray) -> None:
    space = op.space
    if op.side == "manifold" and space.curvature_sign > 0 and grid[-1] >= space.fundamental_radius - 1e-12:
        raise DomainError(
            f"{space.name}: grid reaches the wall at r = {space.fundamental_radius:.6g}"
        )


def apply_radial_laplacian(op: RadialOperator, f: RadialFunction) -> RadialFunction:
    """Radial Laplacian of ``f`` by fourth-order central differences.

    Grids starting at 0 (or at h/2) are extended evenly through the origin;
    other grids lose their first two points. The last two points are always
    dropped. The conjugated form evaluates a⁻¹(a f)'' − V f with a = δ^{1/2}
    (or δ₀^{1/2}) and is returned only where the whole stencil has r > 0.
    """
    space = op.space
    _require_rank_one(space)
    if not f.is_uniform:
        raise ResolutionError("radial Laplacian needs a uniform grid")
    grid, vals = f.grid, f.values
    if grid.size < 5:
        raise ResolutionError("radial Laplacian needs at least five grid points")
    h = float(grid[1] - grid[0])
    _check_wall(op, grid)

    if op.form == "conjugated":
        which = "delta" if op.side == "manifold" else "delta0"
        a = np.sqrt(density_eval(space, grid, which))
        d1, d2 = _stencil(a * vals, h)
        keep = grid[:-4] > 0
        centers = grid[2:-2][keep]
        out = d2[keep] / a[2:-2][keep] - radial_potential(space, centers, op.side) * vals[2:-2][keep]
        return RadialFunction(grid=centers, values=out, meta={"h": h})

    if grid[0] == 0.0:
        ext = np.concatenate([vals[2:0:-1], vals])
        centers = grid[:-2]
    elif math.isclose(grid[0], 0.5 * h, rel_tol=1e-9):
        ext = np.concatenate([vals[1::-1], vals])
        centers = grid[:-2]
    else:
        ext = vals
        centers = grid[2:-2]
    d1, d2 = _stencil(ext, h)

    origin = centers == 0.0
    safe = np.where(origin, 1.0, centers)
    out = d2 + drift(space, safe, op.side) * d1
    if np.any(origin):
        out = np.where(origin, _tangent_dim(space) * d2, out)
    return RadialFunction(grid=centers, values=out, meta={"h": h})


def laplacian_values(space: SpaceSpec, grid: np.ndarray, values: np.ndarray, side: Literal["tangent", "manifold"]):
    op = RadialOperator(space=space, side=side)
    return apply_radial_laplacian(op, RadialFunction(grid=grid, values=values))


def default_domain(space: SpaceSpec) -> float:
    if space.curvature_sign > 0:
        return space.fundamental_radius - WALL_BUFFER
    return 5.0


def check_intertwining(space: SpaceSpec, u: RadialInput, grid: Optional[np.ndarray] = None) -> float:
    """sup |L_M(u/j) − ((L𝔭 − Ω*)u)/j| on a shared grid."""
    _require_rank_one(space)
    if grid is None:
        grid = np.linspace(0.0, default_domain(space), INTERTWINING_POINTS)
    grid = np.asarray(grid, dtype=float)
    uv = np.asarray(u(grid), dtype=float)
    peak = float(np.max(np.abs(uv)))
    if peak == 0.0:
        return 0.0
    tail = grid >= grid[0] + 0.95 * (grid[-1] - grid[0])
    if float(np.max(np.abs(uv[tail]))) > 1e-8 * peak:
        raise DomainError("test function must be supported inside the fundamental domain")

    j = np.asarray(j_eval(space, grid), dtype=float)
    wrapped = laplacian_values(space, grid, uv / j, "manifold")
    flat = laplacian_values(space, grid, uv, "tangent")
    r = flat.grid
    k = len(r)
    offset = int(np.searchsorted(grid, r[0]))
    u_c = uv[offset:offset + k]
    j_c = j[offset:offset + k]
    rhs = (flat.values - omega_star_values(space, r) * u_c) / j_c
    residual = float(np.max(np.abs(wrapped.values - rhs)))
    logger.debug("%s: intertwining residual %.3e on %d points", space.name, residual, k)
    return residual


def omega_star_fd_error(space: SpaceSpec, grid: np.ndarray) -> float:
    """max |(L𝔭 j)/j − Ω*| / max |Ω*| on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    j = np.asarray(j_eval(space, grid), dtype=float)
    lap = laplacian_values(space, grid, j, "tangent")
    offset = int(np.searchsorted(grid, lap.grid[0]))
    fd = lap.values / j[offset:offset + len(lap.grid)]
    exact = omega_star_values(space, lap.grid)
    return float(np.max(np.abs(fd - exact)) / max(float(np.max(np.abs(exact))), 1e-300))


def potential_form_residual(
    space: SpaceSpec, grid: np.ndarray, side: Literal["tangent", "manifold"] = "manifold"
) -> float:
    """max |a''/a − V| with a = δ^{1/2} by differences and V in closed form."""
    _require_rank_one(space)
    grid = np.asarray(grid, dtype=float)
    if grid[0] <= 0:
        raise DomainError("potential check needs a grid with r > 0")
    h = float(grid[1] - grid[0])
    a = np.sqrt(density_eval(space, grid, "delta" if side == "manifold" else "delta0"))
    _, d2 = _stencil(a, h)
    return float(np.max(np.abs(d2 / a[2:-2] - radial_potential(space, grid[2:-2], side))))


def heat_residual(
    space: SpaceSpec,
    kernel: Callable[[np.ndarray, float], np.ndarray],
    r,
    t: float,
    *,
    dt: float = 1e-4,
    dr: float = 1e-3,
) -> float:
    """Peak-relative max |∂_t q − ½Δ_M q| of a radial kernel q(r, t)."""
    _require_rank_one(space)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 2 * dr):
        raise DomainError("heat residual needs r > 2·dr")
    if t <= dt:
        raise DomainError("heat residual needs t > dt")
    q_t = (np.asarray(kernel(r, t + dt)) - np.asarray(kernel(r, t - dt))) / (2.0 * dt)
    ext = np.stack([np.asarray(kernel(r + k * dr, t), dtype=float) for k in (-2, -1, 0, 1, 2)])
    d1 = (-ext[4] + 8.0 * ext[3] - 8.0 * ext[1] + ext[0]) / (12.0 * dr)
    d2 = (-ext[4] + 16.0 * ext[3] - 30.0 * ext[2] + 16.0 * ext[1] - ext[0]) / (12.0 * dr * dr)
    lap = d2 + drift(space, r, "manifold") * d1
    return float(np.max(np.abs(q_t - 0.5 * lap)) / np.max(np.abs(ext[2])))


# ---------------------------
# Perturbed heat solver
# ---------------------------

def _diffusion_bands(n: int, count: int, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, float]:
    faces = h * np.arange(count + 1)
    areas = faces ** (n - 1)
    volumes = (faces[1:] ** n - faces[:-1] ** n) / n
    c = 0.5 / (volumes * h)
    inner = areas[1:count].copy()
    lower = np.zeros(count)
    upper = np.zeros(count)
    lower[1:] = c[1:] * inner
    upper[:-1] = c[:-1] * inner
    diag = -(lower + upper)
    # Dirichlet face at R, half a cell from the last center
    diag[-1] -= c[-1] * 2.0 * areas[-1]
    return lower, diag, upper, volumes, float(areas[-1])


def _apply_bands(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = diag * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    return out


def solve_perturbed_heat(
    space: SpaceSpec,
    t_final: float,
    grid: GridSpec,
    dt: float,
    *,
    t0: float = 1e-3,
    zero_potential: bool = False,
) -> RadialFunction:
    """Crank–Nicolson for ∂u/∂t = ½(L𝔭 − Ω*)u on cell centers of [0, R].

    Finite volumes with face areas r^{n−1} carry the diffusion; the potential
    enters by Strang splitting. The start is the flat kernel at ``t0`` (unit
    discrete mass) times exp(−½Ω* t0). Values are densities against δ₀.
    """
    _require_rank_one(space)
    if t_final <= 0 or dt <= 0 or t0 <= 0:
        raise DomainError("t_final, dt and t0 must be positive")
    if grid.start != 0.0:
        raise DomainError("the solver grid must start at r = 0")
    R = grid.stop
    if space.curvature_sign > 0 and R > space.fundamental_radius - WALL_BUFFER + 1e-12:
        raise DomainError(
            f"{space.name}: solver domain R = {R:.6g} must stay {WALL_BUFFER} inside the wall"
        )
    count = grid.count
    h = R / count
    n = _tangent_dim(space)
    steps = max(1, int(round(t_final / dt)))
    dt = t_final / steps

    centers = h * (np.arange(count) + 0.5)
    lower, diag, upper, volumes, area_R = _diffusion_bands(n, count, h)
    omega = sphere_volume(n)

    if zero_potential:
        potential = np.zeros(count)
    else:
        potential = np.asarray(omega_star_values(space, centers), dtype=float)
    half_kick = np.exp(-0.25 * potential * dt)

    u = flat_heat_kernel(n, centers, t0)
    u = u / (omega * np.sum(u * volumes))
    u = u * np.exp(-0.5 * potential * t0)
    initial_mass = omega * float(np.sum(u * volumes))

    ab = np.zeros((3, count))
    ab[0, 1:] = -0.5 * dt * upper[:-1]
    ab[1] = 1.0 - 0.5 * dt * diag
    ab[2, :-1] = -0.5 * dt * lower[1:]
    outflow = dt * omega * area_R / h

    lost = 0.0
    for _ in range(steps):
        u = half_kick * u
        rhs = u + 0.5 * dt * _apply_bands(lower, diag, upper, u)
        nxt = solve_banded((1, 1), ab, rhs)
        lost += outflow * 0.5 * (u[-1] + nxt[-1])
        u = half_kick * nxt

    loss = lost / initial_mass
    logger.debug("%s: %d CN steps, h=%.3g, boundary loss %.2e", space.name, steps, h, loss)
    if loss > MAX_BOUNDARY_LOSS:
        raise ReliabilityError(
            f"{space.name}: boundary loss {loss:.3%} exceeds {MAX_BOUNDARY_LOSS:.1%}; enlarge R or shorten t"
        )
    return RadialFunction(
        grid=centers,
        values=u,
        measure_weight="delta0",
        meta={"t": t_final + t0, "t0": t0, "boundary_loss": loss, "steps": steps, "dt": dt},
    )
