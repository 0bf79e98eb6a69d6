# app/services/efunction.py
"""Orbit-composition densities, e-functions and radial convolutions.

For radii r1, r2 the distance r = d(o, X·Y) of a composed pair of orbits
has density (n-dimensional space of curvature κ)

    g(r) = c_n S(r)/(S(r1)S(r2)) · (√|Π| / (2 S(r1) S(r2)))^{n−3}

with S = sin, sinh or the identity, c_n = Γ(n/2)/(√π Γ((n−1)/2)) and
Π the product of 2 S(½u) over the four signed sums u = r ± r1 ± r2
(u itself on flat space). On flat space this is Heron's area formula.
"""
from __future__ import annotations

import logging
import math
from typing import Literal, Optional, Tuple

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.special import gammaln

from app.schemas.radial import RadialFunction, RadialInput
from app.schemas.results import EFunctionValue, MCEstimate, OrbitTriple
from app.schemas.space import SpaceSpec
from app.services.errors import DomainError, ResolutionError, UnsupportedSpaceError
from app.services.root_data import curved, j_eval, preset, sinc_factor, sphere_volume

logger = logging.getLogger(__name__)

NODES = 64
Reading = Literal["root_per_factor", "literal"]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(NODES)


# ---------------------------
# Closed forms
# ---------------------------

def _half_chord(u, curvature: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if curvature == 0:
        return u
    return 2.0 * curved(0.5 * u, curvature)


def orbit_product(r1, r2, r, curvature: int) -> np.ndarray:
    """Π over u = r ± r1 ± r2 of 2 S(u/2); negative inside the support."""
    s, d = r1 + r2, r1 - r2
    outer = _half_chord(r + s, curvature) * _half_chord(r - s, curvature)
    inner = _half_chord(r + d, curvature) * _half_chord(r - d, curvature)
    return outer * inner


def support(curvature: int, r1: float, r2: float) -> Tuple[float, float]:
    lo, hi = abs(r1 - r2), r1 + r2
    if curvature > 0:
        hi = min(hi, 2.0 * math.pi - r1 - r2)
    return lo, hi


def _density_constant(n: int) -> float:
    return math.exp(gammaln(0.5 * n) - gammaln(0.5 * (n - 1))) / math.sqrt(math.pi)


def _density(curvature: int, n: int, r1, r2, r, reading: Reading = "root_per_factor") -> np.ndarray:
    """g on the open support; callers mask the rest."""
    s1, s2, s = (curved(x, curvature) for x in (r1, r2, r))
    pi_abs = np.abs(orbit_product(r1, r2, r, curvature))
    if reading == "literal":
        # the product placed in the numerator; kept to show it fails normalization
        return s / (math.pi * s1 * s2) * np.sqrt(pi_abs)
    return _density_constant(n) * s / (s1 * s2) * (np.sqrt(pi_abs) / (2.0 * s1 * s2)) ** (n - 3)


def _rank_one_kind(space: SpaceSpec) -> Tuple[int, int]:
    """(curvature, n) for Sⁿ, Hⁿ and ℝⁿ presets."""
    roots = space.roots
    plain = space.rank == 1 and not roots.multipliable and all(
        abs(c - 1.0) < 1e-12 for c in roots.coefficient_matrix[:, 0]
    )
    if not plain or space.dim < 2 or roots.multiplicity_total != space.dim - 1:
        raise UnsupportedSpaceError(f"{space.name}: orbit densities exist for spheres, hyperbolic and flat spaces")
    return space.curvature_sign, space.dim


def _scalar_density(curvature: int, n: int, tri: OrbitTriple, reading: Reading = "root_per_factor") -> float:
    if tri.r1 <= 0 or tri.r2 <= 0:
        raise DomainError("orbit radii must be positive")
    if curvature > 0 and (tri.r1 >= math.pi or tri.r2 >= math.pi):
        raise DomainError("orbit radii must lie in (0, π) on spheres")
    lo, hi = support(curvature, tri.r1, tri.r2)
    if any(math.isclose(tri.r, end, rel_tol=1e-12, abs_tol=1e-15) for end in (lo, hi)):
        raise DomainError(f"r = {tri.r} sits on a support endpoint where the density is singular")
    if tri.r < lo or tri.r > hi:
        return 0.0
    return float(_density(curvature, n, tri.r1, tri.r2, tri.r, reading))


def planar_orbit_density(tri: OrbitTriple) -> float:
    """2r / (π √|Π|) on [|r1 − r2|, r1 + r2]."""
    return _scalar_density(0, 2, tri)


def spherical_orbit_density(tri: OrbitTriple, reading: Reading = "root_per_factor") -> float:
    """2 sin r / (π √|Π|) with Π built from 2 sin(u/2)."""
    return _scalar_density(1, 2, tri, reading)


def orbit_density(space: SpaceSpec, tri: OrbitTriple) -> float:
    curvature, n = _rank_one_kind(space)
    return _scalar_density(curvature, n, tri)


def _substituted(curvature: int, n: int, r1: float, r2: float, reading: Reading):
    lo, hi = support(curvature, r1, r2)
    w = hi - lo
    if w <= 0:
        raise DomainError("empty support")

    def integrand(u: float) -> float:
        r = lo + w * math.sin(u) ** 2
        return float(_density(curvature, n, r1, r2, r, reading)) * w * math.sin(2.0 * u)

    return lo, w, integrand


def density_mass(
    curvature: int, n: int, r1: float, r2: float, reading: Reading = "root_per_factor", *, a=None, b=None
) -> float:
    """∫ g over the support (or [a, b]) with r = lo + w sin²u removing the endpoint singularities."""
    lo, w, integrand = _substituted(curvature, n, r1, r2, reading)
    ua = 0.0 if a is None else math.asin(math.sqrt(min(max((a - lo) / w, 0.0), 1.0)))
    ub = 0.5 * math.pi if b is None else math.asin(math.sqrt(min(max((b - lo) / w, 0.0), 1.0)))
    if ub <= ua:
        return 0.0
    value, _ = quad(integrand, ua, ub, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(value)


def e_closed_form(space: SpaceSpec, tri: OrbitTriple) -> EFunctionValue:
    """[Π sc(u/2) / (sc(r1) sc(r2) sc(r))]^{(n−3)/2}, sc(x) = S(x)/x; 0 off the support."""
    curvature, n = _rank_one_kind(space)
    lo, hi = support(curvature, tri.r1, tri.r2)
    if tri.r < lo or tri.r > hi:
        return EFunctionValue(value=0.0, in_support=False)
    if curvature == 0 or n == 3:
        return EFunctionValue(value=1.0, in_support=True)
    r, s, d = tri.r, tri.r1 + tri.r2, tri.r1 - tri.r2

    def sc(x: float) -> float:
        return float(sinc_factor(x, curvature))

    top = (sc(0.5 * (r + s)) * sc(0.5 * (r - s))) * (sc(0.5 * (r + d)) * sc(0.5 * (r - d)))
    bottom = (sc(tri.r1) * sc(tri.r2)) * sc(r)
    ratio = top / bottom
    if ratio <= 0:
        raise DomainError(f"e is singular at {tri}")
    return EFunctionValue(value=ratio ** (0.5 * (n - 3)), in_support=True)


def e_ratio(space: SpaceSpec, tri: OrbitTriple) -> float:
    """(j(r1) j(r2) / j(r)) · g / f recomputed from the two densities."""
    curvature, n = _rank_one_kind(space)
    g = _scalar_density(curvature, n, tri)
    f = _scalar_density(0, n, tri)
    if f == 0.0:
        return 0.0
    j1, j2, j = (float(j_eval(space, x)) for x in (tri.r1, tri.r2, tri.r))
    return (j1 * j2 / j) * g / f


def heron_residual(r1: float, r2: float, theta: float) -> float:
    """|2 r1 r2 sin θ − √|Π|| for the triangle with sides r1, r2 and angle θ between them."""
    r = math.sqrt(r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * math.cos(theta))
    return abs(2.0 * r1 * r2 * math.sin(theta) - math.sqrt(abs(float(orbit_product(r1, r2, r, 0)))))


# ---------------------------
# Monte Carlo composition oracle
# ---------------------------

def _compose(curvature: int, r1: float, r2: float, psi: np.ndarray) -> np.ndarray:
    """Distance from o after moving r1, then r2 in direction ψ relative to the first geodesic."""
    c, s = np.cos(psi), np.sin(psi)
    if curvature == 0:
        return np.hypot(r1 + r2 * c, r2 * s)
    if curvature > 0:
        p = np.array([math.sin(r1), 0.0, math.cos(r1)])
        e1 = np.array([math.cos(r1), 0.0, -math.sin(r1)])
        e2 = np.array([0.0, 1.0, 0.0])
        q = math.cos(r2) * p[:, None] + math.sin(r2) * (np.outer(e1, c) + np.outer(e2, s))
        return np.arccos(np.clip(q[2], -1.0, 1.0))
    p = np.array([math.sinh(r1), 0.0, math.cosh(r1)])
    e1 = np.array([math.cosh(r1), 0.0, math.sinh(r1)])
    e2 = np.array([0.0, 1.0, 0.0])
    q = math.cosh(r2) * p[:, None] + math.sinh(r2) * (np.outer(e1, c) + np.outer(e2, s))
    return np.arccosh(np.maximum(q[2], 1.0))


def mc_orbit_density(
    space: SpaceSpec, r1: float, r2: float, samples: int, seed: int = 0, bins: int = 20
) -> Tuple[MCEstimate, np.ndarray]:
    """Histogram of composed distances on S², H² or ℝ² and the exact bin densities."""
    curvature, n = _rank_one_kind(space)
    if n != 2:
        raise UnsupportedSpaceError("the composition oracle is two-dimensional")
    rng = np.random.Generator(np.random.Philox(seed))
    psi = rng.uniform(0.0, 2.0 * math.pi, size=samples)
    dist = _compose(curvature, r1, r2, psi)

    lo, hi = support(curvature, r1, r2)
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(dist, bins=edges)
    width = np.diff(edges)
    p = counts / samples
    masses = np.array([density_mass(curvature, n, r1, r2, a=a, b=b) for a, b in zip(edges[:-1], edges[1:])])
    estimate = MCEstimate(
        grid=0.5 * (edges[:-1] + edges[1:]),
        edges=edges,
        density=p / width,
        stderr=np.sqrt(np.maximum(masses * (1.0 - masses), 1e-300) / samples) / width,
        effective_samples=float(samples),
        samples=samples,
        seed=seed,
    )
    return estimate, masses / width


# ---------------------------
# Radial convolutions
# ---------------------------

def _segments(points: np.ndarray, top: float) -> list[Tuple[float, float]]:
    cuts = np.unique(np.clip(np.concatenate([[0.0, top], points]), 0.0, top))
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b - a > 1e-14]


def _orbit_integral(
    curvature: int,
    n: int,
    law_mu,
    law_nu,
    r: float,
    r_max: float,
    kernel_factor=None,
) -> float:
    """∬ Λμ(r1) Λν(r2) k(r1, r2, r) g(r; r1, r2) dr1 dr2 over the pairs whose composition reaches r."""
    cuts = np.array([r, math.pi - r]) if curvature > 0 else np.array([r])
    total = 0.0
    for a, b in _segments(cuts, r_max):
        r1 = 0.5 * (b - a) * _GL_X + 0.5 * (b + a)
        w1 = 0.5 * (b - a) * _GL_W
        lo = np.abs(r - r1)
        hi = r + r1
        if curvature > 0:
            hi = np.minimum(hi, 2.0 * math.pi - r - r1)
        width = hi - lo
        ok = width > 0
        if not np.any(ok):
            continue
        u = 0.25 * math.pi * (_GL_X + 1.0)
        wu = 0.25 * math.pi * _GL_W
        r1m = r1[ok, None]
        r2 = lo[ok, None] + width[ok, None] * np.sin(u)[None, :] ** 2
        jac = width[ok, None] * np.sin(2.0 * u)[None, :]
        dens = _density(curvature, n, r1m, r2, r)
        if kernel_factor is not None:
            dens = dens * kernel_factor(r1m, r2, r)
        inner = np.sum(wu[None, :] * jac * np.asarray(law_nu(r2)) * dens, axis=1)
        total += float(np.sum(w1[ok] * np.asarray(law_mu(r1[ok])) * inner))
    return total


def _radial_scale(f: RadialInput, weight) -> Optional[float]:
    if not isinstance(f, RadialFunction):
        return None
    law = f.values * weight(f.grid)
    mass = trapezoid(law, f.grid)
    if mass <= 0:
        return None
    return math.sqrt(max(trapezoid(f.grid ** 2 * law, f.grid) / mass, 0.0))


def _check_resolution(f: RadialInput, weight) -> None:
    scale = _radial_scale(f, weight)
    if scale is not None and f.spacing > scale / 10.0:
        raise ResolutionError(
            f"input grid spacing {f.spacing:.3g} is too coarse for a kernel of scale {scale:.3g}"
        )


def twisted_convolution(
    space: SpaceSpec,
    mu: RadialInput,
    nu: RadialInput,
    grid,
    *,
    force_flat: bool = False,
) -> RadialFunction:
    """Radial twisted convolution on the tangent space.

    ``mu`` and ``nu`` are densities against the flat measure ω_n r^{n−1} dr.
    The pair (r1, r2) reaches r with weight e·f = (j(r1) j(r2)/j(r))·g; with
    ``force_flat`` e ≡ 1 and the result is the plain radial convolution.
    Returns a density against the same flat measure.
    """
    curvature, n = _rank_one_kind(space)
    if force_flat:
        curvature = 0
    omega = sphere_volume(n)

    def flat_weight(x):
        return omega * np.asarray(x, dtype=float) ** (n - 1)

    _check_resolution(mu, flat_weight)
    _check_resolution(nu, flat_weight)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise DomainError("convolution grid must have r > 0")
    r_max = math.pi if curvature > 0 else _reach(mu)

    def law_mu(x):
        return np.asarray(mu(x), dtype=float) * flat_weight(x)

    def law_nu(x):
        return np.asarray(nu(x), dtype=float) * flat_weight(x)

    twist = None
    if curvature != 0:
        def twist(r1, r2, r):
            return (j_eval(space, r1) * j_eval(space, r2)) / j_eval(space, r)

    law = np.array([_orbit_integral(curvature, n, law_mu, law_nu, float(r), r_max, twist) for r in grid])
    values = law / flat_weight(grid)
    logger.debug("%s: twisted convolution on %d points (flat=%s)", space.name, grid.size, force_flat)
    return RadialFunction(grid=grid, values=values, measure_weight="delta0")


def _reach(f: RadialInput) -> float:
    if isinstance(f, RadialFunction):
        return float(f.grid[-1])
    return 12.0


def sphere_convolution(
    mu: RadialInput,
    nu: RadialInput,
    grid,
    *,
    space: Optional[SpaceSpec] = None,
    measure_weight: Literal["delta", "none"] = "delta",
) -> RadialFunction:
    """(μ ∗ ν)(θ) for K-invariant densities on a sphere (S² unless ``space`` says otherwise).

    Inputs are densities against the Riemannian volume ω_n sin^{n−1}θ dθ.
    ``measure_weight="none"`` returns the law of the distance against dθ.
    """
    if space is None:
        space = preset("S2")
    curvature, n = _rank_one_kind(space)
    if curvature != 1:
        raise UnsupportedSpaceError(f"{space.name} is not a sphere")
    omega = sphere_volume(n)

    def volume(x):
        return omega * np.sin(np.asarray(x, dtype=float)) ** (n - 1)

    _check_resolution(mu, volume)
    _check_resolution(nu, volume)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid >= math.pi):
        raise DomainError("sphere convolution grid must lie in (0, π)")

    def law_mu(x):
        return np.asarray(mu(x), dtype=float) * volume(x)

    def law_nu(x):
        return np.asarray(nu(x), dtype=float) * volume(x)

    law = np.array([_orbit_integral(1, n, law_mu, law_nu, float(r), math.pi) for r in grid])
    if measure_weight == "none":
        return RadialFunction(grid=grid, values=law, measure_weight="none")
    return RadialFunction(grid=grid, values=law / volume(grid), measure_weight="delta")
