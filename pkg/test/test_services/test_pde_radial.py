# test/test_services/test_pde_radial.py
import math

import numpy as np
import pytest

from app.schemas.radial import GridSpec, RadialFunction, RadialOperator
from app.services.errors import DomainError, ReliabilityError, ResolutionError, UnsupportedSpaceError
from app.services.pde_radial import (
    apply_radial_laplacian,
    check_intertwining,
    default_domain,
    heat_residual,
    laplacian_values,
    omega_star_fd_error,
    potential_form_residual,
    solve_perturbed_heat,
)
from app.services.root_data import j_eval, preset
from app.services.spectral import flat_heat_kernel, heat_kernel_complex_group, heat_kernel_sphere


def _bump(center, width):
    return lambda r: np.exp(-((np.asarray(r) - center) ** 2) / (2 * width * width))


def _peak_rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def test_tangent_laplacian_of_square_radius():
    grid = np.linspace(0.0, 2.0, 41)
    out = laplacian_values(preset("R3"), grid, grid ** 2, "tangent")
    assert out.grid[0] == 0.0
    assert out.grid.size == grid.size - 2
    assert np.allclose(out.values, 6.0, atol=1e-9)


def test_sphere_laplacian_of_first_harmonic():
    grid = np.linspace(0.0, 2.5, 501)
    out = laplacian_values(preset("S2"), grid, np.cos(grid), "manifold")
    assert np.max(np.abs(out.values + 2.0 * np.cos(out.grid))) < 1e-7


def test_offset_grid_loses_two_points_each_side():
    grid = np.linspace(0.5, 2.0, 151)
    out = laplacian_values(preset("H3"), grid, np.cosh(grid), "manifold")
    assert np.allclose(out.grid, grid[2:-2])


def test_conjugated_form_agrees_with_direct_form():
    s2 = preset("S2")
    grid = np.linspace(0.0, 2.5, 501)
    f = RadialFunction(grid=grid, values=np.exp(-grid ** 2))
    direct = apply_radial_laplacian(RadialOperator(space=s2), f)
    conj = apply_radial_laplacian(RadialOperator(space=s2, form="conjugated"), f)
    assert conj.grid[0] > 0
    # a = δ^{1/2} is singular at the origin; compare away from it
    away = conj.grid >= 0.5
    overlap = np.isin(direct.grid, conj.grid[away])
    assert np.max(np.abs(direct.values[overlap] - conj.values[away])) < 1e-6


def test_laplacian_guards():
    s2 = preset("S2")
    with pytest.raises(DomainError):
        laplacian_values(s2, np.linspace(0.0, math.pi, 50), np.ones(50), "manifold")
    with pytest.raises(ResolutionError):
        laplacian_values(s2, np.array([0.0, 0.1, 0.3, 0.4, 0.5]), np.ones(5), "manifold")
    with pytest.raises(ResolutionError):
        laplacian_values(s2, np.linspace(0.0, 0.3, 4), np.ones(4), "manifold")
    with pytest.raises(UnsupportedSpaceError):
        laplacian_values(preset("SU3"), np.linspace(0.0, 1.0, 11), np.ones(11), "manifold")


def test_default_domain():
    assert default_domain(preset("S2")) == pytest.approx(math.pi - 0.05)
    assert default_domain(preset("CP2")) == pytest.approx(math.pi / 2 - 0.05)
    assert default_domain(preset("H3")) == 5.0


def test_intertwining_holds():
    assert check_intertwining(preset("S2"), _bump(math.pi / 2, 0.2)) < 1e-5
    assert check_intertwining(preset("H3"), _bump(2.0, 0.3)) < 1e-6
    assert check_intertwining(preset("CP2"), _bump(0.7, 0.1)) < 1e-4


def test_intertwining_needs_compact_support():
    with pytest.raises(DomainError):
        check_intertwining(preset("H3"), _bump(4.9, 0.3))


def test_intertwining_of_zero_is_zero():
    assert check_intertwining(preset("S2"), lambda r: np.zeros_like(r)) == 0.0


@pytest.mark.parametrize("name,top,count", [("S2", 2.5, 801), ("H3", 4.0, 1201), ("CP2", 1.2, 601)])
def test_omega_star_matches_finite_differences(name, top, count):
    assert omega_star_fd_error(preset(name), np.linspace(0.0, top, count)) < 1e-6


@pytest.mark.parametrize("side", ["manifold", "tangent"])
def test_potential_form(side):
    assert potential_form_residual(preset("S2"), np.linspace(0.5, 2.5, 801), side) < 1e-6
    assert potential_form_residual(preset("H3"), np.linspace(0.5, 3.0, 1001), side) < 1e-6


def test_potential_form_needs_positive_grid():
    with pytest.raises(DomainError):
        potential_form_residual(preset("S2"), np.linspace(0.0, 1.0, 11))


def test_true_kernels_solve_the_heat_equation():
    h3 = preset("H3")
    r = np.linspace(0.1, 4.0, 40)
    assert heat_residual(h3, lambda x, t: heat_kernel_complex_group(h3, x, t), r, 1.0) < 1e-6
    s2 = preset("S2")
    r = np.linspace(0.1, 2.5, 25)
    assert heat_residual(s2, lambda x, t: heat_kernel_sphere(2, x, t)[0], r, 0.5) < 1e-6


def test_heat_residual_flags_a_wrong_kernel():
    h3 = preset("H3")
    r = np.linspace(0.1, 3.0, 30)
    assert heat_residual(h3, lambda x, t: flat_heat_kernel(3, x, t), r, 1.0) > 1e-2


def test_heat_residual_guards():
    h3 = preset("H3")
    with pytest.raises(DomainError):
        heat_residual(h3, lambda x, t: flat_heat_kernel(3, x, t), np.array([0.001, 1.0]), 1.0)
    with pytest.raises(DomainError):
        heat_residual(h3, lambda x, t: flat_heat_kernel(3, x, t), np.array([1.0]), 1e-5)


def test_solver_recovers_sphere_kernel():
    s2 = preset("S2")
    sol = solve_perturbed_heat(s2, 0.5, GridSpec(start=0.0, stop=math.pi - 0.05, count=1500), 2.5e-4)
    assert sol.meta["t"] == pytest.approx(0.501)
    assert sol.meta["boundary_loss"] < 5e-3
    assert sol.measure_weight == "delta0"
    window = (sol.grid >= 0.2) & (sol.grid <= 2.4)
    r = sol.grid[window]
    wrapped = sol.values[window] / j_eval(s2, r)
    assert _peak_rel(wrapped, heat_kernel_sphere(2, r, sol.meta["t"])[0]) < 1e-3


def test_solver_without_potential_is_flat_diffusion():
    r3 = preset("R3")
    sol = solve_perturbed_heat(r3, 0.2, GridSpec(start=0.0, stop=5.0, count=1000), 5e-4, zero_potential=True)
    keep = sol.grid <= 2.0
    exact = flat_heat_kernel(3, sol.grid[keep], sol.meta["t"])
    assert _peak_rel(sol.values[keep], exact) < 1e-3


def test_solver_guards():
    s2 = preset("S2")
    with pytest.raises(DomainError):
        solve_perturbed_heat(s2, 0.5, GridSpec(start=0.1, stop=2.0, count=100), 1e-3)
    with pytest.raises(DomainError):
        solve_perturbed_heat(s2, 0.5, GridSpec(start=0.0, stop=math.pi, count=100), 1e-3)
    with pytest.raises(DomainError):
        solve_perturbed_heat(s2, -1.0, GridSpec(start=0.0, stop=2.0, count=100), 1e-3)
    with pytest.raises(UnsupportedSpaceError):
        solve_perturbed_heat(preset("SU3"), 0.5, GridSpec(start=0.0, stop=2.0, count=100), 1e-3)


def test_solver_reports_mass_leaving_the_domain():
    with pytest.raises(ReliabilityError):
        solve_perturbed_heat(preset("H3"), 1.0, GridSpec(start=0.0, stop=1.0, count=200), 1e-3)
