# test/test_services/test_stochastics.py
import math

import numpy as np
import pytest

from app.schemas.results import Scheme, WalkConfig
from app.services.errors import ConfigError, ReliabilityError, UnsupportedSpaceError
from app.services.potentials import omega_star_values
from app.services.root_data import preset
from app.services.spectral import flat_heat_kernel
from app.services.stochastics import (
    bin_average,
    block_rng,
    flat_walk_feynman_kac,
    geodesic_walk,
    ks_against_spectral,
    mean_square_displacement,
)


def _fk(t, samples=20_000, steps=100, seed=3, block=4096):
    return WalkConfig(t=t, sample_count=samples, step_count=steps, seed=seed,
                      scheme=Scheme.flat_walk_fk, block_size=block)


def test_block_streams_are_reproducible_and_distinct():
    a = block_rng(5, 0).standard_normal(8)
    again = block_rng(5, 0).standard_normal(8)
    other_block = block_rng(5, 1).standard_normal(8)
    other_seed = block_rng(6, 0).standard_normal(8)
    assert np.array_equal(a, again)
    assert not np.allclose(a, other_block)
    assert not np.allclose(a, other_seed)


def test_geodesic_walk_does_not_depend_on_thread_count(monkeypatch):
    cfg = WalkConfig(t=0.5, sample_count=5000, step_count=50, seed=9, block_size=1024)
    s2 = preset("S2")
    monkeypatch.setenv("HEATWRAP_THREADS", "1")
    one = geodesic_walk(s2, cfg)
    monkeypatch.setenv("HEATWRAP_THREADS", "4")
    four = geodesic_walk(s2, cfg)
    assert one.shape == (5000,)
    assert np.array_equal(one, four)


def test_geodesic_walk_rejects_coarse_steps():
    with pytest.raises(ConfigError):
        geodesic_walk(preset("S2"), WalkConfig(t=1.0, sample_count=100, step_count=10))


@pytest.mark.parametrize("name", ["CP2", "R3", "SU3"])
def test_geodesic_walk_needs_a_constant_curvature_space(name):
    with pytest.raises(UnsupportedSpaceError):
        geodesic_walk(preset(name), WalkConfig(t=0.1, sample_count=10, step_count=100))


def test_sphere_walk_matches_spectral_law():
    s2 = preset("S2")
    samples = geodesic_walk(s2, WalkConfig(t=0.5, sample_count=20_000, step_count=400, seed=1))
    assert np.all((samples >= 0) & (samples <= math.pi))
    assert ks_against_spectral(s2, samples, 0.5) < 0.02


def test_hyperbolic_walk_matches_spectral_law():
    h3 = preset("H3")
    samples = geodesic_walk(h3, WalkConfig(t=0.5, sample_count=20_000, step_count=200, seed=2))
    assert ks_against_spectral(h3, samples, 0.5) < 0.02
    # curvature pushes the walk out faster than the flat 3t
    assert mean_square_displacement(samples) > 3 * 0.5


def test_ks_needs_a_spectral_law():
    s4 = preset("S4")
    with pytest.raises(UnsupportedSpaceError):
        ks_against_spectral(s4, np.array([0.1, 0.2]), 0.5)


def test_mean_square_displacement():
    assert mean_square_displacement([1.0, 3.0]) == pytest.approx(5.0)


def test_flat_walk_without_potential_matches_gaussian():
    r3 = preset("R3")
    edges = np.linspace(0.0, 3.0, 16)
    est = flat_walk_feynman_kac(r3, _fk(1.0, samples=100_000, steps=20), edges)
    expected = bin_average(lambda r: flat_heat_kernel(3, r, 1.0), edges, lambda r: r * r)
    z = np.abs(est.density - expected) / np.maximum(est.stderr, 1e-12)
    assert est.weight_range == (1.0, 1.0)
    assert est.killed_mass == 0.0
    assert float(np.max(z)) < 5.0
    assert np.allclose(est.grid, 0.5 * (edges[1:] + edges[:-1]))


def test_constant_potential_rescales_weights():
    s3 = preset("S3")
    t = 0.2
    edges = np.linspace(0.0, 2.0, 11)
    plain = flat_walk_feynman_kac(s3, _fk(t), edges, zero_potential=True)
    weighted = flat_walk_feynman_kac(s3, _fk(t), edges)
    omega = float(np.asarray(omega_star_values(s3, np.array([1.0])))[0])
    factor = math.exp(-0.5 * omega * t)
    assert weighted.weight_range[0] == pytest.approx(factor, rel=1e-12)
    assert weighted.weight_range[1] == pytest.approx(factor, rel=1e-12)
    assert np.allclose(weighted.density, factor * plain.density, rtol=1e-12, atol=0)


def test_weights_stay_inside_potential_bounds():
    est = flat_walk_feynman_kac(preset("S2"), _fk(0.3))
    lo, hi = est.weight_range
    assert 0 < lo <= hi
    assert est.effective_samples <= est.samples
    assert est.edges.size == est.density.size + 1
    assert est.killed_mass < 1e-2


def test_too_many_killed_paths_fail():
    with pytest.raises(ReliabilityError):
        flat_walk_feynman_kac(preset("S2"), _fk(3.0, samples=2000, steps=100))


def test_flat_walk_is_rank_one_only():
    with pytest.raises(UnsupportedSpaceError):
        flat_walk_feynman_kac(preset("SU3"), _fk(0.1, samples=10))


def test_bin_average():
    edges = np.array([0.0, 1.0, 3.0])
    ones = bin_average(lambda x: np.ones_like(x), edges, lambda x: np.ones_like(x))
    mids = bin_average(lambda x: x, edges, lambda x: np.ones_like(x))
    assert np.allclose(ones, 1.0)
    assert np.allclose(mids, [0.5, 2.0])
