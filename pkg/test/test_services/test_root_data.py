# test/test_services/test_root_data.py
import math

import numpy as np
import pytest

from app.schemas.space import SpaceKind
from app.services.errors import BranchDomainError, ConfigError, DomainError, UnsupportedSpaceError
from app.services.root_data import (
    build_space,
    density_eval,
    is_split_rank,
    j_eval,
    list_presets,
    load_presets,
    preset,
    resolve_space,
    sphere_volume,
)


def test_sphere_and_hyperbolic_presets_carry_one_root_of_multiplicity_n_minus_1():
    for n in (2, 3, 4, 5):
        s = preset(f"S{n}")
        assert s.rank == 1 and s.curvature_sign == 1
        assert s.roots.multiplicities.tolist() == [n - 1]
        assert s.fundamental_radius == pytest.approx(math.pi)
        assert s.roots.rho_norm_sq == pytest.approx(((n - 1) / 2) ** 2)
    h3 = preset("H3")
    assert h3.curvature_sign == -1 and math.isinf(h3.fundamental_radius)


def test_projective_planes_have_multipliable_roots_and_half_radius():
    cp2 = preset("CP2")
    assert cp2.roots.multipliable == (0,)
    assert cp2.fundamental_radius == pytest.approx(math.pi / 2)
    # ρ = ½(2·α + 1·2α) = 2α
    assert cp2.roots.rho_norm_sq == pytest.approx(4.0)


def test_list_presets_names_builtins():
    names = list_presets()
    for name in ("S1", "S5", "H2", "R3", "SU2", "SL2C", "SU3", "SL3C", "CP2", "CP3", "HP2", "OP2"):
        assert name in names


def test_resolve_space_accepts_kind_with_dim_or_preset_name():
    assert resolve_space("sphere", 3).name == "S3"
    assert resolve_space("hyperbolic", 2).name == "H2"
    assert resolve_space("cp2").name == "CP2"
    with pytest.raises(UnsupportedSpaceError):
        resolve_space("no_such_space")
    with pytest.raises(UnsupportedSpaceError):
        build_space(SpaceKind.sphere, None)


def test_j_on_spheres_and_complex_groups():
    r = np.array([0.3, 1.0, 2.5])
    np.testing.assert_allclose(j_eval(preset("S3"), r), np.sin(r) / r, rtol=1e-14)
    np.testing.assert_allclose(j_eval(preset("S2"), r), np.sqrt(np.sin(r) / r), rtol=1e-14)
    np.testing.assert_allclose(j_eval(preset("H3"), r), np.sinh(r) / r, rtol=1e-14)
    assert j_eval(preset("R3"), 1.7) == 1.0
    assert j_eval(preset("S2"), 0.0) == pytest.approx(1.0)


def test_half_angle_group_form_at_one():
    assert j_eval(preset("SL2C"), 1.0, half_angle=True) == pytest.approx(1.0421906, abs=1e-7)


def test_j_is_not_real_beyond_the_first_zero():
    with pytest.raises(BranchDomainError):
        j_eval(preset("S2"), 4.0)


def test_j_is_the_ratio_of_the_two_densities():
    s2 = preset("S2")
    r = np.linspace(0.1, 3.0, 30)
    ratio = np.asarray(density_eval(s2, r, "delta")) / np.asarray(density_eval(s2, r, "delta0"))
    np.testing.assert_allclose(np.asarray(j_eval(s2, r)) ** 2, ratio, rtol=1e-13)


def test_density_rejects_points_outside_the_chamber():
    with pytest.raises(DomainError):
        density_eval(preset("S2"), -0.5)
    with pytest.raises(DomainError):
        density_eval(preset("S2"), 3.5)


def test_rank_two_points_need_two_coordinates():
    su3 = preset("SU3")
    assert su3.rank == 2
    assert j_eval(su3, [0.3, 0.8]) > 0
    with pytest.raises(DomainError):
        j_eval(su3, [0.3, 0.8, 0.1])


def test_split_rank_and_sphere_volume():
    assert is_split_rank(preset("S3"))
    assert is_split_rank(preset("SU3"))
    assert not is_split_rank(preset("S2"))
    assert sphere_volume(2) == pytest.approx(2 * math.pi)
    assert sphere_volume(3) == pytest.approx(4 * math.pi)


def test_load_presets_from_ini(tmp_path):
    path = tmp_path / "presets.ini"
    path.write_text(
        "[myS2]\n"
        "kind = sphere\n"
        "dim = 2\n"
        "curvature = 1\n"
        "roots = 1:1\n"
        "gram = 1\n",
        encoding="utf-8",
    )
    presets = load_presets(path)
    space = presets["myS2"]
    assert space.dim == 2 and space.fundamental_radius == pytest.approx(math.pi)
    assert resolve_space("myS2", presets=presets) is space
    np.testing.assert_allclose(j_eval(space, 1.2), j_eval(preset("S2"), 1.2))


def test_load_presets_reports_bad_files(tmp_path):
    with pytest.raises(ConfigError):
        load_presets(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[x]\nkind = sphere\ndim = 2\ncurvature = 1\nroots = 1:1\ngram = 1,0\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_presets(bad)
