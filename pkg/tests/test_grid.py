import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curlcyl import (ConfigurationError, build_grid, constant_materials,
                     dump_field_csv, load_field_csv, materials_from_csv,
                     unit_materials)


def test_rectangle_interior_mask():
    g = build_grid(1.0, 0.0, 1.0, 8, 8)
    # axis, outer wall and lids are excluded
    assert not g.interior_mask[0].any()
    assert not g.interior_mask[-1].any()
    assert not g.interior_mask[:, 0].any()
    assert not g.interior_mask[:, -1].any()
    assert g.n_interior == 7 * 7
    assert g.h_r == pytest.approx(1.0 / 8)


def test_bad_extents_rejected():
    with pytest.raises(ConfigurationError):
        build_grid(-1.0, 0.0, 1.0, 8, 8)
    with pytest.raises(ConfigurationError):
        build_grid(1.0, 1.0, 0.0, 8, 8)
    with pytest.raises(ConfigurationError):
        build_grid(1.0, 0.0, 1.0, 2, 8)


def test_empty_interior_rejected():
    with pytest.raises(ConfigurationError):
        build_grid(1.0, 0.0, 1.0, 8, 8, shape_spec=lambda r, z: r > 10)


def test_shape_predicate_subsets_rectangle():
    g = build_grid(1.0, -1.0, 1.0, 16, 16,
                   shape_spec=lambda r, z: r ** 2 + z ** 2 < 0.9)
    full = build_grid(1.0, -1.0, 1.0, 16, 16)
    assert g.n_interior < full.n_interior
    assert np.all(full.interior_mask[g.interior_mask])


@given(st.integers(min_value=4, max_value=20),
       st.integers(min_value=4, max_value=20))
@settings(max_examples=25, deadline=None)
def test_full_vector_round_trip(n_r, n_z):
    g = build_grid(2.0, -1.0, 1.0, n_r, n_z)
    phi = np.arange(g.n_interior, dtype=float) + 1.0
    assert np.array_equal(g.from_full(g.to_full(phi)), phi)
    full = g.to_full(phi)
    assert np.all(full[~g.interior_mask] == 0.0)


def test_coefficient_floor_enforced():
    g = build_grid(1.0, 0.0, 1.0, 8, 8)
    with pytest.raises(ConfigurationError):
        constant_materials(g, a_mu=0.0)
    with pytest.raises(ConfigurationError):
        constant_materials(g, a_Gamma=-1.0)


def test_unit_materials_flag():
    g = build_grid(1.0, 0.0, 1.0, 8, 8)
    assert unit_materials(g).is_unit
    assert not constant_materials(g, a_V=2.0).is_unit


def test_field_csv_round_trip(tmp_path):
    g = build_grid(1.0, 0.0, 1.0, 10, 10)
    phi = np.sin(np.arange(g.n_interior) * 0.37)
    path = tmp_path / "field.csv"
    dump_field_csv(g, phi, str(path))
    back = load_field_csv(g, str(path))
    assert np.array_equal(back, phi)  # %.17g round-trips doubles exactly


def test_materials_csv_round_trip(tmp_path):
    g = build_grid(1.0, 0.0, 1.0, 6, 6)
    n = (g.n_r + 1) * (g.n_z + 1)
    rng = np.random.default_rng(3)
    cols = {k: 0.5 + rng.random(n) for k in
            ("a_mu", "b_mu", "a_V", "a_Gamma")}
    path = tmp_path / "mat.csv"
    with open(path, "w") as f:
        f.write("a_mu,b_mu,a_V,a_Gamma\n")
        for i in range(n):
            f.write(",".join("%.17g" % cols[k][i] for k in
                             ("a_mu", "b_mu", "a_V", "a_Gamma")) + "\n")
    m = materials_from_csv(g, str(path))
    assert np.array_equal(m.a_V.ravel(), cols["a_V"])
