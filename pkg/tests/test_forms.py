import numpy as np
import pytest

from curlcyl import assemble_forms, build_grid, constant_materials, \
    unit_materials, evaluate_J, evaluate_dJ
from curlcyl.forms import nonlinearity_hess_diag


def energy_exact_azimuthal():
    """Curl energy of phi = r (1 - r) sin(pi z) on the unit cylinder.

    With E = phi e_theta, |curl E|^2 = (d_z phi)^2 + ((1/r) d_r(r phi))^2
    = pi^2 r^2 (1-r)^2 cos^2(pi z) + (2 - 3r)^2 sin^2(pi z), and the
    weighted integral 2 pi int r (.) dr dz evaluates to
    pi^3/60 + pi/4.
    """
    return np.pi ** 3 / 60.0 + np.pi / 4.0


def sample(grid, f):
    idx = grid.interior_indices
    return f(grid.r[idx[:, 0]], grid.z[idx[:, 1]])


@pytest.mark.parametrize("n", [16, 32, 64])
def test_quadratic_form_consistency(n):
    g = build_grid(1.0, 0.0, 1.0, n, n)
    forms = assemble_forms(g, unit_materials(g), 4.0)
    phi = sample(g, lambda r, z: r * (1 - r) * np.sin(np.pi * z))
    val = phi @ (forms.A @ phi)
    assert val == pytest.approx(energy_exact_azimuthal(), rel=0.05 / n * 16)


def test_quadratic_form_convergence_order():
    errs = []
    for n in (16, 32, 64):
        g = build_grid(1.0, 0.0, 1.0, n, n)
        forms = assemble_forms(g, unit_materials(g), 4.0)
        phi = sample(g, lambda r, z: r * (1 - r) * np.sin(np.pi * z))
        errs.append(abs(phi @ (forms.A @ phi) - energy_exact_azimuthal()))
    slopes = np.diff(np.log(errs)) / np.log(0.5)
    assert np.all(np.abs(slopes - 2.0) < 0.2)


def test_gradient_matches_finite_differences(small_forms_p4, rng):
    forms = small_forms_p4
    for lam in (0.0, -10.0):
        for _ in range(50):
            phi = rng.standard_normal(forms.n)
            d = rng.standard_normal(forms.n)
            d /= np.linalg.norm(d)
            h = 1e-6
            fd = (evaluate_J(forms, lam, phi + h * d)
                  - evaluate_J(forms, lam, phi - h * d)) / (2 * h)
            an = evaluate_dJ(forms, lam, phi) @ d
            assert fd == pytest.approx(an, rel=1e-5, abs=1e-9)


def test_hessian_diag_matches_finite_differences(small_forms_p4, rng):
    forms = small_forms_p4
    phi = rng.standard_normal(forms.n)
    d = rng.standard_normal(forms.n)
    h = 1e-5
    fd = (evaluate_dJ(forms, 0.0, phi + h * d)
          - evaluate_dJ(forms, 0.0, phi - h * d)) / (2 * h)
    an = forms.A @ d - nonlinearity_hess_diag(forms, phi) * d
    assert np.allclose(fd, an, rtol=1e-4, atol=1e-6)


def test_energy_scaling_law(small_forms_p4, rng):
    """J0(t phi) = t^2/2 ||phi||_A^2 - t^p/p |phi|_p^p."""
    forms = small_forms_p4
    phi = rng.standard_normal(forms.n)
    a = phi @ (forms.A @ phi)
    b = forms.w @ np.abs(phi) ** forms.p
    for t in (0.5, 1.0, 3.0):
        assert evaluate_J(forms, 0.0, t * phi) == pytest.approx(
            0.5 * t ** 2 * a - t ** forms.p / forms.p * b, rel=1e-12)


def test_operator_symmetric_positive(small_forms_p4, rng):
    A = small_forms_p4.A
    assert (A != A.T).nnz == 0
    for _ in range(10):
        v = rng.standard_normal(small_forms_p4.n)
        assert v @ (A @ v) > 0


def test_evenness(small_forms_p4, rng):
    phi = rng.standard_normal(small_forms_p4.n)
    for lam in (0.0, -5.0):
        assert evaluate_J(small_forms_p4, lam, -phi) == pytest.approx(
            evaluate_J(small_forms_p4, lam, phi), rel=1e-14)


def test_material_scaling(rng):
    """Halving the permeability doubles the curl energy; scaling the
    nonlinearity weight by s scales the p-term by s^p."""
    g = build_grid(1.0, 0.0, 1.0, 12, 12)
    base = assemble_forms(g, unit_materials(g), 4.0)
    half_mu = assemble_forms(g, constant_materials(g, a_mu=0.5, b_mu=0.5), 4.0)
    gam2 = assemble_forms(g, constant_materials(g, a_Gamma=2.0), 4.0)
    phi = rng.standard_normal(base.n)
    assert phi @ (half_mu.A @ phi) == pytest.approx(
        2.0 * (phi @ (base.A @ phi)), rel=1e-12)
    assert gam2.w @ np.abs(phi) ** 4 == pytest.approx(
        16.0 * (base.w @ np.abs(phi) ** 4), rel=1e-12)


def test_volume_measure():
    g = build_grid(1.0, 0.0, 1.0, 64, 64)
    forms = assemble_forms(g, unit_materials(g), 4.0)
    # 2*pi*int_0^1 r dr * 1 = pi (midpoint rule over interior nodes)
    assert forms.mu_omega == pytest.approx(np.pi, rel=0.05)


def test_nonfinite_input_rejected(small_forms_p4):
    bad = np.full(small_forms_p4.n, np.nan)
    with pytest.raises(ValueError):
        evaluate_J(small_forms_p4, 0.0, bad)
    with pytest.raises(ValueError):
        evaluate_dJ(small_forms_p4, 0.0, bad)


def test_exponent_range_enforced():
    g = build_grid(1.0, 0.0, 1.0, 8, 8)
    with pytest.raises(ValueError):
        assemble_forms(g, unit_materials(g), 2.0)
    with pytest.raises(ValueError):
        assemble_forms(g, unit_materials(g), 6.5)
