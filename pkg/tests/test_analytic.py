import cmath

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import superlens.analytic as an
from superlens.errors import DegenerateModeError, ResonanceError
from superlens.experiment import PARAMETER_ROWS
from superlens.spectral import SceneParameters, mode_wavenumbers, slab_wavenumbers

media = st.builds(complex, st.floats(-20, 20), st.floats(0, 2)).filter(lambda z: abs(z) > 1e-2)
perm = st.builds(complex, st.floats(-3, 3), st.floats(0, 1)).filter(lambda z: abs(z) > 1e-2)
ORACLE_DPS = 30


def det4(A):
    return np.linalg.det(np.array(A, dtype=complex))


def test_rho_examples():
    p = SceneParameters()
    k = p.kappa
    rho = an.boundary_source_rho(p)
    assert rho == pytest.approx(-2j * k * cmath.exp(-1j * k * 0.2))
    assert abs(rho) == pytest.approx(11.4240, abs=5e-5)
    q = SceneParameters(a=0.05, b=0.7)
    assert abs(an.boundary_source_rho(q)) == pytest.approx(2 * k, rel=1e-15)


@given(media, perm, st.integers(0, 12))
def test_phi_matches_dense_determinant(eps, mu, n):
    p = SceneParameters(eps=eps, mu=mu)
    phi = an.interface_determinant_phi(n, p)
    d = det4(an.interface_matrix(n, p))
    assert abs(d - phi) <= 1e-12 * max(abs(phi), 1e-300) * 1e3 or abs(d - phi) <= 1e-10 * abs(phi)


@pytest.mark.parametrize("n", range(0, 15))
def test_phi_special_case_magnitudes(n):
    free = SceneParameters()
    beta = mode_wavenumbers(n, free)[1]
    assert abs(an.interface_determinant_phi(n, free)) == pytest.approx(
        4 * abs(beta) ** 2 * abs(cmath.exp(-1j * beta * free.b)), rel=1e-12)
    lens = SceneParameters(eps=-1, mu=-1)
    assert abs(an.interface_determinant_phi(n, lens)) == pytest.approx(
        4 * abs(beta) ** 2 * abs(cmath.exp(1j * beta * (lens.b - 2 * lens.a))), rel=1e-12)


def test_solve_interface_zero_rhs(row_params):
    assert an.solve_interface_system(3, row_params, (0, 0, 0)) == (0, 0, 0, 0)


@given(media, perm)
def test_zeroth_order_closed_form_matches_oracle(eps, mu):
    p = SceneParameters(eps=eps, mu=mu)
    u0 = an.zeroth_order_field(p)
    ref = np.array(an.solve_interface_system(0, p, (p.mu * an.boundary_source_rho(p), 0, 0), dps=ORACLE_DPS))
    cf = np.array([u0.a00, u0.b00, u0.c00, u0.d00])
    assert np.linalg.norm(cf - ref) <= 1e-10 * np.linalg.norm(ref)


@given(media, perm, st.integers(0, 12))
def test_first_order_closed_form_matches_oracle(eps, mu, n):
    p = SceneParameters(eps=eps, mu=mu)
    ref = np.array(an.solve_interface_system(n, p, an.first_order_rhs(n, p, dps=ORACLE_DPS), dps=ORACLE_DPS)[:2])
    cf = np.array(an.first_order_coefficients(n, p))
    assert np.linalg.norm(cf - ref) <= 1e-10 * np.linalg.norm(ref)


def test_free_space_zeroth_order_is_mirror_field():
    p = SceneParameters()
    y = np.linspace(0, p.b, 201)
    u0 = an.zeroth_order_field(p)(y)
    assert np.max(np.abs(u0 - (np.exp(-1j * p.kappa * y) - np.exp(1j * p.kappa * y)))) < 1e-12


def test_zeroth_order_boundary_conditions(row_params):
    p = row_params
    u0 = an.zeroth_order_field(p)
    assert abs(u0(0.0)) < 1e-14
    assert u0.lower_limit(p.a) == pytest.approx(u0.upper_limit(p.a), rel=1e-12)
    # flux: d-u = mu d+u at y = a (lower side scaled by mu)
    h = 1e-6
    dlo = (u0.lower_limit(p.a) - u0.lower_limit(p.a - h)) / h
    dhi = (u0.upper_limit(p.a + h) - u0.upper_limit(p.a)) / h
    assert dhi == pytest.approx(p.mu * dlo, rel=1e-4)


def test_first_order_source_examples():
    p = PARAMETER_ROWS[2]
    v_a, _ = an.first_order_source(5, p, p.a)
    k, eta = p.kappa, an.refractive_wavenumber(p)
    pref = 4 * k * eta * p.mu * an.boundary_source_rho(p) / (p.a * an.interface_determinant_phi(0, p))
    assert v_a == pytest.approx(pref * 2 * k * np.sin(k * p.a), rel=1e-13)
    y = np.linspace(0, p.a, 7)
    v0, _ = an.first_order_source(0, p, y)
    assert np.allclose(v0, pref * 2 * k * np.sin(k * y), rtol=1e-13)


@pytest.mark.parametrize("n", range(13))
def test_psi_closed_form_vs_quadrature(row_params, n):
    cf = an.psi_closed_form(n, row_params)
    assert an.psi_quadrature(n, row_params) == pytest.approx(cf, rel=1e-8)
    assert an.psi_closed_form(-n, row_params) == cf


def test_psi_quadrature_self_convergence():
    p = PARAMETER_ROWS[2]
    for n in (0, 1):  # beta_n real
        assert an.psi_quadrature(n, p, nodes=64) == pytest.approx(an.psi_quadrature(n, p, nodes=128), rel=1e-12)


def test_psi_scales_with_mu_squared():
    p = SceneParameters(eps=4.0, mu=1.0)
    q = SceneParameters(eps=2.0, mu=2.0)  # same eta
    ratio = an.psi_closed_form(3, q) / an.psi_closed_form(3, p)
    expected = 4.0 * an.interface_determinant_phi(0, p) / an.interface_determinant_phi(0, q)
    assert ratio == pytest.approx(expected, rel=1e-12)


def test_upsilon_closure_and_evenness(row_params):
    for n in range(0, 41):
        Y = an.scaling_factor_upsilon(n, row_params)
        assert Y * an.first_order_trace(n, row_params) == pytest.approx(1, rel=1e-12)
        assert an.scaling_factor_upsilon(-n, row_params) == Y
        assert an.first_order_trace(-n, row_params) == an.first_order_trace(n, row_params)


def test_upsilon_closure_against_oracle(row_params):
    p = row_params
    for n in range(13):
        a1, b1, _, _ = an.solve_interface_system(n, p, an.first_order_rhs(n, p, dps=ORACLE_DPS), dps=ORACLE_DPS)
        g = slab_wavenumbers(n, p)[1]
        u1b = a1 * cmath.exp(1j * g * p.b) + b1 * cmath.exp(-1j * g * p.b)
        assert an.scaling_factor_upsilon(n, p) * u1b == pytest.approx(1, rel=1e-12)


def test_upsilon_special_values():
    free = SceneParameters()
    k = free.kappa
    assert abs(an.scaling_factor_upsilon(0, free)) == pytest.approx(1 / (2 * k), rel=1e-12)
    assert 1 / (2 * k) == pytest.approx(0.08754, abs=1e-5)
    for n in range(1, 41):
        beta = mode_wavenumbers(n, free)[1]
        assert abs(an.scaling_factor_upsilon(n, free)) == pytest.approx(np.exp(abs(beta) * free.b) / (2 * k),
                                                                        rel=1e-12)
    lens = SceneParameters(eps=-1, mu=-1)
    for n in range(41):
        assert abs(an.scaling_factor_upsilon(n, lens)) == pytest.approx(1 / (2 * k), rel=1e-12)


def test_upsilon_scan_shapes():
    t = an.upsilon_scan(40, list(PARAMETER_ROWS.values()))
    assert t.values.shape == (5, 41) and not t.skipped
    free, dense, lens, imp1, imp2 = t.values
    assert np.all(np.diff(free[1:]) > 0)
    assert np.max(lens) <= (1 + 1e-12) * lens[0]
    # imperfect lens: flat at first, then exponential growth
    assert imp1[5] < 2 * imp1[0] and imp1[40] > 1e3 * imp1[0]
    lines = t.to_csv().splitlines()
    assert len(lines) == 42 and lines[0].startswith("n,")


def test_degenerate_mode_skipped():
    # wavelength equal to the period makes beta_1 vanish
    p = SceneParameters(wavelength=1.0)
    with pytest.raises(DegenerateModeError):
        an.scaling_factor_upsilon(1, p)
    t = an.upsilon_scan(3, [p])
    assert np.isnan(t.values[0, 1]) and t.skipped[0][:2] == (0, 1)


def test_resonance_detected(monkeypatch):
    monkeypatch.setattr(an, "interface_determinant_phi", lambda n, p: 0j)
    with pytest.raises(ResonanceError):
        an.zeroth_order_field(SceneParameters())


def test_global_sign_of_phi_cancels(monkeypatch):
    p = PARAMETER_ROWS[4]
    before = [an.scaling_factor_upsilon(n, p) for n in range(11)]
    orig = an.interface_determinant_phi
    monkeypatch.setattr(an, "interface_determinant_phi", lambda n, q: -orig(n, q))
    after = [an.scaling_factor_upsilon(n, p) for n in range(11)]
    assert after == before
