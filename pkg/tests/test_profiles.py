import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from superlens.profiles import Profile, boxcar_profile, smooth_profile, tent_profile
from superlens.spectral import fourier_coefficients


def numeric_coefficients(profile, n_max, M=2**16):
    x = np.arange(M) / M
    return fourier_coefficients(profile.g(x), n_max)


@pytest.mark.parametrize("make", [smooth_profile, tent_profile, boxcar_profile])
def test_exact_coefficients_match_quadrature(make):
    prof = make()
    exact = prof.coefficients(25)
    num = numeric_coefficients(prof, 25)
    # boxcar jumps limit the rectangle rule to O(1/M)
    tol = 1e-4 if prof.kind == "boxcar" else 1e-8
    assert np.max(np.abs(exact.values - num.values)) < tol


def test_smooth_profile_half_amplitudes():
    c = smooth_profile(0.01).coefficients(10)
    assert (c[1], c[3], c[10]) == (0.2, 0.15, 0.1)
    assert c[-10] == 0.1 and c[2] == 0 and c[0] == 0


def test_tent_and_boxcar_shapes():
    t, b = tent_profile(), boxcar_profile()
    assert t.g(np.array([0.3, 0.7, 0.2, 0.5]))[:2] == pytest.approx([1, 1])
    assert t.g(np.array([0.25]))[0] == pytest.approx(0.5)
    assert b.g(np.array([0.1, 0.3, 0.5, 0.7, 0.9])) == pytest.approx([0, 1, 0, 1, 0])
    assert not t.is_smooth and not b.is_smooth and smooth_profile().is_smooth
    assert b.max_abs_g() == 1.0


def test_derivatives_of_cosine_profile():
    prof = smooth_profile(1.0)
    x = np.linspace(0, 1, 50)
    h = 1e-5
    assert np.allclose(prof.dg(x), (prof.g(x + h) - prof.g(x - h)) / (2 * h), atol=1e-4)
    assert np.allclose(prof.d2g(x), (prof.dg(x + h) - prof.dg(x - h)) / (2 * h), atol=1e-2)


@given(st.integers(1, 40))
def test_projection_keeps_low_modes(n_max):
    prof = tent_profile()
    proj = prof.projected(n_max)
    assert proj.is_smooth
    c, cp = prof.coefficients(n_max + 3), proj.coefficients(n_max + 3)
    assert np.allclose(cp.values[3:-3], c.values[3:-3], atol=1e-15)
    assert np.all(cp.values[:3] == 0) and np.all(cp.values[-3:] == 0)


@pytest.mark.parametrize("prof", [smooth_profile(0.02), tent_profile(), boxcar_profile(),
                                  tent_profile().projected(8)])
def test_dict_roundtrip(prof):
    back = Profile.from_dict(prof.as_dict())
    x = np.linspace(0, 1, 97)
    assert back.kind == prof.kind and back.delta == prof.delta
    assert np.array_equal(back.g(x), prof.g(x))


def test_profile_validation():
    with pytest.raises(ValueError):
        Profile("spline", ())
    with pytest.raises(ValueError):
        smooth_profile(-0.1)
    assert smooth_profile(0.01).with_delta(0.5).f(np.array([0.0]))[0] == pytest.approx(0.45)
