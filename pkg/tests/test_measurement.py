import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from superlens.analytic import zeroth_order_field
from superlens.experiment import PARAMETER_ROWS
from superlens.measurement import (RNG_ALGORITHM, MeasurementSet, apply_noise, noise_factors, read_measurements,
                                   sample_measurements, write_measurements)
from superlens.spectral import SceneParameters


def wavy(x):
    x = np.asarray(x)
    return (1 + 0.3j) + 0.2 * np.exp(2j * np.pi * x) - 0.05j * np.exp(-6j * np.pi * x)


@pytest.fixture
def clean():
    return sample_measurements(wavy, PARAMETER_ROWS[3], 100)


def test_sampling_layout(clean):
    assert clean.samples.shape == (101,) and clean.one_period.shape == (100,)
    assert clean.samples[-1] == clean.samples[0]
    assert clean.x[-1] == 1.0 and clean.x[1] == 0.01
    assert clean.noiseless and clean.noise_level == 0
    with pytest.raises(ValueError):
        clean.samples[0] = 0


def test_flat_surface_samples_equal_u0():
    p = SceneParameters(eps=16)
    u0b = zeroth_order_field(p)(p.b)
    ms = sample_measurements(lambda x: np.full(np.shape(x), u0b), p)
    assert np.all(ms.samples == u0b)


def test_sample_count_mismatch_rejected():
    with pytest.raises(ValueError):
        MeasurementSet(np.ones(10), 100, SceneParameters())


def test_noise_zero_is_identity(clean):
    out = apply_noise(clean, 0.0, 3)
    assert np.array_equal(out.samples, clean.samples) and out.noiseless


def test_noise_deterministic_per_seed(clean):
    a, b, c = apply_noise(clean, 0.05, 11), apply_noise(clean, 0.05, 11), apply_noise(clean, 0.05, 12)
    assert np.array_equal(a.samples, b.samples) and not np.array_equal(a.samples, c.samples)
    assert a.rng["algorithm"] == RNG_ALGORITHM and a.seed == 11 and not a.noiseless


@given(st.floats(0, 0.5), st.integers(0, 2**32 - 1))
def test_noise_bound_and_phase(level, seed):
    ms = sample_measurements(wavy, SceneParameters(), 100)
    noisy = apply_noise(ms, level, seed)
    ratio = noisy.samples / ms.samples
    assert np.max(np.abs(ratio - 1)) <= level + 1e-15
    assert np.allclose(ratio.imag, 0, atol=1e-15)  # real multiplier: phase unchanged
    assert np.allclose(np.angle(noisy.samples), np.angle(ms.samples), atol=1e-14)


def test_noise_mean_within_three_sigma():
    r = noise_factors(10**5, 0.05, 2024) - 1
    sigma = 0.05 / np.sqrt(3) / np.sqrt(r.size)
    assert abs(r.mean()) < 3 * sigma
    assert r.min() >= -0.05 and r.max() <= 0.05


def test_noise_rejects_negative_level(clean):
    with pytest.raises(ValueError):
        apply_noise(clean, -0.1)


def test_csv_roundtrip(tmp_path, clean):
    noisy = apply_noise(clean, 0.05, 7)
    write_measurements(noisy, tmp_path / "m.csv")
    back = read_measurements(tmp_path / "m.csv")
    assert np.array_equal(back.samples, noisy.samples)
    assert (back.M, back.seed, back.noise_level, back.noiseless) == (100, 7, 0.05, False)
    assert back.params == noisy.params and back.rng == noisy.rng
    text = (tmp_path / "m.csv").read_text().splitlines()
    assert text[0] == "# superlens-measurement v1" and "m,x,re_u,im_u" in text


def test_csv_requires_header(tmp_path):
    (tmp_path / "m.csv").write_text("m,x,re_u,im_u\n0,0.0,1.0,0.0\n")
    with pytest.raises(ValueError):
        read_measurements(tmp_path / "m.csv")
