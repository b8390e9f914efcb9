import math

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from superlens.analytic import first_order_trace, zeroth_order_field
from superlens.errors import ConditioningError
from superlens.experiment import PARAMETER_ROWS
from superlens.forward import (LOSS_FALLBACK, Grid, assemble_system, dtn_symbol, read_field_binary,
                               read_trace_csv, solve_total_field, trace_on_gamma_b, transformed_coefficients,
                               trigonometric_interpolation, write_field_binary, write_trace_csv)
from superlens.measurement import sample_measurements
from superlens.profiles import Profile, smooth_profile, tent_profile
from superlens.spectral import SceneParameters, mode_wavenumbers

FLAT = smooth_profile(0.0)


def test_grid_validation_and_layout():
    g = Grid(16, 5, 7)
    assert g.levels == 11 and g.interface_level == 4 and g.max_mode == 7
    p = SceneParameters()
    y = g.y(p)
    assert y[g.interface_level] == p.a and y[-1] == p.b and y.size == g.levels
    with pytest.raises(ValueError):
        Grid(15)
    with pytest.raises(ValueError):
        Grid(16, 2, 5)


def test_transformed_coefficients_flat():
    p = SceneParameters()
    c = transformed_coefficients(FLAT, p, Grid(16, 9, 9))
    assert np.all(c.c1 == p.a**2) and np.all(c.c2 == p.a**2)
    assert np.all(c.c3 == 0) and np.all(c.c4 == 0)


def test_transformed_coefficients_examples():
    p = SceneParameters()
    d = 0.01
    prof = Profile("cosine", ((1, 1.0),), d)
    c = transformed_coefficients(prof, p, Grid(16, 9, 9))
    assert c.c1[0, 0] == pytest.approx((p.a - d) ** 2, rel=1e-14)
    assert c.c3[0, 0] == 0
    # top row y = a: the (a - y) factors vanish
    assert np.allclose(c.c2[-1], p.a**2, rtol=1e-15) and np.all(c.c3[-1] == 0) and np.all(c.c4[-1] == 0)


def test_surface_reaching_slab_rejected():
    with pytest.raises(ValueError):
        assemble_system(smooth_profile(0.2), SceneParameters(), Grid(16, 9, 9))


def test_row_count_and_block_structure(small_grid):
    sys = assemble_system(smooth_profile(0.01), PARAMETER_ROWS[2], small_grid)
    n = small_grid.nx * (small_grid.ny_omega + small_grid.ny_slab - 1)
    assert sys.n_rows == n and sys.to_sparse().shape == (n, n)
    assert np.array_equal(sys.diag[0], np.eye(small_grid.nx)) and not np.any(sys.upper[0])


def test_dtn_symbol():
    p = SceneParameters()
    sym = dtn_symbol(p, 16)
    assert sym[8] == 0
    for n in (0, 1, 7, -7):
        assert sym[n % 16] == pytest.approx(1j * mode_wavenumbers(n, p)[1])


@pytest.mark.parametrize("row", [1, 2, 4])
def test_twisted_solve_matches_sparse_direct(row):
    p = PARAMETER_ROWS[row]
    grid = Grid(32, 17, 17)
    prof = smooth_profile(0.01)
    fld = solve_total_field(prof, p, grid)
    sys = assemble_system(prof, p, grid)
    ref = spla.spsolve(sys.to_sparse().tocsc(), sys.rhs.ravel()).reshape(sys.rhs.shape)
    assert np.max(np.abs(fld.values - ref)) < 1e-11 * np.max(np.abs(ref))
    assert fld.info.residual < 1e-10


def test_dirichlet_row_exact(small_grid):
    fld = solve_total_field(tent_profile(), PARAMETER_ROWS[2], small_grid)
    assert np.all(fld.values[0] == 0)


@pytest.mark.parametrize("p", [PARAMETER_ROWS[1], PARAMETER_ROWS[2], PARAMETER_ROWS[3], PARAMETER_ROWS[5]],
                         ids=["free", "dense", "lens", "lossy"])
def test_flat_convergence_order_two(p):
    u0 = zeroth_order_field(p)
    errs = []
    for ny in (33, 65, 129):
        fld = solve_total_field(FLAT, p, Grid(8, ny, ny))
        errs.append(np.max(np.abs(fld.values - u0(fld.y)[:, None])))
        assert np.ptp(np.abs(fld.trace)) < 1e-12  # flat trace constant in x
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(abs(o - 2) < 0.2 for o in orders), orders


def test_free_space_flat_field_is_mirror():
    p = SceneParameters()
    fld = solve_total_field(FLAT, p, Grid(8, 129, 129))
    exact = -2j * np.sin(p.kappa * fld.y)
    assert np.max(np.abs(fld.values - exact[:, None])) < 2e-5


def test_truncation_error_of_operator_is_second_order():
    p = PARAMETER_ROWS[2]
    res = []
    for ny in (33, 65, 129):
        grid = Grid(8, ny, ny)
        sys = assemble_system(FLAT, p, grid)
        u = np.repeat(zeroth_order_field(p)(grid.y(p))[:, None], grid.nx, axis=1)
        res.append(np.max(np.abs(sys.matvec(u) - sys.rhs)))
    # rows carry h^2 (bulk) or h (interface, top) scaling, so the residual drops faster than h^2
    assert res[0] / res[1] > 3.9 and res[1] / res[2] > 3.9


def test_translation_reciprocity():
    p = PARAMETER_ROWS[2]
    grid = Grid(64, 33, 33)
    base = smooth_profile(0.01).projected(12)
    k = 5
    s = k * p.period / grid.nx
    shifted = Profile("fourier", tuple((n, c * np.exp(-2j * np.pi * n * s)) for n, c in base.terms), base.delta)
    t0 = solve_total_field(base, p, grid).trace
    t1 = solve_total_field(shifted, p, grid).trace
    assert np.max(np.abs(np.roll(t0, k) - t1)) < 1e-8


def test_first_order_response_of_superlens():
    p = PARAMETER_ROWS[3]
    prof = smooth_profile(0.01)
    fld = solve_total_field(prof, p, Grid(64, 65, 65))
    modes = fld.trace_modes(10)
    u0b = zeroth_order_field(p)(p.b)
    g = prof.coefficients(10)
    for n in (1, 3, 10):
        lin = prof.delta * g[n] * first_order_trace(n, p)
        assert abs(modes[n] - lin) < 0.05 * abs(lin)
    # u0(b) vanishes for the perfect lens (the mirror at y = 0 is imaged onto y = 2a);
    # what remains at modes absent from g is the O(delta^2) remainder
    assert abs(u0b) < 1e-14
    half = solve_total_field(prof.with_delta(0.005), p, Grid(64, 65, 65)).trace_modes(2)
    for n in (0, 2):
        assert 3.5 < abs(modes[n]) / abs(half[n]) < 4.5


def test_lossless_flat_superlens_is_flagged_and_loss_recovers():
    p = PARAMETER_ROWS[3]
    grid = Grid(128, 33, 33)
    with pytest.raises(ConditioningError) as exc:
        solve_total_field(FLAT, p, grid)
    assert "loss" in str(exc.value)
    fld = solve_total_field(FLAT, p, grid, loss=LOSS_FALLBACK)
    assert fld.info.min_rcond > 1e-14 and fld.info.residual < 1e-10


def test_trace_interpolation_reproduces_nodes():
    p = PARAMETER_ROWS[2]
    fld = solve_total_field(smooth_profile(0.01), p, Grid(200, 17, 17))
    assert np.allclose(fld.trace_at(fld.x), fld.trace, atol=1e-14)
    ms = sample_measurements(fld.trace_at, p, 100)
    assert np.allclose(ms.one_period, fld.trace[::2], atol=1e-13)
    tr = trace_on_gamma_b(fld)
    assert np.array_equal(tr, fld.trace) and tr is not fld.trace


def test_trigonometric_interpolation_odd_length():
    x = np.arange(9) / 9
    s = np.exp(2j * np.pi * 3 * x)
    assert np.allclose(trigonometric_interpolation(s, [0.05]), np.exp(2j * np.pi * 3 * 0.05))


def test_dumps_roundtrip(tmp_path, small_grid):
    p = PARAMETER_ROWS[4]
    fld = solve_total_field(smooth_profile(0.01), p, small_grid)
    write_trace_csv(fld, tmp_path / "t.csv")
    x, u, meta = read_trace_csv(tmp_path / "t.csv")
    assert np.array_equal(u, fld.trace) and np.array_equal(x, fld.x) and meta["params"] == p
    assert meta["grid"] == small_grid.as_dict()
    write_field_binary(fld, tmp_path / "f.bin")
    vals, head = read_field_binary(tmp_path / "f.bin")
    assert np.array_equal(vals, fld.values) and head["nx"] == small_grid.nx and head["b"] == p.b
    (tmp_path / "bad.csv").write_text("x,re_u,im_u\n")
    with pytest.raises(ValueError):
        read_trace_csv(tmp_path / "bad.csv")
