"""Series arithmetic, norms, products and the algebra inequalities."""

import numpy as np
import pytest

from tposeen.errors import ConfigError, GridMismatchError
from tposeen.fields import Field, lq_norm
from tposeen.grid import BoxGrid
from tposeen.torus_series import (
    TorusSeries,
    a_norm,
    conj_symmetry_defect,
    from_mode_dict,
    map_coefficients,
    product,
    project_purely_periodic,
    project_steady,
    read_series,
    scalar_series,
    steady_series,
    time_derivative,
    time_eval,
    time_samples,
    truncate,
    write_series,
    zero_series,
)

GRID = BoxGrid(8, 4.0)


def random_series(rng, k_max, grid=GRID, ncomp=3, decay=0.6):
    shape = (2 * k_max + 1, ncomp) + (grid.n,) * 3
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    weights = decay ** np.abs(np.arange(-k_max, k_max + 1))
    return TorusSeries(coeffs * weights.reshape(-1, 1, 1, 1, 1), grid)


def real_series(rng, k_max, grid=GRID):
    """Conjugate-symmetric draw (real-valued in time)."""
    s = random_series(rng, k_max, grid)
    sym = 0.5 * (s.coeffs + np.conj(s.coeffs[::-1]))
    return TorusSeries(sym, grid)


def riemann_lq(values, q, cell):
    # independent of lq_norm: plain sum over samples
    mag = np.sqrt(np.sum(np.abs(values) ** 2, axis=0))
    return (np.sum(mag**q) * cell) ** (1.0 / q)


# ---------------------------------------------------------------------------
# construction and invariants


def test_even_mode_axis_rejected():
    with pytest.raises(ConfigError):
        TorusSeries(np.zeros((4, 3, 8, 8, 8)), GRID)


def test_scalar_series_needs_1d():
    with pytest.raises(GridMismatchError):
        TorusSeries(np.zeros((3, 3)))


def test_coeff_out_of_window_is_zero():
    s = random_series(np.random.default_rng(0), 1)
    far = s.coeff(5)
    assert np.all(far.data == 0)
    assert scalar_series([1.0, 2.0, 3.0]).coeff(7) == 0j


def test_grid_mismatch_raises():
    a = random_series(np.random.default_rng(0), 1)
    b = random_series(np.random.default_rng(1), 1, grid=BoxGrid(8, 5.0))
    with pytest.raises(GridMismatchError):
        a + b


# ---------------------------------------------------------------------------
# a_norm


def test_a_norm_zero_series():
    assert a_norm(zero_series(GRID, 2), 1.25) == 0.0


def test_a_norm_constant_field():
    c = 0.7 - 0.2j
    f = steady_series(Field(np.full((3, 8, 8, 8), c / np.sqrt(3)), GRID))
    for q in (1.25, 2.0, 3.0):
        assert a_norm(f, q) == pytest.approx(abs(c) * GRID.volume ** (1 / q), rel=1e-13)


def test_a_norm_two_modes_against_quadrature():
    rng = np.random.default_rng(3)
    s = random_series(rng, 1)
    s.coeffs[1] = 0.0  # leave modes -1 and +1
    q = 1.4
    expected = riemann_lq(s.coeffs[0], q, GRID.cell_volume) + riemann_lq(
        s.coeffs[2], q, GRID.cell_volume
    )
    assert a_norm(s, q) == pytest.approx(expected, rel=1e-13)


def test_a_norm_scalar_series_sums_moduli():
    s = scalar_series([1 + 1j, 2.0, -3j])
    assert a_norm(s, 2.0) == pytest.approx(np.sqrt(2) + 2 + 3)


# ---------------------------------------------------------------------------
# projections


def test_projections_on_single_modes():
    rng = np.random.default_rng(4)
    f0 = from_mode_dict(GRID, {0: Field(rng.standard_normal((3, 8, 8, 8)), GRID)})
    assert np.array_equal(project_steady(f0).coeffs[0], f0.coeffs[0])
    assert a_norm(project_purely_periodic(f0), 2) == 0.0

    f3 = from_mode_dict(GRID, {3: Field(rng.standard_normal((3, 8, 8, 8)), GRID)})
    assert a_norm(project_steady(f3), 2) == 0.0
    assert a_norm(project_purely_periodic(f3) - f3, 2) == 0.0


def test_steady_part_is_the_time_average():
    rng = np.random.default_rng(5)
    s = random_series(rng, 3)
    nt = 64
    avg = np.mean(time_samples(s, nt), axis=0)
    assert np.allclose(avg, project_steady(s).coeffs[0], atol=1e-13)


def test_decomposition_is_exact():
    s = random_series(np.random.default_rng(6), 2)
    back = project_steady(s) + project_purely_periodic(s)
    assert np.array_equal(back.coeffs, s.coeffs)


# ---------------------------------------------------------------------------
# evaluation and the derivative


def test_time_eval_at_zero_sums_coefficients():
    s = random_series(np.random.default_rng(7), 2)
    assert np.allclose(time_eval(s, 0.0).data, s.coeffs.sum(axis=0), atol=1e-14)


def test_time_derivative_of_steady_vanishes():
    f = steady_series(Field(np.ones((3, 8, 8, 8)), GRID))
    assert a_norm(time_derivative(f), 2) == 0.0


def test_time_derivative_against_finite_differences():
    s = random_series(np.random.default_rng(8), 2)
    t = 0.9
    exact = time_eval(time_derivative(s), t).data
    errs = []
    for h in (1e-2, 5e-3):
        diff = (time_eval(s, t + h).data - time_eval(s, t - h).data) / (2 * h)
        errs.append(np.max(np.abs(diff - exact)))
    assert errs[0] < 1e-3
    # halving h quarters the error (second order)
    assert errs[1] == pytest.approx(errs[0] / 4.0, rel=0.05)


# ---------------------------------------------------------------------------
# products


def test_product_identity_element():
    g = random_series(np.random.default_rng(9), 2)
    one = steady_series(Field(np.ones((1, 8, 8, 8)), GRID))
    prod = product(one, g)
    assert a_norm(prod - truncate(g, prod.k_max), 2) < 1e-14


def test_product_single_modes_add_exponents():
    rng = np.random.default_rng(10)
    a = Field(rng.standard_normal((3, 8, 8, 8)), GRID)
    b = Field(rng.standard_normal((3, 8, 8, 8)), GRID)
    f = from_mode_dict(GRID, {1: a})
    g = from_mode_dict(GRID, {2: b})
    prod = product(f, g)
    assert prod.k_max == 3
    for k in prod.modes():
        if k != 3:
            assert lq_norm(prod.coeff(k), 2) == 0.0
    assert np.allclose(prod.coeff(3).data, a.data * b.data)


def test_product_matches_time_sampling():
    rng = np.random.default_rng(11)
    f = random_series(rng, 2, ncomp=1)
    g = random_series(rng, 2, ncomp=1)
    prod = product(f, g)
    nt = 32
    direct = time_samples(f, nt) * time_samples(g, nt)
    assert np.allclose(time_samples(prod, nt), direct, atol=1e-12)


def test_scalar_series_product_is_commutative_and_associative():
    rng = np.random.default_rng(12)
    a = scalar_series(rng.standard_normal(3) + 1j * rng.standard_normal(3))
    b = scalar_series(rng.standard_normal(5) + 1j * rng.standard_normal(5))
    c = scalar_series(rng.standard_normal(3) + 1j * rng.standard_normal(3))
    ab = product(a, b)
    ba = product(b, a)
    assert np.allclose(ab.coeffs, ba.coeffs)
    left = product(product(a, b), c)
    right = product(a, product(b, c))
    assert np.allclose(left.coeffs, right.coeffs, atol=1e-13)


def test_dot_product_contracts_components():
    rng = np.random.default_rng(13)
    f = random_series(rng, 1)
    g = random_series(rng, 1)
    dot = product(f, g, combine="dot")
    assert dot.ncomp == 1
    nt = 16
    direct = np.sum(time_samples(f, nt) * time_samples(g, nt), axis=1, keepdims=True)
    assert np.allclose(time_samples(dot, nt), direct, atol=1e-12)


def test_product_preserves_reality():
    rng = np.random.default_rng(14)
    f = real_series(rng, 2)
    g = real_series(rng, 1)
    assert conj_symmetry_defect(f) < 1e-15
    prod = product(f, g)
    scale = np.abs(prod.coeffs).max()
    assert conj_symmetry_defect(prod) < 1e-14 * scale
    assert conj_symmetry_defect(time_derivative(f)) < 1e-15


# ---------------------------------------------------------------------------
# algebra inequalities (property tests; the acceptance suite runs the
# full-count corpus)


@pytest.mark.parametrize("seed", range(8))
def test_holder_inequality(seed):
    rng = np.random.default_rng(100 + seed)
    p, q = rng.uniform(2.2, 6.0, size=2)
    r = p * q / (p + q)
    f = random_series(rng, int(rng.integers(1, 3)))
    g = random_series(rng, int(rng.integers(1, 3)))
    lhs = a_norm(product(f, g), r)
    rhs = a_norm(f, p) * a_norm(g, q)
    assert lhs <= rhs * (1 + 1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_interpolation_inequality(seed):
    rng = np.random.default_rng(200 + seed)
    theta = rng.uniform(0.2, 0.8)
    p, q = sorted(rng.uniform(1.2, 6.0, size=2))
    r = 1.0 / ((1 - theta) / p + theta / q)
    f = random_series(rng, 2)
    lhs = a_norm(f, r)
    rhs = a_norm(f, p) ** (1 - theta) * a_norm(f, q) ** theta
    assert lhs <= rhs * (1 + 1e-12)


def test_holder_equality_single_mode():
    # |g|^q proportional to |f|^p makes Holder an equality; single
    # component so the pointwise magnitude is just the modulus
    rng = np.random.default_rng(15)
    p, q = 3.0, 2.0
    r = p * q / (p + q)
    mag = np.abs(rng.standard_normal((1, 8, 8, 8))) + 0.1
    f = from_mode_dict(GRID, {1: Field(mag, GRID)}, ncomp=1)
    g = from_mode_dict(GRID, {2: Field(mag ** (p / q), GRID)}, ncomp=1)
    lhs = a_norm(product(f, g), r)
    rhs = a_norm(f, p) * a_norm(g, q)
    assert abs(lhs - rhs) <= 1e-12 * rhs


def test_interpolation_equality_single_mode():
    # constant modulus makes every L^q norm the same power of the volume
    f = from_mode_dict(GRID, {2: Field(np.full((3, 8, 8, 8), 1 / np.sqrt(3)), GRID)})
    p, q, theta = 1.5, 4.0, 0.3
    r = 1.0 / ((1 - theta) / p + theta / q)
    lhs = a_norm(f, r)
    rhs = a_norm(f, p) ** (1 - theta) * a_norm(f, q) ** theta
    assert abs(lhs - rhs) <= 1e-12 * rhs


# ---------------------------------------------------------------------------
# window management and serialization


def test_truncate_widens_and_narrows():
    s = random_series(np.random.default_rng(16), 2)
    wide = truncate(s, 4)
    assert wide.k_max == 4
    assert a_norm(wide, 2) == pytest.approx(a_norm(s, 2))
    back = truncate(wide, 2)
    assert np.array_equal(back.coeffs, s.coeffs)


def test_map_coefficients_with_mode():
    s = random_series(np.random.default_rng(17), 1)
    doubled = map_coefficients(s, lambda k, f: f * (1j * k), with_mode=True)
    assert np.array_equal(doubled.coeffs, time_derivative(s).coeffs)


def test_series_io_round_trip(tmp_path):
    s = random_series(np.random.default_rng(18), 2)
    path = tmp_path / "series.tps"
    write_series(s, str(path))
    back = read_series(str(path))
    assert back.grid == s.grid
    assert np.array_equal(back.coeffs, s.coeffs)
