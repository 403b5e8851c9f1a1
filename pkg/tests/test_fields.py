"""Grid fields: transforms, norms, calculus, projection, rotation."""

import numpy as np
import pytest

from tposeen.errors import ConfigError, DomainApproximationError, GridMismatchError
from tposeen.fields import (
    Field,
    check_safe_support,
    cross_e1,
    curl,
    dealias,
    dilate,
    divergence,
    gradient,
    helmholtz_project,
    inverse_transform,
    l2_inner,
    laplacian,
    lq_norm,
    partial_deriv,
    read_field,
    rotate_about_e1,
    rotation_term,
    scalar_field,
    support_mass_fraction,
    transform,
    vec_field,
    write_field,
    zero_field,
)
from tposeen.grid import BoxGrid

GRID = BoxGrid(16, 8.0)


def random_field(rng, grid=GRID, ncomp=3, real=False):
    shape = (ncomp,) + (grid.n,) * 3
    data = rng.standard_normal(shape)
    if not real:
        data = data + 1j * rng.standard_normal(shape)
    return Field(data, grid)


def plane_wave(grid, m, ncomp=3, comp=0):
    """exp(i xi . x) in one component, xi = 2 pi m / L."""
    xi = 2 * np.pi * np.asarray(m, dtype=float) / grid.length
    x = grid.coords
    phase = np.exp(1j * (xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2]))
    data = np.zeros((ncomp,) + (grid.n,) * 3, dtype=complex)
    data[comp] = phase
    return Field(data, grid), xi


# ---------------------------------------------------------------------------
# grid sanity


def test_grid_validation():
    with pytest.raises(ConfigError):
        BoxGrid(7, 8.0)
    with pytest.raises(ConfigError):
        BoxGrid(2, 8.0)
    with pytest.raises(ConfigError):
        BoxGrid(16, -1.0)


def test_grid_geometry():
    assert GRID.spacing == pytest.approx(0.5)
    assert GRID.volume == pytest.approx(512.0)
    assert GRID.cell_volume == pytest.approx(0.125)
    assert GRID.safe_radius == pytest.approx(3.6)
    x = GRID.axis_coords
    assert x.min() == pytest.approx(-4.0)
    assert 0.0 in x


# ---------------------------------------------------------------------------
# transforms


def test_transform_round_trip():
    u = random_field(np.random.default_rng(0))
    back = inverse_transform(transform(u))
    assert np.allclose(back.data, u.data, atol=1e-13)


def test_plane_wave_has_unit_coefficient():
    u, _ = plane_wave(GRID, (2, -1, 3))
    block = transform(u).coeffs[0]
    ijk = np.unravel_index(np.argmax(np.abs(block)), block.shape)
    found = tuple(int(GRID.mode_numbers[a].ravel()[ijk[a]]) for a in range(3))
    assert found == (2, -1, 3)
    assert block[ijk] == pytest.approx(1.0, abs=1e-12)
    block[ijk] = 0.0
    assert np.max(np.abs(block)) < 1e-12


def test_parseval():
    u = random_field(np.random.default_rng(1))
    spec = transform(u)
    lhs = lq_norm(u, 2) ** 2
    rhs = GRID.volume * np.sum(np.abs(spec.coeffs) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


# ---------------------------------------------------------------------------
# norms and inner products


def test_lq_norm_indicator():
    # indicator of half the box: norm (V/2)^(1/q)
    x = GRID.coords
    data = np.zeros((1,) + (GRID.n,) * 3)
    data[0] = (x[0] < 0).astype(float)
    u = Field(data, GRID)
    for q in (1.0, 1.25, 2.0, 5.0):
        assert lq_norm(u, q) == pytest.approx((GRID.volume / 2) ** (1 / q), rel=1e-13)


def test_lq_norm_gaussian_l2():
    # integral of exp(-2|x|^2) over R^3 is (pi/2)^(3/2); box big enough
    # that the tail is negligible
    grid = BoxGrid(64, 20.0)
    x = grid.coords
    r2 = x[0] ** 2 + x[1] ** 2 + x[2] ** 2
    u = Field(np.exp(-r2)[np.newaxis], grid)
    assert lq_norm(u, 2) == pytest.approx((np.pi / 2) ** 0.75, rel=1e-6)


def test_lq_norm_homogeneity_and_sup():
    u = random_field(np.random.default_rng(2))
    assert lq_norm(u * (-2.5), 1.7) == pytest.approx(2.5 * lq_norm(u, 1.7))
    mags = np.sqrt(np.sum(np.abs(u.data) ** 2, axis=0))
    assert lq_norm(u, np.inf) == pytest.approx(mags.max())
    with pytest.raises(ConfigError):
        lq_norm(u, 0.5)


def test_l2_inner_matches_norm_and_conjugation():
    rng = np.random.default_rng(3)
    u = random_field(rng)
    v = random_field(rng)
    assert l2_inner(u, u).real == pytest.approx(lq_norm(u, 2) ** 2, rel=1e-12)
    assert l2_inner(u, v) == pytest.approx(np.conj(l2_inner(v, u)))


# ---------------------------------------------------------------------------
# calculus on plane waves


def test_partial_deriv_plane_wave():
    u, xi = plane_wave(GRID, (1, 2, -2))
    for axis in range(3):
        d = partial_deriv(u, axis)
        assert np.allclose(d.data, 1j * xi[axis] * u.data, atol=1e-12)


def test_gradient_layout_and_laplacian():
    u, xi = plane_wave(GRID, (3, -1, 1), ncomp=1)
    g = gradient(u)
    assert g.ncomp == 3
    for axis in range(3):
        assert np.allclose(g.data[axis], 1j * xi[axis] * u.data[0], atol=1e-12)
    lap = laplacian(u)
    assert np.allclose(lap.data, -np.dot(xi, xi) * u.data, atol=1e-11)


def test_divergence_of_gradient_is_laplacian():
    u = random_field(np.random.default_rng(4), ncomp=1)
    lhs = divergence(gradient(u))
    rhs = laplacian(u)
    assert np.allclose(lhs.data, rhs.data, atol=1e-10)


def test_curl_is_divergence_free():
    u = random_field(np.random.default_rng(5))
    d = divergence(curl(u))
    assert lq_norm(d, 2) < 1e-10 * lq_norm(u, 2)


def test_cross_e1():
    # e1 x u = (0, -u3, u2)
    u = random_field(np.random.default_rng(6))
    c = cross_e1(u)
    assert np.allclose(c.data[0], 0.0)
    assert np.allclose(c.data[1], -u.data[2])
    assert np.allclose(c.data[2], u.data[1])


# ---------------------------------------------------------------------------
# Helmholtz projection


def test_helmholtz_plane_waves():
    # transverse wave passes through, gradient dies
    u, xi = plane_wave(GRID, (1, 0, 0), comp=1)  # e2 * exp(i xi1 x1)
    p = helmholtz_project(u)
    assert np.allclose(p.data, u.data, atol=1e-12)
    grad = gradient(plane_wave(GRID, (2, 1, -1), ncomp=1)[0])
    killed = helmholtz_project(grad)
    assert lq_norm(killed, 2) < 1e-12 * lq_norm(grad, 2)


def test_helmholtz_idempotent_orthogonal_divfree():
    u = random_field(np.random.default_rng(7))
    p = helmholtz_project(u)
    again = helmholtz_project(p)
    scale = lq_norm(u, 2)
    assert lq_norm(again - p, 2) < 1e-12 * scale
    assert lq_norm(divergence(p), 2) < 1e-10 * scale
    resid = u - p
    assert abs(l2_inner(p, resid)) < 1e-11 * scale**2


def test_helmholtz_keeps_mean():
    # xi = 0 has no direction to project out
    u = Field(np.ones((3, GRID.n, GRID.n, GRID.n)), GRID)
    p = helmholtz_project(u)
    assert np.allclose(p.data, u.data, atol=1e-13)


# ---------------------------------------------------------------------------
# support guards


def gaussian_bump(grid, width=0.8, ncomp=3):
    x = grid.coords
    r2 = x[0] ** 2 + x[1] ** 2 + x[2] ** 2
    prof = np.exp(-r2 / (2 * width**2))
    return Field(np.broadcast_to(prof, (ncomp,) + prof.shape).copy(), grid)


def test_support_mass_fraction():
    u = gaussian_bump(GRID, width=0.5)
    assert support_mass_fraction(u) < 1e-12
    wide = gaussian_bump(GRID, width=3.0)
    assert support_mass_fraction(wide) > 1e-3
    check_safe_support(u)
    with pytest.raises(DomainApproximationError):
        check_safe_support(wide)


# ---------------------------------------------------------------------------
# rotation term


def test_rotation_term_constant_field():
    # swirl derivative of a constant vanishes; only -e1 x u survives
    u = Field(np.zeros((3, GRID.n, GRID.n, GRID.n)), GRID)
    u.data[0] = 1.0
    r = rotation_term(u, check_support=False)
    assert lq_norm(r, 2) < 1e-12

    u.data[:] = 0.0
    u.data[1] = 1.0  # e2: swirl kills it, -e1 x e2 = -e3
    r = rotation_term(u, check_support=False)
    assert np.allclose(r.data[2], -1.0, atol=1e-12)
    assert np.abs(r.data[:2]).max() < 1e-12


def test_rotation_term_axisymmetric_scalar_profile():
    # axisymmetric scalar times e1 is in the kernel of the full term
    # needs both a fine grid (spectrally clean gradient) and a tight profile
    # (periodic images break the symmetry at the level of the tail mass)
    grid = BoxGrid(48, 8.0)
    prof = np.exp(-2.0 * grid.radius_sq)
    u = Field(np.stack([prof, np.zeros_like(prof), np.zeros_like(prof)]), grid)
    r = rotation_term(u)
    assert lq_norm(r, 2) < 1e-10 * lq_norm(u, 2)


@pytest.mark.parametrize("seed", range(4))
def test_rotation_term_antisymmetry(seed):
    # <rot u, u> is purely imaginary for real fields; the coordinate weights
    # multiply axes the derivatives do not touch, so the identity is exact on
    # the discrete torus (independent of the support guard)
    u = random_field(np.random.default_rng(20 + seed), real=True)
    r = rotation_term(u, check_support=False)
    g = gradient(u)
    h1 = lq_norm(u, 2) ** 2 + lq_norm(g, 2) ** 2
    assert abs(l2_inner(r, u).real) <= 1e-10 * h1


def test_rotation_term_support_guard():
    wide = gaussian_bump(GRID, width=3.0)
    with pytest.raises(DomainApproximationError):
        rotation_term(wide)
    rotation_term(wide, check_support=False)  # explicit opt-out works


# ---------------------------------------------------------------------------
# rotations about e1


def smooth_bump(grid, rng, width=0.9):
    """Localized smooth field: Gaussian envelope times low modes."""
    x = grid.coords
    env = np.exp(-grid.radius_sq / (2 * width**2))
    k = 2 * np.pi / grid.length
    data = np.empty((3,) + (grid.n,) * 3)
    for c in range(3):
        a, b, cc = rng.standard_normal(3)
        mod = a * np.cos(k * x[0]) + b * np.sin(k * x[1]) + cc * np.cos(2 * k * x[2])
        data[c] = env * mod
    return Field(data, grid)


def test_rotate_angle_zero_is_identity():
    # with masking off, angle 0 reduces to FFT round trips
    u = random_field(np.random.default_rng(9), real=True)
    ident = rotate_about_e1(u, 0.0, mask_corners=False)
    assert np.allclose(ident.data, u.data, atol=1e-12)


def test_rotate_composition():
    # envelope tail at the corner-mask boundary sets the floor, keep it tight
    grid = BoxGrid(32, 8.0)
    u = smooth_bump(grid, np.random.default_rng(9), width=0.7)
    a, b = 0.4, 1.1
    two_step = rotate_about_e1(rotate_about_e1(u, a), b)
    one_step = rotate_about_e1(u, a + b)
    diff = lq_norm(two_step - one_step, 2) / lq_norm(u, 2)
    assert diff < 1e-6


def test_rotate_axisymmetric_invariance():
    grid = BoxGrid(32, 8.0)
    x = grid.coords
    rho2 = x[1] ** 2 + x[2] ** 2
    prof = np.exp(-(x[0] ** 2) - 1.3 * rho2)
    u = Field(prof[np.newaxis], grid)
    moved = rotate_about_e1(u, 0.7, rotate_components=False)
    assert lq_norm(moved - u, 2) < 1e-8 * lq_norm(u, 2)


# ---------------------------------------------------------------------------
# misc


def test_dealias_kills_high_modes():
    u, _ = plane_wave(GRID, (7, 0, 0))  # beyond 16//3 = 5
    cut = dealias(u)
    assert lq_norm(cut, 2) < 1e-13
    low, _ = plane_wave(GRID, (3, 1, 0))
    kept = dealias(low)
    assert np.allclose(kept.data, low.data, atol=1e-12)


def test_dilate_gaussian():
    # dilate(u, f) samples u(f x): factor 1/2 doubles the width
    grid = BoxGrid(32, 8.0)
    u = Field(np.exp(-grid.radius_sq / (2 * 0.6**2))[np.newaxis], grid)
    wide = dilate(u, 0.5)
    expected = np.exp(-grid.radius_sq / (2 * 1.2**2))
    assert np.allclose(wide.data[0], expected, atol=1e-6)


def test_field_io_round_trip(tmp_path):
    u = random_field(np.random.default_rng(10))
    path = tmp_path / "field.tpf"
    write_field(u, str(path))
    back = read_field(str(path))
    assert back.grid == u.grid
    assert np.array_equal(back.data, u.data)


def test_component_mismatch_raises():
    u = random_field(np.random.default_rng(11), ncomp=2)
    with pytest.raises(GridMismatchError):
        divergence(u)
    v = random_field(np.random.default_rng(12), ncomp=3)
    with pytest.raises(GridMismatchError):
        v + random_field(np.random.default_rng(13), grid=BoxGrid(16, 9.0))


def test_constructors():
    z = zero_field(GRID, 4)
    assert z.ncomp == 4 and lq_norm(z, 2) == 0.0
    s = scalar_field(np.ones((GRID.n,) * 3), GRID)
    assert s.ncomp == 1
    v = vec_field(np.ones((3,) + (GRID.n,) * 3), GRID)
    assert v.ncomp == 3
