"""Seeded generators for test corpora.

All draws happen over logical mode boxes whose size is fixed by
``mode_cut`` and ``k_max_data``, never by the grid resolution, so the same
seed describes the same continuum field at every resolution (refinement
studies rely on this).  Physical-space windows make the fields exactly
compactly supported inside the safe ball, which coordinate-weighted
operators and the frame rotation require.
"""

import math

import numpy as np

from .errors import ConfigError
from .fields import Field, curl, helmholtz_project, inverse_transform, SpectralField
from .torus_series import TorusSeries


def smoothstep(u, order=7):
    """Polynomial step from 0 to 1 on [0, 1] with ``order`` flat derivatives."""
    u = np.clip(np.asarray(u, dtype=np.float64), 0.0, 1.0)
    total = np.zeros_like(u)
    n = int(order)
    for j in range(n + 1):
        coeff = (-1) ** j * math.comb(n + j, j) * math.comb(2 * n + 1, n - j)
        total += coeff * u ** (n + j + 1)
    return total


def radial_window(grid, plateau, cutoff, order=7, center=None):
    """C^order bump: 1 on ``r <= plateau``, exactly 0 on ``r >= cutoff``."""
    if not (0.0 <= plateau < cutoff):
        raise ConfigError("window needs 0 <= plateau < cutoff")
    if center is None:
        r_sq = grid.radius_sq
    else:
        c1, c2, c3 = center
        r_sq = (
            (grid.coords[0] - c1) ** 2
            + (grid.coords[1] - c2) ** 2
            + (grid.coords[2] - c3) ** 2
        )
    r = np.sqrt(r_sq)
    return 1.0 - smoothstep((r - plateau) / (cutoff - plateau), order)


def annular_window(grid, rise0, rise1, fall0, fall1, order=7):
    """Window that is 1 on [rise1, fall0] and 0 outside (rise0, fall1)."""
    if not (0.0 <= rise0 < rise1 <= fall0 < fall1):
        raise ConfigError("annulus radii must be ordered")
    r = np.sqrt(grid.radius_sq)
    up = smoothstep((r - rise0) / (rise1 - rise0), order)
    down = 1.0 - smoothstep((r - fall0) / (fall1 - fall0), order)
    return up * down


def gaussian_envelope(grid, support_radius=None, content_freq=0.0, center=None):
    """Radial Gaussian whose width balances physical and spectral tails.

    With sigma^2 = R / (xi_nyq - xi_c) both the value at radius R and the
    spectrum at the Nyquist shell (after shifting by the content frequency
    xi_c) are exp(-R (xi_nyq - xi_c) / 2).  This is the right window when a
    field must be simultaneously small outside the safe ball and free of
    near-Nyquist content, e.g. under the frame rotation.
    """
    if support_radius is None:
        support_radius = grid.safe_radius
    xi_nyq = np.pi * grid.n / grid.length
    margin = xi_nyq - content_freq
    if margin <= 0:
        raise ConfigError("content frequency exceeds the Nyquist shell")
    sigma_sq = support_radius / margin
    if center is None:
        r_sq = grid.radius_sq
    else:
        c1, c2, c3 = center
        r_sq = (
            (grid.coords[0] - c1) ** 2
            + (grid.coords[1] - c2) ** 2
            + (grid.coords[2] - c3) ** 2
        )
    return np.exp(-r_sq / (2.0 * sigma_sq))


def _mode_block(grid, rng, ncomp, mode_cut, decay, stride=1):
    """Conjugate-symmetric coefficients on the strided |m|_inf <= cut box.

    Draw order is fixed by (ncomp, mode_cut) alone, so the same seed gives
    the same continuum field at every resolution.
    """
    n = grid.n
    if 2 * mode_cut * stride + 2 > n:
        raise ConfigError("mode_cut %d too large for n=%d" % (mode_cut, n))
    side = 2 * mode_cut + 1
    raw = rng.standard_normal((ncomp, side, side, side, 2))
    block = (raw[..., 0] + 1j * raw[..., 1]).astype(np.complex128)
    ms = stride * np.arange(-mode_cut, mode_cut + 1)
    w = (1.0 + ms[:, None, None] ** 2 + ms[None, :, None] ** 2 + ms[None, None, :] ** 2)
    block *= w ** (-decay / 2.0)
    # symmetrize so the physical field is real
    flipped = np.conj(block[:, ::-1, ::-1, ::-1])
    block = 0.5 * (block + flipped)
    coeffs = np.zeros((ncomp, n, n, n), dtype=np.complex128)
    for i1, m1 in enumerate(ms):
        for i2, m2 in enumerate(ms):
            coeffs[:, m1 % n, m2 % n, :][:, ms % n] = block[:, i1, i2, :]
    return coeffs


def band_limited_field(grid, rng, ncomp=3, mode_cut=2, decay=2.0,
                       divergence_free=False, zero_mean=False, stride=1):
    """Real band-limited periodic field; ``divergence_free`` projects it.

    ``stride=2`` puts all content on even modes, which stays on-grid under
    a coordinate dilation by 2 or 1/2.
    """
    coeffs = _mode_block(grid, rng, ncomp, mode_cut, decay, stride)
    if zero_mean:
        coeffs[:, 0, 0, 0] = 0.0
    field = inverse_transform(SpectralField(coeffs, grid))
    if divergence_free:
        if ncomp != 3:
            raise ConfigError("divergence-free draw needs 3 components")
        field = helmholtz_project(field)
    return field


def _window(grid, profile, mode_cut, plateau, cutoff, order, center):
    if profile == "gauss":
        content_freq = 2.0 * np.pi / grid.length * mode_cut * np.sqrt(3.0)
        return gaussian_envelope(grid, cutoff, content_freq, center)
    if profile == "poly":
        return radial_window(grid, plateau, cutoff, order, center)
    raise ConfigError("unknown window profile %r" % (profile,))


def bump_field(grid, rng, ncomp=3, mode_cut=2, decay=2.0, plateau=None,
               cutoff=None, order=7, divergence_free=False, center=None,
               profile="poly", zero_space_mean=False):
    """Band-limited content under a localized radial window.

    ``profile="poly"`` gives exact compact support with a C^order edge
    (spectral tail around 1e-4 at n=32); ``profile="gauss"`` trades exact
    support for a balanced sub-1e-9 tail on both sides, which rotation and
    dilation tests need.  Divergence-free bumps are built as the curl of a
    windowed vector potential, so they are solenoidal to round-off.
    ``zero_space_mean`` cancels each component's box mean by subtracting a
    multiple of the window itself, keeping the support intact.
    """
    if cutoff is None:
        cutoff = 0.9 * grid.safe_radius
    if plateau is None:
        plateau = 0.4 * cutoff
    window = _window(grid, profile, mode_cut, plateau, cutoff, order, center)
    if divergence_free:
        potential = band_limited_field(grid, rng, 3, mode_cut, decay)
        return curl(Field(potential.data * window, grid))
    content = band_limited_field(grid, rng, ncomp, mode_cut, decay)
    data = content.data * window
    if zero_space_mean:
        means = data.mean(axis=(1, 2, 3))
        data = data - means[:, None, None, None] * (window / window.mean())
    return Field(data, grid)


def bump_series(grid, rng, k_max_data, ncomp=3, mode_cut=2, decay=2.0,
                plateau=None, cutoff=None, order=7, divergence_free=False,
                time_decay=0.5, center=None, purely_periodic=False,
                profile="poly", zero_space_mean=False):
    """Real time-periodic series of bump fields, decaying in |k|.

    Coefficients for k < 0 mirror the conjugates of k > 0, so the series is
    real-valued in time.
    """
    n = grid.n
    nk = 2 * k_max_data + 1
    coeffs = np.zeros((nk, ncomp, n, n, n), dtype=np.complex128)
    for k in range(0, k_max_data + 1):
        f = bump_field(grid, rng, ncomp, mode_cut, decay, plateau, cutoff,
                       order, divergence_free, center, profile, zero_space_mean)
        scale = time_decay ** abs(k)
        if k == 0:
            coeffs[k_max_data] = scale * f.data.real
        else:
            g = bump_field(grid, rng, ncomp, mode_cut, decay, plateau, cutoff,
                           order, divergence_free, center, profile,
                           zero_space_mean)
            c = 0.5 * scale * (f.data.real + 1j * g.data.real)
            coeffs[k_max_data + k] = c
            coeffs[k_max_data - k] = np.conj(c)
    if purely_periodic:
        coeffs[k_max_data] = 0.0
    return TorusSeries(coeffs, grid)


def axisymmetric_field(grid, rng, support_radius=None, amplitude=1.0,
                       divergence_free=False):
    """Random vector field exactly invariant under rotations about e1.

    Built from axial, swirl and radial parts with scalar profiles in
    (x1, r_perp^2) under a balanced Gaussian envelope; invariance holds
    pointwise by construction, so the angular ladder of a frame rotation
    collapses to the identity (up to sampling tails).  The solenoidal
    variant takes the spectral curl of an axisymmetric potential, which is
    exactly divergence-free and removes the slowly decaying pressure tail
    from any solve driven by it.
    """
    if support_radius is None:
        support_radius = grid.safe_radius
    env = gaussian_envelope(grid, support_radius,
                            content_freq=4.0 * np.pi / grid.length)
    x1 = grid.coords[0]
    rp_sq = grid.transverse_radius_sq
    half = 0.5 * grid.length
    u, v = x1 / half, rp_sq / half**2

    def profile():
        c = rng.standard_normal(4)
        return env * (c[0] + c[1] * u + c[2] * v + c[3] * u * v)

    axial, swirl, radial = profile(), profile(), profile()
    data = np.stack([
        axial,
        (-grid.coords[2] * swirl + grid.coords[1] * radial) / half,
        (grid.coords[1] * swirl + grid.coords[2] * radial) / half,
    ])
    if divergence_free:
        return curl(Field(amplitude * data, grid))
    return Field(amplitude * data, grid)


def scalar_motion_series(rng, k_max_data, mean, oscillation):
    """Real scalar series with given mean and oscillation scale."""
    nk = 2 * k_max_data + 1
    coeffs = np.zeros(nk, dtype=np.complex128)
    coeffs[k_max_data] = mean
    for k in range(1, k_max_data + 1):
        re, im = rng.standard_normal(2)
        c = oscillation * (re + 1j * im) * 0.5 ** (k - 1)
        coeffs[k_max_data + k] = 0.5 * c
        coeffs[k_max_data - k] = 0.5 * np.conj(c)
    return TorusSeries(coeffs)
