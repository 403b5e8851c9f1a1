"""Sampled fields on a periodic box and their spectral operators.

Fields store complex samples of shape ``(ncomp, n, n, n)``.  Scalar fields
have one component, velocity-like fields three; gradients stack derivative
components in front (derivative-major), so a gradient of a 3-component
field has nine components ordered ``d1 u1, d1 u2, d1 u3, d2 u1, ...``.

The forward transform returns amplitudes of ``exp(i xi . x)`` in the
centered coordinate, normalized so that a single on-grid plane wave has a
single unit coefficient.  With that convention Parseval reads
``lq_norm(u, 2)**2 == volume * sum(|coeff|**2)``.
"""

import struct

import numpy as np

from .errors import ConfigError, GridMismatchError, SupportGuardError
from .grid import BoxGrid

_SPATIAL_AXES = (-3, -2, -1)

# Default ceiling on the fraction of guarded mass allowed outside the safe
# ball before coordinate-weighted operators refuse to proceed.
DEFAULT_SUPPORT_TOL = 1e-8


class Field:
    """Complex samples of a scalar or vector field on a :class:`BoxGrid`."""

    __slots__ = ("data", "grid")

    def __init__(self, data, grid):
        data = np.asarray(data, dtype=np.complex128)
        if data.ndim == 3:
            data = data[np.newaxis]
        if data.ndim != 4 or data.shape[1:] != (grid.n,) * 3:
            raise GridMismatchError(
                "field data of shape %s does not fit %r" % (data.shape, grid)
            )
        self.data = data
        self.grid = grid

    @property
    def ncomp(self):
        return self.data.shape[0]

    def copy(self):
        return Field(self.data.copy(), self.grid)

    def conj(self):
        return Field(np.conj(self.data), self.grid)

    def real_part(self):
        return Field(self.data.real.astype(np.complex128), self.grid)

    def __add__(self, other):
        _check_same(self, other)
        return Field(self.data + other.data, self.grid)

    def __sub__(self, other):
        _check_same(self, other)
        return Field(self.data - other.data, self.grid)

    def __mul__(self, scalar):
        return Field(self.data * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(-self.data, self.grid)

    def __repr__(self):
        return "Field(ncomp=%d, %r)" % (self.ncomp, self.grid)


class SpectralField:
    """Fourier amplitudes of a :class:`Field`, in FFT storage order."""

    __slots__ = ("coeffs", "grid")

    def __init__(self, coeffs, grid):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim == 3:
            coeffs = coeffs[np.newaxis]
        if coeffs.ndim != 4 or coeffs.shape[1:] != (grid.n,) * 3:
            raise GridMismatchError(
                "coefficient block of shape %s does not fit %r" % (coeffs.shape, grid)
            )
        self.coeffs = coeffs
        self.grid = grid

    @property
    def ncomp(self):
        return self.coeffs.shape[0]


def _check_same(a, b):
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids: %r vs %r" % (a.grid, b.grid))


def scalar_field(values, grid):
    values = np.asarray(values)
    if values.ndim != 3:
        raise GridMismatchError("scalar field expects (n, n, n) samples")
    return Field(values[np.newaxis], grid)


def vec_field(values, grid):
    values = np.asarray(values)
    if values.ndim != 4 or values.shape[0] != 3:
        raise GridMismatchError("vector field expects (3, n, n, n) samples")
    return Field(values, grid)


def zero_field(grid, ncomp=3):
    return Field(np.zeros((ncomp, grid.n, grid.n, grid.n), dtype=np.complex128), grid)


# ---------------------------------------------------------------------------
# transforms


def transform(field):
    """Forward transform to centered plane-wave amplitudes."""
    g = field.grid
    raw = np.fft.fftn(field.data, axes=_SPATIAL_AXES)
    return SpectralField(raw * (g.center_phase / g.n**3), g)


def inverse_transform(spec):
    """Inverse of :func:`transform`; exact round-trip up to round-off."""
    g = spec.grid
    samples = np.fft.ifftn(spec.coeffs * g.center_phase, axes=_SPATIAL_AXES) * g.n**3
    return Field(samples, g)


def _spectral_apply(field, fn):
    """fft -> fn(coeff-array, grid) -> ifft, preserving the phase convention.

    The centered phase cancels for diagonal multipliers, so plain fftn/ifftn
    is used here and multipliers are written in terms of grid.freqs.
    """
    g = field.grid
    raw = np.fft.fftn(field.data, axes=_SPATIAL_AXES)
    out = fn(raw, g)
    return Field(np.fft.ifftn(out, axes=_SPATIAL_AXES), g)


# ---------------------------------------------------------------------------
# norms


def lq_norm(field, q):
    """Lebesgue norm with cell-volume weights; ``q=inf`` gives the sup norm.

    Multi-component fields use the pointwise Euclidean magnitude across
    components, so ``lq_norm(gradient(u), 2)`` is the Frobenius H^1 seminorm.
    """
    mag_sq = np.sum(np.abs(field.data) ** 2, axis=0)
    if q == np.inf:
        return float(np.sqrt(mag_sq.max()))
    q = float(q)
    if q < 1.0:
        raise ConfigError("lq_norm requires q >= 1, got %g" % q)
    if q == 2.0:
        return float(np.sqrt(mag_sq.sum() * field.grid.cell_volume))
    return float((np.sum(mag_sq ** (q / 2.0)) * field.grid.cell_volume) ** (1.0 / q))


def l2_inner(a, b):
    """Cell-volume-weighted inner product, conjugate-linear in ``b``."""
    _check_same(a, b)
    if a.ncomp != b.ncomp:
        raise GridMismatchError("component counts differ: %d vs %d" % (a.ncomp, b.ncomp))
    return complex(np.sum(a.data * np.conj(b.data)) * a.grid.cell_volume)


# ---------------------------------------------------------------------------
# differential operators (all spectral)


def partial_deriv(field, axis):
    """Derivative along one axis (0, 1 or 2)."""
    if axis not in (0, 1, 2):
        raise ConfigError("axis must be 0, 1 or 2")
    return _spectral_apply(field, lambda c, g: 1j * g.freqs[axis] * c)


def gradient(field):
    """Derivative-major stack of all three partials of every component."""
    g = field.grid
    raw = np.fft.fftn(field.data, axes=_SPATIAL_AXES)
    parts = [np.fft.ifftn(1j * g.freqs[d] * raw, axes=_SPATIAL_AXES) for d in range(3)]
    return Field(np.concatenate(parts, axis=0), g)


def divergence(field):
    """Contraction inverse to :func:`gradient`; needs ncomp divisible by 3."""
    nc = field.ncomp
    if nc % 3 != 0:
        raise GridMismatchError("divergence needs a derivative-major field")
    base = nc // 3
    g = field.grid
    raw = np.fft.fftn(field.data, axes=_SPATIAL_AXES)
    out = np.zeros((base, g.n, g.n, g.n), dtype=np.complex128)
    for d in range(3):
        out += 1j * g.freqs[d] * raw[d * base : (d + 1) * base]
    return Field(np.fft.ifftn(out, axes=_SPATIAL_AXES), g)


def laplacian(field):
    return _spectral_apply(field, lambda c, g: -g.freq_squared * c)


def curl(field):
    if field.ncomp != 3:
        raise GridMismatchError("curl needs a 3-component field")
    g = field.grid
    raw = np.fft.fftn(field.data, axes=_SPATIAL_AXES)
    xi = g.freqs
    out = np.empty_like(raw)
    out[0] = 1j * (xi[1] * raw[2] - xi[2] * raw[1])
    out[1] = 1j * (xi[2] * raw[0] - xi[0] * raw[2])
    out[2] = 1j * (xi[0] * raw[1] - xi[1] * raw[0])
    return Field(np.fft.ifftn(out, axes=_SPATIAL_AXES), g)


def cross_e1(field):
    """Pointwise ``e1 x u``."""
    if field.ncomp != 3:
        raise GridMismatchError("cross_e1 needs a 3-component field")
    out = np.empty_like(field.data)
    out[0] = 0.0
    out[1] = -field.data[2]
    out[2] = field.data[1]
    return Field(out, field.grid)


def dealias(field):
    """Zero all modes beyond the 2/3 cutoff (use after physical products)."""
    return _spectral_apply(field, lambda c, g: c * g.dealias_mask)


def advect(vel, target, dealiased=True):
    """Convective derivative ``(vel . grad) target`` with optional 2/3 rule."""
    if vel.ncomp != 3:
        raise GridMismatchError("advecting velocity must have 3 components")
    _check_same(vel, target)
    grad = gradient(target)
    base = target.ncomp
    out = np.zeros_like(target.data)
    for d in range(3):
        out += vel.data[d] * grad.data[d * base : (d + 1) * base]
    result = Field(out, target.grid)
    return dealias(result) if dealiased else result


# ---------------------------------------------------------------------------
# projections and the rotation operator


def helmholtz_project(field):
    """Leray projection onto divergence-free fields; the zero mode passes through."""
    if field.ncomp != 3:
        raise GridMismatchError("projection needs a 3-component field")
    g = field.grid
    raw = np.fft.fftn(field.data, axes=_SPATIAL_AXES)
    xi = g.freqs
    denom = np.where(g.freq_squared == 0.0, 1.0, g.freq_squared)
    dot = xi[0] * raw[0] + xi[1] * raw[1] + xi[2] * raw[2]
    scale = dot / denom
    out = np.empty_like(raw)
    for d in range(3):
        out[d] = raw[d] - xi[d] * scale
    # xi = 0: projector is the identity there
    zero = tuple([slice(None)] + [0, 0, 0])
    out[zero] = raw[zero]
    return Field(np.fft.ifftn(out, axes=_SPATIAL_AXES), g)


def support_mass_fraction(field, radius=None, transverse=False):
    """Fraction of squared mass outside the (transverse) ball of given radius."""
    g = field.grid
    if radius is None:
        radius = g.safe_radius
    r_sq = g.transverse_radius_sq if transverse else g.radius_sq
    mag_sq = np.sum(np.abs(field.data) ** 2, axis=0)
    total = mag_sq.sum()
    if total == 0.0:
        return 0.0
    outside = mag_sq[r_sq > radius**2].sum()
    return float(outside / total)


def check_safe_support(field, tol=DEFAULT_SUPPORT_TOL, what="field"):
    frac = support_mass_fraction(field)
    if frac > tol:
        raise SupportGuardError(
            "%s has mass fraction %.3e outside the safe ball (radius %.3g), "
            "tolerance %.1e; the periodic box does not approximate whole space here"
            % (what, frac, field.grid.safe_radius, tol)
        )


def rotation_term(field, support_tol=DEFAULT_SUPPORT_TOL, check_support=True):
    """Angular part of the rotating-frame material derivative.

    Returns ``(e1 x x) . grad u - e1 x u`` with the gradient taken
    spectrally and the coordinate factor applied in physical space using the
    centered coordinate.  The coordinate weight is only trustworthy when the
    differentiated structure stays inside the safe ball, so the guard checks
    the transverse gradient components rather than the field itself
    (a constant field is fine: its gradient vanishes identically).
    """
    if field.ncomp != 3:
        raise GridMismatchError("rotation_term needs a 3-component field")
    g = field.grid
    d2 = partial_deriv(field, 1)
    d3 = partial_deriv(field, 2)
    if check_support:
        stacked = Field(np.concatenate([d2.data, d3.data], axis=0), g)
        frac = support_mass_fraction(stacked)
        if frac > support_tol:
            raise SupportGuardError(
                "transverse gradient has mass fraction %.3e outside the safe ball "
                "(radius %.3g), tolerance %.1e" % (frac, g.safe_radius, support_tol)
            )
    x2 = g.coords[1]
    x3 = g.coords[2]
    swirl = Field(-x3 * d2.data + x2 * d3.data, g)
    return swirl - cross_e1(field)


# ---------------------------------------------------------------------------
# rigid rotation about the e1 axis (exact trigonometric interpolation)


def _axis_freqs(grid):
    # fftfreq with d = 1/n yields the integer mode numbers directly
    return 2.0 * np.pi / grid.length * np.fft.fftfreq(grid.n, d=1.0 / grid.n)


def rotate_about_e1(field, angle, rotate_components=None, chunk=None, mask_corners=True):
    """Evaluate ``u(R(-angle) x)`` on the grid, then rotate vector components.

    This realizes the frame map ``u -> Q(angle) u(Q(angle)^T x)`` for
    3-component fields.  Stacked vector fields mix every (3b+1, 3b+2) pair;
    pass ``rotate_components=False`` for scalar data or an explicit list of
    index pairs to mix.  The evaluation is
    the exact trigonometric interpolation of the stored band-limited
    interpolant at the rotated sample positions; x1 slices are untouched
    because the rotation axis is e1.

    Corner samples with transverse radius >= L/2 rotate out of the
    fundamental box and would pick up periodic images, so they are zeroed
    by default; the safe-ball support contract keeps the true values there
    at tail level anyway.

    Cost is one ``(3n^2, n) x (n, n^2)`` complex matmul per call, so keep
    ``n`` modest and batch time samples outside.
    """
    g = field.grid
    n = g.n
    if rotate_components is None:
        rotate_components = field.ncomp % 3 == 0
    if rotate_components is True:
        if field.ncomp % 3 != 0:
            raise GridMismatchError("component rotation needs 3-component blocks")
        # mix the transverse pair of every 3-component block
        pairs = [(3 * b + 1, 3 * b + 2) for b in range(field.ncomp // 3)]
    elif rotate_components:
        pairs = list(rotate_components)
    else:
        pairs = []

    c = float(np.cos(angle))
    s = float(np.sin(angle))

    # 2D spectral representation in the (x2, x3) plane per x1 slice
    raw = np.fft.fftn(field.data, axes=(-2, -1))
    m2 = g.mode_numbers[1].reshape(-1)
    m3 = g.mode_numbers[2].reshape(-1)
    phase2d = np.where((m2[:, None] + m3[None, :]) % 2 == 0, 1.0, -1.0)
    coeffs = raw * (phase2d / n**2)

    xi = 2.0 * np.pi / g.length * m3.astype(np.float64)  # same 1D mode set per axis
    y = g.axis_coords

    # target position components: u = c*y2 + s*y3, v = -s*y2 + c*y3
    # exp(i xi2 u) = P2[a2, m] * P3[a3, m]; exp(i xi3 v) = S2[a2, m] * S3[a3, m]
    P2 = np.exp(1j * c * np.outer(y, xi))
    P3 = np.exp(1j * s * np.outer(y, xi))
    S2 = np.exp(-1j * s * np.outer(y, xi))
    S3 = np.exp(1j * c * np.outer(y, xi))

    # K[m3, (a2, a3)] = S2[a2, m3] * S3[a3, m3]; L likewise for the m2 pass
    K = (S2.T[:, :, None] * S3.T[:, None, :]).reshape(n, n * n)
    L = (P2.T[:, :, None] * P3.T[:, None, :]).reshape(n, n * n)

    nc = field.ncomp
    flat = coeffs.reshape(nc * n, n, n)
    if chunk is None:
        chunk = max(1, (1 << 24) // (n * n * n))  # keep the GEMM block near 256 MiB
    out = np.empty((nc * n, n * n), dtype=np.complex128)
    for lo in range(0, nc * n, chunk * n):
        hi = min(nc * n, lo + chunk * n)
        block = flat[lo:hi]  # (b, m2, m3)
        t = block.reshape(-1, n) @ K  # (b*m2, a2*a3)
        t = t.reshape(hi - lo, n, n * n)  # (b, m2, a2*a3)
        out[lo:hi] = np.einsum("mp,xmp->xp", L, t)
    out = out.reshape(nc, n, n, n)

    if mask_corners:
        inside = g.transverse_radius_sq < (0.5 * g.length) ** 2
        out *= inside

    for i, j in pairs:
        ui = c * out[i] - s * out[j]
        out[j] = s * out[i] + c * out[j]
        out[i] = ui
    return Field(out, g)


# ---------------------------------------------------------------------------
# scaled resampling (spatial dilation via the spectral representation)


def dilate(field, factor):
    """Sample ``u(factor * x)`` at the grid points via the spectral form.

    Exact composition of exponentials: each axis is handled by one dense
    evaluation matrix, so on-grid results are the trigonometric interpolant
    values, with no support requirement of its own.
    """
    g = field.grid
    n = g.n
    spec = transform(field).coeffs
    xi = _axis_freqs(g)
    y = g.axis_coords
    E = np.exp(1j * float(factor) * np.outer(y, xi))  # (a, m)
    out = np.einsum("cijk,ai->cajk", spec, E, optimize=True)
    out = np.einsum("cajk,bj->cabk", out, E, optimize=True)
    out = np.einsum("cabk,dk->cabd", out, E, optimize=True)
    return Field(out, g)


# ---------------------------------------------------------------------------
# binary field format

_MAGIC = b"TPOF"
_VERSION = 1


def write_field(field, path):
    """Write the binary field format: magic, version, n, L, ncomp, samples.

    Samples are little-endian float64 pairs (re, im), x1-fastest.
    """
    g = field.grid
    header = _MAGIC + struct.pack("<II d I", _VERSION, g.n, g.length, field.ncomp)
    payload = np.ascontiguousarray(field.data.transpose(0, 3, 2, 1)).astype("<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_field(path, grid=None):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ConfigError("not a field file: bad magic %r" % blob[:4])
    version, n, length, ncomp = struct.unpack_from("<II d I", blob, 4)
    if version != _VERSION:
        raise ConfigError("unsupported field format version %d" % version)
    g = grid if grid is not None else BoxGrid(n, length)
    if g.n != n or g.length != length:
        raise GridMismatchError("file grid (n=%d, L=%g) differs from %r" % (n, length, g))
    offset = 4 + struct.calcsize("<II d I")
    data = np.frombuffer(blob, dtype="<c16", offset=offset).copy()
    data = data.reshape(ncomp, n, n, n).transpose(0, 3, 2, 1)
    return Field(data.astype(np.complex128), g)
