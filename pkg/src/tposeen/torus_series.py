"""Finitely supported time-Fourier series with field or scalar coefficients.

A series represents ``f(t, x) = sum_k c_k(x) exp(i k t)`` over the 2*pi
torus with k ranging over ``[-k_max, k_max]``.  Field coefficients live on a
shared :class:`BoxGrid`; scalar series (``grid is None``) model rigid-motion
data.  The algebra norm used throughout is

    a_norm(f, q) = sum_k lq_norm(c_k, q)

which is submultiplicative under the coefficient-wise convolution product.
"""

import struct

import numpy as np

from .errors import ConfigError, GridMismatchError
from .fields import Field, lq_norm, read_field, write_field
from .grid import BoxGrid


class TorusSeries:
    """Dense stack of coefficients ``c_k`` for k in [-k_max, k_max]."""

    __slots__ = ("coeffs", "grid")

    def __init__(self, coeffs, grid=None):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if grid is None:
            if coeffs.ndim != 1:
                raise GridMismatchError("scalar series expects a 1-d coefficient array")
        else:
            if coeffs.ndim != 5 or coeffs.shape[2:] != (grid.n,) * 3:
                raise GridMismatchError(
                    "field series expects (n_modes, ncomp, n, n, n) coefficients"
                )
        if coeffs.shape[0] % 2 == 0:
            raise ConfigError("mode axis must have odd length 2*k_max + 1")
        self.coeffs = coeffs
        self.grid = grid

    @property
    def k_max(self):
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def is_scalar(self):
        return self.grid is None

    @property
    def ncomp(self):
        return 0 if self.is_scalar else self.coeffs.shape[1]

    def modes(self):
        return range(-self.k_max, self.k_max + 1)

    def coeff(self, k):
        if abs(k) > self.k_max:
            if self.is_scalar:
                return 0j
            n = self.grid.n
            return Field(np.zeros((self.ncomp, n, n, n), dtype=np.complex128), self.grid)
        block = self.coeffs[k + self.k_max]
        return complex(block) if self.is_scalar else Field(block, self.grid)

    def copy(self):
        return TorusSeries(self.coeffs.copy(), self.grid)

    def __add__(self, other):
        a, b = _aligned(self, other)
        return TorusSeries(a + b, self.grid)

    def __sub__(self, other):
        a, b = _aligned(self, other)
        return TorusSeries(a - b, self.grid)

    def __mul__(self, scalar):
        return TorusSeries(self.coeffs * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return TorusSeries(-self.coeffs, self.grid)

    def __repr__(self):
        kind = "scalar" if self.is_scalar else "ncomp=%d" % self.ncomp
        return "TorusSeries(k_max=%d, %s)" % (self.k_max, kind)


def _aligned(a, b):
    if not isinstance(b, TorusSeries):
        raise GridMismatchError("expected a TorusSeries operand")
    if (a.grid is None) != (b.grid is None) or (a.grid is not None and a.grid != b.grid):
        raise GridMismatchError("series live on different grids")
    k = max(a.k_max, b.k_max)
    return _padded(a, k), _padded(b, k)


def _padded(series, k_max):
    if series.k_max == k_max:
        return series.coeffs
    pad = k_max - series.k_max
    width = [(pad, pad)] + [(0, 0)] * (series.coeffs.ndim - 1)
    return np.pad(series.coeffs, width)


def scalar_series(coeffs):
    return TorusSeries(np.asarray(coeffs, dtype=np.complex128))


def steady_series(field):
    """Wrap one field as the k = 0 coefficient of a series."""
    return TorusSeries(field.data[np.newaxis], field.grid)


def zero_series(grid, k_max, ncomp=3):
    n = grid.n
    return TorusSeries(
        np.zeros((2 * k_max + 1, ncomp, n, n, n), dtype=np.complex128), grid
    )


def from_mode_dict(grid, mode_dict, k_max=None, ncomp=3):
    """Build a series from ``{k: Field}`` (missing modes are zero)."""
    if k_max is None:
        k_max = max(abs(k) for k in mode_dict)
    out = zero_series(grid, k_max, ncomp)
    for k, field in mode_dict.items():
        if abs(k) > k_max:
            raise ConfigError("mode %d exceeds k_max=%d" % (k, k_max))
        out.coeffs[k + k_max] = field.data
    return out


# ---------------------------------------------------------------------------
# norms and projections


def a_norm(series, q):
    """Algebra norm: sum over modes of the spatial L^q norm.

    Scalar series use the modulus of each coefficient (q is ignored).
    """
    if series.is_scalar:
        return float(np.sum(np.abs(series.coeffs)))
    return float(
        sum(lq_norm(Field(c, series.grid), q) for c in series.coeffs)
    )


def project_steady(series):
    """Keep only the time mean (the k = 0 coefficient)."""
    return TorusSeries(series.coeffs[series.k_max : series.k_max + 1].copy(), series.grid)


def project_purely_periodic(series):
    """Complementary projection: zero the k = 0 coefficient."""
    out = series.coeffs.copy()
    out[series.k_max] = 0.0
    return TorusSeries(out, series.grid)


def time_derivative(series):
    k = np.arange(-series.k_max, series.k_max + 1)
    shape = (-1,) + (1,) * (series.coeffs.ndim - 1)
    return TorusSeries(series.coeffs * (1j * k.reshape(shape)), series.grid)


def time_eval(series, t):
    """Evaluate the series at one time; returns a Field or a complex number."""
    k = np.arange(-series.k_max, series.k_max + 1)
    weights = np.exp(1j * k * float(t))
    shape = (-1,) + (1,) * (series.coeffs.ndim - 1)
    summed = np.sum(series.coeffs * weights.reshape(shape), axis=0)
    return complex(summed) if series.is_scalar else Field(summed, series.grid)


def sample_times(n_times):
    return 2.0 * np.pi * np.arange(n_times) / n_times


def time_samples(series, n_times):
    """Values at n_times uniform times, as one stacked array over time."""
    k = np.arange(-series.k_max, series.k_max + 1)
    t = sample_times(n_times)
    weights = np.exp(1j * np.outer(t, k))  # (n_times, n_modes)
    flat = series.coeffs.reshape(series.coeffs.shape[0], -1)
    vals = weights @ flat
    return vals.reshape((n_times,) + series.coeffs.shape[1:])


def from_time_samples(samples, grid=None, k_max=None):
    """Inverse of :func:`time_samples` for band-limited data.

    ``samples`` has time along axis 0.  With ``k_max`` given the result is
    truncated (modes beyond it are discarded); otherwise the largest
    symmetric window the sample count supports is kept.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    n_times = samples.shape[0]
    hat = np.fft.fft(samples, axis=0) / n_times
    k_avail = (n_times - 1) // 2
    if k_max is None:
        k_max = k_avail
    if k_max > k_avail:
        raise ConfigError(
            "cannot recover k_max=%d from %d samples" % (k_max, n_times)
        )
    stacked = [hat[k % n_times] for k in range(-k_max, k_max + 1)]
    return TorusSeries(np.stack(stacked), grid)


def truncate(series, k_max):
    """Restrict (or zero-pad) the mode window to ``[-k_max, k_max]``."""
    if k_max == series.k_max:
        return series.copy()
    if k_max > series.k_max:
        return TorusSeries(_padded(series, k_max), series.grid)
    lo = series.k_max - k_max
    return TorusSeries(series.coeffs[lo : lo + 2 * k_max + 1].copy(), series.grid)


def conj_symmetry_defect(series):
    """Max deviation from c_{-k} == conj(c_k); zero for real-valued series."""
    flipped = np.conj(series.coeffs[::-1])
    return float(np.abs(series.coeffs - flipped).max())


# ---------------------------------------------------------------------------
# products


def product(f, g, combine="mul", dealiased=False):
    """Coefficient-wise convolution over time modes.

    ``combine`` selects how coefficient pairs multiply: ``"mul"`` multiplies
    componentwise (broadcasting scalars), ``"dot"`` contracts equal component
    counts to a single component.  The result window is the sum of the
    operand windows; pass ``dealiased=True`` to apply the spatial 2/3 rule to
    each coefficient afterwards (products are raw grid products otherwise,
    so the algebra inequalities hold exactly as finite sums).
    """
    if f.is_scalar and g.is_scalar:
        out = np.convolve(f.coeffs, g.coeffs)
        return TorusSeries(out)

    if f.is_scalar or g.is_scalar:
        scalar, field = (f, g) if f.is_scalar else (g, f)
        nk = scalar.coeffs.shape[0] + field.coeffs.shape[0] - 1
        shape = (nk,) + field.coeffs.shape[1:]
        out = np.zeros(shape, dtype=np.complex128)
        for i, a in enumerate(scalar.coeffs):
            if a == 0:
                continue
            out[i : i + field.coeffs.shape[0]] += a * field.coeffs
        result = TorusSeries(out, field.grid)
    else:
        if f.grid != g.grid:
            raise GridMismatchError("series live on different grids")
        if combine == "mul":
            if f.ncomp != g.ncomp and 1 not in (f.ncomp, g.ncomp):
                raise GridMismatchError(
                    "componentwise product needs matching or scalar components"
                )
            ncomp = max(f.ncomp, g.ncomp)
            pair = lambda a, b: a * b
        elif combine == "dot":
            if f.ncomp != g.ncomp:
                raise GridMismatchError("dot contraction needs matching components")
            ncomp = 1
            pair = lambda a, b: np.sum(a * b, axis=0, keepdims=True)
        else:
            raise ConfigError("unknown combine rule %r" % (combine,))
        nk = f.coeffs.shape[0] + g.coeffs.shape[0] - 1
        n = f.grid.n
        out = np.zeros((nk, ncomp, n, n, n), dtype=np.complex128)
        for i, a in enumerate(f.coeffs):
            for j, b in enumerate(g.coeffs):
                out[i + j] += pair(a, b)
        result = TorusSeries(out, f.grid)

    if dealiased and result.grid is not None:
        mask = result.grid.dealias_mask
        raw = np.fft.fftn(result.coeffs, axes=(-3, -2, -1))
        result = TorusSeries(
            np.fft.ifftn(raw * mask, axes=(-3, -2, -1)), result.grid
        )
    return result


def map_coefficients(series, fn, with_mode=False):
    """Apply a Field -> Field map to every coefficient.

    With ``with_mode`` the map is called as ``fn(k, field)`` so mode-indexed
    multipliers can be expressed directly.
    """
    if series.is_scalar:
        raise GridMismatchError("map_coefficients needs a field series")
    blocks = []
    for k, c in zip(series.modes(), series.coeffs):
        f = Field(c, series.grid)
        blocks.append((fn(k, f) if with_mode else fn(f)).data)
    return TorusSeries(np.stack(blocks), series.grid)


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"TPTS"
_VERSION = 1


def _field_record(field):
    g = field.grid
    header = b"TPOF" + struct.pack("<II d I", 1, g.n, g.length, field.ncomp)
    payload = np.ascontiguousarray(field.data.transpose(0, 3, 2, 1)).astype("<c16")
    return header + payload.tobytes()


def write_series(series, path):
    """Series format: magic, version, k_max, n, L, ncomp, then one field
    record per coefficient in ascending k (each in the single-field format)."""
    if series.is_scalar:
        raise ConfigError("only field series are serialized")
    g = series.grid
    header = _MAGIC + struct.pack(
        "<IIII d I", _VERSION, series.k_max, series.coeffs.shape[0], g.n,
        g.length, series.ncomp,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for k in series.modes():
            fh.write(_field_record(series.coeff(k)))


def read_series(path, grid=None):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ConfigError("not a series file: bad magic %r" % blob[:4])
    version, k_max, nk, n, length, ncomp = struct.unpack_from("<IIII d I", blob, 4)
    if version != _VERSION:
        raise ConfigError("unsupported series format version %d" % version)
    g = grid if grid is not None else BoxGrid(n, length)
    offset = 4 + struct.calcsize("<IIII d I")
    rec_header = 4 + struct.calcsize("<II d I")
    rec_len = rec_header + 16 * ncomp * n**3
    coeffs = []
    for _ in range(nk):
        rec = blob[offset : offset + rec_len]
        data = np.frombuffer(rec, dtype="<c16", offset=rec_header).copy()
        coeffs.append(data.reshape(ncomp, n, n, n).transpose(0, 3, 2, 1))
        offset += rec_len
    return TorusSeries(np.stack(coeffs).astype(np.complex128), g)
