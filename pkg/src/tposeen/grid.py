"""Uniform periodic box used as the computational surrogate for whole space."""

import numpy as np

from .errors import ConfigError

# Fraction of the box half-width regarded as safe for coordinate-weighted
# operators (the centered coordinate jumps at the periodic seam).
SAFE_BALL_FRACTION = 0.45


class BoxGrid:
    """Cubic periodic grid centered at the origin.

    Samples sit at ``x_i = -L/2 + i*h`` per axis with ``h = L/n``; the
    resolvable wavenumbers are ``xi = (2*pi/L)*m`` with integer ``m`` in
    ``[-n/2, n/2)``.  All derived arrays are broadcastable against sampled
    data of shape ``(ncomp, n, n, n)``.
    """

    def __init__(self, n, length):
        n = int(n)
        if n < 4 or n % 2 != 0:
            raise ConfigError("grid size must be even and at least 4, got %d" % n)
        if not (length > 0):
            raise ConfigError("box length must be positive, got %r" % (length,))
        self.n = n
        self.length = float(length)
        self.spacing = self.length / n
        self.cell_volume = self.spacing**3
        self.volume = self.length**3
        self.safe_radius = SAFE_BALL_FRACTION * self.length

        # integer mode numbers in FFT storage order
        m = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        self.mode_numbers = (
            m.reshape(-1, 1, 1),
            m.reshape(1, -1, 1),
            m.reshape(1, 1, -1),
        )
        scale = 2.0 * np.pi / self.length
        self.freqs = tuple(scale * mi.astype(np.float64) for mi in self.mode_numbers)
        self.freq_squared = self.freqs[0] ** 2 + self.freqs[1] ** 2 + self.freqs[2] ** 2

        # phase translating FFT output to amplitudes of exp(i xi . x) in the
        # centered coordinate; (-1)**m is well defined mod n because n is even
        msum = self.mode_numbers[0] + self.mode_numbers[1] + self.mode_numbers[2]
        self.center_phase = np.where(msum % 2 == 0, 1.0, -1.0)

        c = -0.5 * self.length + self.spacing * np.arange(n)
        self.axis_coords = c
        self.coords = (c.reshape(-1, 1, 1), c.reshape(1, -1, 1), c.reshape(1, 1, -1))
        self.radius_sq = self.coords[0] ** 2 + self.coords[1] ** 2 + self.coords[2] ** 2
        # distance from the rotation axis e1
        self.transverse_radius_sq = self.coords[1] ** 2 + self.coords[2] ** 2

        cut = n // 3
        self.dealias_mask = (
            (np.abs(self.mode_numbers[0]) <= cut)
            & (np.abs(self.mode_numbers[1]) <= cut)
            & (np.abs(self.mode_numbers[2]) <= cut)
        )

    def __eq__(self, other):
        return (
            isinstance(other, BoxGrid)
            and self.n == other.n
            and self.length == other.length
        )

    def __hash__(self):
        return hash((self.n, self.length))

    def __repr__(self):
        return "BoxGrid(n=%d, length=%g)" % (self.n, self.length)
