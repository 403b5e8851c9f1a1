"""Mixed-norm embedding inequality for purely periodic fields.

The inequality bounds omega^{alpha/2} ||u||_{L^{r0}(T;L^{p0})} +
omega^{beta/2} ||grad u||_{L^{r1}(T;L^{p1})} by C (omega ||du/dt||_q +
||grad^2 u||_q), with the exponents tied to (alpha, beta, q) below.  Its
proof rests on a factorization of u through the multiplier M_omega, a
Riesz potential in space, and a weakly singular kernel in time; all three
factors are implemented here so the factorization can be checked directly.

Time integrals use the normalized Haar measure (mean over the period), so
a time-independent function has mixed norm equal to its spatial norm.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalBlowupError
from .fields import (
    Field,
    check_safe_support,
    DEFAULT_SUPPORT_TOL,
    gradient,
    inverse_transform,
    lq_norm,
    transform,
)
from .torus_series import (
    a_norm,
    map_coefficients,
    sample_times,
    time_derivative,
    time_eval,
)


@dataclass(frozen=True)
class EmbeddingParams:
    """Exponent bookkeeping for the embedding inequality in dimension 3."""

    alpha: float
    beta: float
    q: float
    omega: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 2.0:
            raise ConfigError("alpha must lie in [0, 2]")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if not self.q > 1.0:
            raise ConfigError("q must exceed 1")
        if not self.omega > 0.0:
            raise ConfigError("omega must be positive")
        if self.alpha * self.q >= 2.0:
            raise ConfigError("need alpha*q < 2")
        if (2.0 - self.alpha) * self.q >= 3.0:
            raise ConfigError("need (2-alpha)*q < 3")
        if self.beta * self.q >= 2.0:
            raise ConfigError("need beta*q < 2")
        if (1.0 - self.beta) * self.q >= 3.0:
            raise ConfigError("need (1-beta)*q < 3")

    @property
    def r0(self):
        return 2.0 * self.q / (2.0 - self.alpha * self.q)

    @property
    def p0(self):
        return 3.0 * self.q / (3.0 - (2.0 - self.alpha) * self.q)

    @property
    def r1(self):
        return 2.0 * self.q / (2.0 - self.beta * self.q)

    @property
    def p1(self):
        return 3.0 * self.q / (3.0 - (1.0 - self.beta) * self.q)


def kernel_gamma(alpha, n_times, k_cut=64):
    """Samples of the time kernel sum_{0<|k|<=k_cut} |k|^{-alpha/2} e^{ikt}.

    Real and even, with zero mean over the period.  The closed form has a
    t^{alpha/2 - 1} singularity at t = 0; the truncated mode sum is what
    the series arithmetic actually uses, so that is what we return.
    """
    if not 0.0 < alpha <= 2.0:
        raise ConfigError("alpha must lie in (0, 2]")
    if k_cut < 1:
        raise ConfigError("k_cut must be at least 1")
    t = 2.0 * np.pi * np.arange(n_times) / n_times
    ks = np.arange(1, k_cut + 1)
    return 2.0 * np.sum(ks[:, None] ** (-alpha / 2.0) * np.cos(np.outer(ks, t)), axis=0)


def riesz_potential(field, sigma):
    """Spatial multiplier |xi|^{-sigma}; the zero wavenumber is annihilated."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    g = field.grid
    spec = transform(field)
    mag = np.sqrt(g.freq_squared)
    mult = np.zeros_like(mag)
    nz = mag > 0
    mult[nz] = mag[nz] ** (-sigma)
    return inverse_transform(type(spec)(spec.coeffs * mult, g))


def apply_M_multiplier(series, omega, alpha):
    """Per-(k, xi) multiplier |omega k|^{alpha/2} |xi|^{2-alpha} / (|xi|^2 + i omega k).

    The steady part (k = 0) is annihilated.  The modulus is bounded by 1
    for every (k, xi), uniformly in omega.
    """
    grid = series.grid
    if grid is None:
        raise ConfigError("multiplier needs spatial coefficients")
    xi_sq = grid.freq_squared

    def one_mode(k, field):
        if k == 0:
            return Field(np.zeros_like(field.data), grid)
        num = np.abs(omega * k) ** (alpha / 2.0) * xi_sq ** ((2.0 - alpha) / 2.0)
        den = xi_sq + 1j * omega * k
        spec = transform(field)
        return inverse_transform(type(spec)(spec.coeffs * (num / den), grid))

    return map_coefficients(series, one_mode, with_mode=True)


def m_multiplier_sup(grid, omega, alpha, k_max):
    """Grid-sampled sup of |M_omega| over modes |k| <= k_max; should be <= 1."""
    xi_sq = grid.freq_squared.ravel()
    worst = 0.0
    for k in range(1, k_max + 1):
        num = np.abs(omega * k) ** (alpha / 2.0) * xi_sq ** ((2.0 - alpha) / 2.0)
        mod = num / np.sqrt(xi_sq**2 + (omega * k) ** 2)
        worst = max(worst, float(np.max(mod)))
    return worst


def mixed_norm(series, r, p, n_times=None):
    """|| t -> ||u(t, .)||_p ||_r with the normalized time measure.

    Samples are evaluated one at a time; norms of many-component series
    (hessians) would otherwise materialize n_times full fields at once.
    """
    if r < 1 or p < 1:
        raise ConfigError("mixed-norm exponents must be >= 1")
    if n_times is None:
        n_times = 8 * (series.k_max + 1)
    vals = np.array(
        [lq_norm(time_eval(series, t), p) for t in sample_times(n_times)]
    )
    if np.isinf(r):
        return float(np.max(vals))
    return float(np.mean(vals**r) ** (1.0 / r))


def _require_purely_periodic(series, tol=1e-12):
    steady = lq_norm(series.coeff(0), 2)
    total = a_norm(series, 2)
    if total > 0 and steady > tol * total:
        raise ConfigError("input must be purely periodic (zero time mean)")


def embedding_ratio(series, params, n_times=None, support_tol=DEFAULT_SUPPORT_TOL,
                    breakdown=False):
    """LHS/RHS of the mixed-norm embedding inequality on one field.

    With ``breakdown`` the two sides are returned alongside the ratio.
    """
    _require_purely_periodic(series)
    if support_tol is not None:
        for k in series.modes():
            check_safe_support(series.coeff(k), tol=support_tol)
    grad = map_coefficients(series, gradient)
    hess = map_coefficients(grad, gradient)
    dt = time_derivative(series)
    lhs = params.omega ** (params.alpha / 2.0) * mixed_norm(
        series, params.r0, params.p0, n_times
    ) + params.omega ** (params.beta / 2.0) * mixed_norm(
        grad, params.r1, params.p1, n_times
    )
    rhs = params.omega * mixed_norm(dt, params.q, params.q, n_times) + mixed_norm(
        hess, params.q, params.q, n_times
    )
    if rhs == 0.0:
        if lhs == 0.0:
            ratio = 0.0
        else:
            raise NumericalBlowupError(
                "embedding inequality violated: zero RHS, nonzero LHS"
            )
    else:
        ratio = lhs / rhs
    if breakdown:
        return {"lhs": float(lhs), "rhs": float(rhs), "ratio": float(ratio)}
    return ratio


def factorization_defect(series, omega, alpha):
    """Relative error of reconstructing u from (omega d/dt - Lap) u.

    The reconstruction composes the M multiplier, the time kernel (as its
    mode symbol |k|^{-alpha/2}), and the spatial Riesz potential
    |xi|^{alpha-2}, scaled by omega^{-alpha/2}.  It is an algebraic
    identity per (k, xi) away from k = 0 and xi = 0, so the defect on
    purely periodic, spatially mean-free input is round-off only.
    """
    _require_purely_periodic(series)
    grid = series.grid
    xi_sq = grid.freq_squared

    def parabolic(k, field):
        spec = transform(field)
        return inverse_transform(type(spec)((1j * omega * k + xi_sq) * spec.coeffs, grid))

    rhs = map_coefficients(series, parabolic, with_mode=True)
    filtered = apply_M_multiplier(rhs, omega, alpha)

    def undo(k, field):
        if k == 0:
            return field
        spec = transform(field)
        mag = np.sqrt(xi_sq)
        mult = np.zeros_like(mag)
        nz = mag > 0
        mult[nz] = mag[nz] ** (alpha - 2.0)
        scale = omega ** (-alpha / 2.0) * np.abs(k) ** (-alpha / 2.0)
        return inverse_transform(type(spec)(scale * mult * spec.coeffs, grid))

    rebuilt = map_coefficients(filtered, undo, with_mode=True)
    denom = a_norm(series, 2)
    if denom == 0.0:
        return 0.0
    return a_norm(rebuilt - series, 2) / denom
