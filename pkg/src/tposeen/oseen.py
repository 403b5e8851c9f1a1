"""Time-periodic Oseen solvers on the box, fixed and rotating frame.

The constant-coefficient problem diagonalizes per time mode and wavenumber.
The rotating-frame problem is solved by conjugating with the frame rotation:
pull the forcing into the corotating frame (where the coordinate-dependent
terms vanish), solve per mode, push the solution back.  Both directions are
realized by sampling in time and rotating each sample, so the only
discretization knobs are the grid and the time sample count.

Rotating a field with transverse structure spreads its time spectrum by the
angular bandwidth of the data (a Bessel-function ladder), not by a fixed
shift, so sample counts here are chosen adaptively from the data unless
pinned by the caller.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainApproximationError
from .fields import (
    DEFAULT_SUPPORT_TOL,
    Field,
    SpectralField,
    check_safe_support,
    dilate,
    gradient,
    inverse_transform,
    laplacian,
    lq_norm,
    partial_deriv,
    rotate_about_e1,
    rotation_term,
    support_mass_fraction,
    transform,
)
from .parallel import ordered_map
from .torus_series import (
    TorusSeries,
    a_norm,
    from_time_samples,
    map_coefficients,
    sample_times,
    time_derivative,
    time_samples,
    truncate,
)


@dataclass(frozen=True)
class FlowParams:
    """Nondimensional flow parameters and the exponent bookkeeping.

    ``lam`` is the translational speed, ``omega`` the angular speed; the
    coupling window lam^2 <= theta*omega <= bound is what the solution
    theory needs, so it is enforced here once and for all.
    """

    lam: float
    omega: float
    theta: float = 1.0
    bound: float = 10.0
    q: float = 1.25

    def __post_init__(self):
        if self.lam <= 0 or self.omega <= 0:
            raise ConfigError("lam and omega must be positive")
        if self.theta <= 0 or self.bound <= 0:
            raise ConfigError("theta and bound must be positive")
        if not 1.0 < self.q < 2.0:
            raise ConfigError("q must lie in (1, 2)")
        if self.lam**2 > self.theta * self.omega:
            raise ConfigError(
                "coupling violated: lam^2 = %g exceeds theta*omega = %g"
                % (self.lam**2, self.theta * self.omega)
            )
        if self.theta * self.omega > self.bound:
            raise ConfigError("theta*omega exceeds the bound")

    @property
    def s1(self):
        return 2.0 * self.q / (2.0 - self.q)

    @property
    def s2(self):
        return 4.0 * self.q / (4.0 - self.q)

    @property
    def s3(self):
        return 8.0 * self.q / (8.0 - self.q)


@dataclass
class TPSolution:
    """Velocity and pressure gradient of a time-periodic solve.

    The pressure is stored as its gradient (it is only unique up to a
    spatially constant function of time); a zero-mean scalar pressure is
    reconstructable with :func:`pressure_from_gradient`.
    """

    velocity: TorusSeries
    pressure_gradient: TorusSeries
    diagnostics: dict = field(default_factory=dict)


def solve_oseen_mode(k, forcing, lam, omega):
    """One time mode of the constant-coefficient problem.

    Divides the transverse (divergence-free) part of the forcing by the
    symbol i*omega*k + |xi|^2 - i*lam*xi_1 and returns the complementary
    gradient part as the pressure gradient.  The joint zero mode
    (k, xi) = (0, 0) is gauged to zero (far-field decay).  The symbol never
    vanishes elsewhere, so degenerate parameter combinations (lam = 0 or
    k = 0) are fine here.
    """
    g = forcing.grid
    spec = transform(forcing).coeffs
    if spec.shape[0] != 3:
        raise ConfigError("mode solve needs a 3-component forcing")
    xi = g.freqs
    xi_sq = g.freq_squared
    dot = xi[0] * spec[0] + xi[1] * spec[1] + xi[2] * spec[2]
    scale = np.divide(dot, xi_sq, out=np.zeros_like(dot), where=xi_sq > 0)
    grad_p = np.stack([xi[0] * scale, xi[1] * scale, xi[2] * scale])
    projected = spec - grad_p
    den = 1j * omega * k + xi_sq - 1j * lam * xi[0]
    vel = projected / np.where(den == 0, 1.0, den)
    if k == 0:
        vel[:, 0, 0, 0] = 0.0
    return (
        inverse_transform(SpectralField(vel, g)),
        inverse_transform(SpectralField(grad_p, g)),
    )


def solve_oseen_tp(forcing, params):
    """Modewise solve of the time-periodic constant-coefficient problem."""
    if not isinstance(params, FlowParams):
        raise ConfigError("solve_oseen_tp expects FlowParams")
    grid = forcing.grid
    if grid is None:
        raise ConfigError("forcing must carry spatial coefficients")

    def one(item):
        k, coeff = item
        v, gp = solve_oseen_mode(k, Field(coeff, grid), params.lam, params.omega)
        return v.data, gp.data

    results = ordered_map(one, list(zip(forcing.modes(), forcing.coeffs)))
    vel = TorusSeries(np.stack([r[0] for r in results]), grid)
    grad_p = TorusSeries(np.stack([r[1] for r in results]), grid)
    mean_force = float(np.abs(forcing.coeff(0).data.mean(axis=(1, 2, 3))).max())
    diag = {"rotating": False, "steady_mean_force": mean_force}
    return TPSolution(vel, grad_p, diag)


def oseen_operator(velocity, pressure_gradient, lam, omega):
    """Apply omega*d/dt - Lap - lam*d_1 and add the pressure gradient."""
    out = time_derivative(velocity) * omega
    out = out - map_coefficients(velocity, laplacian)
    out = out - map_coefficients(velocity, lambda f: partial_deriv(f, 0)) * lam
    return out + pressure_gradient


def frame_derivative(velocity, support_tol=None):
    """Per-mode i*k*u + e1^u - e1^x . grad u (the corotating time derivative).

    The support guard is off by default because residual evaluation is
    routinely applied to delocalized solution fields; pass a tolerance to
    re-enable the whole-space faithfulness check.
    """
    check = support_tol is not None

    def one(k, f):
        rot = rotation_term(
            f,
            support_tol=support_tol if check else DEFAULT_SUPPORT_TOL,
            check_support=check,
        )
        return f * (1j * k) - rot

    return map_coefficients(velocity, one, with_mode=True)


def rotating_oseen_operator(velocity, pressure_gradient, lam, omega):
    """Left-hand side of the rotating-frame momentum equation.

    omega*(d/dt u + e1^u - e1^x.grad u) - Lap u - lam*d_1 u + grad p,
    evaluated with the directly discretized rotation term.
    """
    out = frame_derivative(velocity) * omega
    out = out - map_coefficients(velocity, laplacian)
    out = out - map_coefficients(velocity, lambda f: partial_deriv(f, 0)) * lam
    return out + pressure_gradient


# ---------------------------------------------------------------------------
# frame conjugation


def ladder_width(series, rel=1e-2):
    """Initial guess for the angular bandwidth excited by rotating the data.

    A transverse frequency xi at transverse radius r excites time harmonics
    up to roughly j ~ xi*r (Bessel ladder).  Extents are taken at relative
    amplitude ``rel``; a worst-case product over the full dynamic range is
    far too pessimistic for smoothly localized data, so this is only a
    starting point and the caller verifies the realized spectral tail.
    """
    g = series.grid
    n = g.n
    mags = np.abs(series.coeffs)
    phys_max = float(mags.max())
    if phys_max == 0.0:
        return 0
    present = mags.max(axis=(0, 1)) > rel * phys_max
    r_perp = np.broadcast_to(np.sqrt(g.transverse_radius_sq), (n, n, n))
    r_eff = min(float(r_perp[present].max()), 0.5 * g.length)

    spec_mag = np.zeros((n, n, n))
    for coeff in series.coeffs:
        spec_mag = np.maximum(
            spec_mag, np.abs(np.fft.fftn(coeff, axes=(1, 2, 3))).max(axis=0) / n**3
        )
    m2, m3 = g.mode_numbers[1], g.mode_numbers[2]
    xi_perp = (2.0 * np.pi / g.length) * np.sqrt(m2**2 + m3**2)
    xi_perp = np.broadcast_to(xi_perp, (n, n, n))
    spec_sel = spec_mag > rel * spec_mag.max()
    xi_eff = float(xi_perp[spec_sel].max())
    return int(math.ceil(0.95 * xi_eff * r_eff)) + 6


def _shell_tail(series):
    """Relative weight of the two outermost |k| shells."""
    norms = [lq_norm(series.coeff(k), 2) for k in series.modes()]
    total = sum(norms)
    if total == 0.0:
        return 0.0
    km = series.k_max
    edge = norms[0] + norms[-1]
    if km >= 1:
        edge += norms[1] + norms[-2]
    return edge / total


def rotate_frame(series, direction="forward", k_max_out=None, n_times=None,
                 support_tol=DEFAULT_SUPPORT_TOL, tail_tol=1e-11,
                 mask_corners=True, diagnostics=None):
    """Conjugate a series with the frame rotation about e1.

    Forward maps u to Q(t) u(t, Q(t)^T y); inverse composes the opposite
    way.  Realized by rotating uniform time samples and re-expanding, so
    the sample count must cover the input modes plus the rotation ladder;
    by default it is chosen adaptively and the re-expanded tail is checked
    against ``tail_tol`` (pass ``tail_tol=None`` to skip the check when
    deliberately folding a wide ladder into a small window).
    """
    if direction not in ("forward", "inverse"):
        raise ConfigError("direction must be 'forward' or 'inverse'")
    sign = 1.0 if direction == "forward" else -1.0
    grid = series.grid
    if grid is None:
        raise ConfigError("frame rotation needs spatial coefficients")
    if support_tol is not None:
        for k in series.modes():
            check_safe_support(series.coeff(k), tol=support_tol)

    k_in = series.k_max
    floor = 2 * (k_in + 1) + 1
    adaptive = n_times is None
    if adaptive:
        width = ladder_width(series)
        n_times = max(floor, 2 * (k_in + width) + 1)
    else:
        width = None
        if k_max_out is not None and n_times < 2 * k_max_out + 1:
            raise ConfigError(
                "n_times=%d cannot recover k_max_out=%d" % (n_times, k_max_out)
            )
    attempts = 0
    while True:
        n_times += 1 - n_times % 2  # keep the window symmetric
        ts = sample_times(n_times)
        samples = time_samples(series, n_times)
        rotated = np.stack(
            [
                rotate_about_e1(Field(s, grid), sign * t, mask_corners=mask_corners).data
                for s, t in zip(samples, ts)
            ]
        )
        out = from_time_samples(rotated, grid)
        tail = _shell_tail(out)
        if tail_tol is None or tail <= tail_tol:
            break
        if not adaptive or attempts >= 3:
            raise DomainApproximationError(
                "rotation ladder not resolved: tail %.3e with %d samples"
                % (tail, n_times)
            )
        attempts += 1
        n_times = int(1.6 * n_times) + 1
    if diagnostics is not None:
        diagnostics["%s_n_times" % direction] = n_times
        diagnostics["%s_tail" % direction] = tail
        if width is not None:
            diagnostics["%s_ladder" % direction] = width
    if k_max_out is not None:
        out = truncate(out, k_max_out)
    return out


def solve_rotating_oseen_tp(forcing, params, n_times=None, n_times_back=None,
                            k_max_out=None, support_tol=DEFAULT_SUPPORT_TOL,
                            want_pressure=True, tail_tol=1e-11):
    """Rotating-frame time-periodic solve by conjugation.

    Pipeline: pull the forcing into the corotating frame, solve the
    constant-coefficient problem on the widened mode window, push velocity
    (and optionally the pressure gradient) back, truncate to the output
    window.  The mass left beyond the output window is reported as
    ``mode_leak``; the per-mode multiplier cannot widen the angular
    bandwidth of the data, so the pullback needs no more samples than the
    forward ladder provides.
    """
    if not isinstance(params, FlowParams):
        raise ConfigError("solve_rotating_oseen_tp expects FlowParams")
    diag = {"rotating": True}
    conj = rotate_frame(
        forcing,
        "forward",
        n_times=n_times,
        support_tol=support_tol,
        tail_tol=tail_tol,
        diagnostics=diag,
    )
    inner = solve_oseen_tp(conj, params)
    diag["steady_mean_force"] = inner.diagnostics["steady_mean_force"]

    k_in = forcing.k_max
    k_out = k_in if k_max_out is None else k_max_out
    if want_pressure:
        joint = TorusSeries(
            np.concatenate([inner.velocity.coeffs, inner.pressure_gradient.coeffs], axis=1),
            forcing.grid,
        )
    else:
        joint = inner.velocity
    if n_times_back is None:
        # folding into the output window goes like the square of the ladder
        # tail at half the margin, so a fraction of the forward width is
        # enough on the way back
        half = max(4, int(math.ceil(0.6 * diag.get("forward_ladder", 8))) + 3)
        n_times_back = 2 * (k_out + half) + 1
    # the corner mask stays on here: samples beyond the seam circle wrap
    # around the box and carry broadband time content that would fold into
    # the mode window, while the mask itself is radial and t-independent
    # and so cannot mix modes
    back = rotate_frame(
        joint,
        "inverse",
        n_times=n_times_back,
        support_tol=None,
        tail_tol=None,
        diagnostics=diag,
    )
    vel_full = TorusSeries(back.coeffs[:, :3], forcing.grid)
    within = sum(lq_norm(vel_full.coeff(k), 2) for k in range(-k_out, k_out + 1))
    beyond = sum(
        lq_norm(vel_full.coeff(k), 2)
        for k in vel_full.modes()
        if abs(k) > k_out
    )
    diag["mode_leak"] = beyond / within if within > 0 else 0.0

    out = truncate(back, k_out)
    velocity = TorusSeries(out.coeffs[:, :3], forcing.grid)
    if want_pressure:
        grad_p = TorusSeries(out.coeffs[:, 3:], forcing.grid)
    else:
        grad_p = TorusSeries(np.zeros_like(velocity.coeffs), forcing.grid)
    return TPSolution(velocity, grad_p, diag)


def _leray(spec, grid):
    """Remove the gradient part of spectral coefficients (identity at xi=0)."""
    xi = grid.freqs
    xi_sq = grid.freq_squared
    dot = xi[0] * spec[0] + xi[1] * spec[1] + xi[2] * spec[2]
    scale = np.divide(dot, xi_sq, out=np.zeros_like(dot), where=xi_sq > 0)
    return spec - np.stack([xi[0] * scale, xi[1] * scale, xi[2] * scale])


def _solve_mode_mean(k, f_mean, omega):
    """Spatial-mean block of the rotating mode equation, solved closed form.

    Constants produce no rotation coupling to nonzero wavenumbers (the
    coordinate weight is constant along the differentiated axis, so the
    coupling sums to zero exactly), leaving the 3x3 system
    i*omega*k*u + omega*e1^u = mean(f).  Its eigenvalues are
    i*omega*(k, k+1, k-1): the k=0 mean is the usual gauge, and at |k|=1
    one circular component is resonant (a rigid rotating mean flow the box
    supports but whole space does not) and is gauged away too.  The caller
    receives the discarded forcing magnitude.
    """
    u = np.zeros(3, dtype=np.complex128)
    dropped = 0.0
    if k == 0:
        return u, float(np.abs(f_mean).max())
    # eigenbasis of e1^: e1 (eigenvalue 0), (e2 -+ i e3)/sqrt2 (+-i)
    plus = np.array([0.0, 1.0, -1j]) / np.sqrt(2.0)
    minus = np.array([0.0, 1.0, 1j]) / np.sqrt(2.0)
    for vec, eig in ((np.array([1.0, 0, 0], dtype=np.complex128), 0.0),
                     (plus, 1.0), (minus, -1.0)):
        amp = np.vdot(vec, f_mean)
        den = 1j * omega * (k + eig)
        if den == 0:
            dropped = max(dropped, float(abs(amp)))
        else:
            u += (amp / den) * vec
    return u, dropped


def solve_rotating_oseen_direct(forcing, params, tol=1e-11, max_iter=600,
                                restart=80):
    """Rotating-frame solve in the physical frame, one time mode at a time.

    The rotating operator is time-independent, so it commutes with time
    translation and each physical mode k satisfies

        i*omega*k u - omega*rot(u) - Lap u - lam*d_1 u + grad p = f_k

    with rot the directly discretized rotation term.  On the solenoidal
    mean-free subspace the operator splits into -Lap plus an exactly
    skew-adjoint rest (i*omega*k, the advection, and the projected rotation
    term; skewness of the coordinate-weighted part is exact because the
    weight is constant along the differentiated axis).  Conjugating with
    (-Lap)^{-1/2} therefore yields a normal operator with spectrum on the
    line Re = 1, on which GMRES converges at a rate set by the skew part's
    norm alone, with no stagnation.  The spatial mean decouples exactly and
    is solved closed form per mode.

    This complements the conjugation pipeline: the change of frame is exact
    while the *solution* stays inside the safe cylinder, but solution
    fields with box-scale wakes (small lam and omega) lose percent-level
    accuracy to the rotation seam.  Here the per-mode systems are solved
    against the same discrete operator the residual diagnostics apply, so
    the certificate does not depend on how far the wake spreads.
    """
    if not isinstance(params, FlowParams):
        raise ConfigError("solve_rotating_oseen_direct expects FlowParams")
    grid = forcing.grid
    if grid is None:
        raise ConfigError("forcing must carry spatial coefficients")
    from scipy.sparse.linalg import LinearOperator, gmres

    lam, omega = params.lam, params.omega
    shape = (3,) + (grid.n,) * 3
    size = int(np.prod(shape))
    xi = grid.freqs
    xi_sq = grid.freq_squared
    root = np.sqrt(xi_sq)
    root[0, 0, 0] = 1.0  # mean handled separately

    def one(item):
        k, coeff = item
        f = np.ascontiguousarray(coeff)
        f_spec = np.fft.fftn(f, axes=(1, 2, 3))
        f_mean = f_spec[:, 0, 0, 0] / grid.n**3
        u_mean, dropped = _solve_mode_mean(k, f_mean, omega)

        diag_skew = 1j * omega * k - 1j * lam * xi[0]

        def matvec(flat):
            w = flat.reshape(shape)
            u_spec = w / root
            u_spec[:, 0, 0, 0] = 0.0
            u = np.fft.ifftn(u_spec, axes=(1, 2, 3))
            rot = rotation_term(Field(u, grid), check_support=False).data
            rot_spec = _leray(np.fft.fftn(rot, axes=(1, 2, 3)), grid)
            out = w + (diag_skew * u_spec - omega * rot_spec) / root
            out[:, 0, 0, 0] = 0.0
            return out.ravel()

        b = _leray(f_spec, grid) / root
        b[:, 0, 0, 0] = 0.0
        op = LinearOperator((size, size), matvec=matvec, dtype=np.complex128)
        iters = []
        try:
            w_flat, info = gmres(op, b.ravel(), rtol=tol, atol=0.0,
                                 restart=restart, maxiter=max_iter,
                                 callback=lambda _: iters.append(1),
                                 callback_type="pr_norm")
        except TypeError:  # older scipy spells the tolerance "tol"
            w_flat, info = gmres(op, b.ravel(), tol=tol, atol=0.0,
                                 restart=restart, maxiter=max_iter,
                                 callback=lambda _: iters.append(1),
                                 callback_type="pr_norm")
        u_spec = w_flat.reshape(shape) / root
        u_spec[:, 0, 0, 0] = u_mean * grid.n**3
        u = np.fft.ifftn(u_spec, axes=(1, 2, 3))

        # pressure gradient = gradient part of what the momentum balance
        # leaves over; taking the projection keeps it an exact gradient
        rot = rotation_term(Field(u, grid), check_support=False).data
        left = (1j * omega * k) * u - omega * rot - np.fft.ifftn(
            u_spec * (-xi_sq + 1j * lam * xi[0]), axes=(1, 2, 3)
        )
        g = np.fft.fftn(f - left, axes=(1, 2, 3))
        dot = xi[0] * g[0] + xi[1] * g[1] + xi[2] * g[2]
        scale = np.divide(dot, xi_sq, out=np.zeros_like(dot), where=xi_sq > 0)
        gp_spec = np.stack([xi[0] * scale, xi[1] * scale, xi[2] * scale])
        grad_p = np.fft.ifftn(gp_spec, axes=(1, 2, 3))

        # certify against the actual mode equation, not the Krylov claim
        res_spec = np.fft.fftn(left + grad_p - f, axes=(1, 2, 3))
        res_spec[:, 0, 0, 0] = 0.0  # gauged mean force
        rel = np.linalg.norm(res_spec) / max(np.linalg.norm(f_spec), 1e-300)
        if info != 0 or not np.isfinite(rel):
            raise DomainApproximationError(
                "rotation coupling solve stalled at mode %d: residual %.3e "
                "after %d iterations" % (k, rel, len(iters))
            )
        return u, grad_p, rel, len(iters), dropped

    results = ordered_map(one, list(zip(forcing.modes(), forcing.coeffs)))
    vel = TorusSeries(np.stack([r[0] for r in results]), grid)
    grad_p = TorusSeries(np.stack([r[1] for r in results]), grid)
    diag = {
        "rotating": True,
        "method": "direct",
        "steady_mean_force": max(r[4] for r in results),
        "mode_leak": 0.0,
        "mode_residuals": {k: r[2] for k, r in zip(forcing.modes(), results)},
        "mode_iterations": {k: r[3] for k, r in zip(forcing.modes(), results)},
    }
    return TPSolution(vel, grad_p, diag)


def solve_rotating_resolvent(k, forcing, params, guard_width=2, leak_tol=1e-10,
                             support_tol=DEFAULT_SUPPORT_TOL, tail_tol=3e-12,
                             diagnostics=None):
    """Single-mode rotating solve; the output must stay on the input mode.

    Builds the one-mode series e^{ikt} F, runs the general conjugation
    pipeline on a window widened by ``guard_width``, and extracts mode k.
    Off-mode output within the window beyond ``leak_tol`` (relative) means
    the discretization failed to honor the per-mode decoupling and raises.

    Caveat documented in the README: the periodic box is only invariant
    under quarter-turns about e1, so the modes k +- 4, k +- 8, ... pick up
    leak at the level of the periodic-image anisotropy (solution tails
    re-entering through box faces).  That leak is physical truncation, not
    solver error; choose ``guard_width`` so the window stays clear of
    those modes, or use axisymmetric forcing, when testing the per-mode
    decoupling itself (its size is reported separately as ``mode_leak``).
    """
    grid = forcing.grid
    k_window = abs(k) + guard_width
    coeffs = np.zeros((2 * abs(k) + 1, 3) + (grid.n,) * 3, dtype=np.complex128)
    coeffs[abs(k) + k] = forcing.data
    single = TorusSeries(coeffs, grid)
    # the body-frame velocity drags a wake that is angularly much wider than
    # the forcing, and whatever the pullback sampling cannot represent folds
    # straight into the small output window, so oversample the way back
    back_width = k_window + ladder_width(single) + 8
    sol = solve_rotating_oseen_tp(
        single,
        params,
        n_times_back=2 * back_width + 1,
        k_max_out=k_window,
        support_tol=support_tol,
        tail_tol=tail_tol,
    )
    vel = sol.velocity
    on = lq_norm(vel.coeff(k), 2)
    off = max(
        (lq_norm(vel.coeff(m), 2) for m in vel.modes() if m != k),
        default=0.0,
    )
    leak = off / on if on > 0 else 0.0
    if diagnostics is not None:
        diagnostics.update(sol.diagnostics)
        diagnostics["resolvent_leak"] = leak
    if leak > leak_tol:
        raise DomainApproximationError(
            "mode isolation failed: leak %.3e exceeds %.3e" % (leak, leak_tol)
        )
    return Field(vel.coeff(k).data.copy(), grid), Field(
        sol.pressure_gradient.coeff(k).data.copy(), grid
    )


# ---------------------------------------------------------------------------
# scaling reduction


def _require_purely_periodic(series):
    steady = lq_norm(series.coeff(0), 2)
    total = a_norm(series, 2)
    if total > 0 and steady > 1e-12 * total:
        raise ConfigError("input must be purely periodic (zero time mean)")


def rescale_purely_periodic(series, omega, support_tol=DEFAULT_SUPPORT_TOL):
    """Spatial dilation x -> omega^{-1/2} x of a purely periodic series.

    With omega > 1 the support inflates; with omega < 1 the sample points
    escape the box and wrap.  Both directions are guarded by support mass
    checks unless ``support_tol`` is None (exact on-grid mode data makes
    the dilation a pure mode relabeling, where the guard is meaningless).
    """
    if omega <= 0:
        raise ConfigError("omega must be positive")
    _require_purely_periodic(series)
    grid = series.grid
    factor = omega**-0.5
    if support_tol is not None and factor > 1.0:
        reach = 0.5 * grid.length / factor
        for k in series.modes():
            frac = support_mass_fraction(series.coeff(k), reach)
            if frac > support_tol:
                raise DomainApproximationError(
                    "dilation by %.3g wraps: mass %.3e beyond radius %.3g"
                    % (factor, frac, reach)
                )
    out = map_coefficients(series, lambda f: dilate(f, factor))
    if support_tol is not None and factor < 1.0:
        for k in out.modes():
            frac = support_mass_fraction(out.coeff(k), grid.safe_radius)
            if frac > support_tol:
                raise DomainApproximationError(
                    "rescaled mode %d escapes the safe ball (mass %.3e)" % (k, frac)
                )
    return out


# ---------------------------------------------------------------------------
# pressure reconstruction and estimate reporting


def pressure_from_gradient(grad_series):
    """Zero-mean scalar pressure whose spectral gradient matches the input."""
    grid = grad_series.grid
    xi = grid.freqs
    xi_sq = grid.freq_squared

    def one(f):
        spec = transform(f).coeffs
        dot = xi[0] * spec[0] + xi[1] * spec[1] + xi[2] * spec[2]
        p_hat = np.divide(
            -1j * dot, xi_sq, out=np.zeros_like(dot), where=xi_sq > 0
        )
        return inverse_transform(SpectralField(p_hat[np.newaxis], grid))

    return map_coefficients(grad_series, one)


@dataclass(frozen=True)
class EstimateRow:
    family: str
    term: str
    value: float
    exponents: str
    ratio: float


def _ratio(value, rhs):
    return value / rhs if rhs > 0 else 0.0


def estimate_report(solution, forcing, params, rotating=None, n_times=None):
    """Left-hand-side terms and LHS/RHS ratios of the solution estimates.

    Three families: per-mode spatial norms ("resolvent"), summed-over-modes
    algebra norms ("anorm", with the corotating derivative when the solve
    was rotating), and space-time mixed norms ("mixed").  The constants in
    the underlying inequalities are not explicit, so the ratios are the
    empirical content: bounded and refinement-stable ratios are the check.
    """
    from .embedding import mixed_norm

    if rotating is None:
        rotating = bool(solution.diagnostics.get("rotating", False))
    vel = solution.velocity
    grad_p = solution.pressure_gradient
    lam, omega, q = params.lam, params.omega, params.q
    s1, s2, s3 = params.s1, params.s2, params.s3

    grad = map_coefficients(vel, gradient)
    hess = map_coefficients(vel, lambda f: gradient(gradient(f)))
    d1 = map_coefficients(vel, lambda f: partial_deriv(f, 0))
    if rotating:
        dt_like = frame_derivative(vel)
    else:
        dt_like = time_derivative(vel)

    rows = []

    # algebra-norm family: sum over modes of spatial L^q norms
    rhs_a = a_norm(forcing, q)
    dt_name = "corotating_derivative" if rotating else "time_derivative"
    for term, value, expo in [
        (dt_name, omega * a_norm(dt_like, q), "(A,q)"),
        ("hessian", a_norm(hess, q), "(A,q)"),
        ("stream_derivative", lam * a_norm(d1, q), "(A,q)"),
        ("velocity", lam**0.5 * a_norm(vel, s1), "(A,s1)"),
        ("gradient", lam**0.25 * a_norm(grad, s2), "(A,s2)"),
        ("pressure_gradient", a_norm(grad_p, q), "(A,q)"),
    ]:
        rows.append(EstimateRow("anorm", term, value, expo, _ratio(value, rhs_a)))

    # per-mode family: worst mode of the same terms against its own forcing
    mode_rows = {}
    for k in forcing.modes():
        fk = lq_norm(forcing.coeff(k), q)
        if fk <= 1e-14 * max(rhs_a, 1e-300):
            continue
        per_term = [
            (dt_name, omega * lq_norm(dt_like.coeff(k), q), "(q)"),
            ("hessian", lq_norm(hess.coeff(k), q), "(q)"),
            ("stream_derivative", lam * lq_norm(d1.coeff(k), q), "(q)"),
            ("velocity", lam**0.5 * lq_norm(vel.coeff(k), s1), "(s1)"),
            ("gradient", lam**0.25 * lq_norm(grad.coeff(k), s2), "(s2)"),
            ("pressure_gradient", lq_norm(grad_p.coeff(k), q), "(q)"),
        ]
        for term, value, expo in per_term:
            prev = mode_rows.get(term)
            cand = (value, expo, _ratio(value, fk))
            if prev is None or cand[2] > prev[2]:
                mode_rows[term] = cand
    for term, (value, expo, ratio) in mode_rows.items():
        rows.append(EstimateRow("resolvent", term, value, expo, ratio))

    # mixed-norm family: space-time Lebesgue norms
    rhs_m = mixed_norm(forcing, q, q, n_times)
    for term, value, expo in [
        (dt_name, omega * mixed_norm(dt_like, q, q, n_times), "(q,q)"),
        ("hessian", mixed_norm(hess, q, q, n_times), "(q,q)"),
        ("stream_derivative", lam * mixed_norm(d1, q, q, n_times), "(q,q)"),
        ("velocity", lam**0.5 * mixed_norm(vel, s2, s1, n_times), "(s2,s1)"),
        ("gradient", lam**0.25 * mixed_norm(grad, s3, s2, n_times), "(s3,s2)"),
        ("pressure_gradient", mixed_norm(grad_p, q, q, n_times), "(q,q)"),
    ]:
        rows.append(EstimateRow("mixed", term, value, expo, _ratio(value, rhs_m)))
    return rows
