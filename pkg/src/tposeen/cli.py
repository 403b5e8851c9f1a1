"""Command-line front end: solves, verification suites, parameter sweeps.

Configuration is merged from three layers: built-in defaults, an optional
JSON file with nested sections, and flag overrides (flags win).  Every run
writes its artifacts into one output directory together with a manifest
listing each file with a content hash, the effective configuration, the
seed and the wall time.  Results are deterministic for a given (config,
seed); the worker count only changes timing, never output bytes.

Exit codes: 0 success, 2 configuration error, 3 domain-approximation
error, 4 non-convergence, 5 numerical failure.
"""

import argparse
import copy
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .embedding import EmbeddingParams, embedding_ratio, factorization_defect
from .errors import (
    ConfigError,
    DomainApproximationError,
    GridMismatchError,
    NonConvergenceError,
    NumericalBlowupError,
    SingularSystemError,
    SupportGuardError,
)
from .fields import Field, write_field
from .galerkin import assemble, energy_report, make_annular_basis, solve
from .grid import BoxGrid
from .nonlinear import (
    BodyMotion,
    CutoffProfile,
    FixedPointConfig,
    fixed_point_solve,
)
from .oseen import (
    FlowParams,
    estimate_report,
    solve_oseen_tp,
    solve_rotating_oseen_direct,
    solve_rotating_oseen_tp,
    solve_rotating_resolvent,
)
from .sampling import band_limited_field, bump_field, bump_series
from .torus_series import (
    TorusSeries,
    a_norm,
    product,
    read_series,
    scalar_series,
    truncate,
    write_series,
    zero_series,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_NONCONVERGENCE = 4
EXIT_NUMERICAL = 5

_SUITES = ("wiener", "embedding", "galerkin", "estimates")

# Effective-config skeleton.  Every key a file or flag may set appears here
# with its default, so the merged config is always fully populated and its
# re-serialization round-trips to itself.
_DEFAULTS = {
    "grid": {"n": 32, "length": 16.0, "k_max": 8},
    "flow": {"lam": 0.1, "omega": 1.0, "theta": 1.0, "bound": 10.0, "q": 1.25},
    "forcing": {
        "path": None,
        "amplitude": 1e-3,
        "k_max": 1,
        "mode_cut": 2,
        "cutoff": 6.0,
        "profile": "poly",
        "divergence_free": False,
        "zero_space_mean": True,
    },
    "motion": {"alpha": ["0.05"], "omega": None},
    "nonlinear": {
        "rho_exp": 0.9,
        "kappa": 1.0,
        "lambda0": 0.25,
        "epsilon": None,
        "delta": None,
        "tol": 1e-8,
        "max_iter": 30,
        "cutoff_radius": None,
        "solver": "direct",
    },
    "resolvent": {"mode": 1, "guard_width": 2, "leak_tol": 1e-10},
    "verify": {
        "count": None,
        "basis_size": 6,
        "r_in": 1.5,
        "r_out": None,
        "alpha": 1.0,
        "beta": 0.5,
        "refine": False,
    },
    "sweep": {
        "lam_grid": [0.05, 0.1, 0.2],
        "omega_rule": "upper",
        "kappa": 0.5,
        "rho_exp": 0.9,
    },
    "run": {"seed": 0, "out": None, "workers": None},
}

# flag destination -> (section, key) in the nested config
_FLAG_MAP = {
    "n": ("grid", "n"),
    "length": ("grid", "length"),
    "k_max": ("grid", "k_max"),
    "lam": ("flow", "lam"),
    "omega": ("flow", "omega"),
    "theta": ("flow", "theta"),
    "bound": ("flow", "bound"),
    "q": ("flow", "q"),
    "forcing": ("forcing", "path"),
    "amplitude": ("forcing", "amplitude"),
    "forcing_k_max": ("forcing", "k_max"),
    "divergence_free": ("forcing", "divergence_free"),
    "alpha": ("motion", "alpha"),
    "motion_omega": ("motion", "omega"),
    "rho_exp": ("nonlinear", "rho_exp"),
    "kappa": ("nonlinear", "kappa"),
    "lambda0": ("nonlinear", "lambda0"),
    "epsilon": ("nonlinear", "epsilon"),
    "tol": ("nonlinear", "tol"),
    "max_iter": ("nonlinear", "max_iter"),
    "cutoff_radius": ("nonlinear", "cutoff_radius"),
    "solver": ("nonlinear", "solver"),
    "mode": ("resolvent", "mode"),
    "guard_width": ("resolvent", "guard_width"),
    "count": ("verify", "count"),
    "basis_size": ("verify", "basis_size"),
    "refine": ("verify", "refine"),
    "lam_grid": ("sweep", "lam_grid"),
    "omega_rule": ("sweep", "omega_rule"),
    "sweep_kappa": ("sweep", "kappa"),
    "seed": ("run", "seed"),
    "out": ("run", "out"),
    "workers": ("run", "workers"),
}


@dataclass
class RunConfig:
    """Validated, fully populated configuration for one run."""

    command: str
    suite: str
    values: dict
    grid: BoxGrid
    out_dir: str
    seed: int

    def flow_params(self):
        f = self.values["flow"]
        return FlowParams(f["lam"], f["omega"], theta=f["theta"],
                          bound=f["bound"], q=f["q"])

    def fixed_point_config(self):
        nl = self.values["nonlinear"]
        return FixedPointConfig(
            q=self.values["flow"]["q"],
            rho_exp=nl["rho_exp"],
            theta=self.values["flow"]["theta"],
            kappa=nl["kappa"],
            lambda0=nl["lambda0"],
            epsilon=nl["epsilon"],
            delta=nl["delta"],
            tol=nl["tol"],
            max_iter=nl["max_iter"],
            k_max=self.values["grid"]["k_max"],
            bound=self.values["flow"]["bound"],
        )

    def motion(self):
        """Body motion from the alpha coefficients; omega defaults into the
        contraction window (half of kappa * lam^rho_exp) when unset."""
        raw = self.values["motion"]["alpha"]
        try:
            coeffs = [complex(str(c).replace(" ", "")) for c in raw]
        except ValueError:
            raise ConfigError("motion.alpha entries must be complex literals")
        alpha = scalar_series(coeffs)
        omega = self.values["motion"]["omega"]
        if omega is None:
            nl = self.values["nonlinear"]
            lam = alpha.coeff(0).real
            omega = 0.5 * nl["kappa"] * lam ** nl["rho_exp"]
        return BodyMotion(alpha, float(omega))

    def forcing_series(self, rng, k_max=None):
        """Forcing from file, or the documented seeded generator: band-limited
        bumps inside the safe ball, scaled to the requested A-norm."""
        fc = self.values["forcing"]
        if fc["path"] is not None:
            return read_series(fc["path"], self.grid)
        if k_max is None:
            k_max = fc["k_max"]
        if fc["amplitude"] == 0.0:
            return zero_series(self.grid, k_max)
        f = bump_series(
            self.grid,
            rng,
            k_max,
            mode_cut=fc["mode_cut"],
            cutoff=fc["cutoff"],
            profile=fc["profile"],
            divergence_free=fc["divergence_free"],
            zero_space_mean=fc["zero_space_mean"] and not fc["divergence_free"],
        )
        norm = a_norm(f, self.values["flow"]["q"])
        return f * (fc["amplitude"] / norm)


def _merge(dst, src, path=""):
    for key, val in src.items():
        where = "%s.%s" % (path, key) if path else key
        if key not in dst:
            raise ConfigError("unknown config key %r" % where)
        if isinstance(dst[key], dict):
            if not isinstance(val, dict):
                raise ConfigError("config key %r must be a section" % where)
            _merge(dst[key], val, where)
        else:
            dst[key] = val


def _coerce_numbers(values):
    # json gives ints where floats are meant; normalize the numeric leaves
    # so round-tripping through a file cannot change types
    for section, keys in values.items():
        for key, val in keys.items():
            if isinstance(val, bool) or val is None:
                continue
            default = _DEFAULTS[section][key]
            if isinstance(default, float) and isinstance(val, int):
                keys[key] = float(val)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tposeen",
        description="Spectral solves and verification suites for "
        "time-periodic flow around a translating, rotating body.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="output directory (default runs/<command>)")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int,
                       help="worker pool size (default: TPOSEEN_WORKERS or CPU count)")
        p.add_argument("--n", type=int, help="grid points per axis")
        p.add_argument("--length", type=float, help="box side length")
        p.add_argument("--k-max", dest="k_max", type=int, help="time mode window")
        p.add_argument("--q", type=float)

    def flow(p):
        p.add_argument("--lam", type=float, help="translational speed")
        p.add_argument("--omega", type=float, help="angular speed")
        p.add_argument("--theta", type=float)
        p.add_argument("--bound", type=float)

    def forcing(p):
        p.add_argument("--forcing", help="forcing series file (.tps)")
        p.add_argument("--amplitude", type=float,
                       help="A-norm of the generated forcing (0 for zero forcing)")
        p.add_argument("--forcing-k-max", dest="forcing_k_max", type=int)
        p.add_argument("--divergence-free", dest="divergence_free",
                       action="store_const", const=True)

    p = sub.add_parser("solve-oseen", help="fixed-frame time-periodic solve")
    common(p); flow(p); forcing(p)

    p = sub.add_parser("solve-rotating", help="rotating-frame time-periodic solve")
    common(p); flow(p); forcing(p)
    p.add_argument("--solver", choices=("direct", "conjugation"))

    p = sub.add_parser("solve-resolvent", help="single time mode, rotating frame")
    common(p); flow(p); forcing(p)
    p.add_argument("--mode", type=int, help="time mode k")
    p.add_argument("--guard-width", dest="guard_width", type=int)

    p = sub.add_parser("solve-nonlinear", help="fixed-point solve at small data")
    common(p); forcing(p)
    p.add_argument("--alpha", type=_complex_list,
                   help="comma-separated alpha coefficients, ascending mode")
    p.add_argument("--motion-omega", dest="motion_omega", type=float,
                   help="spin rate (default: inside the contraction window)")
    p.add_argument("--rho-exp", dest="rho_exp", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--cutoff-radius", dest="cutoff_radius", type=float)
    p.add_argument("--solver", choices=("direct", "conjugation"))
    p.add_argument("--theta", type=float)
    p.add_argument("--bound", type=float)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=_SUITES)
    common(p); flow(p)
    p.add_argument("--count", type=int, help="corpus size (suite default)")
    p.add_argument("--basis-size", dest="basis_size", type=int)
    p.add_argument("--refine", action="store_const", const=True,
                   help="re-run one point at doubled resolution")

    p = sub.add_parser("sweep", help="parameter sweep over a lam grid")
    common(p); flow(p); forcing(p)
    p.add_argument("--lam-grid", dest="lam_grid", type=_float_list,
                   help="comma-separated lam values")
    p.add_argument("--omega-rule", dest="omega_rule",
                   choices=("upper", "lower", "both"))
    p.add_argument("--sweep-kappa", dest="sweep_kappa", type=float)
    return parser


def _complex_list(text):
    return [c for c in text.split(",") if c]


def _float_list(text):
    return [float(c) for c in text.split(",") if c]


def parse_config(argv=None):
    """Merge defaults, config file and flags into a validated RunConfig."""
    args = build_parser().parse_args(argv)
    command = args.command
    suite = getattr(args, "suite", None)

    values = copy.deepcopy(_DEFAULTS)
    if command == "verify" and suite == "galerkin":
        # the ring-window basis needs the finer default grid to keep its
        # outside-the-annulus amplitude below the mask tolerance
        values["grid"]["n"] = 48
    if args.config:
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config file: %s" % exc)
        except json.JSONDecodeError as exc:
            raise ConfigError("config file is not valid JSON: %s" % exc)
        _merge(values, file_values)
    for dest, (section, key) in _FLAG_MAP.items():
        val = getattr(args, dest, None)
        if val is not None:
            values[section][key] = val
    _coerce_numbers(values)

    grid = BoxGrid(values["grid"]["n"], values["grid"]["length"])
    if values["grid"]["k_max"] < 0:
        raise ConfigError("grid.k_max must be nonnegative")

    out = values["run"]["out"]
    if out is None:
        out = os.path.join("runs", command if suite is None else
                           "%s-%s" % (command, suite))
        values["run"]["out"] = out
    out_dir = os.path.abspath(out)
    values["run"]["out"] = out_dir
    if values["forcing"]["path"] is not None:
        path = os.path.abspath(values["forcing"]["path"])
        if not os.path.exists(path):
            raise ConfigError("forcing file does not exist: %s" % path)
        values["forcing"]["path"] = path

    cfg = RunConfig(command, suite or "", values, grid, out_dir,
                    int(values["run"]["seed"]))

    # validate the theorem-hypothesis windows before dispatch, so a bad
    # config never starts a long run
    if command in ("solve-oseen", "solve-rotating", "solve-resolvent"):
        cfg.flow_params()
    elif command == "solve-nonlinear":
        fp = cfg.fixed_point_config()
        motion = cfg.motion()
        if not fp.window_ok(motion.lam, motion.omega):
            raise ConfigError(
                "parameter window violated: need lam in (0, %g) and omega in "
                "(%g, %g), got lam=%g omega=%g"
                % (fp.lambda0, motion.lam ** 2 / fp.theta,
                   fp.kappa * motion.lam ** fp.rho_exp, motion.lam,
                   motion.omega)
            )
    elif command == "verify" and suite == "embedding":
        v = cfg.values["verify"]
        EmbeddingParams(v["alpha"], v["beta"], values["flow"]["q"], 1.0)
    return cfg


# ---------------------------------------------------------------------------
# output plumbing


class RunWriter:
    """Collects output files and finishes with the hashed manifest."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.outputs = {}
        self.diagnostics = {}
        self.started = time.time()
        os.makedirs(cfg.out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.cfg.out_dir, name)

    def _register(self, name):
        digest = hashlib.sha256()
        with open(self.path(name), "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                digest.update(chunk)
        self.outputs[name] = digest.hexdigest()

    def write_csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        self._register(name)

    def write_series(self, name, series):
        write_series(series, self.path(name))
        self._register(name)

    def write_field(self, name, field):
        write_field(field, self.path(name))
        self._register(name)

    def finish(self):
        import scipy

        manifest = {
            "command": self.cfg.command,
            "suite": self.cfg.suite,
            "config": self.cfg.values,
            "versions": {
                "tposeen": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "seed": self.cfg.seed,
            "wall_seconds": round(time.time() - self.started, 3),
            "outputs": self.outputs,
            "diagnostics": self.diagnostics,
        }
        with open(self.path("manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        return manifest


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return value


def _estimate_rows(rows):
    # family-qualified term name keeps the documented four-column layout
    return [("%s.%s" % (r.family, r.term), r.value, r.exponents, r.ratio)
            for r in rows]


# ---------------------------------------------------------------------------
# command handlers


def _cmd_solve_oseen(cfg, writer):
    params = cfg.flow_params()
    rng = np.random.default_rng(cfg.seed)
    f = cfg.forcing_series(rng)
    sol = solve_oseen_tp(f, params)
    writer.write_series("velocity.tps", sol.velocity)
    writer.write_series("pressure_gradient.tps", sol.pressure_gradient)
    if a_norm(f, params.q) > 0:
        writer.write_csv(
            "estimates.csv",
            ("term_name", "value", "exponent_pair", "ratio"),
            _estimate_rows(estimate_report(sol, f, params)),
        )
    writer.diagnostics.update(sol.diagnostics)
    return EXIT_OK


def _cmd_solve_rotating(cfg, writer):
    params = cfg.flow_params()
    rng = np.random.default_rng(cfg.seed)
    f = cfg.forcing_series(rng)
    if cfg.values["nonlinear"]["solver"] == "conjugation":
        sol = solve_rotating_oseen_tp(f, params)
    else:
        sol = solve_rotating_oseen_direct(f, params)
    writer.write_series("velocity.tps", sol.velocity)
    writer.write_series("pressure_gradient.tps", sol.pressure_gradient)
    if a_norm(f, params.q) > 0:
        writer.write_csv(
            "estimates.csv",
            ("term_name", "value", "exponent_pair", "ratio"),
            _estimate_rows(estimate_report(sol, f, params)),
        )
    writer.diagnostics.update(sol.diagnostics)
    return EXIT_OK


def _cmd_solve_resolvent(cfg, writer):
    params = cfg.flow_params()
    rng = np.random.default_rng(cfg.seed)
    fc = cfg.values["forcing"]
    k = cfg.values["resolvent"]["mode"]
    f = bump_field(cfg.grid, rng, mode_cut=fc["mode_cut"], cutoff=fc["cutoff"],
                   profile=fc["profile"],
                   divergence_free=fc["divergence_free"])
    diag = {}
    vel, grad_p = solve_rotating_resolvent(
        k, f, params,
        guard_width=cfg.values["resolvent"]["guard_width"],
        leak_tol=cfg.values["resolvent"]["leak_tol"],
        diagnostics=diag,
    )
    writer.write_field("velocity_mode.tpf", vel)
    writer.write_field("pressure_gradient_mode.tpf", grad_p)
    writer.diagnostics.update({"mode": k, "resolvent_leak": diag["resolvent_leak"]})
    return EXIT_OK


def _trace_rows(trace):
    return [(r["iter"], r["update_xnorm"],
             r["contraction_ratio"] if r["contraction_ratio"] is not None else "",
             r["residual"]) for r in trace]


def _cmd_solve_nonlinear(cfg, writer):
    fp = cfg.fixed_point_config()
    motion = cfg.motion()
    rng = np.random.default_rng(cfg.seed)
    f = cfg.forcing_series(rng, k_max=min(cfg.values["forcing"]["k_max"],
                                          fp.k_max))
    radius = cfg.values["nonlinear"]["cutoff_radius"]
    profile = CutoffProfile(radius) if radius is not None else None
    header = ("iter", "update_xnorm", "contraction_ratio", "residual")
    try:
        result = fixed_point_solve(
            f, motion, fp, profile=profile,
            solver=cfg.values["nonlinear"]["solver"],
        )
    except NonConvergenceError as exc:
        # the trace is part of the contract even when the iteration fails
        writer.write_csv("trace.csv", header, _trace_rows(exc.trace))
        writer.diagnostics["error"] = str(exc)
        writer.finish()
        raise
    writer.write_csv("trace.csv", header, _trace_rows(result.trace))
    writer.write_series("velocity.tps", result.velocity)
    writer.write_series("lifting.tps", result.lifting)
    writer.write_series("total_velocity.tps", result.total_velocity())
    writer.write_series("pressure_gradient.tps", result.pressure_gradient)
    writer.diagnostics.update(result.diagnostics)
    writer.diagnostics["converged"] = result.converged
    return EXIT_OK if result.converged else EXIT_NONCONVERGENCE


def _random_series(grid, rng, k_max, decay=0.6):
    n = grid.n
    shape = (2 * k_max + 1, 3, n, n, n)
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    weights = decay ** np.abs(np.arange(-k_max, k_max + 1))
    return TorusSeries(coeffs * weights.reshape(-1, 1, 1, 1, 1), grid)


def _cmd_verify_wiener(cfg, writer):
    count = cfg.values["verify"]["count"] or 100
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.grid
    rows = []
    violations = 0
    for i in range(count):
        p, q = rng.uniform(2.2, 6.0, size=2)
        r = p * q / (p + q)
        f = _random_series(grid, rng, int(rng.integers(1, 3)))
        g = _random_series(grid, rng, int(rng.integers(1, 3)))
        lhs = a_norm(product(f, g), r)
        rhs = a_norm(f, p) * a_norm(g, q)
        ok = lhs <= rhs * (1.0 + 1e-12)
        violations += 0 if ok else 1
        rows.append((i, "holder", r, p, q, lhs, rhs, lhs / rhs, ok))

        theta = rng.uniform(0.2, 0.8)
        pi, qi = sorted(rng.uniform(1.2, 6.0, size=2))
        ri = 1.0 / ((1.0 - theta) / pi + theta / qi)
        lhs_i = a_norm(f, ri)
        rhs_i = a_norm(f, pi) ** (1.0 - theta) * a_norm(f, qi) ** theta
        ok_i = lhs_i <= rhs_i * (1.0 + 1e-12)
        violations += 0 if ok_i else 1
        rows.append((i, "interpolation", ri, pi, qi, lhs_i, rhs_i,
                     lhs_i / rhs_i, ok_i))
    writer.write_csv(
        "wiener.csv",
        ("pair", "kind", "r", "p", "q", "lhs", "rhs", "ratio", "ok"),
        rows,
    )
    writer.diagnostics["violations"] = violations
    if violations:
        raise NumericalBlowupError(
            "%d Wiener-algebra inequality violations" % violations
        )
    return EXIT_OK


def _cmd_verify_embedding(cfg, writer):
    count = cfg.values["verify"]["count"] or 50
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.grid
    q = cfg.values["flow"]["q"]
    alpha = cfg.values["verify"]["alpha"]
    beta = cfg.values["verify"]["beta"]
    rows = []
    worst_defect = 0.0
    fc = cfg.values["forcing"]
    for i in range(count):
        omega = float(rng.uniform(0.5, 2.0))
        series = bump_series(grid, rng, 2, mode_cut=fc["mode_cut"],
                             cutoff=fc["cutoff"], profile=fc["profile"],
                             purely_periodic=True, zero_space_mean=True)
        params = EmbeddingParams(alpha, beta, q, omega)
        parts = embedding_ratio(series, params, breakdown=True)
        rows.append((i, alpha, beta, omega, parts["lhs"], parts["rhs"],
                     parts["ratio"]))
        if i < 5:
            worst_defect = max(worst_defect,
                               factorization_defect(series, omega, alpha))
    writer.write_csv(
        "embedding.csv",
        ("field_id", "alpha", "beta", "omega", "lhs", "rhs", "ratio"),
        rows,
    )
    ratios = [r[-1] for r in rows]
    writer.diagnostics["max_ratio"] = max(ratios)
    writer.diagnostics["factorization_defect"] = worst_defect
    if not all(np.isfinite(ratios)):
        raise NumericalBlowupError("embedding ratio is not finite")
    return EXIT_OK


def _cmd_verify_galerkin(cfg, writer):
    count = cfg.values["verify"]["count"] or 20
    rng = np.random.default_rng(cfg.seed)
    v = cfg.values["verify"]
    basis = make_annular_basis(cfg.grid, rng, v["basis_size"],
                               r_in=v["r_in"], r_out=v["r_out"])
    rows = []
    for i in range(count):
        lam = float(rng.uniform(0.05, 0.5))
        omega = float(rng.uniform(0.2, 2.0))
        k = int(rng.integers(0, 4))
        forcing = band_limited_field(cfg.grid, rng)
        system = assemble(basis, lam, omega, k, forcing)
        xi = solve(system)
        resid = np.linalg.norm(system.rhs - system.matrix @ xi)
        resid /= np.linalg.norm(system.rhs)
        report = energy_report(system, xi, forcing, basis)
        rows.append((i, lam, omega, k, system.skewness(), system.condition(),
                     resid, report["energy_identity"],
                     report["skew_quadratic"], report["residual_pairing"],
                     report["sobolev_ratio"]))
    writer.write_csv(
        "galerkin.csv",
        ("system", "lam", "omega", "k", "skewness", "condition",
         "solve_residual", "energy_identity", "skew_quadratic",
         "residual_pairing", "sobolev_ratio"),
        rows,
    )
    writer.diagnostics["max_skewness"] = max(r[4] for r in rows)
    writer.diagnostics["divergence_defect"] = basis.divergence_defect()
    return EXIT_OK


def _estimate_sweep_points(cfg):
    sw = cfg.values["sweep"]
    theta = cfg.values["flow"]["theta"]
    points = []
    for lam in sw["lam_grid"]:
        lower = 1.1 * lam ** 2 / theta
        upper = sw["kappa"] * lam ** sw["rho_exp"]
        if sw["omega_rule"] in ("lower", "both"):
            points.append((lam, lower))
        if sw["omega_rule"] in ("upper", "both"):
            points.append((lam, upper))
    return points


def _solve_point(cfg, lam, omega, f):
    flow = cfg.values["flow"]
    params = FlowParams(lam, omega, theta=flow["theta"], bound=flow["bound"],
                        q=flow["q"])
    sol = solve_rotating_oseen_direct(f, params)
    return params, sol


def _cmd_verify_estimates(cfg, writer):
    cfg.values["sweep"]["omega_rule"] = "both"
    rng = np.random.default_rng(cfg.seed)
    f = cfg.forcing_series(rng)
    rows = []
    family_max = {}
    for lam, omega in _estimate_sweep_points(cfg):
        params, sol = _solve_point(cfg, lam, omega, f)
        for r in estimate_report(sol, f, params):
            rows.append((lam, omega, "%s.%s" % (r.family, r.term), r.value,
                         r.exponents, r.ratio))
            key = r.family
            family_max[key] = max(family_max.get(key, 0.0), r.ratio)
    writer.write_csv(
        "estimates.csv",
        ("lam", "omega", "term_name", "value", "exponent_pair", "ratio"),
        rows,
    )
    writer.diagnostics["family_max"] = family_max

    if cfg.values["verify"]["refine"]:
        # one point, doubled resolution, as a refinement stability probe
        lam, omega = _estimate_sweep_points(cfg)[0]
        fine = BoxGrid(2 * cfg.grid.n, cfg.grid.length)
        fine_cfg = copy.deepcopy(cfg)
        fine_cfg.grid = fine
        fine_cfg.values["grid"]["n"] = fine.n
        f2 = fine_cfg.forcing_series(np.random.default_rng(cfg.seed))
        params, sol = _solve_point(cfg, lam, omega, f2)
        coarse = {(r[2]): r[5] for r in rows if r[0] == lam and r[1] == omega}
        drift = 0.0
        for r in estimate_report(sol, f2, params):
            name = "%s.%s" % (r.family, r.term)
            base = coarse.get(name)
            if base and base > 0:
                drift = max(drift, abs(r.ratio - base) / base)
        writer.diagnostics["refinement_drift"] = drift
    return EXIT_OK


def _cmd_sweep(cfg, writer):
    rng = np.random.default_rng(cfg.seed)
    f = cfg.forcing_series(rng)
    rows = []
    for lam, omega in _estimate_sweep_points(cfg):
        try:
            params, sol = _solve_point(cfg, lam, omega, f)
        except (DomainApproximationError, ConfigError) as exc:
            rows.append((lam, omega, False, "", "", "", "", str(exc)))
            continue
        by_family = {}
        for r in estimate_report(sol, f, params):
            by_family[r.family] = max(by_family.get(r.family, 0.0), r.ratio)
        resid = max(sol.diagnostics["mode_residuals"].values())
        rows.append((lam, omega, True, resid, by_family.get("anorm", ""),
                     by_family.get("resolvent", ""), by_family.get("mixed", ""),
                     ""))
    writer.write_csv(
        "sweep.csv",
        ("lam", "omega", "converged", "linear_residual", "anorm_ratio",
         "resolvent_ratio", "mixed_ratio", "error"),
        rows,
    )
    return EXIT_OK


_HANDLERS = {
    "solve-oseen": _cmd_solve_oseen,
    "solve-rotating": _cmd_solve_rotating,
    "solve-resolvent": _cmd_solve_resolvent,
    "solve-nonlinear": _cmd_solve_nonlinear,
    "sweep": _cmd_sweep,
}

_VERIFY_HANDLERS = {
    "wiener": _cmd_verify_wiener,
    "embedding": _cmd_verify_embedding,
    "galerkin": _cmd_verify_galerkin,
    "estimates": _cmd_verify_estimates,
}


def run(cfg):
    """Dispatch a validated config; returns the exit code."""
    if cfg.values["run"]["workers"] is not None:
        os.environ["TPOSEEN_WORKERS"] = str(int(cfg.values["run"]["workers"]))
    if cfg.command == "verify":
        handler = _VERIFY_HANDLERS[cfg.suite]
    else:
        handler = _HANDLERS[cfg.command]
    writer = RunWriter(cfg)
    status = handler(cfg, writer)
    writer.finish()
    return status


def main(argv=None):
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except (ConfigError, GridMismatchError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (DomainApproximationError, SupportGuardError) as exc:
        print("domain approximation error: %s" % exc, file=sys.stderr)
        return EXIT_DOMAIN
    except NonConvergenceError as exc:
        print("non-convergence: %s" % exc, file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (NumericalBlowupError, SingularSystemError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
