"""Command-line front end.

One subcommand per equation, shared flags, reproducible runs: every output
CSV embeds a hash of the full configuration, and a metadata sidecar echoes
the configuration so a run can be reconstructed from its outputs alone.
"""

import argparse
import csv
import hashlib
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .core import Grid1D
from .errors import (BlowupAtTime, ChartBreakdown, GrassflowError,
                     IntegrationBlowup, ShockProximity)
from .graphflows import (GraphField, InitialProfile, inviscid_burgers_eval,
                         upwind_oracle)
from .integrable import (kdv_fredholm_solve, nls_fredholm_solve,
                         split_step_kdv, split_step_nls)
from .quotient import (EllipticCoefficients, QuotientCoefficients,
                       elliptic_quotient_solve, quotient_residual,
                       quotient_solve)
from .smoluchowski import (MassDensity, SmolCoefficients, direct_smol_oracle,
                           constant_kernel_solve, exponential_density,
                           general_smol_residual, general_smol_solve,
                           m0_constant_kernel, pre_laplace_burgers_residual,
                           pre_laplace_burgers_solve)
from .spde import (BrownianSheetModes, SpdeParams, sech_ridge_initial,
                   spde_direct_run, spde_poppe_run)

EQUATIONS = ("kdv", "nls", "smol-const", "smol-general", "prelaplace",
             "burgers", "spde", "quotient", "elliptic")

SPECTRAL_EQUATIONS = ("kdv", "nls", "spde", "quotient")


@dataclass
class RunConfig:
    """Complete description of one solver run."""

    equation: str
    preset: str = ""
    grid_n: int = 256
    domain_l: float = 10.0
    t_final: float = 1.0
    dt: float = 1e-3
    seed: int = 0
    quadrature: str = "riemann-left"
    out: str = "."
    threads: int = 1
    compare_oracle: bool = True
    profile: str = ""
    nu: float = 1.0
    checkpoints: int = 11
    panels: int = 256


PRESETS = {
    ("kdv", "paper"): dict(grid_n=256, domain_l=10.0, dt=1e-4, t_final=15.0,
                           profile="kdv-paper"),
    ("nls", "paper"): dict(grid_n=256, domain_l=40.0, dt=1e-2, t_final=100.0,
                           profile="nls-paper"),
    ("spde", "paper"): dict(grid_n=32, domain_l=2.0 * np.pi, t_final=0.007,
                            dt=0.007 / 256, profile="sech-ridge"),
    ("smol-const", "paper"): dict(grid_n=1024, domain_l=40.0, t_final=2.0,
                                  dt=1e-3, profile="exp"),
}

DEFAULT_PROFILES = {
    "kdv": "kdv-paper", "nls": "nls-paper", "smol-const": "exp",
    "smol-general": "exp", "prelaplace": "exp", "burgers": "linear",
    "spde": "sech-ridge", "quotient": "gaussian", "elliptic": "reciprocal",
}


def apply_preset(config: RunConfig, overridden=()) -> RunConfig:
    if not config.preset:
        return config
    key = (config.equation, config.preset)
    if key not in PRESETS:
        raise SystemExit(f"unknown preset {config.preset!r} for "
                         f"{config.equation}")
    for name, value in PRESETS[key].items():
        if name not in overridden:
            setattr(config, name, value)
    return config


def validate(config: RunConfig) -> list:
    """Every violated precondition, one human-readable line each."""
    problems = []
    if config.equation not in EQUATIONS:
        problems.append(f"unknown equation {config.equation!r}")
    if config.grid_n < 2:
        problems.append("grid-n must be at least 2")
    if config.equation in SPECTRAL_EQUATIONS and \
            (config.grid_n & (config.grid_n - 1)) != 0:
        problems.append("grid-n must be a power of two (DFT restriction)")
    if config.domain_l <= 0:
        problems.append("domain-l must be positive")
    if config.t_final <= 0:
        problems.append("t-final must be positive")
    if config.dt <= 0:
        problems.append("dt must be positive")
    if config.quadrature not in ("riemann-left", "trapezoid"):
        problems.append(f"unknown quadrature {config.quadrature!r}")
    if config.threads < 1:
        problems.append("threads must be at least 1")
    if config.seed < 0:
        problems.append("seed must be non-negative")
    if config.checkpoints < 2:
        problems.append("checkpoints must be at least 2")
    if config.panels < 2:
        problems.append("panels must be at least 2")
    if config.equation == "prelaplace" and config.nu <= 0:
        problems.append("nu must be positive")
    return problems


# ---------------------------------------------------------------------------
# serialisation


def _fmt(value) -> str:
    if isinstance(value, float) or isinstance(value, np.floating):
        return format(float(value), ".17g")
    return str(value)


def config_hash(config: RunConfig) -> str:
    # the output location is not part of the run's identity
    blob = ";".join(f"{k}={_fmt(v)}"
                    for k, v in sorted(asdict(config).items()) if k != "out")
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_table(path: str, header, rows, chash: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={chash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_metadata(config: RunConfig, chash: str, extra=None):
    path = os.path.join(config.out, f"{config.equation}_metadata.txt")
    with open(path, "w", newline="\n") as fh:
        fh.write(f"config_hash = {chash}\n")
        fh.write(f"version = {__version__}\n")
        for k, v in sorted(asdict(config).items()):
            fh.write(f"{k} = {_fmt(v)}\n")
        for k, v in sorted((extra or {}).items()):
            fh.write(f"{k} = {_fmt(v)}\n")


def _field_rows(xs, t, values, dets=None, residual=np.nan):
    vals = np.asarray(values, dtype=complex)
    dets = np.asarray(dets) if dets is not None \
        else np.full(len(xs), np.nan)
    for i, x in enumerate(xs):
        yield (x, t, vals[i].real, vals[i].imag, np.abs(dets[i]), residual)

FIELD_HEADER = ("x", "t", "value_real", "value_imag", "det_track", "residual")


# ---------------------------------------------------------------------------
# initial profiles


def profile_samples(name: str, x: np.ndarray) -> np.ndarray:
    table = {
        "kdv-paper": lambda: -0.5 * np.cosh(x / 20.0),
        "nls-paper": lambda: 0.5 * np.cosh(x / 40.0),
        "gaussian": lambda: np.exp(-x ** 2),
        "exp": lambda: np.exp(-x),
    }
    if name not in table:
        raise SystemExit(f"unknown initial profile {name!r}")
    return table[name]()


BURGERS_PROFILES = {
    "linear": InitialProfile(lambda a: a, lambda a: np.eye(1)),
    "const": InitialProfile(lambda a: np.ones_like(np.atleast_1d(a)),
                            lambda a: np.zeros((1, 1))),
    "sin": InitialProfile(lambda a: np.sin(a),
                          lambda a: np.atleast_2d(np.cos(a))),
    "neg-tanh": InitialProfile(lambda a: -np.tanh(a),
                               lambda a: np.atleast_2d(
                                   -1.0 / np.cosh(a) ** 2)),
}


# ---------------------------------------------------------------------------
# per-equation runners


def _checkpoint_steps(config: RunConfig):
    total = int(round(config.t_final / config.dt))
    idx = sorted({int(round(j * total / (config.checkpoints - 1)))
                  for j in range(config.checkpoints)})
    return total, idx


def run_kdv(config: RunConfig, chash: str) -> dict:
    grid = Grid1D(-config.domain_l / 2, config.domain_l / 2, config.grid_n,
                  kind="periodic")
    p0 = profile_samples(config.profile, grid.nodes)
    total, idx = _checkpoint_steps(config)
    poppe_rows, det_rows, diff_rows, direct_rows = [], [], [], []
    results = {}
    for m in idx:
        t = m * config.dt
        res = kdv_fredholm_solve(p0, grid, t, config.quadrature,
                                 threads=config.threads)
        results[m] = res
        poppe_rows.extend(_field_rows(grid.nodes, t, res.values,
                                      res.det_track))
        det_rows.extend((x, t, abs(d))
                        for x, d in zip(grid.nodes, res.det_track))
    out = config.out
    write_table(os.path.join(out, "kdv_poppe.csv"), FIELD_HEADER,
                poppe_rows, chash)
    write_table(os.path.join(out, "kdv_det.csv"),
                ("x", "t", "det_abs"), det_rows, chash)
    extra = {"sup_difference": np.nan}
    if config.compare_oracle:
        u0 = np.real(results[0].values)
        direct = split_step_kdv(u0, grid, config.dt, total, checkpoints=idx)
        sup = 0.0
        for m in idx:
            t = m * config.dt
            direct_rows.extend(_field_rows(grid.nodes, t, direct[m]))
            gap = np.abs(np.real(results[m].values) - direct[m])
            diff_rows.extend((x, t, d) for x, d in zip(grid.nodes, gap))
            sup = max(sup, float(np.max(gap)))
        write_table(os.path.join(out, "kdv_direct.csv"), FIELD_HEADER,
                    direct_rows, chash)
        write_table(os.path.join(out, "kdv_difference.csv"),
                    ("x", "t", "difference"), diff_rows, chash)
        extra["sup_difference"] = sup
    return extra


def run_nls(config: RunConfig, chash: str) -> dict:
    grid = Grid1D(-config.domain_l / 2, config.domain_l / 2, config.grid_n,
                  kind="periodic")
    p0 = profile_samples(config.profile, grid.nodes)
    total, idx = _checkpoint_steps(config)
    poppe_rows, det_rows, diff_rows, direct_rows = [], [], [], []
    results = {}
    min_det = np.inf
    for m in idx:
        t = m * config.dt
        res = nls_fredholm_solve(p0, grid, t, config.quadrature,
                                 threads=config.threads)
        results[m] = res
        poppe_rows.extend(_field_rows(grid.nodes, t, res.values,
                                      res.det_track))
        det_rows.extend((x, t, abs(d))
                        for x, d in zip(grid.nodes, res.det_track))
        min_det = min(min_det, float(np.min(np.abs(res.det_track))))
    out = config.out
    write_table(os.path.join(out, "nls_poppe.csv"), FIELD_HEADER,
                poppe_rows, chash)
    write_table(os.path.join(out, "nls_det.csv"),
                ("x", "t", "det_abs"), det_rows, chash)
    extra = {"min_abs_det": min_det, "sup_difference": np.nan}
    if config.compare_oracle:
        u0 = results[0].values
        direct = split_step_nls(u0, grid, config.dt, total, checkpoints=idx)
        sup = 0.0
        for m in idx:
            t = m * config.dt
            direct_rows.extend(_field_rows(grid.nodes, t, direct[m]))
            gap = np.abs(results[m].values - direct[m])
            diff_rows.extend((x, t, d) for x, d in zip(grid.nodes, gap))
            sup = max(sup, float(np.max(gap)))
        write_table(os.path.join(out, "nls_direct.csv"), FIELD_HEADER,
                    direct_rows, chash)
        write_table(os.path.join(out, "nls_difference.csv"),
                    ("x", "t", "difference"), diff_rows, chash)
        extra["sup_difference"] = sup
    return extra


def run_smol_const(config: RunConfig, chash: str) -> dict:
    grid = Grid1D(0.0, config.domain_l, config.grid_n, kind="closed")
    if config.profile == "exp":
        g0 = exponential_density(grid, 1.0, 1.0)
    else:
        g0 = MassDensity(grid=grid,
                         values=profile_samples(config.profile, grid.nodes))
    gt = constant_kernel_solve(g0, config.t_final)
    rows = list(_field_rows(grid.nodes, config.t_final, gt.values))
    write_table(os.path.join(config.out, "smol-const_poppe.csv"),
                FIELD_HEADER, rows, chash)
    extra = {"m0": gt.m0, "m1": gt.m1,
             "m0_closed_form": m0_constant_kernel(g0.m0, config.t_final)}
    if config.compare_oracle:
        direct = direct_smol_oracle(g0, config.t_final, config.dt)
        gap = np.abs(gt.values - direct.values)
        write_table(os.path.join(config.out, "smol-const_direct.csv"),
                    FIELD_HEADER,
                    list(_field_rows(grid.nodes, config.t_final,
                                     direct.values)), chash)
        write_table(os.path.join(config.out, "smol-const_difference.csv"),
                    ("x", "t", "difference"),
                    [(x, config.t_final, d)
                     for x, d in zip(grid.nodes, gap)], chash)
        extra["sup_difference"] = float(np.max(gap))
    return extra


def run_smol_general(config: RunConfig, chash: str) -> dict:
    grid = Grid1D(0.0, config.domain_l, config.grid_n, kind="closed")
    g0 = MassDensity(grid=grid,
                     values=profile_samples(config.profile, grid.nodes))
    if config.preset == "constant-kernel":
        coeffs = SmolCoefficients(b0_delta=-0.5, include_loss=True)
    else:
        coeffs = SmolCoefficients(d_poly=(-1.0,))
    gt = general_smol_solve(coeffs, g0, config.t_final)
    residual = general_smol_residual(coeffs, g0, config.t_final,
                                     dt=config.dt)
    rows = list(_field_rows(grid.nodes, config.t_final, gt.values,
                            residual=residual))
    write_table(os.path.join(config.out, "smol-general_poppe.csv"),
                FIELD_HEADER, rows, chash)
    return {"pde_residual": residual, "m0": gt.m0, "m1": gt.m1}


def run_prelaplace(config: RunConfig, chash: str) -> dict:
    grid = Grid1D(0.0, config.domain_l, config.grid_n, kind="closed")
    q0 = profile_samples(config.profile, grid.nodes)
    g, g_init = pre_laplace_burgers_solve(q0, grid, config.nu,
                                          config.t_final)
    residual = pre_laplace_burgers_residual(q0, grid, config.nu,
                                            config.t_final, config.dt)
    rows = list(_field_rows(grid.nodes, config.t_final, g,
                            residual=residual))
    rows.extend(_field_rows(grid.nodes, 0.0, g_init, residual=residual))
    write_table(os.path.join(config.out, "prelaplace_poppe.csv"),
                FIELD_HEADER, rows, chash)
    return {"pde_residual": residual}


def run_burgers(config: RunConfig, chash: str) -> dict:
    if config.profile not in BURGERS_PROFILES:
        raise SystemExit(f"unknown burgers profile {config.profile!r}")
    profile = BURGERS_PROFILES[config.profile]
    x = np.linspace(-config.domain_l / 2, config.domain_l / 2, config.grid_n)
    fld = inviscid_burgers_eval(x, config.t_final, profile)
    rows = list(_field_rows(x, config.t_final, fld.values))
    write_table(os.path.join(config.out, "burgers_field.csv"),
                FIELD_HEADER, rows, chash)
    extra = {"flagged_nodes": len(fld.flagged)}
    if config.compare_oracle and config.profile in ("sin",):
        fine = 4 * config.grid_n
        h = config.domain_l / fine
        xs = -config.domain_l / 2 + h * np.arange(fine)
        oracle = upwind_oracle(profile(xs), h, config.t_final)
        interp = np.interp(x, xs, oracle)
        gap = np.abs(fld.values - interp)
        write_table(os.path.join(config.out, "burgers_difference.csv"),
                    ("x", "t", "difference"),
                    [(xx, config.t_final, d) for xx, d in zip(x, gap)],
                    chash)
        extra["sup_difference"] = float(np.nanmax(gap))
    if fld.flagged:
        raise ShockProximity(
            f"{len(fld.flagged)} nodes flagged near a shock at "
            f"t = {config.t_final}; first at x = {fld.flagged[0][1]}",
            jacobian_det=fld.flagged[0][2], point=fld.flagged[0][1])
    return extra


def run_spde(config: RunConfig, chash: str) -> dict:
    params = SpdeParams(alpha=1.0, beta=0.0, gamma=10.0, epsilon=1000.0)
    steps = max(2, int(round(config.t_final / config.dt)))
    # one sheet serves both schemes: its resolution must subdivide into the
    # direct scheme's steps and the quadrature panels alike
    resolution = int(np.lcm(steps, config.panels))
    sheet = BrownianSheetModes.generate(config.seed, config.grid_n,
                                        config.t_final, resolution)
    g0 = sech_ridge_initial(config.grid_n, 0.001, config.seed)
    direct = spde_direct_run(g0, params, sheet, steps)
    poppe = spde_poppe_run(g0, params, sheet, panels=config.panels)
    x = 2.0 * np.pi * np.arange(config.grid_n) / config.grid_n
    hdr = ("x", "y", "t", "value_real", "value_imag", "det_track",
           "residual")

    def rows(fld, det=np.nan, residual=np.nan):
        samp = fld.samples
        for i in range(config.grid_n):
            for j in range(config.grid_n):
                yield (x[i], x[j], fld.t, samp[i, j].real, samp[i, j].imag,
                       det, residual)

    write_table(os.path.join(config.out, "spde_direct.csv"), hdr,
                list(rows(direct)), chash)
    write_table(os.path.join(config.out, "spde_poppe.csv"), hdr,
                list(rows(poppe.g, det=float(poppe.det_track[-1]),
                          residual=poppe.solve_residual)), chash)
    gap = np.abs(direct.samples - poppe.g.samples)
    write_table(os.path.join(config.out, "spde_difference.csv"),
                ("x", "y", "t", "difference"),
                [(x[i], x[j], config.t_final, gap[i, j])
                 for i in range(config.grid_n)
                 for j in range(config.grid_n)], chash)
    write_table(os.path.join(config.out, "spde_det.csv"),
                ("t", "det_abs"),
                list(zip(np.linspace(0, config.t_final, config.panels + 1),
                         poppe.det_track)), chash)
    return {"sup_difference": float(np.max(gap)),
            "solve_residual": poppe.solve_residual}


def run_quotient(config: RunConfig, chash: str) -> dict:
    grid = Grid1D(0.0, config.domain_l, config.grid_n, kind="periodic")
    centre = config.domain_l / 2
    width = config.domain_l / 8
    xx, yy = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
    g0 = np.exp(-((xx - centre) ** 2 + (yy - centre) ** 2) / width ** 2)
    coeffs = QuotientCoefficients(dispersion=lambda s: -s ** 2,
                                  b=lambda y: np.ones_like(y))
    fld = quotient_solve(g0, grid, coeffs, config.t_final)
    residual = quotient_residual(g0, grid, coeffs, config.t_final,
                                 dt=config.dt)
    rows = [(grid.nodes[i], grid.nodes[j], config.t_final,
             fld.values[i, j].real, fld.values[i, j].imag, np.nan, residual)
            for i in range(grid.n) for j in range(grid.n)]
    write_table(os.path.join(config.out, "quotient_field.csv"),
                ("x", "y", "t", "value_real", "value_imag", "det_track",
                 "residual"), rows, chash)
    return {"pde_residual": residual}


def run_elliptic(config: RunConfig, chash: str) -> dict:
    grid = Grid1D(0.0, config.domain_l, config.grid_n, kind="closed")
    zeros, ones = np.zeros(grid.n), np.ones(grid.n)
    if config.profile == "tanh":
        coeffs = EllipticCoefficients(grid, zeros, ones, ones, zeros)
    else:
        coeffs = EllipticCoefficients(grid, zeros, ones, zeros, zeros)
    q0, p0 = (1.0, 0.0) if config.profile == "tanh" else (1.0, 1.0)
    sol = elliptic_quotient_solve(coeffs, q0, p0)
    rows = [(xx, 0.0, g, 0.0, np.nan, sol.residual)
            for xx, g in zip(grid.nodes, sol.g)]
    write_table(os.path.join(config.out, "elliptic_field.csv"),
                FIELD_HEADER, rows, chash)
    return {"ode_residual": sol.residual}


RUNNERS = {
    "kdv": run_kdv, "nls": run_nls, "smol-const": run_smol_const,
    "smol-general": run_smol_general, "prelaplace": run_prelaplace,
    "burgers": run_burgers, "spde": run_spde, "quotient": run_quotient,
    "elliptic": run_elliptic,
}


def run(config: RunConfig) -> int:
    problems = validate(config)
    if problems:
        for p in problems:
            print(f"precondition violated: {p}", file=sys.stderr)
        return 2
    os.makedirs(config.out, exist_ok=True)
    chash = config_hash(config)
    try:
        extra = RUNNERS[config.equation](config, chash)
    except (ChartBreakdown, ShockProximity) as exc:
        loc = getattr(exc, "location", None) or getattr(exc, "point", None)
        det = getattr(exc, "det_value", None) or getattr(exc, "jacobian_det",
                                                         None)
        print(f"breakdown: {exc} (t = {config.t_final}, location = {loc}, "
              f"determinant = {det})", file=sys.stderr)
        return 1
    except GrassflowError as exc:
        print(f"breakdown: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    write_metadata(config, chash, extra)
    return 0


# ---------------------------------------------------------------------------
# argument handling


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grassflow",
        description="Nonlinear PDE solvers by linear base flows and "
                    "Fredholm/Riccati projection, with direct oracles.")
    parser.add_argument("equation", choices=EQUATIONS)
    parser.add_argument("--preset", default=None)
    parser.add_argument("--config", default=None,
                        help="key-value text file with the same keys as "
                             "the flags")
    parser.add_argument("--grid-n", type=int, default=None)
    parser.add_argument("--domain-l", type=float, default=None)
    parser.add_argument("--t-final", type=float, default=None)
    parser.add_argument("--dt", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--quadrature",
                        choices=("riemann-left", "trapezoid"), default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--compare-oracle", choices=("on", "off"),
                        default=None)
    parser.add_argument("--profile", default=None)
    parser.add_argument("--nu", type=float, default=None)
    parser.add_argument("--checkpoints", type=int, default=None)
    parser.add_argument("--panels", type=int, default=None)
    parser.add_argument("--validate-only", action="store_true")
    return parser


def config_from_args(args) -> RunConfig:
    config = RunConfig(equation=args.equation)
    config.profile = DEFAULT_PROFILES[args.equation] \
        if args.equation in DEFAULT_PROFILES else ""
    file_values = _read_config_file(args.config) if args.config else {}
    overridden = set()
    casts = {f.name: f.type for f in fields(RunConfig)}
    for name, raw in file_values.items():
        if name not in casts:
            raise SystemExit(f"unknown config key {name!r}")
        value = raw
        if casts[name] is int:
            value = int(raw)
        elif casts[name] is float:
            value = float(raw)
        elif casts[name] is bool:
            value = raw.lower() in ("on", "true", "1", "yes")
        setattr(config, name, value)
        overridden.add(name)
    for name in ("preset", "grid_n", "domain_l", "t_final", "dt", "seed",
                 "quadrature", "out", "threads", "profile", "nu",
                 "checkpoints", "panels"):
        value = getattr(args, name)
        if value is not None:
            setattr(config, name, value)
            overridden.add(name)
    if args.compare_oracle is not None:
        config.compare_oracle = args.compare_oracle == "on"
        overridden.add("compare_oracle")
    overridden.discard("preset")
    return apply_preset(config, overridden)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    if args.validate_only:
        problems = validate(config)
        for p in problems:
            print(f"precondition violated: {p}")
        print(f"{len(problems)} violation(s)")
        return 0 if not problems else 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
