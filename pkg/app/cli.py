"""Command-line entry point: `python -m app.cli <subcommand> ...`.

Exit codes: 0 success, 1 input error (including unknown flags), 2 numerical failure.
"""
from pathlib import Path
from typing import List, Optional
import argparse
import logging
import sys

import numpy as np
from tabulate import tabulate

from app import __version__
from app.config import check_spin_ceiling, configure_logging, get_settings
from app.core import classical, export, liouville, spectral_stats
from app.core.errors import NumericalError
from app.core.sweep import run_sweep
from app.models.classical import (
    DEFAULT_H_TOL,
    DEFAULT_N_PERIODS,
    DEFAULT_TRANSIENT,
    MAP_VARIANTS,
    ClassicalParams,
    GridSpec,
    PhasePoint,
)
from app.models.quantum import SECTORS, ModelParams, OracleRequest
from app.models.sweep import SweepConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_model_args(parser, with_j: bool = False, gamma: bool = True):
    parser.add_argument("--p", type=float, default=2.0, help="linear precession strength")
    parser.add_argument("--k0", type=float, default=0.0, help="non-linear precession strength")
    parser.add_argument("--k1", type=float, required=True, help="kick strength")
    if gamma:
        parser.add_argument("--gamma", type=float, default=0.0, help="dissipation strength")
    if with_j:
        parser.add_argument("--j", type=float, required=True, help="spin quantum number (2j integer)")


def _add_classical_args(parser):
    parser.add_argument("--n-periods", type=int, default=DEFAULT_N_PERIODS)
    parser.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT)
    parser.add_argument("--map-variant", choices=MAP_VARIANTS, default="coupled")


def _output_path(args, stem: str, settings_dict: dict) -> Path:
    if getattr(args, "output", None):
        return Path(args.output)
    return Path(get_settings().output_dir) / f"{stem}_{export.settings_hash(settings_dict)[:12]}.csv"


def _print_table(rows, headers=("quantity", "value")):
    print(tabulate(rows, headers=headers, floatfmt=".6g"))


def _fmt(value):
    return "n/a" if value is None else value


# ---------------------------------------------------------------- quantum


def _cmd_quantum_spectrum(args) -> int:
    params = ModelParams(args.p, args.k0, args.k1, args.gamma, args.j)
    check_spin_ceiling(params.j, args.allow_large_j)
    spec, fraction = liouville.floquet_spectrum(params, args.sector, args.variant, args.epsilon)
    settings = {"command": "quantum-spectrum", **vars_without_handler(args)}
    path = export.write_csv(
        export.spectrum_frame(spec),
        _output_path(args, "spectrum", settings),
        export.provenance(export.settings_hash(settings), sector=spec.parity_sector, filtered_fraction=fraction),
    )
    _print_table([
        ("eigenvalues kept", len(spec)),
        ("eigenvalues filtered", spec.n_filtered),
        ("filtered fraction N_eps/N", fraction),
        ("max |lambda|", float(np.max(np.abs(spec.eigenvalues))) if len(spec) else None),
        ("near branch cut", spec.n_branch_cut),
        ("output", str(path)),
    ])
    return EXIT_OK


def _cmd_ratio_stats(args) -> int:
    if args.spectrum:
        phis = export.read_spectrum_csv(args.spectrum)
    else:
        missing = [name for name in ("j", "k1") if getattr(args, name) is None]
        if missing:
            raise ValueError(f"Either --spectrum or the model parameters ({', '.join(missing)}) are required")
        params = ModelParams(args.p, args.k0, args.k1, args.gamma, args.j)
        check_spin_ceiling(params.j, args.allow_large_j)
        spec, _ = liouville.floquet_spectrum(params, args.sector, "exact", args.epsilon)
        phis = spec.eigenphases
    samples = spectral_stats.complex_spacing_ratios(phis, method=args.method)
    stats = spectral_stats.ratio_statistics(samples)
    _print_table([
        ("<r>", stats.mean_r),
        ("-<cos theta>", stats.mean_neg_cos),
        ("R_c", _fmt(stats.R_c)),
        ("Theta_c", _fmt(stats.Theta_c)),
        ("ratios", stats.n_samples),
        ("merged duplicates", samples.n_merged),
    ])
    return EXIT_OK


def _cmd_isolated_stats(args) -> int:
    stats = spectral_stats.isolated_ratio_statistics(args.j, args.p, args.k0, args.k1)
    _print_table([("<r>", stats.mean_r), ("r_c", stats.r_c), ("ratios", stats.n_samples)])
    return EXIT_OK


def _cmd_oracle(args) -> int:
    request = OracleRequest(ensemble=args.ensemble, n=args.n, seed=args.seed, n_seeds=args.n_seeds)
    result = spectral_stats.oracle_statistics(request)
    _print_table([(name, _fmt(value)) for name, value in result.items()])
    return EXIT_OK


# ---------------------------------------------------------------- classical


def _classical_params(args) -> ClassicalParams:
    return ClassicalParams(args.p, args.k0, args.k1, args.gamma, n_steps=args.n_steps, method=args.method)


def _cmd_lyapunov(args) -> int:
    params = _classical_params(args)
    start = classical.to_sphere(PhasePoint(args.q0, args.p0))
    spec = classical.lyapunov_spectrum(start, params, args.n_periods, args.transient, args.map_variant)
    metrics = classical.attractor_metrics(spec, args.h_tol)
    _print_table([
        ("h1", spec.h1),
        ("h2", spec.h2),
        ("upsilon", metrics.upsilon),
        ("D_L", metrics.d_lyapunov),
    ])
    return EXIT_OK


def _cmd_classical_metrics(args) -> int:
    params = _classical_params(args)
    workers = args.workers or get_settings().workers
    metrics = classical.grid_metrics(params, GridSpec(args.n_ic), args.n_periods, args.transient,
                                     args.h_tol, args.map_variant, workers)
    settings = {"command": "classical-metrics", **vars_without_handler(args)}
    path = export.write_csv(export.metrics_frame(metrics), _output_path(args, "metrics", settings),
                            export.provenance(export.settings_hash(settings)))
    _print_table([
        ("initial conditions", metrics.n_points),
        ("f_c", metrics.chaotic_fraction),
        ("mean D_L", metrics.mean_d_lyapunov),
        ("output", str(path)),
    ])
    return EXIT_OK


def _cmd_bifurcation(args) -> int:
    params = ClassicalParams(args.p, args.k0, args.k1, 0.0, n_steps=args.n_steps, method=args.method)
    gammas = np.linspace(args.gamma_min, args.gamma_max, args.n_gamma)
    slices = classical.bifurcation_scan(params, gammas, n_periods=args.n_periods, n_record=args.n_record)
    settings = {"command": "bifurcation", **vars_without_handler(args)}
    path = export.write_csv(export.bifurcation_frame(slices), _output_path(args, "bifurcation", settings),
                            export.provenance(export.settings_hash(settings)))
    _print_table([(s.gamma, float(np.ptp(s.jy)), s.has_attractor) for s in slices],
                 headers=("gamma", "J_y spread", "attractor"))
    print(f"output: {path}")
    return EXIT_OK


def _cmd_poincare(args) -> int:
    params = _classical_params(args)
    initials = classical.to_plane(classical.random_states(args.n_ic, args.seed))
    sections = classical.poincare_section(initials, params, args.map_variant, args.n_periods, args.transient)
    settings = {"command": "poincare", **vars_without_handler(args)}
    path = export.write_csv(export.section_frame(sections), _output_path(args, "poincare", settings),
                            export.provenance(export.settings_hash(settings)))
    _print_table([("initial conditions", args.n_ic), ("periods", args.n_periods), ("output", str(path))])
    return EXIT_OK


# ---------------------------------------------------------------- sweep


# sweep flags that replace one config field: dest -> (section, key)
SWEEP_OVERRIDES = {
    "sector": ("quantum", "sector"),
    "epsilon": ("quantum", "epsilon_filter"),
    "n_ic": ("classical", "n_ic"),
    "n_periods": ("classical", "n_periods"),
    "transient": ("classical", "transient"),
    "h_tol": ("classical", "h_tol"),
    "map_variant": ("classical", "map_variant"),
    "n_attractor": ("classical", "n_attractor"),
    "seed": (None, "seed"),
}


def apply_sweep_overrides(config: SweepConfig, args) -> SweepConfig:
    """Rebuild the config with command-line values in place, so validation runs again."""
    data = config.to_dict()
    for dest, (section, key) in SWEEP_OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        target = data if section is None else data[section]
        target[key] = value
    if args.output_dir:
        data["output"]["directory"] = args.output_dir
    if args.workers:
        data["workers"] = args.workers
    return SweepConfig.from_dict(data)


def _cmd_sweep(args) -> int:
    config = apply_sweep_overrides(SweepConfig.load(args.config), args)
    result = run_sweep(config)
    csv_path, json_path = export.write_sweep(result)
    _print_table([
        ("points", len(result)),
        ("failed", result.n_failed),
        ("config hash", result.config.config_hash()[:12]),
        ("csv", str(csv_path)),
        ("summary", str(json_path)),
    ])
    return EXIT_OK


def vars_without_handler(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("handler", "command")}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kicked-top", description="Dissipative kicked top: quantum spectra and classical attractors")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("quantum-spectrum", help="complex spectrum of the dissipative Floquet operator")
    _add_model_args(p, with_j=True)
    p.add_argument("--sector", choices=SECTORS, default="positive")
    p.add_argument("--variant", choices=("exact", "decoupled"), default="exact")
    p.add_argument("--epsilon", type=float, default=1e-16)
    p.add_argument("--allow-large-j", action="store_true")
    p.add_argument("--output")
    p.set_defaults(handler=_cmd_quantum_spectrum)

    p = sub.add_parser("ratio-stats", help="complex spacing-ratio statistics of a spectrum")
    p.add_argument("--spectrum", help="spectrum CSV written by quantum-spectrum")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--k0", type=float, default=0.0)
    p.add_argument("--k1", type=float)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--j", type=float)
    p.add_argument("--sector", choices=SECTORS, default="positive")
    p.add_argument("--epsilon", type=float, default=1e-16)
    p.add_argument("--method", choices=("exhaustive", "kdtree"), default="exhaustive")
    p.add_argument("--allow-large-j", action="store_true")
    p.set_defaults(handler=_cmd_ratio_stats)

    p = sub.add_parser("isolated-stats", help="real spacing-ratio statistics of the isolated Floquet operator")
    _add_model_args(p, with_j=True, gamma=False)
    p.set_defaults(handler=_cmd_isolated_stats)

    p = sub.add_parser("oracle", help="reference ensemble statistics")
    p.add_argument("--ensemble", choices=("ginue", "poisson2d", "coe", "poisson"), default="ginue")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--n-seeds", type=int, default=1)
    p.set_defaults(handler=_cmd_oracle)

    for name, handler, help_text in (
        ("lyapunov", _cmd_lyapunov, "Lyapunov spectrum of one trajectory"),
        ("classical-metrics", _cmd_classical_metrics, "chaotic fraction and mean Lyapunov dimension over a grid"),
        ("poincare", _cmd_poincare, "stroboscopic (Q, P) records"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_model_args(p)
        _add_classical_args(p)
        p.add_argument("--n-steps", type=int, default=100, help="RK4 steps per period")
        p.add_argument("--method", choices=("auto", "rk4"), default="auto")
        if name == "lyapunov":
            p.add_argument("--q0", type=float, default=0.3)
            p.add_argument("--p0", type=float, default=0.1)
            p.add_argument("--h-tol", type=float, default=DEFAULT_H_TOL)
        elif name == "classical-metrics":
            p.add_argument("--n-ic", type=int, default=1245)
            p.add_argument("--h-tol", type=float, default=DEFAULT_H_TOL)
            p.add_argument("--workers", type=int)
            p.add_argument("--output")
        else:
            p.add_argument("--n-ic", type=int, default=300)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--output")
        p.set_defaults(handler=handler)

    p = sub.add_parser("bifurcation", help="J_y of the last periods against gamma")
    _add_model_args(p, gamma=False)
    p.add_argument("--gamma-min", type=float, default=0.0)
    p.add_argument("--gamma-max", type=float, default=2.0)
    p.add_argument("--n-gamma", type=int, default=41)
    p.add_argument("--n-periods", type=int, default=1000)
    p.add_argument("--n-record", type=int, default=100)
    p.add_argument("--n-steps", type=int, default=100)
    p.add_argument("--method", choices=("auto", "rk4"), default="auto")
    p.add_argument("--output")
    p.set_defaults(handler=_cmd_bifurcation)

    p = sub.add_parser("sweep", help="run a JSON sweep config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--sector", choices=SECTORS)
    p.add_argument("--epsilon", type=float, help="eigenvalue precision filter")
    p.add_argument("--n-ic", type=int)
    p.add_argument("--n-periods", type=int)
    p.add_argument("--transient", type=int)
    p.add_argument("--h-tol", type=float)
    p.add_argument("--map-variant", choices=MAP_VARIANTS)
    p.add_argument("--n-attractor", type=int, help="random trajectories for the box-counting dimension")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=_cmd_sweep)

    return parser


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(args, "handler", None) is None:
        parser.print_help()
        return EXIT_INPUT
    configure_logging()
    try:
        return args.handler(args)
    except NumericalError as e:
        logger.error(f"Numerical failure in {args.command}: {e}", exc_info=True)
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"Invalid input for {args.command}: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(cli_main())
