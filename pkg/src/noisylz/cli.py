"""Command-line frontend.

Subcommands: ``sweep``, ``preset``, ``estimate``, ``noise-validate``,
``single``.  Exit codes: 0 success, 1 validation error, 2 numerical error
(norm-drift violation), 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .analytics import estimated_probability
from .config import (
    DEFAULT_SEED,
    ConfigError,
    parse_config,
    parse_noise_validation_config,
    parse_single_config,
)
from .dynamics import NormDriftError, TimeGrid, run_trajectory
from .ensemble import PhaseMode, realization_source
from .noise import NoiseParams
from .sweep import (
    CSV_HEADER,
    PRESET_NAMES,
    format_rows,
    preset_sweeps,
    run_sweep,
    validate_noise,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _read_config_file(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise OSError(f"cannot read config '{path}': {err}") from err


def _apply_overrides(spec, args):
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = args.seed
    if getattr(args, "realizations", None) is not None:
        updates["realizations"] = args.realizations
    if getattr(args, "threads", None) is not None:
        updates["workers"] = args.threads
    if getattr(args, "out", None) is not None:
        updates["out"] = args.out
    if getattr(args, "tf", None) is not None or getattr(args, "dt", None) is not None:
        tf = args.tf if args.tf is not None else spec.grid.t_final
        dt = args.dt if args.dt is not None else spec.grid.dt
        try:
            updates["grid"] = TimeGrid(t_final=tf, dt=dt)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    return replace(spec, **updates) if updates else spec


def _spec_metadata(spec) -> dict:
    meta = {
        "v0": spec.system.v0,
        "f0": spec.system.f0,
        "mode": spec.mode.value,
        "var_phi": spec.var_phi,
        "tf": spec.grid.t_final,
        "dt": spec.grid.dt,
        "realizations": spec.realizations,
        "master_seed": spec.master_seed,
        "tail_fraction": spec.tail_fraction,
        "omega0_grid": f"linear({spec.start}, {spec.stop}, {spec.count})",
    }
    if spec.gamma is not None:
        meta["gamma"] = spec.gamma
    if spec.mode is PhaseMode.DETERMINISTIC_FIXED:
        meta["phi0"] = spec.phi0
    return meta


def _stream_sweep(spec, destination) -> None:
    """Run a sweep, flushing each finished row so partial results survive."""
    path = Path(destination)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for key, value in _spec_metadata(spec).items():
                fh.write(f"# {key} = {value}\n")
            fh.write(CSV_HEADER + "\n")
            fh.flush()

            def flush_row(row):
                fh.write(format_rows([row])[0] + "\n")
                fh.flush()

            run_sweep(spec, on_row=flush_row)
    except OSError as err:
        raise OSError(f"cannot write CSV to '{path}': {err}") from err


def _cmd_sweep(args) -> int:
    spec = _apply_overrides(parse_config(_read_config_file(args.config)), args)
    if spec.out is None:
        raise ConfigError("no output path: set 'out' in the config or pass --out")
    _stream_sweep(spec, spec.out)
    print(f"wrote {spec.out}")
    return EXIT_OK


def _cmd_preset(args) -> int:
    sweeps = preset_sweeps(
        args.name,
        realizations=args.realizations if args.realizations is not None else 100,
        master_seed=args.seed if args.seed is not None else DEFAULT_SEED,
        tf=args.tf if args.tf is not None else 100.0,
        dt=args.dt if args.dt is not None else 1e-3,
        workers=args.threads if args.threads is not None else 0,
    )
    stem = Path(args.out) if args.out is not None else Path(f"{args.name}.csv")
    for label, spec in sweeps:
        destination = stem.with_name(f"{stem.stem}_{label}{stem.suffix or '.csv'}")
        _stream_sweep(spec, destination)
        print(f"wrote {destination}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    try:
        from .dynamics import SystemParams

        estimate = estimated_probability(SystemParams(v0=args.V0, f0=args.F0), args.var_phi)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    text = f"delta_e_eff,p_est\n{estimate.delta_e_eff:.12g},{estimate.p_est:.12g}\n"
    if args.out is not None:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as err:
            raise OSError(f"cannot write '{args.out}': {err}") from err
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_noise_validate(args) -> int:
    spec = parse_noise_validation_config(_read_config_file(args.config))
    if args.seed is not None:
        spec = replace(spec, master_seed=args.seed)
    if args.out is not None:
        spec = replace(spec, out=args.out)
    if spec.out is None:
        raise ConfigError("no output path: set 'out' in the config or pass --out")
    try:
        params = NoiseParams(gamma=spec.gamma, omega0=spec.omega0, var_phi=spec.var_phi)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    summary = validate_noise(
        params,
        spec.duration,
        spec.n_paths,
        spec.out,
        h=spec.h,
        master_seed=spec.master_seed,
    )
    print(f"wrote {spec.out}")
    print(f"variance: empirical {summary.var_empirical:.6g} vs target {summary.var_target:.6g} "
          f"(std error {summary.var_std_error:.2g})")
    print(f"spectrum peak: empirical {summary.peak_empirical:.6g} vs analytic "
          f"{summary.peak_analytic:.6g} (bin width {summary.bin_width:.3g})")
    return EXIT_OK


def _cmd_single(args) -> int:
    spec = parse_single_config(_read_config_file(args.config))
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.out is not None:
        updates["out"] = args.out
    if args.tf is not None or args.dt is not None:
        tf = args.tf if args.tf is not None else spec.grid.t_final
        dt = args.dt if args.dt is not None else spec.grid.dt
        try:
            updates["grid"] = TimeGrid(t_final=tf, dt=dt)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    if updates:
        spec = replace(spec, **updates)
    if spec.out is None:
        raise ConfigError("no output path: set 'out' in the config or pass --out")
    if spec.mode is PhaseMode.HARMONIC_NOISE:
        phase = NoiseParams(gamma=spec.gamma, omega0=spec.omega0, var_phi=spec.var_phi)
    elif spec.mode is PhaseMode.ZERO:
        phase = None
    else:
        from .noise import DeterministicPhaseParams

        phase = DeterministicPhaseParams.from_variance(spec.var_phi, spec.omega0, spec.phi0)
    source = realization_source(spec.mode, phase, spec.grid, spec.master_seed, 0)
    result = run_trajectory(
        spec.system, spec.grid, source,
        tail_fraction=spec.tail_fraction, sample_every=spec.sample_every,
    )
    if result.norm_drift >= 1e-9:
        raise NormDriftError(f"trajectory lost unit norm (drift {result.norm_drift:.3e})")
    path = Path(spec.out)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# mode = {spec.mode.value}\n")
            fh.write(f"# v0 = {spec.system.v0:.12g}\n")
            fh.write(f"# f0 = {spec.system.f0:.12g}\n")
            fh.write(f"# tf = {spec.grid.t_final:.12g}\n")
            fh.write(f"# dt = {spec.grid.dt:.12g}\n")
            fh.write(f"# master_seed = {spec.master_seed}\n")
            fh.write(f"# p_transition = {result.p_transition:.12g}\n")
            fh.write(f"# norm_drift = {result.norm_drift:.3e}\n")
            fh.write("t,p\n")
            for t, p in zip(result.sampled_times, result.sampled_p):
                fh.write(f"{t:.12g},{p:.12g}\n")
    except OSError as err:
        raise OSError(f"cannot write CSV to '{path}': {err}") from err
    print(f"wrote {spec.out} (p_transition = {result.p_transition:.6g})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisylz",
        description="Transition-probability sweeps for a two-level crossing with a noisy coupling phase.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, realizations=True):
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", type=str, default=None, help="output path override")
        if realizations:
            p.add_argument("--realizations", type=int, default=None, help="realizations per point")
        p.add_argument("--tf", type=float, default=None, help="half-width of the time window")
        p.add_argument("--dt", type=float, default=None, help="propagation step")
        p.add_argument("--threads", type=int, default=None, help="worker processes (0 = auto)")

    p_sweep = sub.add_parser("sweep", help="run a frequency sweep from a JSON config")
    p_sweep.add_argument("config")
    add_common(p_sweep)
    p_sweep.set_defaults(handler=_cmd_sweep)

    p_preset = sub.add_parser("preset", help="run a bundled parameter study")
    p_preset.add_argument("name", choices=PRESET_NAMES)
    add_common(p_preset)
    p_preset.set_defaults(handler=_cmd_preset)

    p_est = sub.add_parser("estimate", help="effective band gap and estimated probability")
    p_est.add_argument("V0", type=float)
    p_est.add_argument("F0", type=float)
    p_est.add_argument("var_phi", type=float)
    p_est.add_argument("--out", type=str, default=None)
    p_est.set_defaults(handler=_cmd_estimate)

    p_noise = sub.add_parser("noise-validate", help="spectrum/variance validation of the noise")
    p_noise.add_argument("config")
    p_noise.add_argument("--seed", type=int, default=None)
    p_noise.add_argument("--out", type=str, default=None)
    p_noise.set_defaults(handler=_cmd_noise_validate)

    p_single = sub.add_parser("single", help="one trajectory, emitting the sampled P(t) series")
    p_single.add_argument("config")
    p_single.add_argument("--seed", type=int, default=None)
    p_single.add_argument("--out", type=str, default=None)
    p_single.add_argument("--tf", type=float, default=None)
    p_single.add_argument("--dt", type=float, default=None)
    p_single.set_defaults(handler=_cmd_single)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NormDriftError as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())
