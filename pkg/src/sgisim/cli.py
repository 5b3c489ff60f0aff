"""``sgi`` command line: run, sweep, validate.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 validation
failure.
"""

import argparse
import sys
import warnings

import numpy as np

from . import config, experiments, output, validate
from .dynamics import NumericalError, StepSizeError
from .experiments import EXPERIMENTS, VARIABLES, SweepSpec, Table
from .geometry import RampError
from .nvspin import WeakFieldError
from .units import UnitError, parse_angle, parse_quantity

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 2, 3, 4

SUMMARY_UNITS = {
    "mass": "kg",
    "inertia": "kg m^2",
    "omega": "rad/s",
    "libration_frequency_hz": "Hz",
    "d_theta_gs": "rad",
    "d_theta_dot_gs": "rad/s",
    "ground_state_energy_temperature": "K",
    "acceleration": "m/s^2",
    "xi_max": "m",
    "zeta_max": "m",
    "separation_max": "m",
    "theta_prime_dev_max": "rad",
}


def _unit(key):
    if key in SUMMARY_UNITS:
        return SUMMARY_UNITS[key]
    return "rad" if "phi" in key or "phase" in key else "1"


class _Numerical(Exception):
    def __init__(self, stage, err):
        super().__init__(f"{stage}: {type(err).__name__}: {err}")


def _common(p):
    p.add_argument("--config", metavar="PATH", help="TOML configuration file")
    p.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[], dest="overrides",
                   help="override one configuration value (repeatable)")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--seed", type=int, help="base random seed (overrides numerics.seed)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")


def build_parser():
    ap = argparse.ArgumentParser(prog="sgi", description="Nanodiamond Stern-Gerlach interferometer simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one interferometer sequence")
    _common(r)
    r.add_argument("--trajectory", metavar="PATH", help="also write the sampled arm trajectories as CSV")
    r.add_argument("--spin-arm1", metavar="P,P,P", help="spin labels of arm 1, e.g. -1,0,-1")
    r.add_argument("--spin-arm2", metavar="P,P,P", help="spin labels of arm 2")
    r.add_argument("--ramp", choices=("constant", "quadratic"), help="bias ramp policy")

    s = sub.add_parser("sweep", help="tabulate a named experiment or a custom sweep")
    _common(s)
    s.add_argument("experiment", nargs="?", default="fig7", choices=sorted(EXPERIMENTS), help="named experiment")
    s.add_argument("--var", choices=sorted(VARIABLES), help="swept variable (default: the experiment's)")
    s.add_argument("--min", dest="vmin", help="range start, with units (e.g. '1 G')")
    s.add_argument("--max", dest="vmax", help="range end, with units")
    s.add_argument("--points", type=int, help="number of sweep points")
    s.add_argument("--scale", choices=("linear", "log"), help="point spacing")
    s.add_argument("--series", metavar="VAR=V1,V2,...", help="one curve per value of a second variable")
    s.add_argument("--no-series", action="store_true", help="drop the experiment's series variable")
    s.add_argument("--list", action="store_true", help="list experiments and exit")

    v = sub.add_parser("validate", help="run the built-in oracle suite")
    v.add_argument("--quick", action="store_true", help="reduced sample counts")
    v.add_argument("--out", metavar="PATH", help="write the report here as well")
    return ap


def _quantity(var, text):
    unit = VARIABLES[var][1]
    try:
        if var == "theta0":
            return parse_angle(text)
        if unit == "1":
            return float(text)
        return parse_quantity(text, unit)
    except (UnitError, ValueError) as e:
        raise config.ConfigError(f"--{var}: {e}") from None


def _spins(text, flag):
    try:
        spins = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise config.ConfigError(f"{flag}: expected comma-separated labels, got {text!r}") from None
    if len(spins) != 3 or any(s not in (-1, 0, 1) for s in spins):
        raise config.ConfigError(f"{flag}: expected three labels from -1, 0, 1, got {text!r}")
    return spins


def _load(args, preset=None):
    data = {}
    if args.config:
        data = _read_toml(args.config)
    if preset:
        data = experiments.preset_data(preset, data)
    overrides = list(args.overrides)
    if getattr(args, "seed", None) is not None:
        overrides.append(f"numerics.seed={args.seed}")
    return config.build(data, overrides)


def _read_toml(path):
    try:
        with open(path, "rb") as fh:
            return config.tomllib.load(fh)
    except OSError as e:
        raise config.ConfigError(f"{path}: {e.strerror}") from None
    except config.tomllib.TOMLDecodeError as e:
        raise config.ConfigError(f"{path}: {e}") from None


def _emit(args, text):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    extra = []
    if args.spin_arm1:
        extra.append(f"sequence.arm1={list(_spins(args.spin_arm1, '--spin-arm1'))}")
    if args.spin_arm2:
        extra.append(f"sequence.arm2={list(_spins(args.spin_arm2, '--spin-arm2'))}")
    if args.ramp:
        extra.append(f'field.ramp="{args.ramp}"')
    args.overrides = list(args.overrides) + extra
    rc = _load(args)
    try:
        summary, res = experiments.run_summary(rc, record=True)
    except (NumericalError, StepSizeError, RampError, WeakFieldError, FloatingPointError) as e:
        raise _Numerical("run_sgi", e) from None
    meta = {"command": "run", "seed": rc["numerics.seed"], "config": rc.resolved()}
    if args.format == "csv":
        table = Table([(k, _unit(k)) for k in summary], [list(summary.values())])
        _emit(args, output.to_csv_string(table, meta))
    else:
        doc = output.summary_json(summary, meta)
        doc["units"] = {k: _unit(k) for k in summary}
        _emit(args, output.dumps(doc))
    if args.trajectory:
        table = experiments.trajectory_rows(res, rc.nd, rc.field_config)
        with open(args.trajectory, "w", newline="") as fh:
            output.write_csv(fh, table, meta)
    return EXIT_OK


def _series(args, var_default):
    if args.no_series:
        return ()
    if not args.series:
        return None
    if "=" not in args.series:
        raise config.ConfigError("--series must look like VAR=V1,V2,...")
    var, vals = args.series.split("=", 1)
    var = var.strip()
    if var not in VARIABLES or var == "omega_t":
        raise config.ConfigError(f"--series: unsupported variable {var!r}")
    return (var, tuple(_quantity(var, v) for v in vals.split(",")))


def cmd_sweep(args):
    if args.list:
        for name in sorted(EXPERIMENTS, key=lambda n: int(n[3:])):
            ex = EXPERIMENTS[name]
            print(f"{name:6s} {ex.sweep.variable:8s} {ex.title}")
        return EXIT_OK
    ex = EXPERIMENTS[args.experiment]
    rc = _load(args, preset=args.experiment)
    base = ex.sweep
    var = args.var or base.variable
    custom = var != base.variable
    try:
        spec = SweepSpec(
            var,
            _quantity(var, args.vmin) if args.vmin else (None if custom else base.start),
            _quantity(var, args.vmax) if args.vmax else (None if custom else base.stop),
            args.points or base.n_points,
            args.scale or ("linear" if custom else base.scale),
        )
    except TypeError:
        raise config.ConfigError(f"sweeping {var!r} needs --min and --max") from None
    except ValueError as e:
        raise config.ConfigError(str(e)) from None
    series = _series(args, ex.series)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = experiments.run_experiment(args.experiment, rc, spec, series, args.threads, rc["numerics.seed"])
    meta = {
        "command": "sweep",
        "experiment": args.experiment,
        "sweep": {"variable": spec.variable, "min": spec.start, "max": spec.stop, "n_points": spec.n_points, "scale": spec.scale},
        "seed": rc["numerics.seed"],
        "config": rc.resolved(),
    }
    if args.format == "json":
        _emit(args, output.dumps(output.table_json(table, meta)))
    else:
        _emit(args, output.to_csv_string(table, meta))
    return EXIT_OK


def cmd_validate(args):
    results = validate.run_all(quick=args.quick)
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} oracles passed")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK if ok else EXIT_VALIDATION


def main(argv=None):
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_validate(args)
    except config.ConfigError as e:
        print(f"sgi: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except _Numerical as e:
        print(f"sgi: numerical failure in {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
