"""
Command-line front end for the squeezed-vacuum simulator
Subcommands reproduce the phase trace, detuning/power/temperature sweeps, the
detection-frequency spectrum, the pulsed-pump measurement and the optimizer.

Squeezing is reported in dB relative to shot noise; negative values are below
shot noise (squeezed), positive values above it.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
import os
import sys
import argparse
import traceback
from dataclasses import replace

import numpy as np

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(PROJECT_ROOT, "scripts"))

from config_utils import (
    DEFAULT_CONFIG_FILE,
    RESULTS_DIR,
    ConfigError,
    build_models,
    build_pulse_train,
    ensure_directory,
    load_config,
    output_stem,
    provenance,
    save_csv,
    save_json,
)
from detection import (
    PztRamp,
    blocked_port_level,
    check_phase_coverage,
    detected_quadratures,
    noise_spectrum,
    phase_scan,
    sampled_noise_db,
    shot_noise_level,
    sideband_state,
)
from gaussian_core import remove_loss, db_to_variance, variance_db
from pulsed import (
    REPORTED_PULSE_EXCESS_DB,
    between_peak_excess,
    check_detection_frequency,
    pulse_spectrum,
    pulsed_squeezing,
)
from sweep import (
    OPTIMIZABLE,
    VARIABLES,
    OperatingPoint,
    SweepSpec,
    check_bounds,
    optimize,
    run_sweep,
    run_sweep_at_best_detuning,
)
from vapor_model import CalibrationError, calibrate, interact

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

DEFAULT_BOUNDS = {
    "detuning": (100.0, 1400.0),
    "power": (20.0, 200.0),
    "temperature": (60.0, 140.0),
    "waist": (200.0, 800.0),
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_range(text, name):
    """Parse 'lo:hi' into two floats"""
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"{name} must look like lo:hi, got '{text}'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"{name} must contain numbers, got '{text}'")


def build_parser():
    parser = _Parser(
        prog="squeeze_cli.py",
        description="Squeezed vacuum from polarization self-rotation in Rb vapor. "
                    "Noise is reported in dB relative to shot noise (negative = squeezed).",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT_CONFIG_FILE, help="Flat JSON operating-point config")
    common.add_argument("--output-dir", default=RESULTS_DIR, help="Directory for CSV/JSON outputs")
    common.add_argument("--tag", default=None, help="Output file stem (default: <command>_<timestamp>)")
    common.add_argument("--seed", type=int, default=None, help="Override the config seed")
    common.add_argument("--quiet", action="store_true", help="Only print errors")
    common.add_argument("--verbose", action="store_true", help="Print tracebacks and optimizer progress")

    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("trace", parents=[common], help="LO phase scan at the config operating point")
    p.add_argument("--v-start", type=float, default=0.0, help="PZT ramp start (V)")
    p.add_argument("--v-stop", type=float, default=200.0, help="PZT ramp stop (V)")
    p.add_argument("--points", type=int, default=801, help="Points on the ramp")
    p.add_argument("--samples", type=int, default=0, help="Monte-Carlo samples per point (0 = analytic)")

    p = sub.add_parser("sweep", parents=[common], help="Squeezing along one variable")
    p.add_argument("--variable", choices=list(VARIABLES), default="detuning")
    p.add_argument("--range", dest="sweep_range", default="100:1400", help="lo:hi in the variable's unit")
    p.add_argument("--step", type=float, default=25.0, help="Step in the variable's unit")
    p.add_argument("--optimize-detuning", default=None, metavar="LO:HI",
                   help="Re-optimize the detuning inside LO:HI (MHz) at every point")
    p.add_argument("--workers", type=int, default=4, help="Evaluation threads")

    p = sub.add_parser("spectrum", parents=[common], help="Squeezing versus detection frequency")
    p.add_argument("--band", default="0.9:20", help="lo:hi detection band (MHz)")
    p.add_argument("--points", type=int, default=100, help="Frequencies in the band")

    p = sub.add_parser("pulsed", parents=[common], help="Pulsed-pump comb spectrum and squeezing")
    p.add_argument("--f-detect", type=float, default=2.7, help="Between-peak detection frequency (MHz)")
    p.add_argument("--f-max", type=float, default=5.0, help="Spectrum upper frequency (MHz)")
    p.add_argument("--bins", type=int, default=501, help="Spectrum bins from 0 to f-max")

    p = sub.add_parser("optimize", parents=[common], help="Grid + golden-section search for the best squeezing")
    p.add_argument("--free", default="detuning", help=f"Comma-separated subset of {','.join(OPTIMIZABLE)}")
    p.add_argument("--bounds", action="append", default=[],
                   help="name=lo:hi, repeatable (defaults: detuning=100:1400 power=20:200 "
                        "temperature=60:140 waist=200:800)")
    p.add_argument("--grid-points", type=int, default=25, help="Coarse grid points per dimension")
    p.add_argument("--workers", type=int, default=4, help="Evaluation threads")
    return parser


def _say(args, message):
    if not args.quiet:
        print(message)


def _base_point(config, calibration=None):
    pump, cell, homodyne, _ = build_models(config)
    return OperatingPoint(
        pump=pump,
        cell=cell,
        homodyne=homodyne,
        detection_frequency_MHz=config["detection_frequency_MHz"],
        calibration=calibration,
    )


def check_trace(args, config):
    _, _, homodyne, _ = build_models(config)
    ramp = PztRamp(args.v_start, args.v_stop, args.points)
    check_phase_coverage(ramp, homodyne)
    if args.samples == 1 or args.samples < 0:
        raise UsageError(f"--samples must be 0 (analytic) or >= 2, got {args.samples}")
    return {"ramp": ramp}


def check_sweep(args, config):
    lo, hi = parse_range(args.sweep_range, "--range")
    if args.workers < 1:
        raise UsageError(f"--workers must be >= 1, got {args.workers}")
    spec = SweepSpec(args.variable, lo, hi, args.step, _base_point(config))
    # both ends must be valid operating points
    spec.base.with_value(args.variable, lo)
    spec.base.with_value(args.variable, spec.values()[-1])
    detuning_bounds = None
    if args.optimize_detuning is not None:
        if args.variable == "detuning":
            raise UsageError("--optimize-detuning needs a variable other than detuning")
        detuning_bounds = parse_range(args.optimize_detuning, "--optimize-detuning")
        check_bounds({"detuning": detuning_bounds}, spec.base)
    return {"spec": spec, "detuning_bounds": detuning_bounds}


def check_spectrum(args, config):
    lo, hi = parse_range(args.band, "--band")
    if not (0 < lo < hi):
        raise UsageError(f"--band needs 0 < lo < hi, got {args.band}")
    if args.points < 2:
        raise UsageError(f"--points must be >= 2, got {args.points}")
    return {"frequencies": np.linspace(lo, hi, args.points)}


def check_pulsed(args, config):
    train = build_pulse_train(config)
    check_detection_frequency(train, args.f_detect, args.f_max, args.bins)
    return {"train": train}


def check_optimize(args, config):
    names = [n.strip() for n in args.free.split(",") if n.strip()]
    if not names:
        raise UsageError("--free needs at least one variable")
    bounds = {}
    for item in args.bounds:
        if "=" not in item:
            raise UsageError(f"--bounds must look like name=lo:hi, got '{item}'")
        name, text = item.split("=", 1)
        bounds[name.strip()] = parse_range(text, f"--bounds {name}")
    free_vars = {}
    for name in names:
        if name not in OPTIMIZABLE:
            raise UsageError(f"--free: unknown variable '{name}', expected a subset of {list(OPTIMIZABLE)}")
        free_vars[name] = bounds.get(name, DEFAULT_BOUNDS[name])
    if args.grid_points < 2:
        raise UsageError(f"--grid-points must be >= 2, got {args.grid_points}")
    check_bounds(free_vars, _base_point(config))
    return {"names": names, "free_vars": free_vars}


def run_trace(args, config, calibration, request):
    base = _base_point(config, calibration)
    result = interact(base.pump, base.cell, calibration, xpm_rad_per_od=base.homodyne.xpm_rad_per_od)
    state = sideband_state(result, base.detection_frequency_MHz, base.homodyne)
    trace = phase_scan(state, request["ramp"], base.homodyne, base.detection_frequency_MHz,
                       samples=args.samples, seed=config["seed"])
    sq_db, anti_db = detected_quadratures(base.pump, base.cell, base.homodyne,
                                          base.detection_frequency_MHz, calibration)
    eta = base.homodyne.total_efficiency
    summary = trace.metadata()
    summary.update({
        "squeezing_dB": sq_db,
        "antisqueezing_dB": anti_db,
        "loss_corrected_squeezing_dB": variance_db(remove_loss(db_to_variance(sq_db), eta)),
        "interaction": result.to_dict(),
        "state_purity": state.purity,
        "shot_noise_level_snu": shot_noise_level(base.homodyne.lo_power, base.homodyne.ref_power,
                                                 base.homodyne.electronic_floor),
        "shot_noise_reference_snu": blocked_port_level(result.theta0, base.homodyne),
    })
    if args.samples > 0:
        summary["spectrum_analyzer_squeezing_dB"] = sampled_noise_db(
            state, result.theta0, base.homodyne, args.samples * args.points, config["seed"]
        )
    _say(args, f"[OK] Trace min {summary['min_noise_dB']:.3f} dB, max {summary['max_noise_dB']:.3f} dB")
    return trace.to_rows(), summary


def run_sweep_command(args, config, calibration, request):
    spec = request["spec"]
    spec = replace(spec, base=replace(spec.base, calibration=calibration))
    if request["detuning_bounds"] is None:
        curve = run_sweep(spec, max_workers=args.workers, show_progress=not args.quiet)
    else:
        curve = run_sweep_at_best_detuning(spec, request["detuning_bounds"], max_workers=args.workers,
                                           show_progress=not args.quiet)
    summary = curve.metadata()
    _say(args, f"[OK] Best {summary['best_squeezing_dB']:.3f} dB at {args.variable} = "
               f"{summary['best_x']:g} {summary['unit']}")
    return curve.to_rows(), summary


def run_spectrum(args, config, calibration, request):
    pump, cell, homodyne, _ = build_models(config)
    spectrum = noise_spectrum(pump, cell, homodyne, request["frequencies"], calibration)
    summary = spectrum.metadata()
    _say(args, f"[OK] Best {summary['best_squeezing_dB']:.3f} dB at {summary['best_frequency_MHz']:.2f} MHz, "
               f"worst {summary['worst_squeezing_dB']:.3f} dB")
    return spectrum.to_rows(), summary


def run_pulsed(args, config, calibration, request):
    pump, cell, homodyne, _ = build_models(config)
    train = request["train"]
    spectrum = pulse_spectrum(train, homodyne.cmrr_db, args.f_max, args.bins)
    pulsed_db = pulsed_squeezing(train, pump, cell, homodyne, args.f_detect, config["delta_pulsed_dB"],
                                 args.f_max, args.bins, calibration)
    cw_db = noise_spectrum(replace(pump, power=train.peak_power), cell, homodyne,
                           [args.f_detect], calibration).squeezing_db[0]
    summary = spectrum.metadata()
    summary.update({
        "f_detect_MHz": args.f_detect,
        "pulsed_squeezing_dB": pulsed_db,
        "cw_squeezing_at_peak_power_dB": float(cw_db),
        "delta_pulsed_dB": config["delta_pulsed_dB"],
        "between_peak_excess_snu": between_peak_excess(train, homodyne.cmrr_db, args.f_max),
        "duty_cycle": train.duty_cycle,
        "average_power_mW": train.average_power * 1e3,
        "reported_pulse_excess_dB": REPORTED_PULSE_EXCESS_DB,
    })
    _say(args, f"[OK] Pulsed squeezing {pulsed_db:.3f} dB at {args.f_detect} MHz (CW {cw_db:.3f} dB)")
    return spectrum.to_rows(), summary


def run_optimize(args, config, calibration, request):
    report = optimize(request["free_vars"], _base_point(config, calibration), grid_points=args.grid_points,
                      max_workers=args.workers, show_progress=not args.quiet, verbose=args.verbose)
    _say(args, f"[OK] Best {report.best_db:.3f} dB at {report.best_point}")
    return report.to_rows(), report.to_dict(), request["names"] + ["noise_db"]


# command -> (argument check, run); checks need no calibration
COMMANDS = {
    "trace": (check_trace, run_trace),
    "sweep": (check_sweep, run_sweep_command),
    "spectrum": (check_spectrum, run_spectrum),
    "pulsed": (check_pulsed, run_pulsed),
    "optimize": (check_optimize, run_optimize),
}


def cli_main(argv=None):
    """
    Run one subcommand

    Arguments are checked against the config before calibration; anything that
    fails after that point is a runtime error.

    Args:
        argv: argument list (default: sys.argv[1:])

    Returns:
        int: exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"[ERROR] Usage: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return EXIT_OK if not e.code else EXIT_USAGE

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        _, _, _, anchors = build_models(config)
    except FileNotFoundError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"[ERROR] Malformed config: {e}", file=sys.stderr)
        return EXIT_USAGE

    check, command = COMMANDS[args.command]
    try:
        request = check(args, config)
    except ValueError as e:
        print(f"[ERROR] Invalid request: {e}", file=sys.stderr)
        return EXIT_USAGE

    _say(args, "=" * 70)
    _say(args, f"  {args.command.upper()}  ({os.path.basename(args.config)})")
    _say(args, "=" * 70)

    try:
        calibration = calibrate(anchors)
        outcome = command(args, config, calibration, request)
    except CalibrationError as e:
        print(f"[ERROR] Calibration failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        print(f"[ERROR] {args.command} failed: {e}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return EXIT_RUNTIME

    if len(outcome) == 3:
        rows, summary, header = outcome
    else:
        (rows, summary), header = outcome, None

    stem = output_stem(args.command, args.tag)
    csv_path = os.path.join(args.output_dir, f"{stem}.csv")
    json_path = os.path.join(args.output_dir, f"{stem}.json")
    try:
        ensure_directory(args.output_dir)
        if header:
            save_csv(csv_path, rows, header)
        else:
            save_csv(csv_path, rows)
        save_json(json_path, provenance(args.command, config, calibration, summary))
    except OSError as e:
        print(f"[ERROR] Cannot write output to {args.output_dir}: {e}", file=sys.stderr)
        for path in (csv_path, json_path):
            if os.path.isfile(path):
                os.remove(path)
        return EXIT_RUNTIME

    _say(args, f"[SUCCESS] Wrote {csv_path}")
    _say(args, f"[SUCCESS] Wrote {json_path}")
    return EXIT_OK


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        print("\n\n[INFO] Interrupted by user")
        sys.exit(EXIT_USAGE)
