"""
End-to-end self-check of the squeezing model
Runs the calibration point, the loss correction, the detuning optimum, the
power roll-over, hot cells, the D2 regime, the 85Rb-resonant point and the
pulsed mode
"""
import os
import sys
import time
import traceback
from dataclasses import replace

import numpy as np

# Get the directory where this script is located
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.dirname(SCRIPT_DIR)

# Add scripts directory to path for imports
sys.path.insert(0, SCRIPT_DIR)

from detection import HomodyneConfig, detected_quadratures, noise_spectrum
from gaussian_core import db_to_variance, remove_loss, variance_db
from pulsed import PulseTrain, comb_parseval_ratio, pulsed_squeezing
from sweep import OperatingPoint, SweepSpec, run_sweep
from vapor_model import PumpConfig, VaporCell, calibrate, rb85_doppler_center

# Calibration point
CAL_POWER_W = 0.140
CAL_DETUNING_MHZ = 600.0
CAL_TEMPERATURE_C = 108.0
CAL_FREQUENCY_MHZ = 3.0

# 85Rb-resonant point and pulsed-pump detuning
RB85_POWER_W = 0.050
RB85_TEMPERATURE_C = 122.0
PULSED_DETUNING_MHZ = 710.0

# Test results tracking
test_results = {
    "passed": 0,
    "failed": 0,
    "warnings": 0
}


def print_test_header(test_name):
    """Print a formatted test header"""
    print("\n" + "=" * 60)
    print(f"CHECK: {test_name}")
    print("=" * 60)


def print_result(success, message, is_warning=False):
    """Print check result"""
    if success:
        print(f"[PASS] {message}")
        test_results["passed"] += 1
    elif is_warning:
        print(f"[WARN] {message}")
        test_results["warnings"] += 1
    else:
        print(f"[FAIL] {message}")
        test_results["failed"] += 1


def _calibration_point(line="D1"):
    pump = PumpConfig(power=CAL_POWER_W, detuning=CAL_DETUNING_MHZ, line=line)
    cell = VaporCell.from_celsius(CAL_TEMPERATURE_C)
    return pump, cell, HomodyneConfig()


def check_calibration():
    print_test_header("Calibration Closure")
    start = time.perf_counter()
    pump, cell, cfg = _calibration_point()
    sq, anti = detected_quadratures(pump, cell, cfg, CAL_FREQUENCY_MHZ)
    elapsed = time.perf_counter() - start
    cal = calibrate()
    print(f"  C_r = {cal.c_r:.6g}, C_n = {cal.c_n:.6g} ({elapsed * 1e3:.1f} ms)")
    print_result(abs(sq + 1.4) <= 0.02, f"Squeezing {sq:.3f} dB (target -1.4 dB)")
    print_result(abs(anti - 5.2) <= 0.05, f"Anti-squeezing {anti:.3f} dB (target +5.2 dB)")


def check_loss_correction():
    print_test_header("Loss Correction")
    corrected = variance_db(remove_loss(db_to_variance(-1.4), HomodyneConfig().total_efficiency))
    print_result(abs(corrected + 2.0) <= 0.05, f"Corrected squeezing {corrected:.3f} dB (target -2.0 dB)")


def check_detuning_optimum():
    print_test_header("Detuning Optimum at 140 mW")
    pump, cell, cfg = _calibration_point()
    spec = SweepSpec("detuning", 100.0, 1400.0, 25.0, OperatingPoint(pump, cell, cfg, CAL_FREQUENCY_MHZ))
    curve = run_sweep(spec)
    x_best, y_best = curve.best()
    print_result(500.0 <= x_best <= 700.0, f"Optimum {y_best:.3f} dB at {x_best:g} MHz")
    tail = curve.squeezing_db[curve.x > 800.0]
    print_result(bool(np.all(tail >= -0.2)), f"No squeezing beyond 800 MHz (lowest {tail.min():.3f} dB)")


def check_power_rolloff():
    print_test_header("Power Roll-over at 600 MHz")
    pump, cell, cfg = _calibration_point()
    spec = SweepSpec("power", 20.0, 220.0, 20.0, OperatingPoint(pump, cell, cfg, CAL_FREQUENCY_MHZ))
    curve = run_sweep(spec)
    x_best, y_best = curve.best()
    interior = curve.x[0] < x_best < curve.x[-1]
    print_result(interior, f"Best {y_best:.3f} dB at {x_best:g} mW")
    print_result(curve.squeezing_db[-1] - y_best >= 1.0,
                 f"220 mW is {curve.squeezing_db[-1] - y_best:.3f} dB worse than the best power")


def check_temperature_range():
    print_test_header("Hot-Cell Stability")
    pump, cell, cfg = _calibration_point()
    values = [detected_quadratures(pump, VaporCell.from_celsius(t), cfg, CAL_FREQUENCY_MHZ)[0]
              for t in (60.0, 108.0, 130.0, 150.0, 160.0)]
    print_result(bool(np.all(np.isfinite(values))), "Finite squeezing from 60 to 160 C")
    print_result(values[1] < min(values[0], values[-1]), f"Squeezing peaks inside the range ({values[1]:.3f} dB)")


def check_d2():
    print_test_header("D2 Line Excess Noise")
    pump, cell, cfg = _calibration_point(line="D2")
    worst = min(detected_quadratures(replace(pump, detuning=d), cell, cfg, CAL_FREQUENCY_MHZ)[0]
                for d in (-1000.0, 0.0, 600.0, 1500.0))
    print_result(worst >= 0.0, f"Lowest D2 noise {worst:.3f} dB (never below shot noise)")


def check_rb85_point():
    print_test_header("85Rb-Resonant Operating Point")
    pump = PumpConfig(power=RB85_POWER_W, detuning=0.0)
    pump = replace(pump, detuning=rb85_doppler_center(pump.atomic_line))
    cell = VaporCell.from_celsius(RB85_TEMPERATURE_C)
    cfg = HomodyneConfig()
    sq, _ = detected_quadratures(pump, cell, cfg, CAL_FREQUENCY_MHZ)
    print_result(sq <= -1.0, f"Squeezing {sq:.3f} dB at the 85Rb F=3 center ({pump.detuning:.1f} MHz)")
    pure, _ = detected_quadratures(pump, replace(cell, isotope_fraction_87=1.0), cfg, CAL_FREQUENCY_MHZ)
    print_result(sq - pure >= 0.2, f"Isotopically pure cell gains {sq - pure:.3f} dB")
    spectrum = noise_spectrum(pump, cell, cfg, np.linspace(1.5, 15.0, 28))
    worst = float(np.max(spectrum.squeezing_db))
    print_result(worst <= -0.5, f"Broadband 1.5-15 MHz: worst {worst:.3f} dB")


def check_pulsed():
    print_test_header("Pulsed Pump")
    pump = PumpConfig(power=CAL_POWER_W, detuning=PULSED_DETUNING_MHZ)
    cell = VaporCell.from_celsius(CAL_TEMPERATURE_C)
    cfg = HomodyneConfig()
    train = PulseTrain()
    ratio = comb_parseval_ratio(train)
    print_result(abs(ratio - 1.0) <= 0.01, f"Comb power / mean-square power = {ratio:.4f}")
    ideal = pulsed_squeezing(train, pump, cell, cfg, 2.7, delta_pulsed_db=0.0)
    measured = pulsed_squeezing(train, pump, cell, cfg, 2.7)
    print_result(abs(measured - ideal - 0.2) <= 1e-9,
                 f"Pulsed {measured:.3f} dB vs ideal {ideal:.3f} dB at 2.7 MHz")
    print_result(abs(measured + 1.0) <= 0.1, f"Pulsed level {measured:.3f} dB (target -1.0 dB)")


CHECKS = [
    check_calibration,
    check_loss_correction,
    check_detuning_optimum,
    check_power_rolloff,
    check_temperature_range,
    check_d2,
    check_rb85_point,
    check_pulsed,
]


def run_all():
    for key in test_results:
        test_results[key] = 0
    for check in CHECKS:
        try:
            check()
        except Exception as e:
            print_result(False, f"{check.__name__} raised: {e}")
            traceback.print_exc()
    return dict(test_results)


def main():
    print("=" * 70)
    print("  SQUEEZING MODEL SELF-CHECK")
    print("=" * 70)
    results = run_all()
    print("\n" + "=" * 70)
    print(f"  Passed: {results['passed']}  Failed: {results['failed']}  Warnings: {results['warnings']}")
    print("=" * 70)
    if results["failed"]:
        print("[ERROR] Some checks failed")
        return 1
    print("[SUCCESS] All checks passed")
    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\n[INFO] Interrupted by user")
        sys.exit(1)
