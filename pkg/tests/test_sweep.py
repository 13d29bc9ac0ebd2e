from dataclasses import replace

import numpy as np
import pytest

from sweep import OperatingPoint, SweepSpec, optimize, run_sweep, run_sweep_at_best_detuning
from vapor_model import PumpConfig, calibrate, mirror_detuning


@pytest.fixture
def base(cal_pump, cal_cell, homodyne):
    return OperatingPoint(cal_pump, cal_cell, homodyne, 3.0)


def test_operating_point_round_trips_axis_values(base):
    assert base.value_of("detuning") == pytest.approx(600.0)
    assert base.value_of("power") == pytest.approx(140.0)
    assert base.value_of("temperature") == pytest.approx(108.0)
    assert base.value_of("waist") == pytest.approx(400.0)
    moved = base.with_value("temperature", 95.0).with_value("power", 80.0)
    assert moved.value_of("temperature") == pytest.approx(95.0)
    assert moved.pump.power == pytest.approx(0.080)
    with pytest.raises(ValueError):
        base.with_value("pressure", 1.0)
    with pytest.raises(ValueError):
        base.with_value("detection_frequency", 0.0)


def test_sweep_spec_validation(base):
    with pytest.raises(ValueError):
        SweepSpec("detuning", 1400.0, 100.0, 25.0, base)
    with pytest.raises(ValueError):
        SweepSpec("detuning", 100.0, 1400.0, 0.0, base)
    with pytest.raises(ValueError):
        SweepSpec("detuning", 100.0, 120.0, 25.0, base)
    with pytest.raises(ValueError):
        SweepSpec("colour", 100.0, 1400.0, 25.0, base)


def test_sweep_includes_end_point(base):
    values = SweepSpec("detuning", 100.0, 1400.0, 25.0, base).values()
    assert len(values) == 53
    assert values[-1] == pytest.approx(1400.0)


def test_detuning_sweep_finds_optimum(base):
    curve = run_sweep(SweepSpec("detuning", 100.0, 1400.0, 25.0, base))
    x_best, y_best = curve.best()
    assert 500.0 <= x_best <= 700.0
    assert -1.6 <= y_best <= -1.35
    tail = curve.squeezing_db[curve.x > 800.0]
    assert np.all(tail >= -0.2)
    assert curve.metadata()["unit"] == "MHz"


def test_squeezing_fades_beyond_800_mhz(base):
    curve = run_sweep(SweepSpec("detuning", 810.0, 1400.0, 10.0, base))
    assert np.all(curve.squeezing_db >= -0.2)


def test_natural_cell_fades_sooner_than_pure_cell(base):
    def fade_point(point):
        curve = run_sweep(SweepSpec("detuning", 600.0, 2600.0, 20.0, point))
        return float(curve.x[np.argmax(curve.squeezing_db >= -0.2)])

    pure = replace(base, cell=replace(base.cell, isotope_fraction_87=1.0))
    natural_fade, pure_fade = fade_point(base), fade_point(pure)
    assert natural_fade < 900.0
    assert pure_fade > natural_fade + 500.0


def test_sweep_is_deterministic_across_worker_counts(base):
    spec = SweepSpec("power", 20.0, 200.0, 20.0, base)
    serial = run_sweep(spec, max_workers=1)
    parallel = run_sweep(spec, max_workers=4)
    np.testing.assert_array_equal(serial.squeezing_db, parallel.squeezing_db)
    np.testing.assert_array_equal(serial.x, parallel.x)


def test_zero_interaction_sweep_is_flat(base):
    flat = replace(base, calibration=calibrate().with_constants(c_r=0.0, c_n=0.0))
    curve = run_sweep(SweepSpec("temperature", 60.0, 140.0, 10.0, flat))
    np.testing.assert_allclose(curve.squeezing_db, 0.0, atol=1e-12)


def test_optimizer_matches_fine_grid(base):
    report = optimize({"detuning": (100.0, 1400.0)}, base)
    fine = run_sweep(SweepSpec("detuning", 400.0, 900.0, 5.0, base))
    x_fine, y_fine = fine.best()
    assert abs(report.best_point["detuning"] - x_fine) <= 25.0
    assert report.best_db <= y_fine + 1e-4
    assert report.best_db <= min(value for _, value in report.samples) + 1e-12
    assert report.evaluations > len(report.samples)
    assert report.grid_step["detuning"] == pytest.approx(1300.0 / 24)


def test_two_dimensional_optimum_not_worse_than_grid(base):
    report = optimize({"detuning": (300.0, 1000.0), "power": (40.0, 160.0)}, base, grid_points=5)
    assert len(report.samples) == 25
    assert report.best_db <= min(value for _, value in report.samples) + 1e-12
    rows = report.to_rows()
    assert len(rows[0]) == 3


def test_collapsed_bounds_return_the_point(base):
    report = optimize({"detuning": (600.0, 600.0)}, base)
    assert report.best_point == {"detuning": 600.0}
    assert report.evaluations == 1
    assert report.best_db == pytest.approx(base.evaluate()[0])


def test_d2_optimum_stays_above_shot_noise(base):
    d2 = replace(base, pump=PumpConfig(0.140, 600.0, line="D2"))
    report = optimize({"detuning": (-1500.0, 1500.0)}, d2, grid_points=13)
    assert report.best_db >= 0.0


def test_optimizer_rejects_bad_regions(base):
    with pytest.raises(ValueError):
        optimize({"detuning": (900.0, 300.0)}, base)
    with pytest.raises(ValueError):
        optimize({}, base)
    with pytest.raises(ValueError):
        optimize({"detection_frequency": (1.0, 5.0)}, base)
    with pytest.raises(ValueError):
        optimize({"temperature": (-100.0, 100.0)}, base)


def test_optimal_detuning_moves_out_with_power(base):
    curve = run_sweep_at_best_detuning(SweepSpec("power", 20.0, 80.0, 30.0, base), (400.0, 800.0))
    assert len(curve.best_detuning) == 3
    assert curve.best_detuning[-1] > curve.best_detuning[0] + 20.0
    assert curve.metadata()["best_detuning_MHz"] == pytest.approx(list(curve.best_detuning))


def test_power_sweep_at_best_detuning_rolls_over(base):
    curve = run_sweep_at_best_detuning(SweepSpec("power", 20.0, 240.0, 20.0, base), (300.0, 900.0))
    x_best, y_best = curve.best()
    assert curve.x[0] < x_best < curve.x[-1]
    assert curve.squeezing_db[curve.x == 200.0][0] >= y_best + 1.0
    assert curve.squeezing_db[-1] >= 0.0
    assert np.all(curve.antisqueezing_db > curve.squeezing_db)


def test_best_detuning_sweep_rejects_detuning_axis(base):
    with pytest.raises(ValueError):
        run_sweep_at_best_detuning(SweepSpec("detuning", 400.0, 800.0, 50.0, base), (400.0, 800.0))
    with pytest.raises(ValueError):
        run_sweep_at_best_detuning(SweepSpec("power", 20.0, 80.0, 30.0, base), (800.0, 400.0))


def test_mirror_optimum_drifts_at_high_power(base):
    line = base.pump.atomic_line
    center = 0.5 * mirror_detuning(0.0, line)

    def mirror_error(power_mW):
        point = base.with_value("power", power_mW)
        blue = optimize({"detuning": (300.0, 900.0)}, point)
        red = optimize({"detuning": (-1800.0, -1000.0)}, point)
        blue_x, red_x = blue.best_point["detuning"], red.best_point["detuning"]
        position = abs(red_x - mirror_detuning(blue_x, line)) / abs(blue_x - center)
        return position, abs(blue.best_db - red.best_db)

    low_position, _ = mirror_error(20.0)
    high_position, high_level = mirror_error(120.0)
    assert low_position < 0.1
    assert high_position > 2.0 * low_position
    assert high_level > 0.1
