import math
from dataclasses import replace

import numpy as np
import pytest

from atomic_data import get_line
from detection import (
    HomodyneConfig,
    PztRamp,
    blocked_port_level,
    detect,
    detected_quadratures,
    noise_spectrum,
    phase_scan,
    sample_homodyne,
    sampled_noise_db,
    shot_noise_level,
    sideband_state,
    spawn_seeds,
)
from gaussian_core import (
    add_thermal,
    apply_loss,
    apply_squeeze,
    quadrature_variance,
    vacuum,
    variance_db,
)
from vapor_model import PumpConfig, VaporCell, interact, rb85_doppler_center

R_2DB = 0.2303


def test_shot_noise_linear_in_lo_power():
    ref = 1e-3
    for lo in np.logspace(-2, 0, 9) * ref:
        assert shot_noise_level(lo, ref) == pytest.approx(lo / ref)
    assert shot_noise_level(ref, ref) == pytest.approx(1.0)
    assert shot_noise_level(2 * ref, ref) == pytest.approx(2.0)


def test_shot_noise_with_electronic_floor():
    assert shot_noise_level(1e-9, 1e-3, electronic_floor=0.05) == pytest.approx(0.05, abs=1e-5)
    with pytest.raises(ValueError):
        shot_noise_level(0.0, 1e-3)
    with pytest.raises(ValueError):
        shot_noise_level(1e-3, 1e-3, electronic_floor=-0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        HomodyneConfig(path_efficiency=0.0)
    with pytest.raises(ValueError):
        HomodyneConfig(fringe_visibility=1.2)
    with pytest.raises(ValueError):
        HomodyneConfig(cmrr_db=-1.0)
    with pytest.raises(ValueError):
        HomodyneConfig(pzt_rad_per_V=0.0)


def test_total_efficiency_composition():
    cfg = HomodyneConfig(path_efficiency=0.9, detector_quantum_efficiency=0.8, fringe_visibility=0.95)
    assert cfg.total_efficiency == pytest.approx(0.9 * 0.8 * 0.95 ** 2)
    assert HomodyneConfig().total_efficiency == pytest.approx(0.7469)


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.3, 2.9])
def test_blocked_port_is_shot_noise(theta):
    assert blocked_port_level(theta, HomodyneConfig()) == pytest.approx(1.0)
    assert blocked_port_level(theta, HomodyneConfig(electronic_floor=0.02)) == pytest.approx(1.02)


def test_detected_squeezing_after_loss(homodyne):
    state = apply_squeeze(vacuum(), R_2DB, 0.0)
    assert detect(state, 0.0, homodyne) == pytest.approx(0.7244, abs=1e-3)


def test_lossless_detection_is_transparent():
    cfg = HomodyneConfig(path_efficiency=1.0)
    state = add_thermal(apply_squeeze(vacuum(), 0.5, 0.3), 0.1)
    assert detect(state, 0.3, cfg) == pytest.approx(quadrature_variance(state, 0.3))


def test_more_loss_never_improves_squeezing():
    state = apply_squeeze(vacuum(), 0.6, 0.0)
    levels = [detect(state, 0.0, HomodyneConfig(path_efficiency=eta)) for eta in (1.0, 0.9, 0.7469, 0.5, 0.2)]
    assert all(b > a for a, b in zip(levels, levels[1:]))


def test_phase_scan_extrema_match_calibration(cal_pump, cal_cell, homodyne):
    result = interact(cal_pump, cal_cell)
    state = sideband_state(result, 3.0, homodyne)
    trace = phase_scan(state, PztRamp(), homodyne, 3.0)
    sq, anti = detected_quadratures(cal_pump, cal_cell, homodyne, 3.0)
    assert np.min(trace.noise_db) == pytest.approx(sq, abs=0.01)
    assert np.max(trace.noise_db) == pytest.approx(anti, abs=0.01)
    assert np.min(trace.noise_db) == pytest.approx(-1.4, abs=0.1)
    assert np.max(trace.noise_db) == pytest.approx(5.2, abs=0.1)
    meta = trace.metadata()
    assert meta["points"] == 801
    assert meta["rbw_kHz"] == 300.0


def test_vacuum_trace_is_flat(homodyne):
    trace = phase_scan(vacuum(), PztRamp(), homodyne)
    np.testing.assert_allclose(trace.noise_db, 0.0, atol=1e-12)


def test_doubling_pzt_slope_halves_fringe_period():
    state = add_thermal(apply_squeeze(vacuum(), 0.5, 0.2), 0.05)
    slow = HomodyneConfig(pzt_rad_per_V=math.pi / 100)
    fast = HomodyneConfig(pzt_rad_per_V=2 * math.pi / 100)
    trace_slow = phase_scan(state, PztRamp(0.0, 200.0, 801), slow)
    trace_fast = phase_scan(state, PztRamp(0.0, 120.0, 481), fast)
    np.testing.assert_allclose(trace_fast.noise_db[:401], trace_slow.noise_db[::2], atol=1e-9)


def test_ramp_validation(homodyne):
    with pytest.raises(ValueError):
        PztRamp(5.0, 5.0, 11)
    with pytest.raises(ValueError):
        PztRamp(0.0, 10.0, 2)
    with pytest.raises(ValueError):
        phase_scan(vacuum(), PztRamp(0.0, 100.0, 401), homodyne)


def test_sampled_trace_tracks_analytic(cal_pump, cal_cell, homodyne):
    state = sideband_state(interact(cal_pump, cal_cell), 3.0, homodyne)
    ramp = PztRamp(0.0, 200.0, 41)
    analytic = phase_scan(state, ramp, homodyne)
    sampled = phase_scan(state, ramp, homodyne, samples=200000, seed=5)
    np.testing.assert_allclose(sampled.noise_db, analytic.noise_db, atol=0.15)
    again = phase_scan(state, ramp, homodyne, samples=200000, seed=5)
    np.testing.assert_array_equal(sampled.noise_db, again.noise_db)


def test_spectrum_low_frequency_degradation(cal_pump, cal_cell, homodyne):
    spectrum = noise_spectrum(cal_pump, cal_cell, homodyne, [0.9, 3.0])
    assert spectrum.squeezing_db[0] > spectrum.squeezing_db[1]


def test_spectrum_returns_to_shot_noise_at_high_frequency(cal_pump, cal_cell, homodyne):
    spectrum = noise_spectrum(cal_pump, cal_cell, homodyne, [1e4])
    assert spectrum.squeezing_db[0] == pytest.approx(0.0, abs=1e-3)
    assert spectrum.antisqueezing_db[0] == pytest.approx(0.0, abs=1e-3)


def test_spectrum_respects_loss_bound(cal_pump, cal_cell, homodyne):
    result = interact(cal_pump, cal_cell)
    eta = homodyne.total_efficiency * result.eta_med
    bound = variance_db(eta * math.exp(-2 * result.r) + 1 - eta)
    spectrum = noise_spectrum(cal_pump, cal_cell, homodyne, np.linspace(0.5, 30.0, 60))
    assert np.all(spectrum.squeezing_db >= bound - 1e-12)


def test_spectrum_rejects_non_positive_frequencies(cal_pump, cal_cell, homodyne):
    with pytest.raises(ValueError):
        noise_spectrum(cal_pump, cal_cell, homodyne, [0.0, 3.0])
    with pytest.raises(ValueError):
        noise_spectrum(cal_pump, cal_cell, homodyne, [])


def test_rb85_point_is_broadband(homodyne):
    pump = PumpConfig(0.050, rb85_doppler_center(get_line("D1")))
    cell = VaporCell.from_celsius(122.0)
    spectrum = noise_spectrum(pump, cell, homodyne, np.linspace(1.5, 15.0, 28))
    assert np.all(spectrum.squeezing_db <= -0.5)
    wide = noise_spectrum(pump, cell, homodyne, np.linspace(0.9, 20.0, 40))
    assert np.all(wide.squeezing_db <= 0.0)
    assert detected_quadratures(pump, cell, homodyne, 3.0)[0] <= -1.0


def test_d2_never_below_shot_noise(cal_cell, homodyne):
    for detuning in (-1000.0, 0.0, 300.0, 600.0, 1500.0):
        pump = PumpConfig(0.140, detuning, line="D2")
        state = sideband_state(interact(pump, cal_cell), 3.0, homodyne)
        trace = phase_scan(state, PztRamp(0.0, 200.0, 201), homodyne)
        assert np.all(trace.noise_db >= -1e-12)


def test_vacuum_sample_variance():
    samples = sample_homodyne(vacuum(), 0.0, 1_000_000, seed=1)
    tolerance = 3 * math.sqrt(2.0 / (len(samples) - 1))
    assert abs(np.var(samples, ddof=1) - 1.0) <= tolerance
    assert abs(np.mean(samples)) <= 4 * math.sqrt(1.0 / len(samples))


def test_sample_variance_matches_quadrature_variance():
    states = [
        apply_squeeze(vacuum(), R_2DB, 0.0),
        apply_loss(apply_squeeze(vacuum(), 0.8, 0.5), 0.7469),
        add_thermal(apply_squeeze(vacuum(), 0.3, 1.0), 0.2),
    ]
    n = 1_000_000
    seeds = spawn_seeds(77, len(states) * 10)
    i = 0
    for state in states:
        for theta in np.linspace(0.0, math.pi, 10, endpoint=False):
            expected = quadrature_variance(state, theta)
            measured = np.var(sample_homodyne(state, theta, n, seeds[i]), ddof=1)
            i += 1
            # 4.5 sigma per case keeps the 30-case family well below a 1e-4 false-alarm rate
            assert abs(measured - expected) <= 4.5 * math.sqrt(2.0 / (n - 1)) * expected


def test_sampling_is_seeded():
    a = sample_homodyne(vacuum(), 0.0, 1000, seed=3)
    b = sample_homodyne(vacuum(), 0.0, 1000, seed=3)
    c = sample_homodyne(vacuum(), 0.0, 1000, seed=4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        sample_homodyne(vacuum(), 0.0, 1, seed=3)


def test_welch_estimate_of_vacuum(homodyne):
    assert sampled_noise_db(vacuum(), 0.0, homodyne, 2 ** 18, seed=9) == pytest.approx(0.0, abs=0.1)


def test_welch_estimate_of_squeezed_state(homodyne):
    state = apply_squeeze(vacuum(), R_2DB, 0.0)
    estimate = sampled_noise_db(state, 0.0, homodyne, 2 ** 18, seed=10)
    assert estimate == pytest.approx(variance_db(detect(state, 0.0, homodyne)), abs=0.1)
    assert estimate == pytest.approx(-1.40, abs=0.1)


def test_welch_estimate_includes_electronic_floor():
    cfg = HomodyneConfig(electronic_floor=0.25)
    assert sampled_noise_db(vacuum(), 0.0, cfg, 2 ** 18, seed=11) == pytest.approx(variance_db(1.25), abs=0.1)


def test_spectrum_metadata_reports_flat_band(cal_pump, cal_cell, homodyne):
    spectrum = noise_spectrum(cal_pump, cal_cell, homodyne, np.linspace(1.0, 10.0, 10))
    meta = spectrum.metadata()
    assert meta["best_squeezing_dB"] == pytest.approx(float(np.min(spectrum.squeezing_db)))
    assert set(meta["flat_band"]) == {"r", "theta0_rad", "n_add", "eta_med"}
    assert len(spectrum.to_rows()) == 10


def test_efficiency_changes_detected_level(cal_pump, cal_cell):
    perfect = detected_quadratures(cal_pump, cal_cell, HomodyneConfig(path_efficiency=1.0), 3.0)[0]
    lossy = detected_quadratures(cal_pump, cal_cell, HomodyneConfig(path_efficiency=0.5), 3.0)[0]
    assert perfect < -1.4 < lossy
    assert replace(HomodyneConfig(), path_efficiency=0.5).total_efficiency == pytest.approx(0.5)


def test_trace_is_pi_periodic_in_phase(cal_pump, cal_cell, homodyne):
    state = sideband_state(interact(cal_pump, cal_cell), 3.0, homodyne)
    # pi/100 rad per volt: one period is 100 V
    trace = phase_scan(state, PztRamp(0.0, 200.0, 801), homodyne)
    np.testing.assert_allclose(trace.noise_db[:401], trace.noise_db[400:], atol=1e-9)
