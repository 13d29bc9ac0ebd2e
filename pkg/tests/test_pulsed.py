import numpy as np
import pytest
from dataclasses import replace

from detection import noise_spectrum
from pulsed import (
    ContaminatedMeasurementError,
    PulseTrain,
    between_peak_excess,
    check_detection_frequency,
    comb_line_powers,
    comb_parseval_ratio,
    pulse_envelope,
    pulse_spectrum,
    pulsed_squeezing,
    sampled_comb,
)
from vapor_model import PumpConfig


@pytest.fixture
def train():
    return PulseTrain(width=200e-9, rep_rate=1e6, peak_power=0.040)


def test_train_validation():
    with pytest.raises(ValueError):
        PulseTrain(width=1e-6, rep_rate=1e6)
    with pytest.raises(ValueError):
        PulseTrain(width=0.0)
    with pytest.raises(ValueError):
        PulseTrain(peak_power=0.0)
    with pytest.raises(ValueError):
        PulseTrain(shape="gaussian")


def test_train_averages(train):
    assert train.duty_cycle == pytest.approx(0.2)
    assert train.average_power == pytest.approx(0.008)
    shaped = replace(train, shape="raised-cosine")
    assert shaped.average_power == pytest.approx(0.004)


def test_rectangular_envelope_nulls(train):
    assert pulse_envelope(train, 0.0) == pytest.approx(1.0)
    np.testing.assert_allclose(pulse_envelope(train, [5e6, 10e6]), 0.0, atol=1e-20)


def test_raised_cosine_envelope(train):
    shaped = replace(train, shape="raised-cosine")
    assert pulse_envelope(shaped, 0.0) == pytest.approx(1.0)
    assert pulse_envelope(shaped, 5e6) == pytest.approx(0.25)
    assert pulse_envelope(shaped, 10e6) == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("shape", ["rectangular", "raised-cosine"])
def test_comb_lines_match_sampled_train(train, shape):
    shaped = replace(train, shape=shape)
    freqs, powers, x = sampled_comb(shaped, periods=8)
    expected = comb_line_powers(shaped, 4)
    for k in range(5):
        index = k * 8
        assert freqs[index] == pytest.approx(k * shaped.rep_rate)
        assert powers[index] == pytest.approx(expected[k], rel=0.01)
    assert np.mean(x) == pytest.approx(shaped.mean_profile(), rel=1e-3)
    assert np.mean(x ** 2) == pytest.approx(shaped.mean_square_profile(), rel=1e-3)


def test_sampled_spectrum_conserves_power(train):
    _, powers, x = sampled_comb(train)
    total = powers[0] + 2.0 * np.sum(powers[1:-1]) + powers[-1]
    assert total == pytest.approx(np.mean(x ** 2), rel=1e-9)


@pytest.mark.parametrize("shape", ["rectangular", "raised-cosine"])
def test_comb_power_accounts_for_train_power(train, shape):
    assert comb_parseval_ratio(replace(train, shape=shape)) == pytest.approx(1.0, abs=0.01)


def test_spectrum_lines_sit_on_repetition_harmonics(train):
    spectrum = pulse_spectrum(train)
    np.testing.assert_array_equal(spectrum.line_bins, [100, 200, 300, 400, 500])
    peaks = spectrum.psd_db[spectrum.line_bins[:4]]
    assert np.all(peaks > spectrum.between_peak_db + 1.0)
    # the 5 MHz line falls on the envelope null
    assert spectrum.psd_db[500] == pytest.approx(spectrum.between_peak_db)
    assert spectrum.metadata()["bin_width_MHz"] == pytest.approx(0.01)


def test_between_peak_level_with_good_rejection(train):
    spectrum = pulse_spectrum(train, cmrr_db=30.0)
    assert abs(spectrum.between_peak_db) <= 0.05
    assert spectrum.psd_db[270] == pytest.approx(spectrum.between_peak_db)


def test_poor_rejection_lifts_between_peak_level(train):
    assert pulse_spectrum(train, cmrr_db=0.0).between_peak_db > 0.05
    assert between_peak_excess(train, 0.0) > between_peak_excess(train, 30.0)
    with pytest.raises(ValueError):
        pulse_spectrum(train, cmrr_db=-3.0)


def test_resolution_checks(train):
    with pytest.raises(ValueError):
        pulse_spectrum(train, bins=11)
    with pytest.raises(ValueError):
        pulse_spectrum(train, f_max=2.0)


@pytest.mark.parametrize("f_detect", [3.0, 3.015, 0.99])
def test_detection_on_comb_line_rejected(train, f_detect):
    with pytest.raises(ContaminatedMeasurementError):
        check_detection_frequency(train, f_detect)


def test_detection_between_lines_accepted(train):
    check_detection_frequency(train, 2.7)
    check_detection_frequency(train, 2.5)


def test_ideal_pulsed_equals_cw_at_peak_power(train, cal_cell, homodyne):
    template = PumpConfig(0.140, 600.0)
    ideal = pulsed_squeezing(train, template, cal_cell, homodyne, 2.7, delta_pulsed_db=0.0)
    cw = noise_spectrum(PumpConfig(0.040, 600.0), cal_cell, homodyne, [2.7]).squeezing_db[0]
    assert ideal == pytest.approx(cw, abs=1e-12)


def test_pulsed_degradation_offset(train, cal_cell, homodyne):
    template = PumpConfig(0.140, 600.0)
    ideal = pulsed_squeezing(train, template, cal_cell, homodyne, 2.7, delta_pulsed_db=0.0)
    measured = pulsed_squeezing(train, template, cal_cell, homodyne, 2.7)
    assert measured - ideal == pytest.approx(0.2, abs=1e-12)


def test_pulsed_squeezing_depends_on_peak_not_duty_cycle(train, cal_cell, homodyne):
    template = PumpConfig(0.140, 600.0)
    short = replace(train, width=100e-9)
    slow = replace(train, rep_rate=0.5e6)
    reference = pulsed_squeezing(train, template, cal_cell, homodyne, 2.7)
    assert pulsed_squeezing(short, template, cal_cell, homodyne, 2.7) == pytest.approx(reference)
    assert pulsed_squeezing(slow, template, cal_cell, homodyne, 2.7) == pytest.approx(reference)


def test_pulsed_squeezing_refuses_contaminated_frequency(train, cal_cell, homodyne):
    with pytest.raises(ContaminatedMeasurementError):
        pulsed_squeezing(train, PumpConfig(0.140, 600.0), cal_cell, homodyne, 2.0)


def test_pulsed_level_at_reported_operating_point(train, cal_cell, homodyne):
    template = PumpConfig(0.140, 710.0)
    cw = noise_spectrum(PumpConfig(0.040, 710.0), cal_cell, homodyne, [2.7]).squeezing_db[0]
    assert cw == pytest.approx(-1.2, abs=0.1)
    assert pulsed_squeezing(train, template, cal_cell, homodyne, 2.7) == pytest.approx(-1.0, abs=0.1)
