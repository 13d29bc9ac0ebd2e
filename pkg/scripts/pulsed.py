"""
Pulsed-pump squeezing
Pulse-train comb spectrum, between-peak detection with finite common-mode
rejection and peak-power-driven squeezing.
"""
import os
import sys
import math
from dataclasses import dataclass, replace

import numpy as np

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(PROJECT_ROOT, "scripts"))

from detection import noise_spectrum

PULSE_SHAPES = ("rectangular", "raised-cosine")

DEFAULT_DELTA_PULSED_DB = 0.2
DEFAULT_COMB_RESIDUAL_DB = 10.0
DEFAULT_F_MAX_MHZ = 5.0
DEFAULT_BINS = 501
GUARD_BINS = 2

# Added noise reported for the pulsed run at 2.7 MHz (dB), kept as metadata only
REPORTED_PULSE_EXCESS_DB = 6.0


class ContaminatedMeasurementError(ValueError):
    """Detection frequency sits on (or next to) a comb line"""


@dataclass(frozen=True)
class PulseTrain:
    width: float = 200e-9
    rep_rate: float = 1e6
    peak_power: float = 0.040
    shape: str = "rectangular"

    def __post_init__(self):
        if not (self.width > 0 and self.rep_rate > 0):
            raise ValueError(f"Pulse width and repetition rate must be > 0, got {self.width}, {self.rep_rate}")
        if self.width * self.rep_rate >= 1:
            raise ValueError(f"Duty cycle must be < 1, got {self.width * self.rep_rate:.3f}")
        if not (self.peak_power > 0):
            raise ValueError(f"Peak power must be > 0, got {self.peak_power}")
        if self.shape not in PULSE_SHAPES:
            raise ValueError(f"Unknown pulse shape '{self.shape}', expected one of {PULSE_SHAPES}")

    @property
    def duty_cycle(self):
        return self.width * self.rep_rate

    @property
    def rep_rate_MHz(self):
        return self.rep_rate * 1e-6

    def profile(self, t):
        """Peak-normalized intensity of one pulse centred on t = 0"""
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < 0.5 * self.width
        if self.shape == "rectangular":
            return inside.astype(float)
        return np.where(inside, 0.5 * (1.0 + np.cos(2.0 * math.pi * t / self.width)), 0.0)

    def mean_profile(self):
        """Time average of the normalized train"""
        return self.duty_cycle if self.shape == "rectangular" else 0.5 * self.duty_cycle

    def mean_square_profile(self):
        return self.duty_cycle if self.shape == "rectangular" else 0.375 * self.duty_cycle

    @property
    def average_power(self):
        return self.peak_power * self.mean_profile()


@dataclass
class PulseSpectrum:
    frequencies: np.ndarray
    psd_db: np.ndarray
    line_frequencies: np.ndarray
    line_bins: np.ndarray
    bin_width_MHz: float
    between_peak_db: float

    def to_rows(self):
        return [(float(f), float(p)) for f, p in zip(self.frequencies, self.psd_db)]

    def metadata(self):
        return {
            "bin_width_MHz": self.bin_width_MHz,
            "line_frequencies_MHz": [float(f) for f in self.line_frequencies],
            "between_peak_dB": self.between_peak_db,
            "peak_dB": float(np.max(self.psd_db)),
        }


def pulse_envelope(train, f_Hz):
    """
    Normalized |FT|^2 of one pulse (1 at f = 0)

    Args:
        train: PulseTrain
        f_Hz: frequency or array of frequencies in Hz

    Returns:
        np.ndarray: envelope values
    """
    x = np.asarray(f_Hz, dtype=float) * train.width
    if train.shape == "rectangular":
        return np.sinc(x) ** 2
    denom = 1.0 - x ** 2
    near_pole = np.abs(denom) < 1e-9
    amp = np.where(near_pole, 0.5, np.sinc(x) / np.where(near_pole, 1.0, denom))
    return amp ** 2


def comb_line_powers(train, n_lines):
    """
    |c_k|^2 of the Fourier series of the peak-normalized train, k = 0..n_lines

    Returns:
        np.ndarray: line powers, index k
    """
    k = np.arange(n_lines + 1)
    c0 = train.mean_profile()
    return c0 ** 2 * pulse_envelope(train, k * train.rep_rate)


def comb_parseval_ratio(train, n_lines=2000):
    """Two-sided comb power over the mean-square of the train (1 when complete)"""
    p = comb_line_powers(train, n_lines)
    return float((p[0] + 2.0 * np.sum(p[1:])) / train.mean_square_profile())


def sampled_comb(train, periods=8, samples_per_period=10000):
    """
    DFT of a sampled pulse train

    Args:
        train: PulseTrain
        periods: number of repetition periods sampled
        samples_per_period: samples per period

    Returns:
        tuple: (frequencies in Hz, one-sided line powers |X|^2/N^2, sampled train)
    """
    n = periods * samples_per_period
    dt = 1.0 / (train.rep_rate * samples_per_period)
    t = np.arange(n) * dt
    phase = (t * train.rep_rate) % 1.0
    local = (phase - 0.5) / train.rep_rate
    x = train.profile(local)
    spectrum = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(n, dt)
    return freqs, np.abs(spectrum) ** 2 / n ** 2, x


def _bin_grid(f_max_MHz, bins):
    if bins < 2:
        raise ValueError(f"Need at least 2 bins, got {bins}")
    freqs = np.linspace(0.0, f_max_MHz, bins)
    return freqs, freqs[1] - freqs[0]


def _check_resolution(train, f_max_MHz, bins):
    if f_max_MHz < 3 * train.rep_rate_MHz:
        raise ValueError(
            f"f_max {f_max_MHz} MHz covers fewer than 3 comb lines at {train.rep_rate_MHz} MHz"
        )
    _, bin_width = _bin_grid(f_max_MHz, bins)
    if bin_width > train.rep_rate_MHz / (2 * GUARD_BINS + 2):
        raise ValueError(
            f"Bins of {bin_width:.4f} MHz too coarse to separate comb lines {train.rep_rate_MHz} MHz apart"
        )
    return bin_width


def between_peak_excess(train, cmrr_db, f_max_MHz=DEFAULT_F_MAX_MHZ, comb_residual_db=DEFAULT_COMB_RESIDUAL_DB):
    """Comb leakage into between-peak bins, shot-noise units"""
    k = np.arange(1, int(math.floor(f_max_MHz / train.rep_rate_MHz + 1e-9)) + 1)
    residual = 10.0 ** (comb_residual_db / 10.0) * pulse_envelope(train, k * train.rep_rate)
    return float(np.mean(residual)) * 10.0 ** (-cmrr_db / 10.0)


def pulse_spectrum(train, cmrr_db=30.0, f_max=DEFAULT_F_MAX_MHZ, bins=DEFAULT_BINS,
                   comb_residual_db=DEFAULT_COMB_RESIDUAL_DB):
    """
    Noise spectrum of the pulsed measurement relative to the between-peak shot level

    Args:
        train: PulseTrain
        cmrr_db: common-mode rejection of the balanced detector
        f_max: upper frequency (MHz)
        bins: number of frequency bins from 0 to f_max
        comb_residual_db: residual of the strongest comb line above shot noise

    Returns:
        PulseSpectrum
    """
    if cmrr_db < 0:
        raise ValueError(f"cmrr_db must be >= 0, got {cmrr_db}")
    bin_width = _check_resolution(train, f_max, bins)
    freqs, _ = _bin_grid(f_max, bins)

    leak = between_peak_excess(train, cmrr_db, f_max, comb_residual_db)
    level = np.full(bins, 1.0 + leak)

    k = np.arange(1, int(math.floor(f_max / train.rep_rate_MHz + 1e-9)) + 1)
    line_freqs = k * train.rep_rate_MHz
    line_bins = np.rint(line_freqs / bin_width).astype(int)
    residual = 10.0 ** (comb_residual_db / 10.0) * pulse_envelope(train, line_freqs * 1e6)
    level[line_bins] = 1.0 + np.maximum(residual, leak)

    return PulseSpectrum(
        frequencies=freqs,
        psd_db=10.0 * np.log10(level),
        line_frequencies=line_freqs,
        line_bins=line_bins,
        bin_width_MHz=bin_width,
        between_peak_db=10.0 * math.log10(1.0 + leak),
    )


def check_detection_frequency(train, f_detect, f_max=DEFAULT_F_MAX_MHZ, bins=DEFAULT_BINS):
    """Raise ContaminatedMeasurementError when f_detect is within GUARD_BINS of a comb line"""
    if not (f_detect > 0):
        raise ValueError(f"Detection frequency must be > 0, got {f_detect}")
    bin_width = _check_resolution(train, f_max, bins)
    k = round(f_detect / train.rep_rate_MHz)
    distance = abs(f_detect - k * train.rep_rate_MHz)
    if distance <= GUARD_BINS * bin_width:
        raise ContaminatedMeasurementError(
            f"Detection frequency {f_detect} MHz is {distance:.4f} MHz from the comb line at "
            f"{k * train.rep_rate_MHz:g} MHz (guard {GUARD_BINS} bins = {GUARD_BINS * bin_width:.4f} MHz)"
        )


def pulsed_squeezing(train, pump_template, cell, cfg, f_detect, delta_pulsed_db=DEFAULT_DELTA_PULSED_DB,
                     f_max=DEFAULT_F_MAX_MHZ, bins=DEFAULT_BINS, calibration=None):
    """
    Detected squeezing of the pulsed pump at a between-peak frequency

    Args:
        train: PulseTrain
        pump_template: PumpConfig whose power is replaced by the peak power
        cell: VaporCell
        cfg: HomodyneConfig
        f_detect: detection frequency (MHz)
        delta_pulsed_db: degradation relative to CW at equal peak power

    Returns:
        float: squeezing in dB (negative below shot noise)
    """
    check_detection_frequency(train, f_detect, f_max, bins)
    pump = replace(pump_template, power=train.peak_power)
    cw = noise_spectrum(pump, cell, cfg, [f_detect], calibration).squeezing_db[0]
    return float(cw) + delta_pulsed_db
