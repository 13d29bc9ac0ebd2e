"""
Balanced homodyne detection chain
Efficiency composition, shot-noise calibration, LO phase scans, detection-frequency
spectra and Monte-Carlo homodyne samples.
"""
import os
import sys
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(PROJECT_ROOT, "scripts"))

from gaussian_core import (
    apply_loss,
    output_state,
    quadrature_variance,
    variance_db,
    vacuum,
)
from vapor_model import (
    DEFAULT_BANDWIDTH_MHZ,
    DEFAULT_LOW_FREQ_CORNER_MHZ,
    DEFAULT_XPM_RAD_PER_OD,
    interact,
    sideband_gains,
)

DEFAULT_PATH_EFFICIENCY = 0.7469
DEFAULT_RBW_KHZ = 300.0
DEFAULT_PZT_RAD_PER_V = math.pi / 100.0


@dataclass(frozen=True)
class HomodyneConfig:
    lo_power: float = 1e-3
    ref_power: float = 1e-3
    path_efficiency: float = DEFAULT_PATH_EFFICIENCY
    detector_quantum_efficiency: float = 1.0
    fringe_visibility: float = 1.0
    cmrr_db: float = 30.0
    electronic_floor: float = 0.0
    low_freq_corner_MHz: float = DEFAULT_LOW_FREQ_CORNER_MHZ
    bandwidth_MHz: float = DEFAULT_BANDWIDTH_MHZ
    rbw_kHz: float = DEFAULT_RBW_KHZ
    pzt_rad_per_V: float = DEFAULT_PZT_RAD_PER_V
    pzt_offset_rad: float = 0.0
    xpm_rad_per_od: float = DEFAULT_XPM_RAD_PER_OD

    def __post_init__(self):
        for name in ("path_efficiency", "detector_quantum_efficiency", "fringe_visibility"):
            value = getattr(self, name)
            if not (0 < value <= 1):
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        if not (self.lo_power > 0 and self.ref_power > 0):
            raise ValueError(f"LO and reference powers must be > 0, got {self.lo_power}, {self.ref_power}")
        if self.cmrr_db < 0:
            raise ValueError(f"cmrr_db must be >= 0, got {self.cmrr_db}")
        if self.electronic_floor < 0:
            raise ValueError(f"electronic_floor must be >= 0, got {self.electronic_floor}")
        if not (self.low_freq_corner_MHz >= 0 and self.bandwidth_MHz > 0):
            raise ValueError("Envelope corner must be >= 0 and bandwidth > 0")
        if self.pzt_rad_per_V == 0:
            raise ValueError("pzt_rad_per_V must be non-zero")

    @property
    def total_efficiency(self):
        return self.path_efficiency * self.detector_quantum_efficiency * self.fringe_visibility ** 2

    def gains(self, f_MHz):
        return sideband_gains(f_MHz, self.low_freq_corner_MHz, self.bandwidth_MHz)

    def to_dict(self):
        return {
            "lo_power_W": self.lo_power,
            "ref_power_W": self.ref_power,
            "path_efficiency": self.path_efficiency,
            "detector_quantum_efficiency": self.detector_quantum_efficiency,
            "fringe_visibility": self.fringe_visibility,
            "total_efficiency": self.total_efficiency,
            "cmrr_dB": self.cmrr_db,
            "electronic_floor_snu": self.electronic_floor,
            "low_freq_corner_MHz": self.low_freq_corner_MHz,
            "bandwidth_MHz": self.bandwidth_MHz,
            "rbw_kHz": self.rbw_kHz,
        }


@dataclass(frozen=True)
class PztRamp:
    v_start: float = 0.0
    v_stop: float = 200.0
    points: int = 801

    def __post_init__(self):
        if self.v_stop == self.v_start:
            raise ValueError("PZT ramp has zero span")
        if self.points < 3:
            raise ValueError(f"PZT ramp needs at least 3 points, got {self.points}")

    def voltages(self):
        return np.linspace(self.v_start, self.v_stop, self.points)


@dataclass
class NoiseTrace:
    voltages: np.ndarray
    noise_db: np.ndarray
    detection_frequency_MHz: float
    rbw_kHz: float
    phases: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def to_rows(self):
        return [(float(v), float(n)) for v, n in zip(self.voltages, self.noise_db)]

    def metadata(self):
        meta = {
            "detection_frequency_MHz": self.detection_frequency_MHz,
            "rbw_kHz": self.rbw_kHz,
            "min_noise_dB": float(np.min(self.noise_db)),
            "max_noise_dB": float(np.max(self.noise_db)),
            "points": int(len(self.voltages)),
        }
        meta.update(self.extra)
        return meta


@dataclass
class NoiseSpectrum:
    frequencies: np.ndarray
    squeezing_db: np.ndarray
    antisqueezing_db: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def to_rows(self):
        return [(float(f), float(s)) for f, s in zip(self.frequencies, self.squeezing_db)]

    def metadata(self):
        best = int(np.argmin(self.squeezing_db))
        meta = {
            "f_min_MHz": float(np.min(self.frequencies)),
            "f_max_MHz": float(np.max(self.frequencies)),
            "best_squeezing_dB": float(self.squeezing_db[best]),
            "best_frequency_MHz": float(self.frequencies[best]),
            "worst_squeezing_dB": float(np.max(self.squeezing_db)),
            "shot_reference_dB": 0.0,
        }
        meta.update(self.extra)
        return meta


def shot_noise_level(lo_power, ref_power, electronic_floor=0.0):
    """
    Shot-noise variance at a given LO power

    Args:
        lo_power: LO power (W)
        ref_power: LO power at which shot noise is 1 (W)
        electronic_floor: dark-noise variance in units of the reference shot noise

    Returns:
        float: shot noise plus electronic floor
    """
    if not (lo_power > 0 and ref_power > 0):
        raise ValueError(f"Powers must be > 0, got lo={lo_power}, ref={ref_power}")
    if electronic_floor < 0:
        raise ValueError(f"electronic_floor must be >= 0, got {electronic_floor}")
    return lo_power / ref_power + electronic_floor


def detect(state, theta, cfg):
    """Detected quadrature variance in shot-noise units (blocked port gives 1 + floor)"""
    detected = apply_loss(state, cfg.total_efficiency)
    return quadrature_variance(detected, theta) + cfg.electronic_floor


def sideband_state(result, f_MHz, cfg):
    """Output state of the cell as seen at detection frequency f_MHz"""
    r_gain, n_gain = cfg.gains(f_MHz)
    return output_state(result.scaled(r_gain, n_gain))


def detected_quadratures(pump, cell, cfg, f_MHz, calibration=None):
    """
    Detected squeezed and anti-squeezed noise for one operating point

    Returns:
        tuple: (squeezing dB, anti-squeezing dB)
    """
    result = interact(pump, cell, calibration, xpm_rad_per_od=cfg.xpm_rad_per_od)
    state = sideband_state(result, f_MHz, cfg)
    v_min = detect(state, result.theta0, cfg)
    v_max = detect(state, result.theta0 + math.pi / 2.0, cfg)
    return variance_db(v_min), variance_db(v_max)


def check_phase_coverage(scan, cfg):
    """Raise ValueError unless the ramp sweeps at least one full LO period"""
    phase_span = abs(cfg.pzt_rad_per_V * (scan.v_stop - scan.v_start))
    if phase_span < 2.0 * math.pi:
        raise ValueError(
            f"PZT ramp covers {phase_span:.3f} rad of LO phase, need at least 2*pi"
        )


def phase_scan(state, scan, cfg, detection_frequency_MHz=3.0, samples=0, seed=None):
    """
    Noise versus PZT voltage, phase = a*V + b

    Args:
        state: GaussianState at the detector input
        scan: PztRamp
        cfg: HomodyneConfig
        detection_frequency_MHz: recorded as trace metadata
        samples: when > 0, each point is the variance of this many simulated samples
        seed: seed for the simulated samples

    Returns:
        NoiseTrace
    """
    check_phase_coverage(scan, cfg)
    voltages = scan.voltages()
    phases = cfg.pzt_rad_per_V * voltages + cfg.pzt_offset_rad
    if samples > 0:
        detected = apply_loss(state, cfg.total_efficiency)
        seeds = spawn_seeds(seed, len(phases))
        variances = [
            float(np.var(sample_homodyne(detected, p, samples, s), ddof=1)) + cfg.electronic_floor
            for p, s in zip(phases, seeds)
        ]
    else:
        variances = [detect(state, p, cfg) for p in phases]
    return NoiseTrace(
        voltages=voltages,
        noise_db=np.array([variance_db(v) for v in variances]),
        detection_frequency_MHz=detection_frequency_MHz,
        rbw_kHz=cfg.rbw_kHz,
        phases=phases,
        extra={"samples_per_point": int(samples)},
    )


def noise_spectrum(pump, cell, cfg, f_list, calibration=None):
    """
    Detected squeezing versus detection frequency

    Args:
        pump: PumpConfig
        cell: VaporCell
        cfg: HomodyneConfig
        f_list: detection frequencies (MHz)
        calibration: optional Calibration override

    Returns:
        NoiseSpectrum
    """
    freqs = np.asarray(f_list, dtype=float)
    if freqs.size == 0 or np.any(freqs <= 0):
        raise ValueError("Detection frequencies must be > 0")
    result = interact(pump, cell, calibration, xpm_rad_per_od=cfg.xpm_rad_per_od)
    sq, anti = [], []
    for f in freqs:
        state = sideband_state(result, f, cfg)
        sq.append(variance_db(detect(state, result.theta0, cfg)))
        anti.append(variance_db(detect(state, result.theta0 + math.pi / 2.0, cfg)))
    return NoiseSpectrum(
        frequencies=freqs,
        squeezing_db=np.array(sq),
        antisqueezing_db=np.array(anti),
        extra={"flat_band": result.to_dict()},
    )


def spawn_seeds(seed, count):
    """Independent child seeds for parallel sampling"""
    return np.random.SeedSequence(seed).spawn(count)


def _generator(seed):
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def sample_homodyne(state, theta, n, seed):
    """
    Zero-mean Gaussian homodyne samples of the quadrature at angle theta

    Args:
        state: GaussianState
        theta: LO phase (rad)
        n: number of samples (>= 2)
        seed: integer or SeedSequence

    Returns:
        np.ndarray: samples in units where the vacuum variance is 1
    """
    if n < 2:
        raise ValueError(f"Need at least 2 samples, got {n}")
    sigma = math.sqrt(quadrature_variance(state, theta))
    return _generator(seed).normal(0.0, sigma, int(n))


def sampled_noise_db(state, theta, cfg, n, seed, sample_rate_MHz=100.0, nperseg=1024):
    """
    Spectrum-analyzer estimate of the detected noise level from simulated samples

    Welch PSD of the homodyne samples behind the detection loss divided by the
    vacuum PSD, averaged over the band, plus the electronic floor.

    Args:
        state: GaussianState at the detector input
        theta: LO phase (rad)
        cfg: HomodyneConfig
        n: number of samples
        seed: integer or SeedSequence

    Returns:
        float: noise level in dB relative to shot noise
    """
    detected = apply_loss(state, cfg.total_efficiency)
    samples = sample_homodyne(detected, theta, n, seed)
    _, psd = signal.welch(samples, fs=sample_rate_MHz * 1e6, nperseg=min(nperseg, int(n)))
    # white vacuum noise of unit variance has one-sided PSD 2/fs
    shot_psd = 2.0 / (sample_rate_MHz * 1e6)
    return variance_db(float(np.mean(psd[1:-1])) / shot_psd + cfg.electronic_floor)


def blocked_port_level(theta, cfg):
    """Shot-noise reference measured with the vacuum port blocked"""
    return detect(vacuum(), theta, cfg)
