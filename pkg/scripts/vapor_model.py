"""
Rubidium vapor cell as a polarization self-rotation medium
Vapor density, Doppler-broadened saturated line shapes over the D1/D2 hyperfine
manifolds, the self-rotation parameter g and the calibrated map from
(pump, cell) to (r, theta0, n_add, eta_med).
"""
import os
import sys
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import constants
from scipy.special import wofz

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(PROJECT_ROOT, "scripts"))

from atomic_data import ISOTOPE_MASS_U, SUPPORTED_LINES, get_line
from gaussian_core import (
    InteractionResult,
    db_to_variance,
    infer_squeeze_and_noise,
    remove_loss,
)

# Validity window of the vapor-pressure correlation
TEMPERATURE_MIN_K = 250.0
TEMPERATURE_MAX_K = 500.0
RB_MELTING_POINT_K = 312.46

# Sanity band for the density (m^-3)
DENSITY_SANITY_BAND = (1e15, 1e20)

DEFAULT_CELL_LENGTH_M = 0.075
DEFAULT_ISOTOPE_FRACTION_87 = 0.98
DEFAULT_WAIST_M = 400e-6

# Cross-phase-modulation term of the squeezing angle (rad per optical depth)
DEFAULT_XPM_RAD_PER_OD = 0.1

# Spontaneous-emission noise: linear absorption weighted by (I / I_anchor)^p.
# 85Rb contributes only through its F=3 -> F'=3 component.
NOISE_POWER_EXPONENT_87 = 1.0
RB85_NOISE_POWER_EXPONENT = 3.0
RB85_NOISE_WEIGHT = 30.0
RB85_NOISE_COMPONENT = (85, 3, 3)

# Detection-frequency response of the medium
DEFAULT_LOW_FREQ_CORNER_MHZ = 0.5
DEFAULT_BANDWIDTH_MHZ = 20.0

# Detected anti-squeezing candidates for the calibration point (dB)
ANTISQUEEZING_CANDIDATES = {
    "nominal": 5.2,
    "high": 6.0,
}


def temperature_from_celsius(t_c):
    return t_c + constants.zero_Celsius


def density_per_cm3(n_m3):
    return n_m3 * 1e-6


def _check_temperature(T):
    if not (TEMPERATURE_MIN_K < T < TEMPERATURE_MAX_K):
        raise ValueError(
            f"Temperature {T} K outside validity window "
            f"({TEMPERATURE_MIN_K}, {TEMPERATURE_MAX_K}) K"
        )


def vapor_pressure_pa(T):
    """
    Saturated rubidium vapor pressure

    Solid phase below the melting point, liquid phase above it.

    Args:
        T: temperature in kelvin

    Returns:
        float: pressure in pascal
    """
    _check_temperature(T)
    if T < RB_MELTING_POINT_K:
        log_p_atm = 4.857 - 4215.0 / T
    else:
        log_p_atm = 8.316 - 4275.0 / T - 1.3102 * math.log10(T)
    return constants.atm * 10.0 ** log_p_atm


@lru_cache(maxsize=4096)
def density_from_temperature(T):
    """Number density (atoms/m^3) of saturated rubidium vapor at T kelvin"""
    return vapor_pressure_pa(T) / (constants.k * T)


def doppler_sigma(T, line, isotope=87):
    """Gaussian standard deviation of the Doppler profile (MHz)"""
    _check_temperature(T)
    mass = ISOTOPE_MASS_U[isotope] * constants.atomic_mass
    return line.frequency_Hz * math.sqrt(constants.k * T / (mass * constants.c ** 2)) * 1e-6


def doppler_width(T, line, isotope=87):
    """Doppler FWHM (MHz)"""
    return math.sqrt(8.0 * math.log(2.0)) * doppler_sigma(T, line, isotope)


@lru_cache(maxsize=None)
def _warn_density(density):
    # once per density value
    lo, hi = DENSITY_SANITY_BAND
    print(f"[WARNING] Vapor density {density:.3e} m^-3 outside sanity band {lo:g}..{hi:g}")


@dataclass(frozen=True)
class VaporCell:
    temperature: float
    length: float = DEFAULT_CELL_LENGTH_M
    isotope_fraction_87: float = DEFAULT_ISOTOPE_FRACTION_87

    def __post_init__(self):
        if not (self.length > 0):
            raise ValueError(f"Cell length must be > 0, got {self.length}")
        _check_temperature(self.temperature)
        if not (0 < self.isotope_fraction_87 <= 1):
            raise ValueError(
                f"isotope_fraction_87 must be in (0, 1], got {self.isotope_fraction_87}"
            )
        lo, hi = DENSITY_SANITY_BAND
        if not (lo <= self.density <= hi):
            _warn_density(self.density)

    @classmethod
    def from_celsius(cls, temperature_C, **kwargs):
        return cls(temperature=temperature_from_celsius(temperature_C), **kwargs)

    @property
    def density(self):
        return density_from_temperature(self.temperature)

    @property
    def temperature_C(self):
        return self.temperature - constants.zero_Celsius

    def isotope_fraction(self, isotope):
        return self.isotope_fraction_87 if isotope == 87 else 1.0 - self.isotope_fraction_87


@dataclass(frozen=True)
class PumpConfig:
    power: float
    detuning: float
    line: str = "D1"
    waist: float = DEFAULT_WAIST_M

    def __post_init__(self):
        if not (self.power > 0):
            raise ValueError(f"Pump power must be > 0, got {self.power}")
        if not (self.waist > 0):
            raise ValueError(f"Beam waist must be > 0, got {self.waist}")
        if self.line not in SUPPORTED_LINES:
            raise ValueError(f"Unknown line '{self.line}', expected one of {SUPPORTED_LINES}")
        if not math.isfinite(self.detuning):
            raise ValueError(f"Detuning must be finite, got {self.detuning}")

    @property
    def peak_intensity(self):
        """Peak intensity of the Gaussian beam (W/m^2)"""
        return 2.0 * self.power / (math.pi * self.waist ** 2)

    @property
    def atomic_line(self):
        return get_line(self.line)


def rb85_doppler_center(line):
    """Strength-weighted center of the 85Rb F=3 -> F' components (MHz)"""
    components = [c for c in line.isotope_components(85) if c.F == 3]
    weights = np.array([c.strength for c in components])
    offsets = np.array([c.offset_MHz for c in components])
    return float(np.sum(weights * offsets) / np.sum(weights))


def mirror_detuning(detuning, line):
    """Reflect a detuning about the 87Rb F=2 -> F'=1 / F'=2 midpoint"""
    f1 = line.find(87, 2, 1).offset_MHz
    f2 = line.find(87, 2, 2).offset_MHz
    return f1 + f2 - detuning


def _line_response(pump, cell):
    """
    Per-component absorption and self-rotation coefficients

    Each component is a two-level system saturated velocity class by velocity
    class. The Doppler average is done in closed form with the Faddeeva
    function w(z), z = (delta + i*b_s) / (sigma*sqrt(2)).

    Returns:
        tuple: (alpha_j, g_j, alpha_lin_j, columns); alpha_lin_j is the
        unsaturated absorption, columns the component table as arrays
    """
    line = pump.atomic_line
    cols = line.as_arrays()
    n = cell.density

    fraction = np.array([cell.isotope_fraction(int(i)) for i in cols["isotope"]])
    sigma = np.array([doppler_sigma(cell.temperature, line, int(i)) for i in cols["isotope"]])
    sigma0 = 3.0 * cols["wavelength_m"] ** 2 / (2.0 * math.pi)

    s = pump.peak_intensity / cols["isat"]
    b = 0.5 * cols["gamma_MHz"]
    b_s = b * np.sqrt(1.0 + s)
    delta = pump.detuning - cols["offset_MHz"]

    z = (delta + 1j * b_s) / (sigma * math.sqrt(2.0))
    w = wofz(z)
    # <b_s/(delta^2 + b_s^2)> over the velocity distribution
    lorentz_avg = np.real(w) * math.sqrt(math.pi / 2.0) / sigma
    # w'(z) = -2 z w(z) + 2i/sqrt(pi)
    w_prime = -2.0 * z * w + 2j / math.sqrt(math.pi)
    kernel = -math.sqrt(math.pi) * np.real(w_prime) / (4.0 * b_s * sigma ** 2)

    z0 = (delta + 1j * b) / (sigma * math.sqrt(2.0))
    lorentz_avg0 = np.real(wofz(z0)) * math.sqrt(math.pi / 2.0) / sigma

    scale = n * fraction * cols["strength"] * sigma0
    alpha = scale * (b ** 2 / b_s) * lorentz_avg
    g = scale * s * b ** 3 * kernel
    alpha_lin = scale * b * lorentz_avg0
    return alpha, g, alpha_lin, cols


def absorption_coefficient(pump, cell):
    """
    Saturated, Doppler-broadened absorption coefficient of the pump

    Args:
        pump: PumpConfig
        cell: VaporCell

    Returns:
        float: absorption coefficient in 1/m
    """
    alpha, _, _, _ = _line_response(pump, cell)
    return float(np.sum(alpha))


def self_rotation_g(pump, cell):
    """Signed self-rotation parameter g, positive for blue detuning far from all components"""
    _, g, _, _ = _line_response(pump, cell)
    return float(np.sum(g))


def _noise_weights(cols, intensity_ratio):
    isotope, F, F_prime = cols["isotope"], cols["F"], cols["F_prime"]
    weights = np.where(isotope == 87, intensity_ratio ** NOISE_POWER_EXPONENT_87, 0.0)
    iso85, f85, fp85 = RB85_NOISE_COMPONENT
    rb85 = (isotope == iso85) & (F == f85) & (F_prime == fp85)
    return np.where(rb85, RB85_NOISE_WEIGHT * intensity_ratio ** RB85_NOISE_POWER_EXPONENT, weights)


def noise_kernel(pump, cell, reference_intensity):
    """
    Spontaneous-emission source term per unit length (1/m)

    Sum of the unsaturated absorption of each component scaled by a power of
    the pump intensity relative to reference_intensity. 87Rb scatters in
    proportion to the intensity; residual 85Rb on its F=3 -> F'=3 component
    grows much faster and dominates once the pump sits inside its Doppler
    profile.

    Args:
        pump: PumpConfig
        cell: VaporCell
        reference_intensity: intensity (W/m^2) at which the weights are 1

    Returns:
        float
    """
    if not (reference_intensity > 0):
        raise ValueError(f"Reference intensity must be > 0, got {reference_intensity}")
    _, _, alpha_lin, cols = _line_response(pump, cell)
    weights = _noise_weights(cols, pump.peak_intensity / reference_intensity)
    return float(np.sum(weights * alpha_lin))


def effective_length(alpha, length):
    """Pump-weighted interaction length (1 - e^{-alpha L}) / alpha"""
    if alpha * length < 1e-12:
        return length
    return -math.expm1(-alpha * length) / alpha


def sideband_gains(f_MHz, corner_MHz=DEFAULT_LOW_FREQ_CORNER_MHZ, bandwidth_MHz=DEFAULT_BANDWIDTH_MHZ):
    """
    Detection-frequency response of the squeezing and of the added noise

    Args:
        f_MHz: detection frequency
        corner_MHz: low-frequency degradation corner
        bandwidth_MHz: high-frequency roll-off bandwidth

    Returns:
        tuple: (gain on r, gain on n_add)
    """
    if not (f_MHz > 0):
        raise ValueError(f"Detection frequency must be > 0, got {f_MHz}")
    rolloff = 1.0 / (1.0 + (f_MHz / bandwidth_MHz) ** 2)
    low = f_MHz ** 2 / (f_MHz ** 2 + corner_MHz ** 2)
    return low * rolloff, rolloff


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CalibrationAnchors:
    power: float = 0.140
    detuning: float = 600.0
    temperature_C: float = 108.0
    line: str = "D1"
    waist: float = DEFAULT_WAIST_M
    length: float = DEFAULT_CELL_LENGTH_M
    isotope_fraction_87: float = DEFAULT_ISOTOPE_FRACTION_87
    detection_frequency_MHz: float = 3.0
    squeezing_db: float = -1.4
    antisqueezing_db: float = ANTISQUEEZING_CANDIDATES["nominal"]
    detection_efficiency: float = 0.7469
    low_freq_corner_MHz: float = DEFAULT_LOW_FREQ_CORNER_MHZ
    bandwidth_MHz: float = DEFAULT_BANDWIDTH_MHZ

    @classmethod
    def from_candidate(cls, name, **kwargs):
        if name not in ANTISQUEEZING_CANDIDATES:
            raise ValueError(
                f"Unknown anti-squeezing anchor '{name}', expected one of {list(ANTISQUEEZING_CANDIDATES)}"
            )
        return cls(antisqueezing_db=ANTISQUEEZING_CANDIDATES[name], **kwargs)

    def pump(self):
        return PumpConfig(power=self.power, detuning=self.detuning, line=self.line, waist=self.waist)

    def cell(self):
        return VaporCell.from_celsius(
            self.temperature_C, length=self.length, isotope_fraction_87=self.isotope_fraction_87
        )


@dataclass(frozen=True)
class Calibration:
    c_r: float
    c_n: float
    anchors: CalibrationAnchors = field(default_factory=CalibrationAnchors)
    reference_intensity: float = float("nan")
    r_anchor: float = float("nan")
    n_anchor: float = float("nan")
    alpha_anchor: float = float("nan")
    g_anchor: float = float("nan")
    noise_anchor: float = float("nan")

    def with_constants(self, c_r=None, c_n=None):
        return replace(
            self,
            c_r=self.c_r if c_r is None else c_r,
            c_n=self.c_n if c_n is None else c_n,
        )

    def to_dict(self):
        return {
            "C_r": self.c_r,
            "C_n": self.c_n,
            "reference_intensity_W_per_m2": self.reference_intensity,
            "r_at_anchor": self.r_anchor,
            "n_add_at_anchor": self.n_anchor,
            "alpha_at_anchor_per_m": self.alpha_anchor,
            "g_at_anchor": self.g_anchor,
            "noise_kernel_at_anchor_per_m": self.noise_anchor,
            "anchor_squeezing_dB": self.anchors.squeezing_db,
            "anchor_antisqueezing_dB": self.anchors.antisqueezing_db,
            "anchor_detection_efficiency": self.anchors.detection_efficiency,
        }


@lru_cache(maxsize=32)
def calibrate(anchors=CalibrationAnchors()):
    """
    Fix C_r and C_n so the anchor point reproduces the detected anchor pair

    Args:
        anchors: CalibrationAnchors

    Returns:
        Calibration
    """
    pump, cell = anchors.pump(), anchors.cell()
    reference_intensity = pump.peak_intensity
    alpha = absorption_coefficient(pump, cell)
    g = self_rotation_g(pump, cell)
    noise = noise_kernel(pump, cell, reference_intensity)
    eta = anchors.detection_efficiency * math.exp(-alpha * cell.length)

    v_min = remove_loss(db_to_variance(anchors.squeezing_db), eta)
    v_max = remove_loss(db_to_variance(anchors.antisqueezing_db), eta)
    if v_min <= 0:
        raise CalibrationError(
            f"Anchor squeezing {anchors.squeezing_db} dB unreachable with total efficiency {eta:.4f}"
        )
    try:
        r_f, n_f = infer_squeeze_and_noise(v_min, v_max)
    except ValueError as e:
        raise CalibrationError(f"Calibration anchors inconsistent: {e}")

    r_gain, n_gain = sideband_gains(
        anchors.detection_frequency_MHz, anchors.low_freq_corner_MHz, anchors.bandwidth_MHz
    )
    r_flat, n_flat = r_f / r_gain, n_f / n_gain
    if g == 0 or alpha <= 0 or noise <= 0:
        raise CalibrationError("Anchor point has no interaction")

    l_eff = effective_length(alpha, cell.length)
    return Calibration(
        c_r=r_flat / (abs(g) * l_eff),
        c_n=n_flat / (noise * l_eff),
        anchors=anchors,
        reference_intensity=reference_intensity,
        r_anchor=r_flat,
        n_anchor=n_flat,
        alpha_anchor=alpha,
        g_anchor=g,
        noise_anchor=noise,
    )


def interact(pump, cell, calibration=None, xpm_rad_per_od=DEFAULT_XPM_RAD_PER_OD, base_angle=0.0):
    """
    Flat-band squeezing produced by one pass through the cell

    Both r and n_add accumulate over the effective length, so a pump that is
    absorbed within the cell stops building squeezing.

    Args:
        pump: PumpConfig
        cell: VaporCell
        calibration: Calibration (default: calibrate() at the default anchors)
        xpm_rad_per_od: cross-phase rotation of the squeezing angle per optical depth
        base_angle: squeezing angle for positive g

    Returns:
        InteractionResult
    """
    if calibration is None:
        calibration = calibrate()
    alpha_j, g_j, alpha_lin, cols = _line_response(pump, cell)
    alpha = float(np.sum(alpha_j))
    g = float(np.sum(g_j))
    noise = float(np.sum(_noise_weights(cols, pump.peak_intensity / calibration.reference_intensity) * alpha_lin))
    optical_depth = alpha * cell.length
    l_eff = effective_length(alpha, cell.length)

    if pump.line == "D2":
        # excess noise only
        r = 0.0
    else:
        r = calibration.c_r * abs(g) * l_eff
    n_add = calibration.c_n * noise * l_eff
    eta_med = math.exp(-optical_depth)

    theta0 = base_angle + xpm_rad_per_od * optical_depth
    if g < 0:
        theta0 += math.pi / 2.0
    return InteractionResult(r=r, theta0=theta0, n_add=n_add, eta_med=max(eta_med, np.finfo(float).tiny))
