"""
Utility functions for operating-point configs and result files
Loads flat JSON configs with unit-suffixed keys and writes CSV/JSON outputs
"""
import os
import sys
import csv
import json
import math
from datetime import datetime

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(PROJECT_ROOT, "scripts"))

from detection import HomodyneConfig
from pulsed import PULSE_SHAPES, PulseTrain
from vapor_model import ANTISQUEEZING_CANDIDATES, CalibrationAnchors, PumpConfig, VaporCell

MODEL_VERSION = "1.0.0"

CONFIG_DIR = os.path.join(PROJECT_ROOT, "data", "configs")
DEFAULT_CONFIG_FILE = os.path.join(CONFIG_DIR, "calibration_point.json")
RESULTS_DIR = os.path.join(PROJECT_ROOT, "data", "results")

CSV_HEADER = ["voltage_or_MHz", "noise_db"]

DEFAULT_CONFIG = {
    "power_mW": 140.0,
    "detuning_MHz": 600.0,
    "temperature_C": 108.0,
    "line": "D1",
    "waist_um": 400.0,
    "cell_length_cm": 7.5,
    "isotope_fraction_87": 0.98,
    "detection_frequency_MHz": 3.0,
    "lo_power_mW": 1.0,
    "ref_power_mW": 1.0,
    "path_efficiency": 0.7469,
    "detector_quantum_efficiency": 1.0,
    "fringe_visibility": 1.0,
    "cmrr_dB": 30.0,
    "electronic_floor_snu": 0.0,
    "low_freq_corner_MHz": 0.5,
    "bandwidth_MHz": 20.0,
    "rbw_kHz": 300.0,
    "pzt_rad_per_V": math.pi / 100.0,
    "pzt_offset_rad": 0.0,
    "xpm_rad_per_od": 0.1,
    "antisqueezing_anchor": "nominal",
    "pulse_width_ns": 200.0,
    "rep_rate_MHz": 1.0,
    "peak_power_mW": 40.0,
    "pulse_shape": "rectangular",
    "delta_pulsed_dB": 0.2,
    "seed": 1234,
}

STRING_KEYS = {
    "line": ("D1", "D2"),
    "antisqueezing_anchor": tuple(ANTISQUEEZING_CANDIDATES),
    "pulse_shape": PULSE_SHAPES,
}
INTEGER_KEYS = ("seed",)


class ConfigError(ValueError):
    pass


def ensure_directory(path):
    """Ensure an output directory exists"""
    os.makedirs(path, exist_ok=True)


def validate_config(raw, source="<config>"):
    """
    Merge a raw config over the defaults and check every value

    Args:
        raw: dict parsed from a config file
        source: name used in diagnostics

    Returns:
        dict: complete config
    """
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    unknown = sorted(set(raw) - set(DEFAULT_CONFIG))
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}")

    config = dict(DEFAULT_CONFIG)
    for key, value in raw.items():
        if key in STRING_KEYS:
            if value not in STRING_KEYS[key]:
                raise ConfigError(f"{source}: {key} must be one of {list(STRING_KEYS[key])}, got {value!r}")
        elif key in INTEGER_KEYS:
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ConfigError(f"{source}: {key} must be a non-negative integer, got {value!r}")
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{source}: {key} must be a finite number, got {value!r}")
            value = float(value)
        config[key] = value

    try:
        build_models(config)
        build_pulse_train(config)
    except ValueError as e:
        raise ConfigError(f"{source}: {e}")
    return config


def load_config(path=DEFAULT_CONFIG_FILE):
    """
    Load and validate a flat JSON config

    Args:
        path: config file path

    Returns:
        dict: complete config (defaults for missing keys)
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON ({e})")
    return validate_config(raw, source=path)


def build_models(config):
    """
    Model objects for a validated config

    Returns:
        tuple: (PumpConfig, VaporCell, HomodyneConfig, CalibrationAnchors)
    """
    pump = PumpConfig(
        power=config["power_mW"] * 1e-3,
        detuning=config["detuning_MHz"],
        line=config["line"],
        waist=config["waist_um"] * 1e-6,
    )
    cell = VaporCell.from_celsius(
        config["temperature_C"],
        length=config["cell_length_cm"] * 1e-2,
        isotope_fraction_87=config["isotope_fraction_87"],
    )
    homodyne = HomodyneConfig(
        lo_power=config["lo_power_mW"] * 1e-3,
        ref_power=config["ref_power_mW"] * 1e-3,
        path_efficiency=config["path_efficiency"],
        detector_quantum_efficiency=config["detector_quantum_efficiency"],
        fringe_visibility=config["fringe_visibility"],
        cmrr_db=config["cmrr_dB"],
        electronic_floor=config["electronic_floor_snu"],
        low_freq_corner_MHz=config["low_freq_corner_MHz"],
        bandwidth_MHz=config["bandwidth_MHz"],
        rbw_kHz=config["rbw_kHz"],
        pzt_rad_per_V=config["pzt_rad_per_V"],
        pzt_offset_rad=config["pzt_offset_rad"],
        xpm_rad_per_od=config["xpm_rad_per_od"],
    )
    anchors = CalibrationAnchors.from_candidate(
        config["antisqueezing_anchor"],
        low_freq_corner_MHz=config["low_freq_corner_MHz"],
        bandwidth_MHz=config["bandwidth_MHz"],
    )
    return pump, cell, homodyne, anchors


def build_pulse_train(config):
    return PulseTrain(
        width=config["pulse_width_ns"] * 1e-9,
        rep_rate=config["rep_rate_MHz"] * 1e6,
        peak_power=config["peak_power_mW"] * 1e-3,
        shape=config["pulse_shape"],
    )


def output_stem(command, tag=None):
    if tag:
        return tag
    return f"{command}_{datetime.now().strftime('%Y%m%d_%H%M%S')}"


def save_csv(path, rows, header=CSV_HEADER):
    """
    Write rows to a CSV file with a header row

    Args:
        path: output file
        rows: iterable of tuples
        header: column names
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def save_json(path, document):
    with open(path, "w") as f:
        json.dump(document, f, indent=2)


def provenance(command, config, calibration, summary):
    """JSON document embedding the resolved config, calibration and version"""
    return {
        "command": command,
        "model_version": MODEL_VERSION,
        "timestamp": datetime.now().isoformat(),
        "config": config,
        "calibration": calibration.to_dict(),
        "summary": summary,
    }
