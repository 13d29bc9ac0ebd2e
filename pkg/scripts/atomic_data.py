"""
Atomic-line data for the rubidium D lines
Loads the versioned hyperfine component table shipped in data/
"""
import os
import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(PROJECT_ROOT, "data")
ATOMIC_DATA_FILE = os.path.join(DATA_DIR, "atomic_lines_v1.csv")
ATOMIC_DATA_VERSION = 1

REQUIRED_COLUMNS = [
    "isotope", "line_id", "F", "F'", "offset_MHz", "strength",
    "gamma_MHz", "Isat_W_per_m2", "wavelength_nm",
]
SUPPORTED_LINES = ("D1", "D2")

# Atomic masses (u)
ISOTOPE_MASS_U = {
    87: 86.909180527,
    85: 84.911789738,
}

# Offsets in the table are measured from this component of each line
REFERENCE_COMPONENT = (87, 2, 2)


@dataclass(frozen=True)
class HyperfineComponent:
    isotope: int
    F: int
    F_prime: int
    offset_MHz: float
    strength: float
    gamma_MHz: float
    isat_W_per_m2: float
    wavelength_m: float

    @property
    def label(self):
        return f"{self.isotope}Rb F={self.F}->F'={self.F_prime}"


@dataclass(frozen=True)
class AtomicLine:
    """One D line: every hyperfine component of both isotopes, sorted by offset"""
    line_id: str
    components: tuple

    def __post_init__(self):
        if self.line_id not in SUPPORTED_LINES:
            raise ValueError(f"Unknown line '{self.line_id}', expected one of {SUPPORTED_LINES}")
        if not self.components:
            raise ValueError(f"Line {self.line_id} has no components")
        offsets = [c.offset_MHz for c in self.components]
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError(f"Line {self.line_id}: offsets must be strictly increasing")
        for c in self.components:
            if c.strength <= 0:
                raise ValueError(f"{self.line_id} {c.label}: strength must be > 0")
            if c.gamma_MHz <= 0:
                raise ValueError(f"{self.line_id} {c.label}: gamma must be > 0")
            if c.isat_W_per_m2 <= 0:
                raise ValueError(f"{self.line_id} {c.label}: saturation intensity must be > 0")
        self.reference  # raises if missing

    @property
    def reference(self):
        for c in self.components:
            if (c.isotope, c.F, c.F_prime) == REFERENCE_COMPONENT:
                return c
        raise ValueError(f"Line {self.line_id}: reference component 87Rb F=2->F'=2 missing")

    @property
    def wavelength_m(self):
        return self.reference.wavelength_m

    @property
    def frequency_Hz(self):
        return 299792458.0 / self.wavelength_m

    @property
    def gamma_MHz(self):
        return self.reference.gamma_MHz

    def isotope_components(self, isotope):
        return tuple(c for c in self.components if c.isotope == isotope)

    def find(self, isotope, F, F_prime):
        for c in self.components:
            if (c.isotope, c.F, c.F_prime) == (isotope, F, F_prime):
                return c
        raise KeyError(f"{self.line_id}: no component {isotope}Rb F={F}->F'={F_prime}")

    def as_arrays(self):
        """
        Column view of the components for vectorized line-shape sums

        Returns:
            dict: numpy arrays keyed by field name
        """
        return {
            "isotope": np.array([c.isotope for c in self.components]),
            "F": np.array([c.F for c in self.components]),
            "F_prime": np.array([c.F_prime for c in self.components]),
            "offset_MHz": np.array([c.offset_MHz for c in self.components]),
            "strength": np.array([c.strength for c in self.components]),
            "gamma_MHz": np.array([c.gamma_MHz for c in self.components]),
            "isat": np.array([c.isat_W_per_m2 for c in self.components]),
            "wavelength_m": np.array([c.wavelength_m for c in self.components]),
        }


def _parse_row(row, row_number):
    try:
        return row["line_id"].strip(), HyperfineComponent(
            isotope=int(row["isotope"]),
            F=int(row["F"]),
            F_prime=int(row["F'"]),
            offset_MHz=float(row["offset_MHz"]),
            strength=float(row["strength"]),
            gamma_MHz=float(row["gamma_MHz"]),
            isat_W_per_m2=float(row["Isat_W_per_m2"]),
            wavelength_m=float(row["wavelength_nm"]) * 1e-9,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"Malformed atomic data row {row_number}: {e}")


@lru_cache(maxsize=8)
def load_atomic_lines(path=ATOMIC_DATA_FILE):
    """
    Load the hyperfine component table

    Args:
        path: CSV file with the documented schema

    Returns:
        dict: {"D1": AtomicLine, "D2": AtomicLine}
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Atomic data file not found: {path}")

    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"Atomic data file {path} is missing columns: {missing}")
        grouped = {}
        for i, row in enumerate(reader, start=2):
            line_id, component = _parse_row(row, i)
            if component.isotope not in ISOTOPE_MASS_U:
                raise ValueError(f"Row {i}: unsupported isotope {component.isotope}")
            grouped.setdefault(line_id, []).append(component)

    lines = {}
    for line_id, components in grouped.items():
        components.sort(key=lambda c: c.offset_MHz)
        lines[line_id] = AtomicLine(line_id=line_id, components=tuple(components))

    for line_id in SUPPORTED_LINES:
        if line_id not in lines:
            raise ValueError(f"Atomic data file {path} has no {line_id} components")
    return lines


def get_line(line_id, path=ATOMIC_DATA_FILE):
    lines = load_atomic_lines(path)
    if line_id not in lines:
        raise ValueError(f"Unknown line '{line_id}', expected one of {SUPPORTED_LINES}")
    return lines[line_id]
