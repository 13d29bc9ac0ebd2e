import os
import sys

import pytest

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(PROJECT_ROOT, "scripts"))

from detection import HomodyneConfig
from vapor_model import PumpConfig, VaporCell


@pytest.fixture
def cal_pump():
    """Pump at the calibration point: 140 mW, +600 MHz, D1"""
    return PumpConfig(power=0.140, detuning=600.0, line="D1")


@pytest.fixture
def cal_cell():
    """Cell at 108 C"""
    return VaporCell.from_celsius(108.0)


@pytest.fixture
def homodyne():
    return HomodyneConfig()
