"""Unit helpers and the default nuclear gyromagnetic-ratio table.

Every frequency inside the library is an angular frequency in rad/s.
User-facing inputs (configs, convenience constructors) are linear
frequencies in MHz/kHz and are multiplied by 2*pi on ingest.
"""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

TWO_PI = 2.0 * np.pi


def angular_from_mhz(value: float) -> float:
    """Convert a linear frequency in MHz to angular frequency in rad/s."""
    return TWO_PI * value * 1e6


def angular_from_khz(value: float) -> float:
    """Convert a linear frequency in kHz to angular frequency in rad/s."""
    return TWO_PI * value * 1e3


def mhz_from_angular(value: float) -> float:
    """Convert an angular frequency in rad/s to a linear frequency in MHz."""
    return value / (TWO_PI * 1e6)


def _load_gyromagnetic_table() -> dict[str, float]:
    """Load the default gyromagnetic ratios (rad/s/T) from the data file."""
    text = resources.files("dcspin.data").joinpath("gyromagnetic_ratios.json").read_text()
    raw = json.loads(text)
    return {k: angular_from_mhz(v) for k, v in raw.items() if not k.startswith("_")}


#: Default gyromagnetic ratios by isotope label, angular frequency per tesla.
GYROMAGNETIC_RATIOS: dict[str, float] = _load_gyromagnetic_table()

GAMMA_13C: float = GYROMAGNETIC_RATIOS["13C"]
GAMMA_1H: float = GYROMAGNETIC_RATIOS["1H"]
