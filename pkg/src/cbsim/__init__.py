"""Simulator for conditional-beam-splitter gates between a trapped-ion spin and two or three motional modes."""
from .fockspace import HybridState, LinearOperator, ModeLayout
from .noise import NOISELESS, NoiseParams
from .profiles import load_profile
from .results import ExperimentResult, ShotPlan

__version__ = "0.1.0"

__all__ = [
    "HybridState",
    "LinearOperator",
    "ModeLayout",
    "NOISELESS",
    "NoiseParams",
    "load_profile",
    "ExperimentResult",
    "ShotPlan",
]
