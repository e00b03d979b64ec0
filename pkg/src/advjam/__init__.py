"""Baseband adversarial jamming lab for square QAM."""

from advjam.constellation import (
    ConstellationSpec,
    UnsupportedModulationError,
    build_qam,
    min_distance,
    modulate,
    nearest_boundary_vector,
    nearest_point,
    targeted_vector,
)
from advjam.channel import NoiseSpec, PowerBudget, awgn, budget_from_db, measure_power
from advjam.demod import DemodModel, Dataset, generate_dataset, train
from advjam.adversary import AttackConfig, AdversarialResult, minimal_norm_attack

__version__ = "0.1.0"

__all__ = [
    "AdversarialResult",
    "AttackConfig",
    "ConstellationSpec",
    "Dataset",
    "DemodModel",
    "NoiseSpec",
    "PowerBudget",
    "UnsupportedModulationError",
    "awgn",
    "budget_from_db",
    "build_qam",
    "generate_dataset",
    "measure_power",
    "min_distance",
    "minimal_norm_attack",
    "modulate",
    "nearest_boundary_vector",
    "nearest_point",
    "targeted_vector",
    "train",
]
