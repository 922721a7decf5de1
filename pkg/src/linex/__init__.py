"""Locally invariant explanations: game-theoretic local feature attributions
for black-box models, with LIME/S-LIME baselines and a stability metric suite.
"""
from .core import (
    CLASSIFICATION,
    REGRESSION,
    Attribution,
    Dataset,
    Example,
    Standardizer,
    derive_seed,
    load_csv,
    save_csv,
    train_test_split,
)
from .solver import KERNEL_BACKEND, GameConfig, ne_oracle_multi, ne_oracle_two, play_game

__version__ = "0.1.0"

__all__ = [
    "CLASSIFICATION",
    "REGRESSION",
    "Attribution",
    "Dataset",
    "Example",
    "GameConfig",
    "KERNEL_BACKEND",
    "Standardizer",
    "derive_seed",
    "load_csv",
    "ne_oracle_multi",
    "ne_oracle_two",
    "play_game",
    "save_csv",
    "train_test_split",
    "__version__",
]
