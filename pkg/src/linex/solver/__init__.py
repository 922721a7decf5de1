from ._kernels import BACKEND as KERNEL_BACKEND
from .game import (
    GameConfig,
    PlayerState,
    best_response,
    default_gamma,
    lambda_max,
    ne_oracle_multi,
    ne_oracle_two,
    play_game,
    project_l1_ball,
    sparsify,
    weighted_lsq,
    weighted_lsq_full,
)

__all__ = [
    "KERNEL_BACKEND",
    "GameConfig",
    "PlayerState",
    "best_response",
    "default_gamma",
    "lambda_max",
    "ne_oracle_multi",
    "ne_oracle_two",
    "play_game",
    "project_l1_ball",
    "sparsify",
    "weighted_lsq",
    "weighted_lsq_full",
]
