"""Yokai: a cooperative hidden-information card game environment.

Turn-based engine with masked categorical actions, per-agent graph/image
observations, batched simulation, scripted baselines, an evaluation harness,
and a turn-based play service. See README.md for the full tour.
"""

from ._kernels import available_backends, backend_name
from .actions import Action, ActionKind, ActionLayout, action_count, cached_layout, legal_mask
from .config import (
    GameConfig,
    HINT_DECK_TABLE,
    HintDeckSpec,
    HintTargetIndexing,
    Variant,
    make_config,
)
from .errors import (
    ConfigError,
    ContractError,
    IllegalTarget,
    OutOfTurn,
    ProtocolError,
    ReplayError,
    RuleViolation,
    YokaiError,
)
from .observation import (
    GraphObservation,
    ImageObservation,
    MemoryMode,
    ObsEncoding,
    image_channels,
    node_feature_width,
    observe,
    visible_colours,
    world_state,
)
from .reward import RewardBreakdown, reward_breakdown, shaped_step_reward, step_reward, terminal_reward
from .rules import (
    Event,
    EventKind,
    apply_action,
    build_state,
    check_win,
    compute_score,
    count_complete_colour_clusters,
    iter_legal_actions,
    legal_move_targets,
    move_available,
    new_game,
    score_terms,
)
from .state import GameState, HintCard, HintStatus, Outcome, Substep
from .symmetry import (
    Rotation,
    Symmetry,
    SymmetryMode,
    identity_symmetry,
    rotate_cell,
    sample_symmetries,
    transform_action_from_env,
    transform_action_to_env,
    transform_mask,
    transform_observation,
    transform_state,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "ActionLayout",
    "ConfigError",
    "ContractError",
    "Event",
    "EventKind",
    "GameConfig",
    "GameState",
    "GraphObservation",
    "HINT_DECK_TABLE",
    "HintCard",
    "HintDeckSpec",
    "HintStatus",
    "HintTargetIndexing",
    "IllegalTarget",
    "ImageObservation",
    "MemoryMode",
    "ObsEncoding",
    "Outcome",
    "OutOfTurn",
    "ProtocolError",
    "ReplayError",
    "RewardBreakdown",
    "Rotation",
    "RuleViolation",
    "Substep",
    "Symmetry",
    "SymmetryMode",
    "Variant",
    "YokaiError",
    "action_count",
    "apply_action",
    "available_backends",
    "backend_name",
    "build_state",
    "cached_layout",
    "check_win",
    "compute_score",
    "count_complete_colour_clusters",
    "identity_symmetry",
    "image_channels",
    "iter_legal_actions",
    "legal_mask",
    "legal_move_targets",
    "make_config",
    "move_available",
    "new_game",
    "node_feature_width",
    "observe",
    "reward_breakdown",
    "rotate_cell",
    "sample_symmetries",
    "score_terms",
    "shaped_step_reward",
    "step_reward",
    "terminal_reward",
    "transform_action_from_env",
    "transform_action_to_env",
    "transform_mask",
    "transform_observation",
    "transform_state",
    "visible_colours",
    "world_state",
    "__version__",
]
