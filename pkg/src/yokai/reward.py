"""Terminal reward and annealable shaped training reward.

All agents share one scalar. A won game pays the final score; a lost game
pays -d_a - (|C| - c_a) - i_h where d_a flags an early end, c_a counts
complete colour clusters and i_h counts wrongly placed hints. Shaping adds
lambda_s per qualifying step event; evaluation metrics always use
lambda_s = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import ContractError
from .rules import Event, EventKind, compute_score, count_complete_colour_clusters, score_terms
from .state import GameState

_POSITIVE = (
    EventKind.PEEKED_NEW_TEAM_CARD,
    EventKind.CLUSTER_MAX_INCREASED,
    EventKind.HINT_PLACED_CORRECT,
)


@dataclass
class RewardBreakdown:
    terminal: float
    shaped_components: dict[str, int] = field(default_factory=dict)
    shaping_weight: float = 0.0

    @property
    def total(self) -> float:
        c = self.shaped_components
        signed = (
            c.get("new_card_peek", 0)
            + c.get("cluster_max_increase", 0)
            + c.get("hint_correct", 0)
            - c.get("hint_wrong", 0)
        )
        return self.terminal + self.shaping_weight * signed


def terminal_reward(state: GameState) -> float:
    """Shared team reward at a terminal state."""
    if not state.terminal or state.outcome is None:
        raise ContractError("terminal reward requires a terminal state")
    if state.outcome.won:
        return float(compute_score(state))
    d_a = 1 if state.ended_early else 0
    c_a = count_complete_colour_clusters(state)
    i_h = score_terms(state)["wrong"]
    return float(-d_a - (state.config.num_colours - c_a) - i_h)


def shaped_step_reward(events: Iterable[Event], shaping_weight: float) -> float:
    if shaping_weight < 0:
        raise ContractError("shaping weight must be non-negative")
    signed = 0
    for event in events:
        if event.kind in _POSITIVE:
            signed += 1
        elif event.kind is EventKind.HINT_PLACED_WRONG:
            signed -= 1
    return shaping_weight * signed


def step_reward(state: GameState, events: Iterable[Event], shaping_weight: float = 0.0) -> float:
    """Reward granted for the step that produced ``state`` and ``events``."""
    base = terminal_reward(state) if state.terminal else 0.0
    return base + shaped_step_reward(events, shaping_weight)


def reward_breakdown(
    state: GameState, events: Iterable[Event], shaping_weight: float = 0.0
) -> RewardBreakdown:
    components = {
        "new_card_peek": 0,
        "cluster_max_increase": 0,
        "hint_correct": 0,
        "hint_wrong": 0,
    }
    names = {
        EventKind.PEEKED_NEW_TEAM_CARD: "new_card_peek",
        EventKind.CLUSTER_MAX_INCREASED: "cluster_max_increase",
        EventKind.HINT_PLACED_CORRECT: "hint_correct",
        EventKind.HINT_PLACED_WRONG: "hint_wrong",
    }
    for event in events:
        if event.kind in names:
            components[names[event.kind]] += 1
    base = terminal_reward(state) if state.terminal else 0.0
    return RewardBreakdown(
        terminal=base, shaped_components=components, shaping_weight=shaping_weight
    )
