"""Canonical categorical action space: indexing, decoding, legality masks.

The flat index layout is fixed and documented (docs/action_space.md):

    [0]                EndGame
    [1 .. |Y|]         ObserveCard(card)
    [.. + |Y|*g*g]     MoveCard(card, cell), card-major then row-major cells
    [.. + |H|]         RevealHint(hint)
    [.. + |H|*T]       PlaceHint(hint, target), hint-major; T = g*g cells
                       (Cell indexing, default) or |Y| cards (Card indexing)
    [last]             NoOp

For the 2-player 3x3 game under Cell indexing the total is
1 + 9 + 729 + 4 + 324 + 1 = 1068.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .config import GameConfig, HintTargetIndexing
from .errors import ContractError
from .state import GameState, HintStatus, Substep


class ActionKind(enum.Enum):
    END_GAME = "end_game"
    OBSERVE_CARD = "observe_card"
    MOVE_CARD = "move_card"
    REVEAL_HINT = "reveal_hint"
    PLACE_HINT = "place_hint"
    NOOP = "noop"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    card: int | None = None
    cell: tuple[int, int] | None = None
    hint: int | None = None

    def describe(self) -> str:
        k = self.kind
        if k is ActionKind.OBSERVE_CARD:
            return f"observe card {self.card}"
        if k is ActionKind.MOVE_CARD:
            return f"move card {self.card} to {self.cell}"
        if k is ActionKind.REVEAL_HINT:
            return f"reveal hint {self.hint}"
        if k is ActionKind.PLACE_HINT:
            target = self.cell if self.cell is not None else f"card {self.card}"
            return f"place hint {self.hint} on {target}"
        return k.value


@dataclass(frozen=True)
class ActionLayout:
    """Offset arithmetic for the canonical flat action indexing."""

    num_cards: int
    grid_side: int
    num_hints: int
    indexing: HintTargetIndexing

    @property
    def num_cells(self) -> int:
        return self.grid_side * self.grid_side

    @property
    def num_place_targets(self) -> int:
        if self.indexing is HintTargetIndexing.CELL:
            return self.num_cells
        return self.num_cards

    @property
    def end_game_index(self) -> int:
        return 0

    @property
    def observe_base(self) -> int:
        return 1

    @property
    def move_base(self) -> int:
        return 1 + self.num_cards

    @property
    def reveal_base(self) -> int:
        return self.move_base + self.num_cards * self.num_cells

    @property
    def place_base(self) -> int:
        return self.reveal_base + self.num_hints

    @property
    def noop_index(self) -> int:
        return self.place_base + self.num_hints * self.num_place_targets

    @property
    def size(self) -> int:
        return self.noop_index + 1

    @classmethod
    def from_config(cls, config: GameConfig) -> "ActionLayout":
        return cls(
            num_cards=config.num_cards,
            grid_side=config.grid_side,
            num_hints=config.num_hints,
            indexing=config.hint_target_indexing,
        )

    def encode(self, action: Action) -> int:
        kind = action.kind
        if kind is ActionKind.END_GAME:
            return self.end_game_index
        if kind is ActionKind.NOOP:
            return self.noop_index
        if kind is ActionKind.OBSERVE_CARD:
            self._check(action.card, self.num_cards, "card")
            return self.observe_base + action.card
        if kind is ActionKind.MOVE_CARD:
            self._check(action.card, self.num_cards, "card")
            cell = self._cell_index(action.cell)
            return self.move_base + action.card * self.num_cells + cell
        if kind is ActionKind.REVEAL_HINT:
            self._check(action.hint, self.num_hints, "hint")
            return self.reveal_base + action.hint
        if kind is ActionKind.PLACE_HINT:
            self._check(action.hint, self.num_hints, "hint")
            if self.indexing is HintTargetIndexing.CELL:
                target = self._cell_index(action.cell)
            else:
                self._check(action.card, self.num_cards, "card")
                target = action.card
            return self.place_base + action.hint * self.num_place_targets + target
        raise ContractError(f"cannot encode action kind {kind}")

    def decode(self, index: int) -> Action:
        if not 0 <= index < self.size:
            raise ContractError(f"action index {index} outside [0, {self.size})")
        if index == self.end_game_index:
            return Action(ActionKind.END_GAME)
        if index == self.noop_index:
            return Action(ActionKind.NOOP)
        if index < self.move_base:
            return Action(ActionKind.OBSERVE_CARD, card=index - self.observe_base)
        if index < self.reveal_base:
            offset = index - self.move_base
            card, cell = divmod(offset, self.num_cells)
            return Action(
                ActionKind.MOVE_CARD,
                card=card,
                cell=(cell // self.grid_side, cell % self.grid_side),
            )
        if index < self.place_base:
            return Action(ActionKind.REVEAL_HINT, hint=index - self.reveal_base)
        offset = index - self.place_base
        hint, target = divmod(offset, self.num_place_targets)
        if self.indexing is HintTargetIndexing.CELL:
            return Action(
                ActionKind.PLACE_HINT,
                hint=hint,
                cell=(target // self.grid_side, target % self.grid_side),
            )
        return Action(ActionKind.PLACE_HINT, hint=hint, card=target)

    def _cell_index(self, cell: tuple[int, int] | None) -> int:
        g = self.grid_side
        if cell is None or not (0 <= cell[0] < g and 0 <= cell[1] < g):
            raise ContractError(f"cell {cell} is off the {g}x{g} grid")
        return cell[0] * g + cell[1]

    @staticmethod
    def _check(value: int | None, bound: int, label: str) -> None:
        if value is None or not 0 <= value < bound:
            raise ContractError(f"{label} index {value} outside [0, {bound})")


@functools.lru_cache(maxsize=32)
def _layout(num_cards: int, grid_side: int, num_hints: int, indexing: HintTargetIndexing) -> ActionLayout:
    return ActionLayout(num_cards, grid_side, num_hints, indexing)


def cached_layout(config: GameConfig) -> ActionLayout:
    return _layout(config.num_cards, config.grid_side, config.num_hints, config.hint_target_indexing)


def action_count(config: GameConfig) -> int:
    return cached_layout(config).size


def legal_mask(state: GameState, agent: int) -> np.ndarray:
    """Boolean legality vector of length action_count for one agent.

    Inactive agents and every agent at a terminal state get exactly the NoOp
    bit. For the current player the set bits are exactly the actions
    apply_action would accept.
    """
    layout = cached_layout(state.config)
    mask = np.zeros(layout.size, dtype=bool)
    if state.terminal or agent != state.current_player:
        mask[layout.noop_index] = True
        return mask

    sub = state.substep
    unlocked = np.nonzero(state.locked == 0)[0]
    if sub in (Substep.PEEK1, Substep.PEEK2):
        if sub is Substep.PEEK1:
            mask[layout.end_game_index] = True
        mask[layout.observe_base + unlocked] = True
        if sub is Substep.PEEK2:
            mask[layout.observe_base + state.peeked_this_turn[0]] = False
    elif sub is Substep.MOVE:
        g = state.grid_side
        targets = kernels.legal_targets_many(state.positions, g, unlocked)
        for row, card in enumerate(unlocked):
            base = layout.move_base + int(card) * layout.num_cells
            mask[base : base + layout.num_cells] = targets[row].astype(bool)
        if not mask.any():
            mask[layout.noop_index] = True
    elif sub is Substep.HINT:
        for h in state.hints:
            if h.status is HintStatus.FACE_DOWN:
                mask[layout.reveal_base + h.id] = True
            elif h.status is HintStatus.REVEALED:
                base = layout.place_base + h.id * layout.num_place_targets
                if layout.indexing is HintTargetIndexing.CELL:
                    cells = state.positions[unlocked, 0] * state.grid_side + state.positions[unlocked, 1]
                    mask[base + cells] = True
                else:
                    mask[base + unlocked] = True
    return mask
