"""Game state containers.

The state is deliberately plain data: numpy arrays for the board, small
dataclasses for hints and phase. All rule logic lives in ``rules``; all
encode/decode logic in ``actions``. Copy and snapshot support exists so the
engine can apply actions functionally and tests can compare states bit for
bit.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .config import GameConfig


class Substep(enum.IntEnum):
    PEEK1 = 1
    PEEK2 = 2
    MOVE = 3
    HINT = 4


class HintStatus(enum.IntEnum):
    FACE_DOWN = 0
    REVEALED = 1
    PLACED = 2


@dataclass
class HintCard:
    id: int
    colours: tuple[int, ...]
    status: HintStatus = HintStatus.FACE_DOWN
    placed_on: int | None = None

    def copy(self) -> "HintCard":
        return HintCard(self.id, self.colours, self.status, self.placed_on)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "colours": list(self.colours),
            "status": int(self.status),
            "placed_on": self.placed_on,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "HintCard":
        return cls(
            id=int(data["id"]),
            colours=tuple(int(c) for c in data["colours"]),
            status=HintStatus(int(data["status"])),
            placed_on=None if data.get("placed_on") is None else int(data["placed_on"]),
        )


@dataclass
class Outcome:
    won: bool
    score: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"won": self.won, "score": self.score}


@dataclass
class GameState:
    config: GameConfig
    # Board: positions (n, 2) int32 rows/cols, colours (n,) int8 ground truth,
    # adjacency (n, n) uint8 maintained incrementally, locked (n,) uint8.
    positions: np.ndarray
    colours: np.ndarray
    adjacency: np.ndarray
    locked: np.ndarray
    hints: list[HintCard]
    current_player: int = 0
    substep: Substep = Substep.PEEK1
    peeked_this_turn: list[int] = field(default_factory=list)
    terminal: bool = False
    ended_early: bool = False
    outcome: Outcome | None = None
    # peeks[agent] maps card index -> colour the agent saw (full episode log).
    peeks: list[dict[int, int]] = field(default_factory=list)
    # team_peeked[card] is a bitmask over agents who ever peeked the card.
    team_peeked: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    max_complete_colours_seen: int = 0
    step_count: int = 0
    rng_state: dict[str, Any] | None = None

    @property
    def num_cards(self) -> int:
        return self.config.num_cards

    @property
    def grid_side(self) -> int:
        return self.config.grid_side

    def hint_status_counts(self) -> tuple[int, int, int]:
        """(face_down, revealed_unplaced, placed) — always sums to |H|."""
        fd = sum(1 for h in self.hints if h.status is HintStatus.FACE_DOWN)
        rv = sum(1 for h in self.hints if h.status is HintStatus.REVEALED)
        pl = len(self.hints) - fd - rv
        return fd, rv, pl

    def card_at(self, row: int, col: int) -> int | None:
        hit = np.nonzero((self.positions[:, 0] == row) & (self.positions[:, 1] == col))[0]
        return int(hit[0]) if len(hit) else None

    def copy(self) -> "GameState":
        return GameState(
            config=self.config,
            positions=self.positions.copy(),
            colours=self.colours.copy(),
            adjacency=self.adjacency.copy(),
            locked=self.locked.copy(),
            hints=[h.copy() for h in self.hints],
            current_player=self.current_player,
            substep=self.substep,
            peeked_this_turn=list(self.peeked_this_turn),
            terminal=self.terminal,
            ended_early=self.ended_early,
            outcome=None if self.outcome is None else Outcome(self.outcome.won, self.outcome.score),
            peeks=[dict(p) for p in self.peeks],
            team_peeked=self.team_peeked.copy(),
            max_complete_colours_seen=self.max_complete_colours_seen,
            step_count=self.step_count,
            rng_state=copy.deepcopy(self.rng_state),
        )

    def snapshot(self) -> tuple:
        """Canonical value of the whole state, for exact equality checks."""
        return (
            self.config.digest(),
            self.positions.tobytes(),
            self.colours.tobytes(),
            self.adjacency.tobytes(),
            self.locked.tobytes(),
            tuple((h.id, h.colours, int(h.status), h.placed_on) for h in self.hints),
            self.current_player,
            int(self.substep),
            tuple(self.peeked_this_turn),
            self.terminal,
            self.ended_early,
            None if self.outcome is None else (self.outcome.won, self.outcome.score),
            tuple(tuple(sorted(p.items())) for p in self.peeks),
            self.team_peeked.tobytes(),
            self.max_complete_colours_seen,
            self.step_count,
            repr(self.rng_state),
        )
