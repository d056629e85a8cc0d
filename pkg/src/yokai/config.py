"""Game configuration: board variants, player counts, hint deck composition.

Two board variants are supported. The small board plays nine cards in three
colours on a 9x9 grid; the large board plays sixteen cards in four colours on
a 10x10 grid. Cards start in a centred square block and may drift anywhere on
the grid as long as the group stays side-connected, so the grid is bigger
than the block.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import ConfigError


class Variant(str, enum.Enum):
    SMALL = "3x3"
    LARGE = "4x4"

    @property
    def block_side(self) -> int:
        return 3 if self is Variant.SMALL else 4

    @property
    def num_cards(self) -> int:
        return self.block_side * self.block_side

    @property
    def num_colours(self) -> int:
        return self.block_side

    @property
    def grid_side(self) -> int:
        return 9 if self is Variant.SMALL else 10


class HintTargetIndexing(str, enum.Enum):
    """How the placement half of the action space addresses its target.

    CELL targets a grid cell (the hint lands on whichever card occupies it),
    CARD targets a card identity directly. CELL is the default and is what
    the documented action space sizes assume.
    """

    CELL = "cell"
    CARD = "card"


@dataclass(frozen=True)
class HintDeckSpec:
    """Number of hint cards drawn per colour-subset size."""

    one_colour: int
    two_colour: int
    three_colour: int

    @property
    def total(self) -> int:
        return self.one_colour + self.two_colour + self.three_colour

    def counts(self) -> tuple[int, int, int]:
        return (self.one_colour, self.two_colour, self.three_colour)


# Hint deck composition by (variant, player count). Fixed by the rules.
HINT_DECK_TABLE: dict[tuple[Variant, int], HintDeckSpec] = {
    (Variant.SMALL, 2): HintDeckSpec(1, 3, 0),
    (Variant.SMALL, 3): HintDeckSpec(2, 3, 0),
    (Variant.SMALL, 4): HintDeckSpec(3, 3, 0),
    (Variant.LARGE, 2): HintDeckSpec(2, 3, 2),
    (Variant.LARGE, 3): HintDeckSpec(2, 4, 3),
    (Variant.LARGE, 4): HintDeckSpec(3, 4, 3),
}


@dataclass(frozen=True)
class GameConfig:
    variant: Variant
    num_players: int
    num_cards: int
    num_colours: int
    grid_side: int
    hint_deck_spec: HintDeckSpec
    hint_target_indexing: HintTargetIndexing = HintTargetIndexing.CELL
    seed: int = 0

    def __post_init__(self) -> None:
        v = self.variant
        if not 2 <= self.num_players <= 4:
            raise ConfigError(f"player count must be 2..4, got {self.num_players}")
        if self.num_cards != v.num_cards:
            raise ConfigError(f"{v.value} plays {v.num_cards} cards, got {self.num_cards}")
        if self.num_colours != v.num_colours:
            raise ConfigError(f"{v.value} uses {v.num_colours} colours, got {self.num_colours}")
        if self.grid_side != v.grid_side:
            raise ConfigError(f"{v.value} uses a {v.grid_side}x{v.grid_side} grid, got {self.grid_side}")
        spec = self.hint_deck_spec
        if min(spec.counts()) < 0 or spec.total < 1:
            raise ConfigError(f"hint deck must be non-empty with non-negative counts, got {spec}")
        if self.num_colours == 3 and spec.three_colour > 0:
            # Only |C| distinct colours exist; a 3-colour hint on a 3-colour
            # board names every colour and the table never includes them.
            raise ConfigError("three-colour hints are not part of the 3-colour decks")
        # Each subset-size category draws without replacement from the
        # distinct colour subsets of that size.
        limits = _subset_counts(self.num_colours)
        for count, limit, label in zip(spec.counts(), limits, ("one", "two", "three")):
            if count > limit:
                raise ConfigError(
                    f"{label}-colour hint count {count} exceeds the {limit} distinct subsets"
                )
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")

    @property
    def num_hints(self) -> int:
        return self.hint_deck_spec.total

    @property
    def num_cells(self) -> int:
        return self.grid_side * self.grid_side

    @property
    def num_place_targets(self) -> int:
        if self.hint_target_indexing is HintTargetIndexing.CELL:
            return self.num_cells
        return self.num_cards

    @property
    def max_episode_steps(self) -> int:
        # Every hint is revealed exactly once and placed exactly once, so an
        # episode runs at most 2 * num_hints turns of four substeps each.
        return 8 * self.num_hints

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": self.variant.value,
            "num_players": self.num_players,
            "num_cards": self.num_cards,
            "num_colours": self.num_colours,
            "grid_side": self.grid_side,
            "hint_deck_spec": list(self.hint_deck_spec.counts()),
            "hint_target_indexing": self.hint_target_indexing.value,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GameConfig":
        spec = data.get("hint_deck_spec")
        return make_config(
            variant=data["variant"],
            players=int(data["num_players"]),
            hint_deck_spec=HintDeckSpec(*spec) if spec is not None else None,
            hint_target_indexing=data.get("hint_target_indexing", HintTargetIndexing.CELL.value),
            seed=int(data.get("seed", 0)),
        )

    def digest(self) -> str:
        """Stable hash of the configuration, used to tag exported records."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _subset_counts(num_colours: int) -> tuple[int, int, int]:
    n = num_colours
    return (n, n * (n - 1) // 2, n * (n - 1) * (n - 2) // 6)


def make_config(
    variant: Variant | str = Variant.SMALL,
    players: int = 2,
    *,
    hint_deck_spec: HintDeckSpec | None = None,
    hint_target_indexing: HintTargetIndexing | str = HintTargetIndexing.CELL,
    seed: int = 0,
) -> GameConfig:
    """Build a validated configuration, deriving board facts from the variant."""
    v = Variant(variant)
    if hint_deck_spec is None:
        try:
            hint_deck_spec = HINT_DECK_TABLE[(v, players)]
        except KeyError:
            raise ConfigError(f"player count must be 2..4, got {players}") from None
    return GameConfig(
        variant=v,
        num_players=players,
        num_cards=v.num_cards,
        num_colours=v.num_colours,
        grid_side=v.grid_side,
        hint_deck_spec=hint_deck_spec,
        hint_target_indexing=HintTargetIndexing(hint_target_indexing),
        seed=seed,
    )
