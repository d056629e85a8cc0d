"""Labelled decision scenarios for the theory-of-mind behavioural probe.

Each scenario is a fully specified mid-game state at the Move substep for
seat 0, plus disjoint sets of legal move actions labelled by the reasoning
needed to prefer them:

    t0     zero-order: grows the largest cluster of a colour the actor has
           itself peeked,
    t1     first-order: joins cards the partner has peeked (their colours
           are hidden from the actor; only the inspection marks are public),
    wrong  wastes certain knowledge: relocates an actor-known card without
           growing its cluster, next to nothing anyone has inspected.

The default family varies board geometry, rotation, colour permutation and
the card-id assignment, so labelled actions land all over the move block
rather than at fixed indices. Labels are computed from the constructed
state, which guarantees they are legal and the classes stay disjoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .actions import cached_layout, legal_mask
from .config import GameConfig, make_config
from .errors import ContractError
from .rules import build_state
from .state import GameState, HintCard, Substep
from .symmetry import Rotation, rotate_cell

SCHEMA = "yle-diagnostic/1"

_DEFAULT_HINTS = [(0,), (0, 1), (0, 2), (1, 2)]

# Role order: two actor-peeked cards of one colour, one hidden card of that
# colour, three partner-peeked cards of a second colour, three uninspected
# cards of the third. Cell tuples are for the 9x9 grid.
_BASE_LAYOUTS: dict[str, list[tuple[int, int]]] = {
    "block": [(3, 3), (3, 5), (5, 4), (4, 4), (5, 3), (5, 5), (3, 4), (4, 3), (4, 5)],
    "plus": [(2, 4), (6, 4), (4, 4), (4, 2), (4, 6), (3, 4), (4, 3), (4, 5), (5, 4)],
}

_COLOUR_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


@dataclass
class DiagnosticScenario:
    id: str
    config: dict
    positions: list[list[int]]
    colours: list[int]
    hints: list[dict]
    current_player: int
    substep: int
    peeks: list[dict]
    peeked_this_turn: list[int]
    labels: dict[str, list[int]]
    step_count: int = 2
    notes: str = ""

    def game_config(self) -> GameConfig:
        return GameConfig.from_dict(self.config)

    def to_state(self) -> GameState:
        config = self.game_config()
        hints = [
            HintCard.from_dict(h) if isinstance(h, dict) else h for h in self.hints
        ]
        peeks = [{int(card): int(col) for card, col in p.items()} for p in self.peeks]
        return build_state(
            config,
            np.array(self.positions, dtype=np.int32),
            np.array(self.colours, dtype=np.int8),
            hints,
            current_player=self.current_player,
            substep=Substep(self.substep),
            peeked_this_turn=tuple(self.peeked_this_turn),
            peeks=peeks,
            step_count=self.step_count,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "config": self.config,
            "positions": self.positions,
            "colours": self.colours,
            "hints": self.hints,
            "current_player": self.current_player,
            "substep": self.substep,
            "peeks": [{str(k): v for k, v in p.items()} for p in self.peeks],
            "peeked_this_turn": self.peeked_this_turn,
            "labels": self.labels,
            "step_count": self.step_count,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiagnosticScenario":
        return cls(
            id=str(data["id"]),
            config=dict(data["config"]),
            positions=[list(map(int, p)) for p in data["positions"]],
            colours=[int(c) for c in data["colours"]],
            hints=[dict(h) for h in data["hints"]],
            current_player=int(data["current_player"]),
            substep=int(data["substep"]),
            peeks=[{int(k): int(v) for k, v in p.items()} for p in data["peeks"]],
            peeked_this_turn=[int(c) for c in data["peeked_this_turn"]],
            labels={k: [int(a) for a in v] for k, v in data["labels"].items()},
            step_count=int(data.get("step_count", 2)),
            notes=str(data.get("notes", "")),
        )


def _largest(cells: set[tuple[int, int]]) -> int:
    best = 0
    pool = set(cells)
    while pool:
        frontier = [pool.pop()]
        size = 0
        while frontier:
            r, c = frontier.pop()
            size += 1
            for nxt in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if nxt in pool:
                    pool.remove(nxt)
                    frontier.append(nxt)
        best = max(best, size)
    return best


def _label_actions(state: GameState) -> dict[str, list[int]]:
    layout = cached_layout(state.config)
    g = state.grid_side
    mask = legal_mask(state, 0)
    actor_known = dict(state.peeks[0])
    partner_marked = set(state.peeks[1])
    inspected_cells = {
        (int(state.positions[c, 0]), int(state.positions[c, 1]))
        for c in set(actor_known) | partner_marked
    }
    t0: list[int] = []
    t1: list[int] = []
    wrong: list[int] = []
    base = layout.move_base
    span = layout.num_cells
    for offset in np.nonzero(mask[base : base + layout.num_cards * span])[0]:
        index = base + int(offset)
        card = int(offset) // span
        cell = (int(offset) % span // g, int(offset) % span % g)
        here = (int(state.positions[card, 0]), int(state.positions[card, 1]))
        if card in actor_known:
            colour = actor_known[card]
            others = {
                (int(state.positions[c, 0]), int(state.positions[c, 1]))
                for c, col in actor_known.items()
                if col == colour and c != card
            }
            if _largest(others | {cell}) > _largest(others | {here}):
                t0.append(index)
            else:
                neighbours = {(cell[0] - 1, cell[1]), (cell[0] + 1, cell[1]),
                              (cell[0], cell[1] - 1), (cell[0], cell[1] + 1)}
                if not neighbours & inspected_cells:
                    wrong.append(index)
        elif card in partner_marked:
            neighbours = {(cell[0] - 1, cell[1]), (cell[0] + 1, cell[1]),
                          (cell[0], cell[1] - 1), (cell[0], cell[1] + 1)}
            partner_cells = {
                (int(state.positions[c, 0]), int(state.positions[c, 1]))
                for c in partner_marked
                if c != card
            }
            if neighbours & partner_cells:
                t1.append(index)
    return {"t0": t0, "t1": t1, "wrong": wrong}


def _build_scenario(
    name: str, cells: list[tuple[int, int]], rotation: Rotation, perm: tuple[int, ...],
    id_perm: np.ndarray,
) -> DiagnosticScenario:
    config = make_config("3x3", 2)
    g = config.grid_side
    role_colours = [perm[0]] * 3 + [perm[1]] * 3 + [perm[2]] * 3
    positions = [[0, 0]] * config.num_cards
    colours = [0] * config.num_cards
    for slot, cell in enumerate(cells):
        card = int(id_perm[slot])
        r, c = rotate_cell(cell, rotation, g)
        positions[card] = [r, c]
        colours[card] = role_colours[slot]
    actor_cards = [int(id_perm[0]), int(id_perm[1])]
    partner_cards = [int(id_perm[3]), int(id_perm[4]), int(id_perm[5])]
    peeks = [
        {card: perm[0] for card in actor_cards},
        {card: perm[1] for card in partner_cards},
    ]
    hints = [HintCard(i, colours_) for i, colours_ in enumerate(_DEFAULT_HINTS)]
    scenario = DiagnosticScenario(
        id=f"{name}-r{int(rotation) * 90}-p{''.join(map(str, perm))}",
        config=config.to_dict(),
        positions=positions,
        colours=colours,
        hints=[h.to_dict() for h in hints],
        current_player=0,
        substep=int(Substep.MOVE),
        peeks=peeks,
        peeked_this_turn=actor_cards,
        labels={},
    )
    state = scenario.to_state()
    labels = _label_actions(state)
    for label, actions in labels.items():
        if not actions:
            raise ContractError(f"scenario {scenario.id}: label {label} is empty")
    flat = [a for actions in labels.values() for a in actions]
    if len(flat) != len(set(flat)):
        raise ContractError(f"scenario {scenario.id}: label classes overlap")
    scenario.labels = labels
    return scenario


def generate_default_scenarios(seed: int = 7) -> list[DiagnosticScenario]:
    """The built-in family: 2 geometries x 4 rotations x 6 colour perms,
    with a seeded card-id shuffle per scenario."""
    rng = np.random.default_rng(seed)
    scenarios = []
    for name, cells in _BASE_LAYOUTS.items():
        for rotation in Rotation:
            for perm in _COLOUR_PERMS:
                id_perm = rng.permutation(9)
                scenarios.append(_build_scenario(name, cells, rotation, perm, id_perm))
    return scenarios


def write_scenarios(scenarios: list[DiagnosticScenario], path: str | Path) -> None:
    payload = {"schema": SCHEMA, "scenarios": [s.to_dict() for s in scenarios]}
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def read_scenarios(path: str | Path) -> list[DiagnosticScenario]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("schema") != SCHEMA:
        raise ContractError(f"unsupported scenario schema {payload.get('schema')!r}")
    return [DiagnosticScenario.from_dict(s) for s in payload["scenarios"]]


def default_scenarios_path() -> Path:
    return Path(__file__).parent / "fixtures" / "diagnostic_scenarios.json"


def load_default_scenarios() -> list[DiagnosticScenario]:
    path = default_scenarios_path()
    if path.exists():
        return read_scenarios(path)
    return generate_default_scenarios()
