"""Other-Play symmetrization: per-agent colour permutations and board
rotations applied to observations, with matching inverse action transforms.

An agent assigned symmetry (p, rho) perceives the recoloured, rotated game:
colour c renders as p(c) and a card at cell x renders at rho(x). Actions the
agent emits are phrased in that rotated frame, so their cell payloads must
be mapped back through rho^-1 before the real environment executes them.
Card and hint indices are stable ids shared by every frame; only cell
coordinates and colour channels transform. The board adjacency matrix is
rotation-invariant, and the hint column of the image encoding never rotates.

The commuting square these transforms satisfy (tested exhaustively): stepping
the real environment with the mapped-back action and then transforming the
next state equals stepping the transformed state directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _kernels as kernels
from .actions import Action, ActionKind, ActionLayout, cached_layout
from .config import GameConfig, HintTargetIndexing
from .errors import ContractError
from .observation import GraphObservation, ImageObservation, Observation
from .state import GameState, HintCard


class Rotation(enum.IntEnum):
    R0 = 0
    R90 = 1
    R180 = 2
    R270 = 3


class SymmetryMode(str, enum.Enum):
    NONE = "none"
    COLOUR = "c"
    COLOUR_ROTATION = "c+r"


def rotate_cell(cell: tuple[int, int], rotation: Rotation, grid_side: int) -> tuple[int, int]:
    """Apply the rotation to a cell: one quarter turn maps (r, c) to (c, g-1-r)."""
    r, c = cell
    for _ in range(int(rotation) % 4):
        r, c = c, grid_side - 1 - r
    return r, c


@dataclass(frozen=True)
class Symmetry:
    colour_perm: tuple[int, ...]
    rotation: Rotation = Rotation.R0

    def __post_init__(self) -> None:
        if sorted(self.colour_perm) != list(range(len(self.colour_perm))):
            raise ContractError(f"{self.colour_perm} is not a permutation")

    @property
    def is_identity(self) -> bool:
        return self.rotation is Rotation.R0 and self.colour_perm == tuple(
            range(len(self.colour_perm))
        )

    def inverse(self) -> "Symmetry":
        inv = tuple(int(i) for i in np.argsort(self.colour_perm))
        return Symmetry(inv, Rotation((4 - int(self.rotation)) % 4))

    def compose(self, other: "Symmetry") -> "Symmetry":
        """self after other: apply ``other`` first, then ``self``."""
        perm = tuple(self.colour_perm[c] for c in other.colour_perm)
        return Symmetry(perm, Rotation((int(self.rotation) + int(other.rotation)) % 4))

    def to_dict(self) -> dict:
        return {"colour_perm": list(self.colour_perm), "rotation": int(self.rotation)}

    @classmethod
    def from_dict(cls, data: dict) -> "Symmetry":
        return cls(tuple(int(c) for c in data["colour_perm"]), Rotation(int(data["rotation"])))


def identity_symmetry(config: GameConfig) -> Symmetry:
    return Symmetry(tuple(range(config.num_colours)), Rotation.R0)


def sample_symmetries(
    config: GameConfig, mode: SymmetryMode, seed: int | np.random.Generator
) -> list[Symmetry]:
    """One independent uniform draw per agent for the episode."""
    mode = SymmetryMode(mode)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = []
    for _ in range(config.num_players):
        if mode is SymmetryMode.NONE:
            out.append(identity_symmetry(config))
            continue
        perm = tuple(int(c) for c in rng.permutation(config.num_colours))
        if mode is SymmetryMode.COLOUR:
            rotation = Rotation.R0
        else:
            rotation = Rotation(int(rng.integers(0, 4)))
        out.append(Symmetry(perm, rotation))
    return out


def transform_observation(obs: Observation, sym: Symmetry, config: GameConfig) -> Observation:
    if isinstance(obs, GraphObservation):
        return _transform_graph(obs, sym, config)
    if isinstance(obs, ImageObservation):
        return _transform_image(obs, sym, config)
    raise ContractError(f"unknown observation type {type(obs).__name__}")


def _permute_colour_block(block: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    # New channel p(c) shows what channel c showed: out[..., p] = in[..., c].
    inv = np.argsort(np.asarray(perm))
    return block[..., inv]


def _transform_graph(obs: GraphObservation, sym: Symmetry, config: GameConfig) -> GraphObservation:
    C = config.num_colours
    g = config.grid_side
    n = config.num_cards
    nodes = obs.nodes.copy()
    nodes[:, :C] = _permute_colour_block(obs.nodes[:, :C], sym.colour_perm)
    if sym.rotation is not Rotation.R0:
        for i in range(n):  # hint rows keep their sentinel
            r = round(float(obs.nodes[i, C]) * (g - 1))
            c = round(float(obs.nodes[i, C + 1]) * (g - 1))
            rr, cc = rotate_cell((r, c), sym.rotation, g)
            nodes[i, C] = rr / (g - 1)
            nodes[i, C + 1] = cc / (g - 1)
    return GraphObservation(adjacency=obs.adjacency.copy(), nodes=nodes)


def _transform_image(obs: ImageObservation, sym: Symmetry, config: GameConfig) -> ImageObservation:
    C = config.num_colours
    g = config.grid_side
    t = obs.tensor
    out = np.zeros_like(t)
    out[:, g, :] = t[:, g, :]  # hint column is rotation-invariant
    for r in range(g):
        for c in range(g):
            rr, cc = rotate_cell((r, c), sym.rotation, g)
            out[rr, cc, :] = t[r, c, :]
    out[:, :, :C] = _permute_colour_block(out[:, :, :C], sym.colour_perm)
    out[:, :, C : 2 * C] = _permute_colour_block(out[:, :, C : 2 * C], sym.colour_perm)
    if sym.rotation is not Rotation.R0:
        board = out[:, :g, :]
        occupied = board.any(axis=2)
        rows, cols = np.nonzero(occupied)
        board[rows, cols, 2 * C + 0] = rows.astype(np.float32) / (g - 1)
        board[rows, cols, 2 * C + 1] = cols.astype(np.float32) / (g - 1)
    return ImageObservation(tensor=out)


def transform_action_to_env(action: Action, sym: Symmetry, config: GameConfig) -> Action:
    """Map an agent-frame action into the real environment's frame.

    Cells travel through the inverse rotation; card/hint ids are frame-free.
    """
    if action.cell is None or sym.rotation is Rotation.R0:
        return action
    inverse = Rotation((4 - int(sym.rotation)) % 4)
    cell = rotate_cell(action.cell, inverse, config.grid_side)
    return Action(action.kind, card=action.card, cell=cell, hint=action.hint)


def transform_action_from_env(action: Action, sym: Symmetry, config: GameConfig) -> Action:
    """Inverse of transform_action_to_env: present an env action in agent frame."""
    if action.cell is None or sym.rotation is Rotation.R0:
        return action
    cell = rotate_cell(action.cell, sym.rotation, config.grid_side)
    return Action(action.kind, card=action.card, cell=cell, hint=action.hint)


@lru_cache(maxsize=64)
def _index_permutation(
    num_cards: int, grid_side: int, num_hints: int, indexing: HintTargetIndexing, rotation: Rotation
) -> np.ndarray:
    """perm[k_agent] = k_env for the cell-payload blocks; identity elsewhere."""
    layout = ActionLayout(num_cards, grid_side, num_hints, indexing)
    perm = np.arange(layout.size, dtype=np.int64)
    if rotation is Rotation.R0:
        return perm
    g = grid_side
    inverse = Rotation((4 - int(rotation)) % 4)
    cell_map = np.empty(g * g, dtype=np.int64)
    for r in range(g):
        for c in range(g):
            rr, cc = rotate_cell((r, c), inverse, g)
            cell_map[r * g + c] = rr * g + cc
    for card in range(num_cards):
        base = layout.move_base + card * layout.num_cells
        perm[base : base + g * g] = base + cell_map
    if indexing is HintTargetIndexing.CELL:
        for hint in range(num_hints):
            base = layout.place_base + hint * layout.num_place_targets
            perm[base : base + g * g] = base + cell_map
    return perm


def action_index_permutation(sym: Symmetry, config: GameConfig) -> np.ndarray:
    """Vectorized form of transform_action_to_env on canonical indices."""
    return _index_permutation(
        config.num_cards,
        config.grid_side,
        config.num_hints,
        config.hint_target_indexing,
        sym.rotation,
    )


def transform_mask(mask: np.ndarray, sym: Symmetry, config: GameConfig) -> np.ndarray:
    """Re-express an env-frame legality mask in the agent's frame."""
    return mask[action_index_permutation(sym, config)]


def transform_state(state: GameState, sym: Symmetry) -> GameState:
    """Reference semantics: the whole game as perceived through ``sym``.

    Rotates every card's cell, recolours cards, hint sets and peek logs.
    Used by tests to pin down what observation/action transforms must mean;
    the runtime path never materializes transformed states.
    """
    g = state.grid_side
    new = state.copy()
    perm = sym.colour_perm
    for i in range(state.num_cards):
        r, c = rotate_cell((int(state.positions[i, 0]), int(state.positions[i, 1])), sym.rotation, g)
        new.positions[i, 0] = r
        new.positions[i, 1] = c
    new.colours = np.array([perm[int(c)] for c in state.colours], dtype=np.int8)
    new.adjacency = kernels.adjacency_matrix(new.positions, g)
    new.hints = [
        HintCard(h.id, tuple(sorted(perm[c] for c in h.colours)), h.status, h.placed_on)
        for h in state.hints
    ]
    new.peeks = [
        {card: perm[colour] for card, colour in agent_peeks.items()} for agent_peeks in state.peeks
    ]
    return new
