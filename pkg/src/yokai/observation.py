"""Per-agent hidden-information views in graph and image encodings.

Visibility rule: a card's colour is visible to an observer iff the observer
has peeked it — ever this episode under Perfect memory, or during the
current turn while being the current player under Standard memory. Revealed
and placed hints show their colour sets to everyone; face-down hints show
nothing. Who-inspected-what is public: the ``seen`` channel codes it as
0 = nobody, 1/3 = others only, 2/3 = observer only, 1 = both.

Graph encoding: the board adjacency matrix (public) plus one feature row per
card and per hint. Feature order per node, width |C| + 7:

    [0 .. |C|)   colour: one-hot for cards, multi-hot for hints, zero if hidden
    [|C| + 0, 1] position: row/(g-1), col/(g-1); hints use the (-1, -1) sentinel
    [|C| + 2]    locked: card carries a hint / hint is placed
    [|C| + 3]    seen: 4-level inspection code; for hints, 1 once revealed
    [|C| + 4]    id: (index + 1) / block size, distinct per node
    [|C| + 5]    is_current_player: 1 iff the observer is the acting player
    [|C| + 6]    substep: substep value 1-4 divided by 4

Image encoding: a g x (g+1) x (2|C| + 7) tensor. Cards write their feature
vector at their grid cell; hint j writes at row j of the extra column g.
Channel order: card colour block, hint colour block, position pair, locked,
seen, is_current_player, substep, id. Cells holding no card (outside the
hint column) stay all-zero; the substep channel makes every occupied cell
nonzero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import GameConfig
from .errors import ContractError
from .state import GameState, HintStatus


class MemoryMode(str, enum.Enum):
    STANDARD = "standard"
    PERFECT = "perfect"


class ObsEncoding(str, enum.Enum):
    GRAPH = "graph"
    IMAGE = "image"


@dataclass
class GraphObservation:
    adjacency: np.ndarray  # (|Y|, |Y|) uint8
    nodes: np.ndarray  # (|Y| + |H|, |C| + 7) float32


@dataclass
class ImageObservation:
    tensor: np.ndarray  # (g, g + 1, 2|C| + 7) float32


Observation = GraphObservation | ImageObservation


def node_feature_width(config: GameConfig) -> int:
    return config.num_colours + 7


def image_channels(config: GameConfig) -> int:
    return 2 * config.num_colours + 7


def visible_colours(state: GameState, agent: int, memory: MemoryMode) -> np.ndarray:
    """Per-card colour as this observer may see it; -1 where hidden."""
    out = np.full(state.num_cards, -1, dtype=np.int8)
    if memory is MemoryMode.PERFECT:
        for card, colour in state.peeks[agent].items():
            out[card] = colour
    elif agent == state.current_player:
        for card in state.peeked_this_turn:
            out[card] = state.peeks[agent][card]
    return out


def seen_codes(state: GameState, agent: int) -> np.ndarray:
    """Inspection-status channel: 0 none, 1/3 others-only, 2/3 observer-only, 1 both."""
    bits = state.team_peeked
    own = (bits & np.uint8(1 << agent)) != 0
    others = (bits & np.uint8(~(1 << agent) & 0xFF)) != 0
    return (own * 2.0 + others * 1.0) / 3.0


def observe(
    state: GameState,
    agent: int,
    memory: MemoryMode = MemoryMode.STANDARD,
    encoding: ObsEncoding = ObsEncoding.GRAPH,
) -> Observation:
    if not 0 <= agent < state.config.num_players:
        raise ContractError(f"agent index {agent} out of range")
    if encoding is ObsEncoding.GRAPH:
        return _observe_graph(state, agent, memory)
    return _observe_image(state, agent, memory)


def _card_scalars(state: GameState, agent: int, memory: MemoryMode):
    config = state.config
    g = config.grid_side
    colours = visible_colours(state, agent, memory)
    seen = seen_codes(state, agent)
    pos = state.positions.astype(np.float32) / float(g - 1)
    ids = (np.arange(config.num_cards, dtype=np.float32) + 1.0) / config.num_cards
    is_actor = 1.0 if agent == state.current_player else 0.0
    substep = float(state.substep) / 4.0
    return colours, seen, pos, ids, is_actor, substep


def _hint_rows(state: GameState, is_actor: float, substep: float) -> np.ndarray:
    """Shared hint features: colour multi-hot, lock/seen flags, id, globals."""
    config = state.config
    C = config.num_colours
    rows = np.zeros((config.num_hints, C + 7), dtype=np.float32)
    for h in state.hints:
        row = rows[h.id]
        if h.status is not HintStatus.FACE_DOWN:
            row[list(h.colours)] = 1.0
            row[C + 3] = 1.0  # publicly seen once revealed
        if h.status is HintStatus.PLACED:
            row[C + 2] = 1.0
        row[C + 0] = -1.0  # hints occupy no board cell
        row[C + 1] = -1.0
        row[C + 4] = (h.id + 1.0) / config.num_hints
        row[C + 5] = is_actor
        row[C + 6] = substep
    return rows


def _observe_graph(state: GameState, agent: int, memory: MemoryMode) -> GraphObservation:
    config = state.config
    C = config.num_colours
    n = config.num_cards
    colours, seen, pos, ids, is_actor, substep = _card_scalars(state, agent, memory)

    nodes = np.zeros((n + config.num_hints, C + 7), dtype=np.float32)
    card_rows = nodes[:n]
    vis = colours >= 0
    card_rows[np.nonzero(vis)[0], colours[vis]] = 1.0
    card_rows[:, C + 0 : C + 2] = pos
    card_rows[:, C + 2] = state.locked
    card_rows[:, C + 3] = seen
    card_rows[:, C + 4] = ids
    card_rows[:, C + 5] = is_actor
    card_rows[:, C + 6] = substep

    nodes[n:] = _hint_rows(state, is_actor, substep)
    return GraphObservation(adjacency=state.adjacency.copy(), nodes=nodes)


def _observe_image(state: GameState, agent: int, memory: MemoryMode) -> ImageObservation:
    config = state.config
    C = config.num_colours
    g = config.grid_side
    colours, seen, pos, ids, is_actor, substep = _card_scalars(state, agent, memory)

    tensor = np.zeros((g, g + 1, 2 * C + 7), dtype=np.float32)
    for i in range(config.num_cards):
        r, c = int(state.positions[i, 0]), int(state.positions[i, 1])
        cell = tensor[r, c]
        if colours[i] >= 0:
            cell[colours[i]] = 1.0
        cell[2 * C + 0 : 2 * C + 2] = pos[i]
        cell[2 * C + 2] = state.locked[i]
        cell[2 * C + 3] = seen[i]
        cell[2 * C + 4] = is_actor
        cell[2 * C + 5] = substep
        cell[2 * C + 6] = ids[i]

    hint_rows = _hint_rows(state, is_actor, substep)
    for j in range(config.num_hints):
        src = hint_rows[j]
        cell = tensor[j, g]
        cell[C : 2 * C] = src[:C]
        cell[2 * C + 0 : 2 * C + 2] = src[C + 0 : C + 2]
        cell[2 * C + 2] = src[C + 2]
        cell[2 * C + 3] = src[C + 3]
        cell[2 * C + 4] = src[C + 5]
        cell[2 * C + 5] = src[C + 6]
        cell[2 * C + 6] = src[C + 4]
    return ImageObservation(tensor=tensor)


def world_state(
    state: GameState,
    memory: MemoryMode = MemoryMode.STANDARD,
    encoding: ObsEncoding = ObsEncoding.GRAPH,
) -> np.ndarray:
    """All agents' observations concatenated along the feature axis."""
    parts = []
    for agent in range(state.config.num_players):
        obs = observe(state, agent, memory, encoding)
        parts.append(obs.nodes if isinstance(obs, GraphObservation) else obs.tensor)
    return np.concatenate(parts, axis=-1)
