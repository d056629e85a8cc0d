"""Rules engine: game setup, legality, action application, win and score.

A turn is four substeps taken by one player: two private peeks, one card
move, then one hint action (reveal a face-down hint or place a revealed one,
locking the covered card). Instead of peeking at the first substep the
player may end the game for everyone; the team then wins only if every
colour already forms a single side-connected cluster. The game also ends
when the last hint is placed.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

import numpy as np

from . import _kernels as kernels
from .actions import Action, ActionKind, cached_layout, legal_mask
from .config import GameConfig, HintTargetIndexing
from .errors import ContractError, IllegalTarget, OutOfTurn, RuleViolation
from .state import GameState, HintCard, HintStatus, Outcome, Substep


class EventKind(str, enum.Enum):
    PEEKED_NEW_TEAM_CARD = "peeked_new_team_card"
    CLUSTER_MAX_INCREASED = "cluster_max_increased"
    HINT_PLACED_CORRECT = "hint_placed_correct"
    HINT_PLACED_WRONG = "hint_placed_wrong"
    GAME_ENDED = "game_ended"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    agent: int | None = None
    card: int | None = None
    hint: int | None = None
    early: bool | None = None
    won: bool | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value}
        for key in ("agent", "card", "hint", "early", "won"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Event":
        return cls(
            kind=EventKind(data["kind"]),
            agent=data.get("agent"),
            card=data.get("card"),
            hint=data.get("hint"),
            early=data.get("early"),
            won=data.get("won"),
        )


def new_game(config: GameConfig, seed: int | None = None) -> GameState:
    """Deal a fresh game. Identical (config, seed) gives identical states.

    Cards start in a centred block (rows/cols 3..5 on the 9-grid, 3..6 on
    the 10-grid) with a seeded shuffle of the colour multiset; the hint deck
    is a seeded uniform draw of distinct colour subsets per size category.
    """
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng(seed)
    k = config.variant.block_side
    g = config.grid_side
    start = (g - k) // 2
    positions = np.array(
        [[start + i // k, start + i % k] for i in range(config.num_cards)], dtype=np.int32
    )
    per_colour = config.num_cards // config.num_colours
    colours = rng.permutation(
        np.repeat(np.arange(config.num_colours), per_colour)
    ).astype(np.int8)

    hints: list[HintCard] = []
    for size, count in zip((1, 2, 3), config.hint_deck_spec.counts()):
        if count == 0:
            continue
        subsets = list(itertools.combinations(range(config.num_colours), size))
        chosen = rng.choice(len(subsets), size=count, replace=False)
        for idx in chosen:
            hints.append(HintCard(id=len(hints), colours=subsets[int(idx)]))

    state = GameState(
        config=config,
        positions=positions,
        colours=colours,
        adjacency=kernels.adjacency_matrix(positions, g),
        locked=np.zeros(config.num_cards, dtype=np.uint8),
        hints=hints,
        peeks=[{} for _ in range(config.num_players)],
        team_peeked=np.zeros(config.num_cards, dtype=np.uint8),
        rng_state=rng.bit_generator.state,
    )
    state.max_complete_colours_seen = count_complete_colour_clusters(state)
    return state


def check_win(state: GameState) -> bool:
    """True iff every colour's cards form one side-connected cluster."""
    flags = kernels.colour_connected_flags(
        state.positions, state.colours, state.config.num_colours, state.grid_side
    )
    return bool(flags.all())


def count_complete_colour_clusters(state: GameState) -> int:
    """Number of colours forming a single cluster (the NC metric)."""
    return kernels.count_complete_colour_clusters(
        state.positions, state.colours, state.config.num_colours, state.grid_side
    )


def score_terms(state: GameState) -> dict[str, int]:
    """Hint bookkeeping behind the score: counts per status and correctness."""
    face_down, revealed, _ = state.hint_status_counts()
    correct = 0
    wrong = 0
    for h in state.hints:
        if h.status is HintStatus.PLACED:
            if int(state.colours[h.placed_on]) in h.colours:
                correct += 1
            else:
                wrong += 1
    return {
        "face_down": face_down,
        "revealed_unplaced": revealed,
        "correct": correct,
        "wrong": wrong,
    }


def _score_value(state: GameState) -> int:
    t = score_terms(state)
    return 5 * t["face_down"] + 2 * t["revealed_unplaced"] + t["correct"] - t["wrong"]


def compute_score(state: GameState) -> int:
    """Final score of a won game: 5 per face-down hint, 2 per revealed but
    unplaced hint, +1 per correctly placed, -1 per wrongly placed."""
    if not state.terminal or state.outcome is None or not state.outcome.won:
        raise ContractError("score is defined only for terminal, won games")
    return _score_value(state)


def legal_move_targets(state: GameState, card: int) -> set[tuple[int, int]]:
    """Cells where ``card`` may land without breaking group connectivity.

    Excludes occupied cells and the card's own current cell. An empty set
    means the card is immovable this turn.
    """
    if state.terminal:
        raise ContractError("no moves in a terminal state")
    if not 0 <= card < state.num_cards:
        raise ContractError(f"card index {card} out of range")
    if state.locked[card]:
        raise ContractError(f"card {card} is locked")
    g = state.grid_side
    flat = kernels.legal_targets(state.positions, g, card)
    cells = np.nonzero(flat)[0]
    return {(int(c) // g, int(c) % g) for c in cells}


def move_available(state: GameState) -> bool:
    """Does any unlocked card have at least one legal landing cell?"""
    g = state.grid_side
    for card in range(state.num_cards):
        if state.locked[card]:
            continue
        if kernels.legal_targets(state.positions, g, card).any():
            return True
    return False


def iter_legal_actions(state: GameState) -> Iterator[Action]:
    """Legal decoded actions for the current player, in a deterministic order."""
    if state.terminal:
        yield Action(ActionKind.NOOP)
        return
    sub = state.substep
    if sub is Substep.PEEK1:
        yield Action(ActionKind.END_GAME)
    if sub in (Substep.PEEK1, Substep.PEEK2):
        first = state.peeked_this_turn[0] if state.peeked_this_turn else None
        for card in range(state.num_cards):
            if state.locked[card] or card == first:
                continue
            yield Action(ActionKind.OBSERVE_CARD, card=card)
    elif sub is Substep.MOVE:
        g = state.grid_side
        any_move = False
        for card in range(state.num_cards):
            if state.locked[card]:
                continue
            flat = kernels.legal_targets(state.positions, g, card)
            for cell in np.nonzero(flat)[0]:
                any_move = True
                yield Action(ActionKind.MOVE_CARD, card=card, cell=(int(cell) // g, int(cell) % g))
        if not any_move:
            yield Action(ActionKind.NOOP)
    elif sub is Substep.HINT:
        by_cell = state.config.hint_target_indexing is HintTargetIndexing.CELL
        for h in state.hints:
            if h.status is HintStatus.FACE_DOWN:
                yield Action(ActionKind.REVEAL_HINT, hint=h.id)
        for h in state.hints:
            if h.status is not HintStatus.REVEALED:
                continue
            for card in range(state.num_cards):
                if state.locked[card]:
                    continue
                if by_cell:
                    r, c = state.positions[card]
                    yield Action(ActionKind.PLACE_HINT, hint=h.id, cell=(int(r), int(c)))
                else:
                    yield Action(ActionKind.PLACE_HINT, hint=h.id, card=card)


def apply_action(
    state: GameState, joint_action: Sequence[Action | int]
) -> tuple[GameState, list[Event]]:
    """Apply one joint action (one entry per agent) and return the new state
    plus the events it produced.

    Exactly the current player may act; everyone else must submit no-op. In
    a terminal state the all-no-op joint action is accepted and changes
    nothing. Rejections raise ``RuleViolation`` subclasses naming the
    violated precondition; the input state is never mutated.
    """
    config = state.config
    if len(joint_action) != config.num_players:
        raise RuleViolation(
            f"joint action needs {config.num_players} entries, got {len(joint_action)}"
        )
    layout = cached_layout(config)
    decoded = [a if isinstance(a, Action) else layout.decode(int(a)) for a in joint_action]

    for agent, act in enumerate(decoded):
        if agent == state.current_player and not state.terminal:
            continue
        if act.kind is not ActionKind.NOOP:
            if state.terminal:
                raise RuleViolation("the game is over; only no-op is accepted")
            raise OutOfTurn(f"agent {agent} acted out of turn (current: {state.current_player})")

    if state.terminal:
        return state.copy(), []

    actor = state.current_player
    action = decoded[actor]
    new = state.copy()
    events: list[Event] = []

    kind = action.kind
    if kind is ActionKind.END_GAME:
        if new.substep is not Substep.PEEK1:
            raise RuleViolation("ending the game is allowed only instead of the first peek")
        new.ended_early = True
        _finish(new, events, early=True)
    elif kind is ActionKind.OBSERVE_CARD:
        _apply_peek(new, events, actor, action)
    elif kind is ActionKind.MOVE_CARD:
        _apply_move(new, events, action)
    elif kind is ActionKind.REVEAL_HINT:
        _apply_reveal(new, action)
    elif kind is ActionKind.PLACE_HINT:
        _apply_place(new, events, action)
    elif kind is ActionKind.NOOP:
        if new.substep is not Substep.MOVE or move_available(new):
            raise RuleViolation("no-op is allowed only when no card can move")
        new.substep = Substep.HINT
    else:  # pragma: no cover - enum is closed
        raise RuleViolation(f"unknown action kind {kind}")

    new.step_count += 1
    return new, events


def _apply_peek(new: GameState, events: list[Event], actor: int, action: Action) -> None:
    if new.substep not in (Substep.PEEK1, Substep.PEEK2):
        raise RuleViolation("peeking is allowed only at the two peek substeps")
    card = action.card
    if card is None or not 0 <= card < new.num_cards:
        raise IllegalTarget(f"card index {card} out of range")
    if new.locked[card]:
        raise IllegalTarget(f"card {card} is locked and cannot be observed")
    if new.substep is Substep.PEEK2 and card == new.peeked_this_turn[0]:
        raise IllegalTarget("the second peek must target a different card")
    if not new.team_peeked[card]:
        events.append(Event(EventKind.PEEKED_NEW_TEAM_CARD, agent=actor, card=card))
    new.peeks[actor][card] = int(new.colours[card])
    new.team_peeked[card] |= np.uint8(1 << actor)
    new.peeked_this_turn.append(card)
    new.substep = Substep.PEEK2 if new.substep is Substep.PEEK1 else Substep.MOVE


def _apply_move(new: GameState, events: list[Event], action: Action) -> None:
    if new.substep is not Substep.MOVE:
        raise RuleViolation("moving is allowed only at the move substep")
    card, cell = action.card, action.cell
    if card is None or not 0 <= card < new.num_cards:
        raise IllegalTarget(f"card index {card} out of range")
    if new.locked[card]:
        raise IllegalTarget(f"card {card} is locked and cannot move")
    g = new.grid_side
    if cell is None or not (0 <= cell[0] < g and 0 <= cell[1] < g):
        raise IllegalTarget(f"cell {cell} is off the grid")
    flat = kernels.legal_targets(new.positions, g, card)
    if not flat[cell[0] * g + cell[1]]:
        raise IllegalTarget(f"moving card {card} to {cell} would break connectivity")
    new.positions[card, 0] = cell[0]
    new.positions[card, 1] = cell[1]
    touch = (np.abs(new.positions - new.positions[card]).sum(axis=1) == 1).astype(np.uint8)
    new.adjacency[card, :] = touch
    new.adjacency[:, card] = touch
    clusters = count_complete_colour_clusters(new)
    if clusters > new.max_complete_colours_seen:
        new.max_complete_colours_seen = clusters
        events.append(Event(EventKind.CLUSTER_MAX_INCREASED, card=card))
    new.substep = Substep.HINT


def _apply_reveal(new: GameState, action: Action) -> None:
    if new.substep is not Substep.HINT:
        raise RuleViolation("hint actions are allowed only at the hint substep")
    hint = action.hint
    if hint is None or not 0 <= hint < len(new.hints):
        raise IllegalTarget(f"hint index {hint} out of range")
    if new.hints[hint].status is not HintStatus.FACE_DOWN:
        raise RuleViolation(f"hint {hint} is already revealed")
    new.hints[hint].status = HintStatus.REVEALED
    _advance_turn(new)


def _apply_place(new: GameState, events: list[Event], action: Action) -> None:
    if new.substep is not Substep.HINT:
        raise RuleViolation("hint actions are allowed only at the hint substep")
    hint = action.hint
    if hint is None or not 0 <= hint < len(new.hints):
        raise IllegalTarget(f"hint index {hint} out of range")
    h = new.hints[hint]
    if h.status is not HintStatus.REVEALED:
        raise RuleViolation(f"hint {hint} must be revealed before placement")
    if new.config.hint_target_indexing is HintTargetIndexing.CELL:
        cell = action.cell
        g = new.grid_side
        if cell is None or not (0 <= cell[0] < g and 0 <= cell[1] < g):
            raise IllegalTarget(f"cell {cell} is off the grid")
        card = new.card_at(cell[0], cell[1])
        if card is None:
            raise IllegalTarget(f"no card at {cell}")
    else:
        card = action.card
        if card is None or not 0 <= card < new.num_cards:
            raise IllegalTarget(f"card index {card} out of range")
    if new.locked[card]:
        raise IllegalTarget(f"card {card} already carries a hint")
    h.status = HintStatus.PLACED
    h.placed_on = card
    new.locked[card] = 1
    correct = int(new.colours[card]) in h.colours
    events.append(
        Event(
            EventKind.HINT_PLACED_CORRECT if correct else EventKind.HINT_PLACED_WRONG,
            hint=hint,
            card=card,
        )
    )
    if all(x.status is HintStatus.PLACED for x in new.hints):
        _finish(new, events, early=False)
    else:
        _advance_turn(new)


def _advance_turn(new: GameState) -> None:
    new.current_player = (new.current_player + 1) % new.config.num_players
    new.substep = Substep.PEEK1
    new.peeked_this_turn = []


def _finish(new: GameState, events: list[Event], *, early: bool) -> None:
    new.terminal = True
    won = check_win(new)
    new.outcome = Outcome(won=won, score=_score_value(new) if won else None)
    events.append(Event(EventKind.GAME_ENDED, early=early, won=won))


def build_state(
    config: GameConfig,
    positions: Sequence[Sequence[int]],
    colours: Sequence[int],
    hints: Sequence[HintCard],
    *,
    current_player: int = 0,
    substep: Substep = Substep.PEEK1,
    peeked_this_turn: Sequence[int] = (),
    peeks: Sequence[dict[int, int]] | None = None,
    terminal: bool = False,
    ended_early: bool = False,
    step_count: int = 0,
) -> GameState:
    """Construct a state from an explicit layout, validating the invariants
    a reachable state would satisfy. Used by tests, fixtures and scenarios.

    ``locked`` is derived from placed hints; ``team_peeked`` from ``peeks``.
    Peek entries must report the true colour of the peeked card.
    """
    g = config.grid_side
    n = config.num_cards
    pos = np.asarray(positions, dtype=np.int32)
    col = np.asarray(colours, dtype=np.int8)
    if pos.shape != (n, 2):
        raise ContractError(f"positions must be ({n}, 2), got {pos.shape}")
    if col.shape != (n,):
        raise ContractError(f"colours must be ({n},), got {col.shape}")
    if pos.min() < 0 or pos.max() >= g:
        raise ContractError("positions must lie on the grid")
    if len({(int(r), int(c)) for r, c in pos}) != n:
        raise ContractError("two cards share a cell")
    expected = np.repeat(np.arange(config.num_colours), n // config.num_colours)
    if sorted(col.tolist()) != expected.tolist():
        raise ContractError("colour multiset must hold equal counts of each colour")
    if not kernels.is_connected(pos, g):
        raise ContractError("cards must form one connected group")

    hint_list = [h.copy() for h in hints]
    if len(hint_list) != config.num_hints:
        raise ContractError(f"expected {config.num_hints} hints, got {len(hint_list)}")
    sizes: dict[int, set[tuple[int, ...]]] = {}
    locked = np.zeros(n, dtype=np.uint8)
    for i, h in enumerate(hint_list):
        if h.id != i:
            raise ContractError("hint ids must be 0..|H|-1 in order")
        if not h.colours or any(not 0 <= c < config.num_colours for c in h.colours):
            raise ContractError(f"hint {i} has invalid colour set {h.colours}")
        if tuple(sorted(h.colours)) != h.colours:
            raise ContractError(f"hint {i} colour set must be sorted")
        if h.colours in sizes.setdefault(len(h.colours), set()):
            raise ContractError(f"duplicate hint colour set {h.colours}")
        sizes[len(h.colours)].add(h.colours)
        if (h.placed_on is not None) != (h.status is HintStatus.PLACED):
            raise ContractError(f"hint {i}: placed_on set iff status is placed")
        if h.placed_on is not None:
            if not 0 <= h.placed_on < n or locked[h.placed_on]:
                raise ContractError(f"hint {i} placement target invalid")
            locked[h.placed_on] = 1

    if not 0 <= current_player < config.num_players:
        raise ContractError("current_player out of range")
    peek_list = [dict(p) for p in peeks] if peeks is not None else [
        {} for _ in range(config.num_players)
    ]
    if len(peek_list) != config.num_players:
        raise ContractError("peeks needs one entry per agent")
    team = np.zeros(n, dtype=np.uint8)
    for agent, entries in enumerate(peek_list):
        for card, colour in entries.items():
            if not 0 <= card < n:
                raise ContractError(f"peek of card {card} out of range")
            if int(col[card]) != colour:
                raise ContractError(f"agent {agent} peek of card {card} records a wrong colour")
            team[card] |= np.uint8(1 << agent)

    expected_len = {Substep.PEEK1: 0, Substep.PEEK2: 1, Substep.MOVE: 2, Substep.HINT: 2}
    peeked = list(peeked_this_turn)
    if not terminal and len(peeked) != expected_len[substep]:
        raise ContractError(f"peeked_this_turn must have {expected_len[substep]} entries at {substep.name}")
    if len(set(peeked)) != len(peeked):
        raise ContractError("peeked_this_turn entries must be distinct")
    for card in peeked:
        if card not in peek_list[current_player]:
            raise ContractError("peeked_this_turn cards must appear in the current player's peeks")

    state = GameState(
        config=config,
        positions=pos,
        colours=col,
        adjacency=kernels.adjacency_matrix(pos, g),
        locked=locked,
        hints=hint_list,
        current_player=current_player,
        substep=substep,
        peeked_this_turn=peeked,
        terminal=terminal,
        ended_early=ended_early,
        peeks=peek_list,
        team_peeked=team,
        step_count=step_count,
    )
    state.max_complete_colours_seen = count_complete_colour_clusters(state)
    if terminal:
        won = check_win(state)
        state.outcome = Outcome(won=won, score=_score_value(state) if won else None)
    return state


def random_playout_states(
    config: GameConfig, seed: int, max_states: int
) -> Iterator[GameState]:
    """Stream reachable states by running uniform-random legal playouts.

    Test helper shared by several suites; episodes are reseeded until the
    requested number of states has been produced.
    """
    rng = np.random.default_rng(seed)
    produced = 0
    episode = 0
    layout = cached_layout(config)
    while produced < max_states:
        state = new_game(config, seed=int(rng.integers(0, 2**63)))
        episode += 1
        while not state.terminal and produced < max_states:
            yield state
            produced += 1
            mask = legal_mask(state, state.current_player)
            choices = np.nonzero(mask)[0]
            pick = int(choices[rng.integers(0, len(choices))])
            joint: list[Action | int] = [layout.noop_index] * config.num_players
            joint[state.current_player] = pick
            state, _ = apply_action(state, joint)
