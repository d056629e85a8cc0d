"""Scripted baseline policies and the policy interface.

Every policy returns, for each decision, a full probability vector over the
canonical action space — zero mass on illegal actions, legal mass summing to
one — together with the action it actually takes. Scripted policies are
deterministic given the state; only RandomPolicy consumes the rng.

Information discipline: scripted policies read ground truth exclusively
through their own seat's peek log plus public facts (positions, locks,
inspection marks, revealed hint sets). They never touch hidden card colours
or face-down hint sets, which keeps them honest opponents for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .actions import ActionLayout
from .config import GameConfig, HintTargetIndexing
from .errors import ConfigError, ContractError
from .observation import Observation
from .state import GameState, Substep


@dataclass
class PolicyDecision:
    action: int
    probabilities: np.ndarray | None = None


@dataclass
class PolicyView:
    """Everything a policy may look at for one decision.

    ``state`` is the environment-frame state, provided to scripted policies.
    Observation-based policies get ``observation`` and ``mask`` in their own
    (possibly symmetrized) frame and must not receive the state.
    """

    seat: int
    episode: int
    step: int
    mask: np.ndarray
    layout: ActionLayout
    state: GameState | None = None
    observation: Observation | None = None


class Policy:
    name = "policy"
    observation_based = False

    def reset(self, episode: int, seat: int) -> None:
        """Called once before each episode."""

    def act(self, view: PolicyView, rng: np.random.Generator) -> PolicyDecision:
        raise NotImplementedError

    def close(self) -> None:
        """Release external resources, if any."""


def one_hot(index: int, size: int) -> np.ndarray:
    probs = np.zeros(size, dtype=np.float64)
    probs[index] = 1.0
    return probs


class RandomPolicy(Policy):
    """Uniform over the legal set."""

    name = "random"

    def act(self, view: PolicyView, rng: np.random.Generator) -> PolicyDecision:
        legal = np.nonzero(view.mask)[0]
        if legal.size == 0:
            raise ContractError("mask admits no action")
        probs = np.zeros(view.mask.shape[0], dtype=np.float64)
        probs[legal] = 1.0 / legal.size
        action = int(rng.choice(legal))
        return PolicyDecision(action=action, probabilities=probs)


def certain_colours(state: GameState, seat: int) -> dict[int, int]:
    """Colours this seat can prove: own peeks plus counting elimination.

    When every colour but one is exhausted among the peeked cards, all
    remaining cards must carry the leftover colour.
    """
    known = dict(state.peeks[seat])
    config = state.config
    per_colour = config.num_cards // config.num_colours
    remaining = [per_colour] * config.num_colours
    for colour in known.values():
        remaining[colour] -= 1
    leftovers = {c for c, n in enumerate(remaining) if n > 0}
    if len(leftovers) == 1:
        colour = leftovers.pop()
        for card in range(config.num_cards):
            known.setdefault(card, colour)
    return known


def _largest_component(cells: list[tuple[int, int]]) -> int:
    if not cells:
        return 0
    pool = set(cells)
    best = 0
    while pool:
        frontier = [pool.pop()]
        size = 0
        while frontier:
            r, c = frontier.pop()
            size += 1
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if (rr, cc) in pool:
                    pool.remove((rr, cc))
                    frontier.append((rr, cc))
        best = max(best, size)
    return best


class GreedyPolicy(Policy):
    """Deterministic heuristic ladder.

    End the game when own knowledge proves every colour is clustered; peek
    cards never peeked by this seat (lowest index first); move a provably
    known card when that grows its colour's largest known component, else
    make the connectivity-preserving move that damages known clusters least;
    place a revealed hint on a card known to match, else reveal the lowest
    face-down hint, else place on a card of unknown colour. All ties break
    toward the lowest canonical action index.
    """

    name = "greedy"

    def act(self, view: PolicyView, rng: np.random.Generator) -> PolicyDecision:
        state = view.state
        if state is None:
            raise ContractError("scripted policy needs the environment state")
        action = self._choose(state, view.seat, view.mask, view.layout)
        return PolicyDecision(action=action, probabilities=one_hot(action, view.layout.size))

    # -- decision ladder -------------------------------------------------

    def _choose(self, state: GameState, seat: int, mask: np.ndarray, layout: ActionLayout) -> int:
        legal = np.nonzero(mask)[0]
        if legal.size == 0:
            raise ContractError("mask admits no action")
        if legal.size == 1:
            return int(legal[0])
        if state.substep in (Substep.PEEK1, Substep.PEEK2):
            if state.substep is Substep.PEEK1 and mask[layout.end_game_index] and self._proved_win(
                state, seat
            ):
                return layout.end_game_index
            return self._choose_peek(state, seat, mask, layout)
        if state.substep is Substep.MOVE:
            return self._choose_move(state, seat, mask, layout)
        return self._choose_hint(state, seat, mask, layout)

    def _proved_win(self, state: GameState, seat: int) -> bool:
        known = certain_colours(state, seat)
        if len(known) < state.num_cards:
            return False
        colours = np.array([known[i] for i in range(state.num_cards)], dtype=np.int8)
        flags = kernels.colour_connected_flags(
            state.positions, colours, state.config.num_colours, state.grid_side
        )
        return bool(flags.all())

    def _legal_observe_cards(self, mask: np.ndarray, layout: ActionLayout) -> list[int]:
        base = layout.observe_base
        return [c for c in range(layout.num_cards) if mask[base + c]]

    def _choose_peek(self, state: GameState, seat: int, mask: np.ndarray, layout: ActionLayout) -> int:
        cards = self._legal_observe_cards(mask, layout)
        if not cards:  # locked board corner case: nothing observable
            return int(np.nonzero(mask)[0][0])
        fresh = [c for c in cards if c not in state.peeks[seat]]
        return layout.observe_base + (fresh[0] if fresh else cards[0])

    def _known_cells(self, state: GameState, known: dict[int, int], colour: int,
                     skip: int | None = None) -> list[tuple[int, int]]:
        return [
            (int(state.positions[card, 0]), int(state.positions[card, 1]))
            for card, c in known.items()
            if c == colour and card != skip
        ]

    def _choose_move(self, state: GameState, seat: int, mask: np.ndarray, layout: ActionLayout) -> int:
        known = certain_colours(state, seat)
        config = state.config
        g = config.grid_side
        current_best = {
            colour: _largest_component(self._known_cells(state, known, colour))
            for colour in range(config.num_colours)
        }

        best_gain: tuple[int, int] | None = None  # (-new_size, action index)
        best_damage: tuple[int, int] | None = None  # (damage, action index)
        base = layout.move_base
        for idx in np.nonzero(mask[base : base + layout.num_cards * layout.num_cells])[0]:
            action_index = base + int(idx)
            card = int(idx) // layout.num_cells
            cell = (int(idx) % layout.num_cells // g, int(idx) % layout.num_cells % g)
            if card in known:
                colour = known[card]
                others = self._known_cells(state, known, colour, skip=card)
                new_size = _largest_component(others + [cell])
                if new_size > current_best[colour]:
                    key = (-new_size, action_index)
                    if best_gain is None or key < best_gain:
                        best_gain = key
                damage = 0
                for col in range(config.num_colours):
                    cells = self._known_cells(state, known, col, skip=card)
                    if col == colour:
                        cells.append(cell)
                    damage += max(0, current_best[col] - _largest_component(cells))
            else:
                damage = 0
            key = (damage, action_index)
            if best_damage is None or key < best_damage:
                best_damage = key

        if best_gain is not None:
            return best_gain[1]
        if best_damage is not None:
            return best_damage[1]
        return int(np.nonzero(mask)[0][0])  # no legal move: mask is noop-only

    def _place_target_card(self, state: GameState, layout: ActionLayout, target: int) -> int | None:
        if state.config.hint_target_indexing is HintTargetIndexing.CARD:
            return target
        return state.card_at(target // layout.grid_side, target % layout.grid_side)

    def _choose_hint(self, state: GameState, seat: int, mask: np.ndarray, layout: ActionLayout) -> int:
        known = certain_colours(state, seat)
        base = layout.place_base
        span = layout.num_place_targets
        matching: int | None = None
        unknown_target: int | None = None
        any_place: int | None = None
        for idx in np.nonzero(mask[base : base + layout.num_hints * span])[0]:
            action_index = base + int(idx)
            hint = state.hints[int(idx) // span]
            card = self._place_target_card(state, layout, int(idx) % span)
            if card is None:
                continue
            if any_place is None:
                any_place = action_index
            if card in known and known[card] in hint.colours:
                if matching is None:
                    matching = action_index
            elif card not in known and unknown_target is None:
                unknown_target = action_index
        if matching is not None:
            return matching
        reveal = np.nonzero(mask[layout.reveal_base : layout.reveal_base + layout.num_hints])[0]
        if reveal.size:
            return layout.reveal_base + int(reveal[0])
        if unknown_target is not None:
            return unknown_target
        if any_place is not None:
            return any_place
        return int(np.nonzero(mask)[0][0])


class MemoryOraclePolicy(GreedyPolicy):
    """Greedy with peeks forced onto never-self-peeked cards while any remain.

    The growing per-seat knowledge set (exposed via knowledge_set) gives
    probing studies a ground-truth curve: knowledge size is monotone in time
    and the labels match the engine's recorded peek logs exactly.
    """

    name = "oracle"

    @staticmethod
    def knowledge_set(state: GameState, seat: int) -> dict[int, int]:
        return dict(state.peeks[seat])

    def _choose(self, state: GameState, seat: int, mask: np.ndarray, layout: ActionLayout) -> int:
        if state.substep in (Substep.PEEK1, Substep.PEEK2):
            cards = self._legal_observe_cards(mask, layout)
            fresh = [c for c in cards if c not in state.peeks[seat]]
            if fresh:
                return layout.observe_base + fresh[0]
        return super()._choose(state, seat, mask, layout)


def make_policy(spec: str, config: GameConfig) -> Policy:
    """Build a policy from a textual spec.

    Accepted forms: ``random``, ``greedy``, ``oracle``, ``exec:<command>``
    (external policy over stdio pipes), ``tcp:<host>:<port>``.
    """
    spec = spec.strip()
    if spec == "random":
        return RandomPolicy()
    if spec == "greedy":
        return GreedyPolicy()
    if spec == "oracle":
        return MemoryOraclePolicy()
    if spec.startswith("exec:"):
        command = spec[len("exec:") :].strip()
        if not command:
            raise ConfigError("exec: policy needs a command")
        from .protocol import ExternalPolicy

        return ExternalPolicy.spawn(command, config)
    if spec.startswith("tcp:"):
        host, sep, port = spec[len("tcp:") :].rpartition(":")
        if not sep or not host or not port.isdigit():
            raise ConfigError(f"tcp policy spec needs host:port, got {spec!r}")
        from .protocol import ExternalPolicy

        return ExternalPolicy.connect(host, int(port), config)
    raise ConfigError(f"unknown policy spec {spec!r}")
