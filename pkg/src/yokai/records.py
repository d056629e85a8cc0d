"""Episode records: a self-contained, replayable trace of one game.

Schema ``yle-episode/1``, one JSON object per episode (JSONL files hold one
per line). A record carries everything needed to re-simulate the episode
bit-for-bit — config, environment seed, per-agent symmetry draws, shaping
weight — plus per-step ground truth so downstream analysis never has to
re-derive it: the acting agent, substep, canonical action index (environment
frame), emitted events, shared reward, card colours, team inspection masks
and each agent's peek-knowledge labels at the moment the agent acted
(before the action resolved).

``replay`` re-simulates from the seed and checks every recorded field,
raising ReplayError on the first divergence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .actions import cached_layout
from .config import GameConfig
from .errors import ReplayError, RuleViolation
from .observation import MemoryMode, visible_colours
from .reward import step_reward, terminal_reward
from .rules import apply_action, count_complete_colour_clusters, new_game
from .state import GameState
from .symmetry import Symmetry, SymmetryMode

SCHEMA = "yle-episode/1"


def _knowledge_labels(state: GameState) -> list[list[int]]:
    """Per agent, per card: the colour this agent has peeked, else -1."""
    return [
        [int(c) for c in visible_colours(state, agent, MemoryMode.PERFECT)]
        for agent in range(state.config.num_players)
    ]


@dataclass
class StepRecord:
    agent: int
    substep: int
    action: int  # canonical index, environment frame
    events: list[dict]
    reward: float
    colours: list[int]
    team_peeked: list[int]
    knowledge: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "substep": self.substep,
            "action": self.action,
            "events": self.events,
            "reward": self.reward,
            "colours": self.colours,
            "team_peeked": self.team_peeked,
            "knowledge": self.knowledge,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StepRecord":
        return cls(
            agent=int(data["agent"]),
            substep=int(data["substep"]),
            action=int(data["action"]),
            events=list(data["events"]),
            reward=float(data["reward"]),
            colours=[int(c) for c in data["colours"]],
            team_peeked=[int(b) for b in data["team_peeked"]],
            knowledge=[[int(c) for c in row] for row in data["knowledge"]],
        )


@dataclass
class EpisodeRecord:
    config: dict
    config_digest: str
    env_seed: int
    shaping_weight: float
    symmetry_mode: str
    symmetries: list[dict]
    memory: str
    encoding: str
    policies: list[str]
    steps: list[StepRecord]
    terminal: dict | None
    aborted: bool = False
    abort_reason: str | None = None
    schema: str = SCHEMA

    @property
    def length(self) -> int:
        return len(self.steps)

    def game_config(self) -> GameConfig:
        return GameConfig.from_dict(self.config)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "config": self.config,
            "config_digest": self.config_digest,
            "env_seed": self.env_seed,
            "shaping_weight": self.shaping_weight,
            "symmetry_mode": self.symmetry_mode,
            "symmetries": self.symmetries,
            "memory": self.memory,
            "encoding": self.encoding,
            "policies": self.policies,
            "steps": [s.to_dict() for s in self.steps],
            "terminal": self.terminal,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EpisodeRecord":
        schema = data.get("schema", "")
        if schema != SCHEMA:
            raise ReplayError(f"unsupported record schema {schema!r}")
        return cls(
            config=dict(data["config"]),
            config_digest=str(data["config_digest"]),
            env_seed=int(data["env_seed"]),
            shaping_weight=float(data["shaping_weight"]),
            symmetry_mode=str(data["symmetry_mode"]),
            symmetries=list(data["symmetries"]),
            memory=str(data["memory"]),
            encoding=str(data["encoding"]),
            policies=[str(p) for p in data["policies"]],
            steps=[StepRecord.from_dict(s) for s in data["steps"]],
            terminal=data.get("terminal"),
            aborted=bool(data.get("aborted", False)),
            abort_reason=data.get("abort_reason"),
            schema=schema,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "EpisodeRecord":
        return cls.from_dict(json.loads(line))


class EpisodeRecorder:
    """Builds an EpisodeRecord incrementally while an episode runs.

    Call record_step with the state the actor saw, the joint action actually
    submitted, and the engine's outputs; call finish once the episode ends
    (or aborts).
    """

    def __init__(
        self,
        config: GameConfig,
        env_seed: int,
        *,
        shaping_weight: float = 0.0,
        symmetry_mode: SymmetryMode | str = SymmetryMode.NONE,
        symmetries: list[Symmetry] | None = None,
        memory: MemoryMode | str = MemoryMode.STANDARD,
        encoding: str = "graph",
        policies: list[str] | None = None,
    ) -> None:
        self.config = config
        self.env_seed = env_seed
        self.shaping_weight = shaping_weight
        self.symmetry_mode = SymmetryMode(symmetry_mode).value
        if symmetries is None:
            symmetries = []
        self.symmetries = [s.to_dict() for s in symmetries]
        self.memory = MemoryMode(memory).value
        self.encoding = str(encoding)
        self.policies = list(policies or [])
        self.steps: list[StepRecord] = []

    def record_step(self, pre_state: GameState, joint, events, post_state: GameState) -> float:
        actor = pre_state.current_player
        reward = step_reward(post_state, events, self.shaping_weight)
        self.steps.append(
            StepRecord(
                agent=actor,
                substep=int(pre_state.substep),
                action=int(joint[actor]),
                events=[e.to_dict() for e in events],
                reward=float(reward),
                colours=[int(c) for c in pre_state.colours],
                team_peeked=[int(b) for b in pre_state.team_peeked],
                knowledge=_knowledge_labels(pre_state),
            )
        )
        return float(reward)

    def finish(
        self, final_state: GameState, *, aborted: bool = False, abort_reason: str | None = None
    ) -> EpisodeRecord:
        terminal = None
        if final_state.terminal:
            terminal = {
                "won": final_state.outcome.won,
                "ended_early": final_state.ended_early,
                "score": final_state.outcome.score,
                "complete_clusters": count_complete_colour_clusters(final_state),
                "length": final_state.step_count,
                "terminal_reward": float(terminal_reward(final_state)),
            }
        return EpisodeRecord(
            config=self.config.to_dict(),
            config_digest=self.config.digest(),
            env_seed=self.env_seed,
            shaping_weight=self.shaping_weight,
            symmetry_mode=self.symmetry_mode,
            symmetries=self.symmetries,
            memory=self.memory,
            encoding=self.encoding,
            policies=self.policies,
            steps=list(self.steps),
            terminal=terminal,
            aborted=aborted,
            abort_reason=abort_reason,
        )


def write_records(records: Iterable[EpisodeRecord], path: str | Path) -> int:
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")
            count += 1
    return count


def iter_records(path: str | Path) -> Iterator[EpisodeRecord]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield EpisodeRecord.from_json(line)


def read_records(path: str | Path) -> list[EpisodeRecord]:
    return list(iter_records(path))


def _check(condition: bool, step: int, message: str) -> None:
    if not condition:
        raise ReplayError(f"step {step}: {message}")


def replay(record: EpisodeRecord) -> GameState:
    """Re-simulate the record and verify every stored field. Returns the
    final state; raises ReplayError on the first mismatch."""
    config = record.game_config()
    if config.digest() != record.config_digest:
        raise ReplayError("config digest does not match stored config")
    state = new_game(config, record.env_seed)
    layout = cached_layout(config)
    for t, step in enumerate(record.steps):
        _check(not state.terminal, t, "recorded step after episode end")
        _check(state.current_player == step.agent, t, "acting agent diverged")
        _check(int(state.substep) == step.substep, t, "substep diverged")
        _check([int(c) for c in state.colours] == step.colours, t, "card colours diverged")
        _check(
            [int(b) for b in state.team_peeked] == step.team_peeked, t, "team inspections diverged"
        )
        _check(_knowledge_labels(state) == step.knowledge, t, "peek knowledge diverged")
        joint = [layout.noop_index] * config.num_players
        joint[step.agent] = step.action
        try:
            state, events = apply_action(state, joint)
        except RuleViolation as exc:
            raise ReplayError(f"step {t}: recorded action rejected: {exc}") from exc
        _check([e.to_dict() for e in events] == step.events, t, "events diverged")
        reward = step_reward(state, events, record.shaping_weight)
        _check(float(reward) == step.reward, t, "reward diverged")

    final = record.terminal
    if record.aborted:
        _check(final is None, record.length, "aborted episode carries terminal block")
        return state
    _check(state.terminal, record.length, "record ends before the episode does")
    _check(final is not None, record.length, "missing terminal block")
    assert final is not None
    _check(bool(state.outcome.won) == bool(final["won"]), record.length, "win flag diverged")
    _check(state.ended_early == bool(final["ended_early"]), record.length, "early flag diverged")
    score = state.outcome.score
    _check(score == final["score"], record.length, "score diverged")
    _check(
        count_complete_colour_clusters(state) == final["complete_clusters"],
        record.length,
        "cluster count diverged",
    )
    _check(state.step_count == final["length"], record.length, "length diverged")
    _check(
        float(terminal_reward(state)) == final["terminal_reward"],
        record.length,
        "terminal reward diverged",
    )
    return state


def verify_replay(record: EpisodeRecord) -> bool:
    """True iff the record replays exactly; raises ReplayError otherwise."""
    replay(record)
    return True
