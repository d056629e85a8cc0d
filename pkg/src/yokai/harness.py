"""Evaluation harness: seeded episode running, matchup aggregation,
cross-play matrices, behavioural diagnostics and probing-dataset export.

Evaluation metrics are always computed at shaping weight zero from terminal
rewards, regardless of the shaping used while stepping. Episodes aborted by
external-policy failures are excluded from the averages and reported in a
separate count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .actions import cached_layout, legal_mask
from .agents import Policy, PolicyView, make_policy
from .config import GameConfig
from .errors import ContractError, ProtocolError
from .observation import MemoryMode, ObsEncoding, observe
from .records import EpisodeRecord, EpisodeRecorder
from .rules import apply_action, new_game
from .symmetry import (
    SymmetryMode,
    sample_symmetries,
    transform_action_to_env,
    transform_mask,
    transform_observation,
)

PROBING_SCHEMA = "yle-probing/1"


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(entropy=tuple(parts)).generate_state(1, np.uint64)[0])


@dataclass
class Metrics:
    episodes: int
    aborted: int
    mean_return: float
    std_return: float
    success_rate: float
    mean_clusters: float
    solved_early_exactly: float
    mean_length: float

    @classmethod
    def from_records(cls, records: Sequence[EpisodeRecord]) -> "Metrics":
        finished = [r for r in records if not r.aborted]
        aborted = len(records) - len(finished)
        if not finished:
            return cls(0, aborted, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        returns = np.array([r.terminal["terminal_reward"] for r in finished], dtype=np.float64)
        wins = np.array([1.0 if r.terminal["won"] else 0.0 for r in finished])
        early_wins = np.array(
            [1.0 if (r.terminal["won"] and r.terminal["ended_early"]) else 0.0 for r in finished]
        )
        clusters = np.array([r.terminal["complete_clusters"] for r in finished], dtype=np.float64)
        lengths = np.array([r.terminal["length"] for r in finished], dtype=np.float64)
        return cls(
            episodes=len(finished),
            aborted=aborted,
            mean_return=float(returns.mean()),
            std_return=float(returns.std()),
            success_rate=float(wins.mean()),
            mean_clusters=float(clusters.mean()),
            solved_early_exactly=float(early_wins.mean()),
            mean_length=float(lengths.mean()),
        )

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "aborted": self.aborted,
            "mean_return": self.mean_return,
            "std_return": self.std_return,
            "success_rate": self.success_rate,
            "mean_clusters": self.mean_clusters,
            "solved_early_exactly": self.solved_early_exactly,
            "mean_length": self.mean_length,
        }


def run_episode(
    policies: Sequence[Policy],
    config: GameConfig,
    *,
    env_seed: int,
    episode_index: int = 0,
    policy_seed: int = 0,
    memory: MemoryMode = MemoryMode.STANDARD,
    encoding: ObsEncoding = ObsEncoding.GRAPH,
    shaping_weight: float = 0.0,
    symmetry_mode: SymmetryMode = SymmetryMode.NONE,
    symmetry_seed: int | None = None,
) -> EpisodeRecord:
    """Play one full episode and return its record.

    Scripted policies act on the environment state directly. Observation
    based policies receive symmetrized observations and masks and their
    actions are mapped back through the inverse transform before execution.
    """
    if len(policies) != config.num_players:
        raise ContractError(f"need {config.num_players} policies, got {len(policies)}")
    layout = cached_layout(config)
    if symmetry_seed is None:
        symmetry_seed = _derive_seed(env_seed, 0x5F_0E)
    symmetries = sample_symmetries(config, symmetry_mode, symmetry_seed)
    recorder = EpisodeRecorder(
        config,
        env_seed,
        shaping_weight=shaping_weight,
        symmetry_mode=symmetry_mode,
        symmetries=symmetries,
        memory=memory,
        encoding=str(ObsEncoding(encoding).value),
        policies=[p.name for p in policies],
    )
    rngs = [
        np.random.default_rng([policy_seed, seat, episode_index])
        for seat in range(config.num_players)
    ]
    for seat, policy in enumerate(policies):
        policy.reset(episode_index, seat)

    state = new_game(config, env_seed)
    while not state.terminal:
        actor = state.current_player
        policy = policies[actor]
        env_mask = legal_mask(state, actor)
        try:
            if policy.observation_based:
                sym = symmetries[actor]
                view = PolicyView(
                    seat=actor,
                    episode=episode_index,
                    step=state.step_count,
                    mask=transform_mask(env_mask, sym, config),
                    layout=layout,
                    observation=transform_observation(
                        observe(state, actor, memory, encoding), sym, config
                    ),
                )
                decision = policy.act(view, rngs[actor])
                if not view.mask[decision.action]:
                    raise ProtocolError(f"policy chose masked action {decision.action}")
                env_index = layout.encode(
                    transform_action_to_env(layout.decode(decision.action), sym, config)
                )
            else:
                view = PolicyView(
                    seat=actor,
                    episode=episode_index,
                    step=state.step_count,
                    mask=env_mask,
                    layout=layout,
                    state=state,
                )
                decision = policy.act(view, rngs[actor])
                env_index = decision.action
        except ProtocolError as exc:
            return recorder.finish(state, aborted=True, abort_reason=str(exc))
        joint = [layout.noop_index] * config.num_players
        joint[actor] = env_index
        nxt, events = apply_action(state, joint)
        recorder.record_step(state, joint, events, nxt)
        state = nxt
    return recorder.finish(state)


@dataclass
class MatchupResult:
    metrics: Metrics
    records: list[EpisodeRecord]

    def to_dict(self) -> dict:
        return {"metrics": self.metrics.to_dict(), "episodes": len(self.records)}


def run_matchup(
    policies: Sequence[Policy],
    config: GameConfig,
    episodes: int,
    *,
    seed: int = 0,
    memory: MemoryMode = MemoryMode.STANDARD,
    encoding: ObsEncoding = ObsEncoding.GRAPH,
    shaping_weight: float = 0.0,
    symmetry_mode: SymmetryMode = SymmetryMode.NONE,
) -> MatchupResult:
    records = []
    for episode in range(episodes):
        records.append(
            run_episode(
                policies,
                config,
                env_seed=_derive_seed(seed, episode),
                episode_index=episode,
                policy_seed=seed,
                memory=memory,
                encoding=encoding,
                shaping_weight=shaping_weight,
                symmetry_mode=symmetry_mode,
                symmetry_seed=_derive_seed(seed, episode, 0x51),
            )
        )
    return MatchupResult(metrics=Metrics.from_records(records), records=records)


PolicyFactory = Callable[[], Policy]


def _as_factory(entry: str | PolicyFactory, config: GameConfig) -> PolicyFactory:
    if callable(entry):
        return entry
    return lambda: make_policy(entry, config)


@dataclass
class CrossPlayResult:
    names: list[str]
    success_matrix: np.ndarray
    return_matrix: np.ndarray
    cells: dict[tuple[str, str], Metrics]
    gap: float

    def to_dict(self) -> dict:
        return {
            "names": self.names,
            "success_matrix": self.success_matrix.tolist(),
            "return_matrix": self.return_matrix.tolist(),
            "gap": self.gap,
            "cells": {f"{a}|{b}": m.to_dict() for (a, b), m in self.cells.items()},
        }


def cross_play(
    pool: dict[str, str | PolicyFactory],
    config: GameConfig,
    episodes: int,
    *,
    seed: int = 0,
    memory: MemoryMode = MemoryMode.STANDARD,
    symmetry_mode: SymmetryMode = SymmetryMode.NONE,
) -> CrossPlayResult:
    """Every ordered pair from the pool, seat 0 from the row entry and the
    remaining seats from the column entry. The diagonal is self-play; the
    gap is mean diagonal success minus mean off-diagonal success."""
    names = list(pool.keys())
    n = len(names)
    sr = np.zeros((n, n), dtype=np.float64)
    ret = np.zeros((n, n), dtype=np.float64)
    cells: dict[tuple[str, str], Metrics] = {}
    for i, row in enumerate(names):
        for j, col in enumerate(names):
            row_factory = _as_factory(pool[row], config)
            col_factory = _as_factory(pool[col], config)
            policies = [row_factory()] + [col_factory() for _ in range(config.num_players - 1)]
            try:
                result = run_matchup(
                    policies,
                    config,
                    episodes,
                    seed=_derive_seed(seed, i, j),
                    memory=memory,
                    symmetry_mode=symmetry_mode,
                )
            finally:
                for p in policies:
                    p.close()
            cells[(row, col)] = result.metrics
            sr[i, j] = result.metrics.success_rate
            ret[i, j] = result.metrics.mean_return
    diag = float(np.mean(np.diag(sr)))
    off = float(sr[~np.eye(n, dtype=bool)].mean()) if n > 1 else 0.0
    gap = diag - off if n > 1 else 0.0
    return CrossPlayResult(names=names, success_matrix=sr, return_matrix=ret, cells=cells, gap=gap)


# -- behavioural diagnostic ---------------------------------------------


def _validate_probabilities(probs: np.ndarray | None, mask: np.ndarray) -> np.ndarray:
    if probs is None:
        raise ContractError("diagnostic evaluation needs action probabilities")
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != mask.shape:
        raise ContractError(f"probability vector shape {probs.shape} != mask {mask.shape}")
    if (probs < 0).any():
        raise ContractError("negative action probability")
    if probs[~mask.astype(bool)].max(initial=0.0) > 1e-9:
        raise ContractError("probability mass on an illegal action")
    total = probs[mask.astype(bool)].sum()
    if abs(total - 1.0) > 1e-6:
        raise ContractError(f"legal probability mass sums to {total}, not 1")
    return probs


def action_ranks(probs: np.ndarray, mask: np.ndarray) -> dict[int, int]:
    """Rank 1 = most probable legal action; ties break to the lower index."""
    legal = np.nonzero(mask)[0]
    order = sorted(legal, key=lambda a: (-probs[a], a))
    return {int(a): r + 1 for r, a in enumerate(order)}


@dataclass
class DiagnosticReport:
    scenarios: int
    mean_rank: dict[str, float]
    mean_legal_actions: float
    per_scenario: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenarios": self.scenarios,
            "mean_rank": self.mean_rank,
            "mean_legal_actions": self.mean_legal_actions,
            "per_scenario": self.per_scenario,
        }


def evaluate_diagnostic(
    policy: Policy,
    scenarios: Iterable,
    *,
    rng_seed: int = 0,
    memory: MemoryMode = MemoryMode.PERFECT,
    encoding: ObsEncoding = ObsEncoding.GRAPH,
) -> DiagnosticReport:
    """Rank the policy's probabilities on each scenario's labelled actions.

    Requires a full probability vector per decision; ranks are computed over
    the legal set only, so any strictly monotone rescaling of the
    probabilities leaves the report unchanged.
    """
    rng = np.random.default_rng(rng_seed)
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    per_scenario = []
    total_legal = 0
    n = 0
    for scenario in scenarios:
        state = scenario.to_state()
        actor = state.current_player
        mask = legal_mask(state, actor)
        layout = cached_layout(state.config)
        if policy.observation_based:
            view = PolicyView(
                seat=actor,
                episode=0,
                step=state.step_count,
                mask=mask,
                layout=layout,
                observation=observe(state, actor, memory, encoding),
            )
        else:
            view = PolicyView(
                seat=actor, episode=0, step=state.step_count, mask=mask, layout=layout, state=state
            )
        policy.reset(n, actor)
        decision = policy.act(view, rng)
        probs = _validate_probabilities(decision.probabilities, mask)
        ranks = action_ranks(probs, mask)
        row = {"id": scenario.id, "legal": int(mask.sum()), "ranks": {}}
        for label, actions in scenario.labels.items():
            got = [ranks[a] for a in actions]
            row["ranks"][label] = got
            sums[label] = sums.get(label, 0.0) + sum(got)
            counts[label] = counts.get(label, 0) + len(got)
        per_scenario.append(row)
        total_legal += int(mask.sum())
        n += 1
    if n == 0:
        raise ContractError("no diagnostic scenarios supplied")
    return DiagnosticReport(
        scenarios=n,
        mean_rank={label: sums[label] / counts[label] for label in sums},
        mean_legal_actions=total_legal / n,
        per_scenario=per_scenario,
    )


# -- probing export -------------------------------------------------------


def probing_rows(records: Iterable[EpisodeRecord]) -> Iterable[dict]:
    """One row per (episode, step, agent): knowledge labels next to ground
    truth, plus the coordinates needed to regenerate the observation."""
    for episode, record in enumerate(records):
        num_players = int(record.config["num_players"])
        for step_index, step in enumerate(record.steps):
            for agent in range(num_players):
                yield {
                    "schema": PROBING_SCHEMA,
                    "episode": episode,
                    "step": step_index,
                    "agent": agent,
                    "actor": step.agent,
                    "substep": step.substep,
                    "colours": step.colours,
                    "knowledge": step.knowledge[agent],
                    "team_peeked": step.team_peeked,
                    "observation_ref": {
                        "config_digest": record.config_digest,
                        "env_seed": record.env_seed,
                        "step": step_index,
                        "agent": agent,
                        "memory": record.memory,
                        "encoding": record.encoding,
                    },
                }


def export_probing_dataset(records: Iterable[EpisodeRecord], path: str | Path) -> int:
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for row in probing_rows(records):
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")
            count += 1
    return count
