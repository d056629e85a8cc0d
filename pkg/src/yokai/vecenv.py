"""Batched environment stepping with auto-reset, plus the throughput bench.

A VecEnv owns N independent game instances. Instance i's episodes are seeded
from (master_seed, i, episode_counter_i), so any instance's full history is
reproducible in isolation regardless of batch size or stepping order. When
an instance's episode ends, the step that ended it reports done=True, carries
the finished episode's terminal summary in info, and returns the first
observations of the freshly reset episode. An illegal joint action fails only
its own instance: the error is surfaced in that instance's info entry and the
instance is left unchanged.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .actions import cached_layout, legal_mask
from .config import GameConfig
from .errors import ContractError, RuleViolation
from .observation import MemoryMode, ObsEncoding, Observation, observe
from .reward import step_reward, terminal_reward
from .rules import apply_action, count_complete_colour_clusters, new_game
from .state import GameState


def instance_seed(master_seed: int, index: int, episode: int) -> int:
    return int(
        np.random.SeedSequence(entropy=(master_seed, index, episode)).generate_state(
            1, np.uint64
        )[0]
    )


@dataclass
class BatchStep:
    observations: list[list[Observation]]  # [instance][agent]
    rewards: np.ndarray  # (N,) float64
    dones: np.ndarray  # (N,) bool
    infos: list[dict]


class VecEnv:
    def __init__(
        self,
        config: GameConfig,
        num_envs: int,
        *,
        master_seed: int = 0,
        memory: MemoryMode = MemoryMode.STANDARD,
        encoding: ObsEncoding = ObsEncoding.GRAPH,
        shaping_weight: float = 0.0,
        workers: int | None = 1,
    ) -> None:
        if num_envs < 1:
            raise ContractError("need at least one environment instance")
        self.config = config
        self.num_envs = num_envs
        self.master_seed = master_seed
        self.memory = MemoryMode(memory)
        self.encoding = ObsEncoding(encoding)
        self.shaping_weight = shaping_weight
        self.layout = cached_layout(config)
        self._episode_counters = [0] * num_envs
        self._states: list[GameState] = [self._fresh(i) for i in range(num_envs)]
        workers = os.cpu_count() or 1 if workers is None else workers
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        self._workers = max(1, workers)

    # -- lifecycle ---------------------------------------------------------

    def _fresh(self, index: int) -> GameState:
        seed = instance_seed(self.master_seed, index, self._episode_counters[index])
        return new_game(self.config, seed)

    def reset(self) -> list[list[Observation]]:
        """Restart every instance (advancing each episode counter)."""
        for i in range(self.num_envs):
            if self._states[i].step_count > 0 or self._states[i].terminal:
                self._episode_counters[i] += 1
            self._states[i] = self._fresh(i)
        return self.observations()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=False)
            self._pool = None

    # -- views ---------------------------------------------------------------

    def state(self, index: int) -> GameState:
        return self._states[index]

    def _observe_instance(self, state: GameState) -> list[Observation]:
        return [
            observe(state, agent, self.memory, self.encoding)
            for agent in range(self.config.num_players)
        ]

    def observations(self) -> list[list[Observation]]:
        return [self._observe_instance(s) for s in self._states]

    def masks(self) -> list[np.ndarray]:
        """Per instance: a (players, num_actions) bool matrix."""
        return [
            np.stack([legal_mask(s, agent) for agent in range(self.config.num_players)])
            for s in self._states
        ]

    # -- stepping -----------------------------------------------------------

    def _step_instance(self, index: int, joint: list[int]) -> tuple[list[Observation], float, bool, dict]:
        state = self._states[index]
        try:
            nxt, events = apply_action(state, joint)
        except RuleViolation as exc:
            info = {
                "error": {
                    "type": type(exc).__name__,
                    "reason": getattr(exc, "reason", "ILLEGAL_ACTION"),
                    "message": str(exc),
                }
            }
            return self._observe_instance(state), 0.0, False, info
        reward = float(step_reward(nxt, events, self.shaping_weight))
        if nxt.terminal:
            info = {
                "terminal": {
                    "won": nxt.outcome.won,
                    "ended_early": nxt.ended_early,
                    "score": nxt.outcome.score,
                    "complete_clusters": count_complete_colour_clusters(nxt),
                    "length": nxt.step_count,
                    "terminal_reward": float(terminal_reward(nxt)),
                    "episode": self._episode_counters[index],
                }
            }
            self._episode_counters[index] += 1
            self._states[index] = self._fresh(index)
            return self._observe_instance(self._states[index]), reward, True, info
        self._states[index] = nxt
        return self._observe_instance(nxt), reward, False, {}

    def step(self, actions) -> BatchStep:
        """actions: (num_envs, num_players) canonical indices."""
        joint_matrix = np.asarray(actions, dtype=np.int64)
        if joint_matrix.shape != (self.num_envs, self.config.num_players):
            raise ContractError(
                f"actions shape {joint_matrix.shape} != "
                f"({self.num_envs}, {self.config.num_players})"
            )
        jobs = [(i, joint_matrix[i].tolist()) for i in range(self.num_envs)]
        if self._pool is not None:
            results = list(self._pool.map(lambda job: self._step_instance(*job), jobs))
        else:
            results = [self._step_instance(i, joint) for i, joint in jobs]
        observations = [r[0] for r in results]
        rewards = np.array([r[1] for r in results], dtype=np.float64)
        dones = np.array([r[2] for r in results], dtype=bool)
        infos = [r[3] for r in results]
        return BatchStep(observations=observations, rewards=rewards, dones=dones, infos=infos)


# -- throughput benchmark -----------------------------------------------


@dataclass
class BenchRow:
    num_envs: int
    steps: int
    seconds: float
    steps_per_second: float
    episodes_finished: int
    substep_mix: dict[str, float]
    action_mix: dict[str, float]
    workers: int
    backend: str


@dataclass
class BenchReport:
    config: dict
    encoding: str
    rows: list[BenchRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "encoding": self.encoding,
            "rows": [
                {
                    "num_envs": r.num_envs,
                    "steps": r.steps,
                    "seconds": r.seconds,
                    "steps_per_second": r.steps_per_second,
                    "episodes_finished": r.episodes_finished,
                    "substep_mix": r.substep_mix,
                    "action_mix": r.action_mix,
                    "workers": r.workers,
                    "backend": r.backend,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def render_text(self) -> str:
        """Fixed-width table, one row per batch size."""
        header = (
            f"{'envs':>6}  {'steps':>6}  {'sec':>8}  {'steps/s':>12}  "
            f"{'episodes':>9}  {'workers':>7}  {'backend':>8}"
        )
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.num_envs:>6}  {r.steps:>6}  {r.seconds:>8.3f}  "
                f"{r.steps_per_second:>12.1f}  {r.episodes_finished:>9}  "
                f"{r.workers:>7}  {r.backend:>8}"
            )
        mix = self.rows[-1].substep_mix if self.rows else {}
        if mix:
            parts = "  ".join(f"{k}={v:.3f}" for k, v in mix.items())
            lines.append(f"substep mix ({self.rows[-1].num_envs} envs): {parts}")
        return "\n".join(lines)


_SUBSTEP_NAMES = {1: "peek1", 2: "peek2", 3: "move", 4: "hint"}


def _sample_legal(mask_matrix: np.ndarray, rng: np.random.Generator) -> list[int]:
    joint = []
    for row in mask_matrix:
        legal = np.flatnonzero(row)
        joint.append(int(legal[rng.integers(legal.size)]))
    return joint


def throughput_bench(
    config: GameConfig,
    env_counts=(512, 1024, 2048),
    steps: int = 50,
    *,
    seed: int = 0,
    memory: MemoryMode = MemoryMode.STANDARD,
    encoding: ObsEncoding = ObsEncoding.GRAPH,
    workers: int = 1,
) -> BenchReport:
    """Random-legal-action stepping rate, observations included, per batch
    size. One state-transition of one instance counts as one step."""
    from . import _kernels

    report = BenchReport(config=config.to_dict(), encoding=ObsEncoding(encoding).value)
    for num_envs in env_counts:
        env = VecEnv(
            config,
            num_envs,
            master_seed=seed,
            memory=memory,
            encoding=encoding,
            workers=workers,
        )
        rng = np.random.default_rng(seed)
        env.reset()
        substep_counts: dict[str, int] = {name: 0 for name in _SUBSTEP_NAMES.values()}
        kind_counts: dict[str, int] = {}
        episodes = 0
        start = time.perf_counter()
        for _ in range(steps):
            masks = env.masks()
            joints = []
            for i, mask_matrix in enumerate(masks):
                state = env.state(i)
                substep_counts[_SUBSTEP_NAMES[int(state.substep)]] += 1
                joint = _sample_legal(mask_matrix, rng)
                kind = env.layout.decode(joint[state.current_player]).kind.value
                kind_counts[kind] = kind_counts.get(kind, 0) + 1
                joints.append(joint)
            result = env.step(np.array(joints))
            episodes += int(result.dones.sum())
        elapsed = time.perf_counter() - start
        env.close()
        total = num_envs * steps
        report.rows.append(
            BenchRow(
                num_envs=num_envs,
                steps=steps,
                seconds=elapsed,
                steps_per_second=total / elapsed if elapsed > 0 else float("inf"),
                episodes_finished=episodes,
                substep_mix={k: v / total for k, v in substep_counts.items()},
                action_mix={k: v / total for k, v in sorted(kind_counts.items())},
                workers=workers,
                backend=_kernels.backend_name(),
            )
        )
    return report


def kernel_bench(
    config: GameConfig, *, states: int = 200, repeats: int = 5, seed: int = 0
) -> dict:
    """Time the board kernels on each importable backend over the same
    sampled states, so the compiled extension's worth is measurable rather
    than assumed. Returns per-backend seconds and calls-per-second."""
    from . import _kernels
    from .rules import random_playout_states

    samples = [
        (s.positions.copy(), s.colours.copy(), np.flatnonzero(s.locked == 0))
        for s in random_playout_states(config, seed, states)
    ]
    g = config.grid_side
    nc = config.num_colours
    out = {"config": config.to_dict(), "states": states, "repeats": repeats, "backends": {}}
    for name in _kernels.available_backends():
        impl = _kernels.get_backend(name)
        best = float("inf")
        for _ in range(repeats):
            start = time.perf_counter()
            for positions, colours, unlocked in samples:
                impl.legal_targets_many(positions, g, unlocked)
                impl.colour_connected_flags(positions, colours, nc, g)
                impl.adjacency_matrix(positions, g)
            best = min(best, time.perf_counter() - start)
        out["backends"][name] = {
            "seconds": best,
            "states_per_second": states / best if best > 0 else float("inf"),
        }
    back = out["backends"]
    if "compiled" in back and "python" in back:
        out["speedup"] = back["python"]["seconds"] / back["compiled"]["seconds"]
    return out
