"""Episode record schema, JSONL round-trips, and exact replay verification."""

import numpy as np
import pytest

from yokai import ReplayError, apply_action, cached_layout, legal_mask, make_config, new_game
from yokai.records import (
    EpisodeRecord,
    EpisodeRecorder,
    read_records,
    replay,
    verify_replay,
    write_records,
)

CFG = make_config("3x3", 2)


def record_random_episode(config, seed, shaping_weight=0.0, stop_after=None):
    rng = np.random.default_rng(seed)
    layout = cached_layout(config)
    state = new_game(config, seed)
    recorder = EpisodeRecorder(
        config, seed, shaping_weight=shaping_weight, policies=["random"] * config.num_players
    )
    while not state.terminal:
        if stop_after is not None and state.step_count >= stop_after:
            return recorder.finish(state, aborted=True, abort_reason="external policy timeout")
        mask = legal_mask(state, state.current_player)
        joint = [layout.noop_index] * config.num_players
        joint[state.current_player] = int(rng.choice(np.nonzero(mask)[0]))
        nxt, events = apply_action(state, joint)
        recorder.record_step(state, joint, events, nxt)
        state = nxt
    return recorder.finish(state)


class TestRoundTrip:
    def test_json_round_trip_is_lossless(self):
        record = record_random_episode(CFG, 11)
        clone = EpisodeRecord.from_json(record.to_json())
        assert clone.to_dict() == record.to_dict()

    def test_jsonl_file_round_trip(self, tmp_path):
        records = [record_random_episode(CFG, seed) for seed in range(4)]
        path = tmp_path / "episodes.jsonl"
        assert write_records(records, path) == 4
        loaded = read_records(path)
        assert [r.to_dict() for r in loaded] == [r.to_dict() for r in records]

    def test_schema_is_guarded(self):
        data = record_random_episode(CFG, 1).to_dict()
        data["schema"] = "yle-episode/99"
        with pytest.raises(ReplayError):
            EpisodeRecord.from_dict(data)

    def test_length_and_terminal_block(self):
        record = record_random_episode(CFG, 3)
        assert record.length == record.terminal["length"] > 0
        assert record.terminal["score"] is None or isinstance(record.terminal["score"], int)
        assert isinstance(record.terminal["terminal_reward"], float)


class TestStepContents:
    def test_colours_are_ground_truth_and_constant(self):
        record = record_random_episode(CFG, 5)
        truth = [int(c) for c in new_game(CFG, 5).colours]
        for step in record.steps:
            assert step.colours == truth

    def test_knowledge_snapshot_taken_before_the_action(self):
        record = record_random_episode(CFG, 7)
        # Nothing is known at the very first step.
        assert all(all(c == -1 for c in row) for row in record.steps[0].knowledge)
        # After an observe action, the actor's next snapshot carries it.
        first = record.steps[0]
        layout = cached_layout(CFG)
        action = layout.decode(first.action)
        if action.card is not None:
            later = record.steps[1]
            assert later.knowledge[first.agent][action.card] == first.colours[action.card]
            assert later.team_peeked[action.card] & (1 << first.agent)

    def test_rewards_default_to_terminal_only(self):
        record = record_random_episode(CFG, 9)
        assert all(s.reward == 0.0 for s in record.steps[:-1])
        assert record.steps[-1].reward == record.terminal["terminal_reward"]

    def test_shaped_rewards_are_recorded(self):
        flat = record_random_episode(CFG, 13, shaping_weight=0.0)
        shaped = record_random_episode(CFG, 13, shaping_weight=0.5)
        assert [s.action for s in flat.steps] == [s.action for s in shaped.steps]
        assert any(a.reward != b.reward for a, b in zip(flat.steps, shaped.steps))


class TestReplay:
    @pytest.mark.parametrize("seed", range(8))
    def test_faithful_records_replay(self, seed):
        assert verify_replay(record_random_episode(CFG, seed))

    def test_large_variant_replays(self):
        cfg = make_config("4x4", 3)
        assert verify_replay(record_random_episode(cfg, 21))

    def test_shaped_records_replay(self):
        assert verify_replay(record_random_episode(CFG, 17, shaping_weight=0.25))

    def test_replay_returns_final_state(self):
        record = record_random_episode(CFG, 2)
        final = replay(record)
        assert final.terminal
        assert final.step_count == record.length

    def test_aborted_record_replays_prefix(self):
        record = record_random_episode(CFG, 4, stop_after=5)
        assert record.aborted and record.terminal is None
        assert record.abort_reason == "external policy timeout"
        final = replay(record)
        assert not final.terminal

    @pytest.mark.parametrize(
        "corrupt",
        [
            lambda d: d["steps"][3].__setitem__("action", d["steps"][3]["action"] + 1),
            lambda d: d["steps"][2].__setitem__("reward", 3.5),
            lambda d: d["steps"][1]["colours"].reverse(),
            lambda d: d["steps"][4].__setitem__("agent", 1 - d["steps"][4]["agent"]),
            lambda d: d["steps"][0]["knowledge"][0].__setitem__(0, 2),
            lambda d: d["terminal"].__setitem__("length", 999),
            lambda d: d["terminal"].__setitem__("terminal_reward", 99.0),
            lambda d: d.__setitem__("steps", d["steps"][:-2]),
            lambda d: d.__setitem__("env_seed", d["env_seed"] + 1),
        ],
    )
    def test_tampering_is_detected(self, corrupt):
        data = record_random_episode(CFG, 6).to_dict()
        corrupt(data)
        with pytest.raises(ReplayError):
            replay(EpisodeRecord.from_dict(data))

    def test_event_tampering_is_detected(self):
        data = record_random_episode(CFG, 8).to_dict()
        target = next(s for s in data["steps"] if s["events"])
        target["events"] = []
        with pytest.raises(ReplayError):
            replay(EpisodeRecord.from_dict(data))

    def test_config_digest_mismatch_is_detected(self):
        data = record_random_episode(CFG, 10).to_dict()
        data["config_digest"] = "0" * 64
        with pytest.raises(ReplayError):
            replay(EpisodeRecord.from_dict(data))
