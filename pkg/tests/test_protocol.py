"""Wire protocol: framing, serving loop, and external policies end to end."""

import io
import socket
import struct
import subprocess
import sys
import threading

import numpy as np
import pytest

from yokai import GameConfig, legal_mask, make_config, new_game, observe
from yokai.actions import cached_layout
from yokai.agents import GreedyPolicy, PolicyView, make_policy
from yokai.errors import ProtocolError
from yokai.harness import run_episode, run_matchup
from yokai.observation import MemoryMode, ObsEncoding
from yokai.protocol import (
    MAX_FRAME,
    PROTOCOL,
    ExternalPolicy,
    FirstLegalWirePolicy,
    RandomWirePolicy,
    decode_payload,
    encode_frame,
    observation_payload,
    pack_mask,
    serve_stream,
    unpack_mask,
)
from yokai.records import verify_replay

HEADER = struct.Struct(">I")
SERVER_FIRST = f"{sys.executable} -m yokai.protocol --policy first --stdio"
SERVER_RANDOM = f"{sys.executable} -m yokai.protocol --policy random --stdio"


def small_config() -> GameConfig:
    return make_config("3x3", 2)


# -- framing ----------------------------------------------------------------


class TestFraming:
    def test_round_trip(self):
        message = {"type": "act", "step": 3, "data": [1.0, 2.5], "text": "démo ünïcode"}
        frame = encode_frame(message)
        (length,) = HEADER.unpack(frame[: HEADER.size])
        assert length == len(frame) - HEADER.size
        assert decode_payload(frame[HEADER.size :]) == message

    def test_compact_encoding(self):
        assert b" " not in encode_frame({"a": [1, 2]})[HEADER.size :]

    def test_non_json_payload_rejected(self):
        with pytest.raises(ProtocolError):
            decode_payload(b"\xff\xfe not json")

    def test_non_object_payload_rejected(self):
        with pytest.raises(ProtocolError):
            decode_payload(b"[1, 2, 3]")

    def test_oversized_frame_rejected(self, monkeypatch):
        monkeypatch.setattr("yokai.protocol.MAX_FRAME", 16)
        with pytest.raises(ProtocolError):
            encode_frame({"blob": "x" * 64})

    @pytest.mark.parametrize("length", [1, 5, 13, 780, 1068])
    def test_mask_round_trip(self, length):
        rng = np.random.default_rng(length)
        mask = rng.random(length) < 0.3
        restored = unpack_mask({"type": "act", **pack_mask(mask)})
        assert restored.dtype == bool
        assert np.array_equal(restored, mask)

    def test_mask_fields_malformed(self):
        with pytest.raises(ProtocolError):
            unpack_mask({"mask_len": 4})
        with pytest.raises(ProtocolError):
            unpack_mask({"mask": "AA==", "mask_len": "many"})

    @pytest.mark.parametrize("encoding", [ObsEncoding.GRAPH, ObsEncoding.IMAGE])
    def test_observation_payload_reconstructs(self, encoding):
        config = small_config()
        state = new_game(config, seed=21)
        obs = observe(state, 0, memory=MemoryMode.PERFECT, encoding=encoding)
        payload = observation_payload(obs)
        assert payload["encoding"] == encoding.value
        if encoding is ObsEncoding.GRAPH:
            parts = {"adjacency": obs.adjacency, "nodes": obs.nodes}
        else:
            parts = {"tensor": obs.tensor}
        for key, original in parts.items():
            entry = payload[key]
            rebuilt = np.asarray(entry["data"]).reshape(entry["shape"])
            assert np.array_equal(rebuilt, np.asarray(original, dtype=np.float64))


# -- serving loop, driven through in-memory streams --------------------------


def run_server(frames: list[dict], policy=None) -> list[dict]:
    reader = io.BytesIO(b"".join(encode_frame(f) for f in frames))
    writer = io.BytesIO()
    serve_stream(reader, writer, policy or FirstLegalWirePolicy(), seed=1)
    out, replies = writer.getvalue(), []
    while out:
        (length,) = HEADER.unpack(out[: HEADER.size])
        replies.append(decode_payload(out[HEADER.size : HEADER.size + length]))
        out = out[HEADER.size + length :]
    return replies


class TestServeStream:
    def test_handshake_and_act(self):
        config = small_config()
        state = new_game(config, seed=4)
        mask = legal_mask(state, state.current_player)
        obs = observe(state, state.current_player, memory=MemoryMode.PERFECT, encoding=ObsEncoding.GRAPH)
        act = {
            "type": "act",
            "episode": 0,
            "step": 0,
            "seat": state.current_player,
            "observation": observation_payload(obs),
            **pack_mask(mask),
        }
        replies = run_server(
            [
                {"type": "hello", "protocol": PROTOCOL, "config": config.to_dict()},
                {"type": "reset", "episode": 0, "seat": 0},
                act,
                {"type": "bye"},
            ]
        )
        assert [r["type"] for r in replies] == ["hello_ack", "reset_ack", "act_response"]
        assert replies[0]["accept"] is True
        action = replies[2]["action"]
        assert mask[action]
        assert action == int(np.flatnonzero(mask)[0])
        probs = np.asarray(replies[2]["probabilities"])
        assert probs.shape == (mask.size,)
        assert probs[action] == 1.0

    def test_wrong_version_refused(self):
        replies = run_server([{"type": "hello", "protocol": "yle/0"}])
        assert replies[0]["accept"] is False
        assert "yle/0" in replies[0]["reason"]

    def test_unknown_type_answered_not_crashed(self):
        replies = run_server([{"type": "mystery"}, {"type": "bye"}])
        assert replies[0]["type"] == "error"

    def test_eof_mid_header_returns(self):
        writer = io.BytesIO()
        serve_stream(io.BytesIO(b"\x00\x00"), writer, FirstLegalWirePolicy())
        assert writer.getvalue() == b""

    def test_random_policy_serves_uniform(self):
        mask = np.zeros(10, dtype=bool)
        mask[[2, 5, 7]] = True
        reply = RandomWirePolicy().decide({}, mask, np.random.default_rng(0))
        probs = np.asarray(reply["probabilities"])
        assert mask[reply["action"]]
        assert np.allclose(probs[mask], 1 / 3)
        assert np.all(probs[~mask] == 0)


# -- external policies over real transports ----------------------------------


class TestSubprocessPolicy:
    def test_episode_completes_and_replays(self):
        config = small_config()
        policy = ExternalPolicy.spawn(SERVER_FIRST, config)
        try:
            record = run_episode(
                [policy, GreedyPolicy()],
                config,
                env_seed=11,
                episode_index=0,
                policy_seed=5,
            )
        finally:
            policy.close()
        assert not record.aborted
        assert record.terminal is not None
        verify_replay(record)

    def test_symmetrized_frames_stay_legal(self):
        config = small_config()
        policy = ExternalPolicy.spawn(SERVER_RANDOM, config)
        try:
            record = run_episode(
                [policy, policy.__class__.spawn(SERVER_FIRST, config)],
                config,
                env_seed=3,
                episode_index=1,
                policy_seed=9,
                symmetry_mode="c+r",
                symmetry_seed=17,
                encoding=ObsEncoding.IMAGE,
            )
        finally:
            policy.close()
        assert not record.aborted
        verify_replay(record)

    def test_probabilities_cross_the_wire(self):
        config = small_config()
        state = new_game(config, seed=7)
        mask = legal_mask(state, state.current_player)
        obs = observe(state, state.current_player, memory=MemoryMode.PERFECT, encoding=ObsEncoding.GRAPH)
        policy = ExternalPolicy.spawn(SERVER_RANDOM, config)
        try:
            policy.reset(0, state.current_player)
            view = PolicyView(
                seat=state.current_player,
                episode=0,
                step=0,
                mask=mask,
                layout=cached_layout(config),
                observation=obs,
            )
            decision = policy.act(view, np.random.default_rng(0))
        finally:
            policy.close()
        assert mask[decision.action]
        assert decision.probabilities is not None
        assert decision.probabilities.shape == (mask.size,)
        assert np.isclose(decision.probabilities.sum(), 1.0)

    def test_make_policy_exec_matchup(self):
        config = small_config()
        policies = [
            make_policy(f"exec:{SERVER_RANDOM}", config),
            make_policy(f"exec:{SERVER_FIRST}", config),
        ]
        try:
            result = run_matchup(policies, config, episodes=2, seed=10)
        finally:
            for p in policies:
                p.close()
        assert result.metrics.episodes == 2
        assert result.metrics.aborted == 0
        for record in result.records:
            verify_replay(record)

    def test_handshake_timeout_raises(self):
        config = small_config()
        policy = ExternalPolicy.spawn(f"{sys.executable} -c 'import time; time.sleep(30)'", config, timeout=0.4)
        try:
            with pytest.raises(ProtocolError, match="timed out"):
                policy.reset(0, 0)
        finally:
            policy.close()

    def test_dead_process_raises(self):
        config = small_config()
        policy = ExternalPolicy.spawn(f"{sys.executable} -c pass", config, timeout=2.0)
        try:
            with pytest.raises(ProtocolError):
                policy.reset(0, 0)
        finally:
            policy.close()


def misbehaving_server(tmp_path, body: str) -> str:
    """A server script that handshakes properly, then runs ``body`` on act."""
    script = tmp_path / "server.py"
    script.write_text(
        "import json, struct, sys, time\n"
        "H = struct.Struct('>I')\n"
        "def read():\n"
        "    hdr = sys.stdin.buffer.read(H.size)\n"
        "    if len(hdr) < H.size: sys.exit(0)\n"
        "    (n,) = H.unpack(hdr)\n"
        "    return json.loads(sys.stdin.buffer.read(n))\n"
        "def send(m):\n"
        "    p = json.dumps(m).encode()\n"
        "    sys.stdout.buffer.write(H.pack(len(p)) + p)\n"
        "    sys.stdout.buffer.flush()\n"
        "def send_raw(b):\n"
        "    sys.stdout.buffer.write(b)\n"
        "    sys.stdout.buffer.flush()\n"
        "while True:\n"
        "    msg = read()\n"
        "    if msg['type'] == 'hello':\n"
        "        send({'type': 'hello_ack', 'protocol': 'yle/1', 'accept': True})\n"
        "    elif msg['type'] == 'reset':\n"
        "        send({'type': 'reset_ack'})\n"
        "    elif msg['type'] == 'bye':\n"
        "        sys.exit(0)\n"
        "    else:\n"
        f"        {body}\n"
    )
    return f"{sys.executable} {script}"


class TestMisbehavingPeers:
    def test_act_timeout_aborts_episode_record(self, tmp_path):
        config = small_config()
        command = misbehaving_server(tmp_path, "time.sleep(30)")
        policy = ExternalPolicy.spawn(command, config, timeout=0.4)
        try:
            record = run_episode(
                [policy, GreedyPolicy()], config, env_seed=2, episode_index=0, policy_seed=0
            )
        finally:
            policy.close()
        assert record.aborted
        assert "timed out" in record.abort_reason
        assert record.terminal is None
        verify_replay(record)

    def test_refused_handshake_raises(self, tmp_path):
        script = tmp_path / "refuse.py"
        script.write_text(
            "import json, struct, sys\n"
            "H = struct.Struct('>I')\n"
            "hdr = sys.stdin.buffer.read(H.size)\n"
            "(n,) = H.unpack(hdr)\n"
            "sys.stdin.buffer.read(n)\n"
            "p = json.dumps({'type': 'hello_ack', 'protocol': 'yle/1', 'accept': False,"
            " 'reason': 'version too new'}).encode()\n"
            "sys.stdout.buffer.write(H.pack(len(p)) + p)\n"
            "sys.stdout.buffer.flush()\n"
            "sys.stdin.buffer.read()\n"
        )
        policy = ExternalPolicy.spawn(f"{sys.executable} {script}", small_config(), timeout=2.0)
        try:
            with pytest.raises(ProtocolError, match="refused"):
                policy.reset(0, 0)
        finally:
            policy.close()

    def test_garbage_reply_raises(self, tmp_path):
        command = misbehaving_server(
            tmp_path, "send_raw(struct.pack('>I', 9) + b'not json!')"
        )
        policy = ExternalPolicy.spawn(command, small_config(), timeout=2.0)
        try:
            record = run_episode(
                [policy, GreedyPolicy()], small_config(), env_seed=2, episode_index=0, policy_seed=0
            )
        finally:
            policy.close()
        assert record.aborted
        assert "undecodable" in record.abort_reason

    def test_oversized_announcement_raises(self, tmp_path):
        command = misbehaving_server(
            tmp_path, f"send_raw(struct.pack('>I', {MAX_FRAME + 1}))"
        )
        policy = ExternalPolicy.spawn(command, small_config(), timeout=2.0)
        try:
            record = run_episode(
                [policy, GreedyPolicy()], small_config(), env_seed=2, episode_index=0, policy_seed=0
            )
        finally:
            policy.close()
        assert record.aborted
        assert "oversized" in record.abort_reason

    def test_illegal_action_aborts(self, tmp_path):
        command = misbehaving_server(
            tmp_path,
            "send({'type': 'act_response', 'action': int(msg['mask_len']) - 1})",
        )
        # the last index is the no-op, never legal for the actor mid-substep
        policy = ExternalPolicy.spawn(command, small_config(), timeout=2.0)
        try:
            record = run_episode(
                [policy, GreedyPolicy()], small_config(), env_seed=2, episode_index=0, policy_seed=0
            )
        finally:
            policy.close()
        assert record.aborted
        assert "masked action" in record.abort_reason


class TestTcpPolicy:
    def test_in_process_server(self):
        config = small_config()
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.bind(("127.0.0.1", 0))
        listener.listen(1)
        port = listener.getsockname()[1]

        def serve_once():
            conn, _ = listener.accept()
            with conn:
                serve_stream(conn.makefile("rb"), conn.makefile("wb"), FirstLegalWirePolicy())

        thread = threading.Thread(target=serve_once, daemon=True)
        thread.start()
        policy = ExternalPolicy.connect("127.0.0.1", port, config, timeout=5.0)
        try:
            record = run_episode(
                [policy, GreedyPolicy()], config, env_seed=6, episode_index=0, policy_seed=1
            )
        finally:
            policy.close()
            listener.close()
        thread.join(timeout=5)
        assert not record.aborted
        verify_replay(record)

    def test_module_main_tcp_mode(self):
        config = small_config()
        proc = subprocess.Popen(
            [sys.executable, "-m", "yokai.protocol", "--policy", "first", "--tcp", "0"],
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            banner = proc.stdout.readline().strip()
            port = int(banner.rsplit(":", 1)[1])
            policy = ExternalPolicy.connect("127.0.0.1", port, config, timeout=5.0)
            try:
                policy.reset(0, 0)
                state = new_game(config, seed=1)
                mask = legal_mask(state, state.current_player)
                obs = observe(
                    state, state.current_player, memory=MemoryMode.PERFECT, encoding=ObsEncoding.GRAPH
                )
                view = PolicyView(
                    seat=state.current_player,
                    episode=0,
                    step=0,
                    mask=mask,
                    layout=cached_layout(config),
                    observation=obs,
                )
                decision = policy.act(view, np.random.default_rng(0))
                assert mask[decision.action]
            finally:
                policy.close()
            assert proc.wait(timeout=5) == 0
        finally:
            if proc.poll() is None:
                proc.kill()
