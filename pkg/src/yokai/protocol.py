"""Wire protocol for external policies, version ``yle/1``.

Framing: every message is one UTF-8 JSON object prefixed by a 4-byte
big-endian length. The engine is the client; the policy process serves.
Exchange:

    -> hello        protocol id, game config, action-layout offsets,
                    observation encoding and memory mode
    <- hello_ack    accept flag (a refusal carries a reason)
    -> reset        episode index and seat          <- reset_ack
    -> act          episode/step/seat, flattened observation arrays with
                    shapes, legality bitmask (base64-packed bits + length)
    <- act_response chosen canonical action index, optional full
                    probability vector
    -> bye          connection closes

Any malformed frame, refused handshake, dead peer or missed deadline raises
ProtocolError; the harness turns that into an aborted episode record rather
than corrupting the match.

Run ``python3 -m yokai.protocol --policy random --stdio`` (or ``--tcp PORT``)
to serve the built-in wire policies; they act on the mask alone, which makes
them handy integration doubles.
"""

from __future__ import annotations

import argparse
import base64
import json
import selectors
import shlex
import socket
import struct
import subprocess
import sys
import time

import numpy as np

from .actions import cached_layout
from .agents import Policy, PolicyDecision, PolicyView
from .config import GameConfig
from .errors import ContractError, ProtocolError
from .observation import GraphObservation, ImageObservation, Observation

PROTOCOL = "yle/1"
MAX_FRAME = 64 * 1024 * 1024
_HEADER = struct.Struct(">I")


def encode_frame(message: dict) -> bytes:
    payload = json.dumps(message, separators=(",", ":")).encode("utf-8")
    if len(payload) > MAX_FRAME:
        raise ProtocolError(f"frame of {len(payload)} bytes exceeds the {MAX_FRAME} limit")
    return _HEADER.pack(len(payload)) + payload


def decode_payload(payload: bytes) -> dict:
    try:
        message = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable frame: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError("frame is not a JSON object")
    return message


def pack_mask(mask: np.ndarray) -> dict:
    bits = np.packbits(mask.astype(np.uint8))
    return {"mask": base64.b64encode(bits.tobytes()).decode("ascii"), "mask_len": int(mask.size)}


def unpack_mask(message: dict) -> np.ndarray:
    try:
        raw = base64.b64decode(message["mask"])
        length = int(message["mask_len"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ProtocolError(f"bad mask field: {exc}") from exc
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=length)
    return bits.astype(bool)


def _array_payload(array: np.ndarray) -> dict:
    return {"shape": list(array.shape), "data": np.asarray(array, dtype=np.float64).ravel().tolist()}


def observation_payload(obs: Observation) -> dict:
    if isinstance(obs, GraphObservation):
        return {
            "encoding": "graph",
            "adjacency": _array_payload(obs.adjacency),
            "nodes": _array_payload(obs.nodes),
        }
    if isinstance(obs, ImageObservation):
        return {"encoding": "image", "tensor": _array_payload(obs.tensor)}
    raise ContractError(f"unknown observation type {type(obs).__name__}")


# -- transports -----------------------------------------------------------


class _SubprocessTransport:
    """Pipes to a policy child process; reads respect a deadline."""

    def __init__(self, command: str) -> None:
        self.proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=sys.stderr.fileno() if hasattr(sys.stderr, "fileno") else None,
            bufsize=0,
        )
        self._selector = selectors.DefaultSelector()
        self._selector.register(self.proc.stdout, selectors.EVENT_READ)

    def send(self, data: bytes) -> None:
        if self.proc.poll() is not None:
            raise ProtocolError("policy process has exited")
        try:
            self.proc.stdin.write(data)
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError(f"policy process pipe closed: {exc}") from exc

    def recv(self, n: int, deadline: float) -> bytes:
        chunks = bytearray()
        while len(chunks) < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ProtocolError("policy response timed out")
            if not self._selector.select(timeout=remaining):
                continue
            chunk = self.proc.stdout.read(n - len(chunks))
            if not chunk:
                raise ProtocolError("policy process closed its output")
            chunks.extend(chunk)
        return bytes(chunks)

    def close(self) -> None:
        self._selector.close()
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class _TcpTransport:
    def __init__(self, host: str, port: int, connect_timeout: float = 5.0) -> None:
        self.sock = socket.create_connection((host, port), timeout=connect_timeout)

    def send(self, data: bytes) -> None:
        try:
            self.sock.sendall(data)
        except OSError as exc:
            raise ProtocolError(f"policy connection lost: {exc}") from exc

    def recv(self, n: int, deadline: float) -> bytes:
        chunks = bytearray()
        while len(chunks) < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ProtocolError("policy response timed out")
            self.sock.settimeout(remaining)
            try:
                chunk = self.sock.recv(n - len(chunks))
            except socket.timeout as exc:
                raise ProtocolError("policy response timed out") from exc
            except OSError as exc:
                raise ProtocolError(f"policy connection lost: {exc}") from exc
            if not chunk:
                raise ProtocolError("policy closed the connection")
            chunks.extend(chunk)
        return bytes(chunks)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class ExternalPolicy(Policy):
    """Bridges the policy interface onto a remote decision maker."""

    observation_based = True

    def __init__(self, transport, config: GameConfig, *, timeout: float = 10.0, name: str = "external") -> None:
        self.transport = transport
        self.config = config
        self.timeout = timeout
        self.name = name
        self._shaken = False

    @classmethod
    def spawn(cls, command: str, config: GameConfig, *, timeout: float = 10.0) -> "ExternalPolicy":
        return cls(_SubprocessTransport(command), config, timeout=timeout, name=f"exec:{command}")

    @classmethod
    def connect(cls, host: str, port: int, config: GameConfig, *, timeout: float = 10.0) -> "ExternalPolicy":
        return cls(_TcpTransport(host, port), config, timeout=timeout, name=f"tcp:{host}:{port}")

    # -- framing ----------------------------------------------------------

    def _request(self, message: dict) -> dict:
        self.transport.send(encode_frame(message))
        deadline = time.monotonic() + self.timeout
        header = self.transport.recv(_HEADER.size, deadline)
        (length,) = _HEADER.unpack(header)
        if length > MAX_FRAME:
            raise ProtocolError(f"peer announced an oversized {length}-byte frame")
        return decode_payload(self.transport.recv(length, deadline))

    def _handshake(self) -> None:
        layout = cached_layout(self.config)
        reply = self._request(
            {
                "type": "hello",
                "protocol": PROTOCOL,
                "config": self.config.to_dict(),
                "num_actions": layout.size,
                "layout": {
                    "end_game": layout.end_game_index,
                    "observe_base": layout.observe_base,
                    "move_base": layout.move_base,
                    "reveal_base": layout.reveal_base,
                    "place_base": layout.place_base,
                    "noop": layout.noop_index,
                },
            }
        )
        if reply.get("type") != "hello_ack" or reply.get("protocol") != PROTOCOL:
            raise ProtocolError(f"bad handshake reply: {reply}")
        if not reply.get("accept", False):
            raise ProtocolError(f"policy refused the handshake: {reply.get('reason', 'no reason')}")
        self._shaken = True

    def _ensure_handshake(self) -> None:
        if not self._shaken:
            self._handshake()

    # -- policy interface ---------------------------------------------------

    def reset(self, episode: int, seat: int) -> None:
        self._ensure_handshake()
        reply = self._request({"type": "reset", "episode": episode, "seat": seat})
        if reply.get("type") != "reset_ack":
            raise ProtocolError(f"expected reset_ack, got {reply}")

    def act(self, view: PolicyView, rng: np.random.Generator) -> PolicyDecision:
        self._ensure_handshake()
        if view.observation is None:
            raise ContractError("external policy needs an observation")
        message = {
            "type": "act",
            "episode": view.episode,
            "step": view.step,
            "seat": view.seat,
            "observation": observation_payload(view.observation),
        }
        message.update(pack_mask(view.mask))
        reply = self._request(message)
        if reply.get("type") != "act_response":
            raise ProtocolError(f"expected act_response, got {reply.get('type')!r}")
        try:
            action = int(reply["action"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"act_response without a usable action: {exc}") from exc
        if not 0 <= action < view.mask.size:
            raise ProtocolError(f"action index {action} outside the action space")
        probabilities = None
        if reply.get("probabilities") is not None:
            probabilities = np.asarray(reply["probabilities"], dtype=np.float64)
            if probabilities.shape != (view.mask.size,):
                raise ProtocolError("probability vector has the wrong length")
        return PolicyDecision(action=action, probabilities=probabilities)

    def close(self) -> None:
        try:
            self.transport.send(encode_frame({"type": "bye"}))
        except ProtocolError:
            pass
        self.transport.close()


# -- serving side ----------------------------------------------------------


class WirePolicy:
    """Decision maker for the serving side: sees only mask and observation."""

    def decide(self, message: dict, mask: np.ndarray, rng: np.random.Generator) -> dict:
        raise NotImplementedError


class RandomWirePolicy(WirePolicy):
    def decide(self, message, mask, rng):
        legal = np.flatnonzero(mask)
        probs = np.zeros(mask.size)
        probs[legal] = 1.0 / legal.size
        return {"action": int(rng.choice(legal)), "probabilities": probs.tolist()}


class FirstLegalWirePolicy(WirePolicy):
    def decide(self, message, mask, rng):
        action = int(np.flatnonzero(mask)[0])
        probs = np.zeros(mask.size)
        probs[action] = 1.0
        return {"action": action, "probabilities": probs.tolist()}


WIRE_POLICIES = {"random": RandomWirePolicy, "first": FirstLegalWirePolicy}


def _read_exact(stream, n: int) -> bytes | None:
    chunks = bytearray()
    while len(chunks) < n:
        chunk = stream.read(n - len(chunks))
        if not chunk:
            return None
        chunks.extend(chunk)
    return bytes(chunks)


def serve_stream(reader, writer, policy: WirePolicy, *, seed: int = 0) -> None:
    """Answer engine requests on a byte stream until bye/EOF."""
    rng = np.random.default_rng(seed)
    while True:
        header = _read_exact(reader, _HEADER.size)
        if header is None:
            return
        (length,) = _HEADER.unpack(header)
        payload = _read_exact(reader, length)
        if payload is None:
            return
        message = decode_payload(payload)
        kind = message.get("type")
        if kind == "hello":
            accept = message.get("protocol") == PROTOCOL
            reply = {"type": "hello_ack", "protocol": PROTOCOL, "accept": accept}
            if not accept:
                reply["reason"] = f"unsupported protocol {message.get('protocol')!r}"
        elif kind == "reset":
            reply = {"type": "reset_ack"}
        elif kind == "act":
            mask = unpack_mask(message)
            reply = {"type": "act_response", **policy.decide(message, mask, rng)}
        elif kind == "bye":
            return
        else:
            reply = {"type": "error", "reason": f"unknown message type {kind!r}"}
        writer.write(encode_frame(reply))
        writer.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="serve a built-in wire policy")
    parser.add_argument("--policy", choices=sorted(WIRE_POLICIES), default="random")
    parser.add_argument("--seed", type=int, default=0)
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--stdio", action="store_true", help="serve on stdin/stdout (default)")
    group.add_argument("--tcp", type=int, metavar="PORT", help="serve one TCP connection")
    args = parser.parse_args(argv)
    policy = WIRE_POLICIES[args.policy]()
    if args.tcp is not None:
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(("127.0.0.1", args.tcp))
        server.listen(1)
        print(f"listening on 127.0.0.1:{server.getsockname()[1]}", flush=True)
        conn, _ = server.accept()
        with conn:
            reader = conn.makefile("rb")
            writer = conn.makefile("wb")
            serve_stream(reader, writer, policy, seed=args.seed)
        server.close()
        return 0
    serve_stream(sys.stdin.buffer, sys.stdout.buffer, policy, seed=args.seed)
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
