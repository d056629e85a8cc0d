"""Turn-based HTTP + WebSocket service for live play, schema ``yle-svc/1``.

One process hosts many sessions. A session is created with a mix of human
and scripted seats; humans join to obtain a bearer token for their seat,
then read seat-scoped views and submit actions. Scripted seats advance
automatically after every human action (and at session start), so a lone
human always has opponents.

Privacy: a seat's view never contains another seat's private peeks, nor
face-down hint colours, nor ground-truth card colours. What a seat may see
of its own peek history follows the session's memory setting — the full log
when ``casual_memory`` is on, only the current turn's peeks (and only while
acting) otherwise. The full episode record, including hidden information,
becomes readable once the game is over.

Errors use one envelope: ``{"error": {"code": <reason>, "message": ...}}``
with reason codes BAD_SESSION, BAD_TOKEN, SEAT_TAKEN, OUT_OF_TURN,
ILLEGAL_ACTION, ILLEGAL_TARGET, STALE_VIEW and NOT_FINISHED.
"""

from __future__ import annotations

import asyncio
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import Body, FastAPI, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .actions import Action, ActionKind, cached_layout, legal_mask
from .agents import Policy, PolicyView, make_policy
from .config import GameConfig, HintTargetIndexing, make_config
from .errors import ConfigError, ContractError, RuleViolation
from .observation import MemoryMode, visible_colours
from .records import EpisodeRecord, EpisodeRecorder
from .rules import apply_action, count_complete_colour_clusters, new_game
from .state import GameState, HintStatus, Substep

SCHEMA = "yle-svc/1"

SCRIPTED_SPECS = ("random", "greedy", "oracle")

_HTTP_STATUS = {
    "BAD_SESSION": 404,
    "BAD_TOKEN": 403,
    "SEAT_TAKEN": 409,
    "OUT_OF_TURN": 409,
    "STALE_VIEW": 409,
    "ILLEGAL_ACTION": 422,
    "ILLEGAL_TARGET": 422,
    "NOT_FINISHED": 409,
}


class ServiceError(Exception):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=_HTTP_STATUS[self.code],
            content={"error": {"code": self.code, "message": self.message}},
        )


@dataclass
class SeatSlot:
    kind: str  # "human" or "scripted"
    spec: str | None = None  # policy spec for scripted seats
    policy: Policy | None = None
    token: str | None = None
    joined: bool = False


@dataclass
class Listener:
    seat: int
    loop: asyncio.AbstractEventLoop
    queue: asyncio.Queue


@dataclass
class Session:
    id: str
    config: GameConfig
    casual_memory: bool
    seats: list[SeatSlot]
    state: GameState
    recorder: EpisodeRecorder
    rngs: list[np.random.Generator]
    lock: threading.Lock = field(default_factory=threading.Lock)
    version: int = 0
    log: list[dict] = field(default_factory=list)
    listeners: list[Listener] = field(default_factory=list)
    record: EpisodeRecord | None = None

    @property
    def memory(self) -> MemoryMode:
        return MemoryMode.PERFECT if self.casual_memory else MemoryMode.STANDARD

    @property
    def started(self) -> bool:
        return all(slot.joined for slot in self.seats)

    @property
    def status(self) -> str:
        if self.state.terminal:
            return "finished"
        return "active" if self.started else "waiting"


def _parse_seats(entries, config: GameConfig) -> list[SeatSlot]:
    if not isinstance(entries, list) or len(entries) != config.num_players:
        raise ServiceError(
            "ILLEGAL_ACTION",
            f"seats must list {config.num_players} entries of 'human' or one of {SCRIPTED_SPECS}",
        )
    slots = []
    for entry in entries:
        if entry == "human":
            slots.append(SeatSlot(kind="human"))
        elif entry in SCRIPTED_SPECS:
            slots.append(
                SeatSlot(kind="scripted", spec=entry, policy=make_policy(entry, config), joined=True)
            )
        else:
            raise ServiceError("ILLEGAL_ACTION", f"unknown seat spec {entry!r}")
    return slots


def _action_payload(action: Action) -> dict:
    out = {"kind": action.kind.value}
    if action.card is not None:
        out["card"] = action.card
    if action.cell is not None:
        out["cell"] = [int(action.cell[0]), int(action.cell[1])]
    if action.hint is not None:
        out["hint"] = action.hint
    return out


def _parse_action(session: Session, payload: dict) -> int:
    """Accepts {'index': int} or {'action': {kind, card?, cell?, hint?}}."""
    layout = cached_layout(session.config)
    if "index" in payload:
        try:
            index = int(payload["index"])
        except (TypeError, ValueError):
            raise ServiceError("ILLEGAL_ACTION", "action index must be an integer") from None
        if not 0 <= index < layout.size:
            raise ServiceError("ILLEGAL_ACTION", f"action index {index} outside 0..{layout.size - 1}")
        return index
    body = payload.get("action")
    if not isinstance(body, dict):
        raise ServiceError("ILLEGAL_ACTION", "provide 'index' or a structured 'action'")
    try:
        kind = ActionKind(body.get("kind"))
        cell = body.get("cell")
        action = Action(
            kind=kind,
            card=None if body.get("card") is None else int(body["card"]),
            cell=None if cell is None else (int(cell[0]), int(cell[1])),
            hint=None if body.get("hint") is None else int(body["hint"]),
        )
        return layout.encode(action)
    except ContractError as exc:
        raise ServiceError("ILLEGAL_ACTION", f"unencodable action: {exc}") from None
    except (ValueError, TypeError, IndexError) as exc:
        raise ServiceError("ILLEGAL_ACTION", f"malformed action: {exc}") from None


def _substep_name(substep: Substep) -> str:
    return {
        Substep.PEEK1: "peek1",
        Substep.PEEK2: "peek2",
        Substep.MOVE: "move",
        Substep.HINT: "hint",
    }[substep]


def seat_view(session: Session, seat: int) -> dict:
    """Everything one seat may know, and nothing more."""
    state = session.state
    config = session.config
    finished = state.terminal
    known = visible_colours(state, seat, session.memory)
    cards = []
    for card in range(config.num_cards):
        hint = next((h for h in state.hints if h.placed_on == card), None)
        cards.append(
            {
                "id": card,
                "row": int(state.positions[card, 0]),
                "col": int(state.positions[card, 1]),
                "locked": bool(state.locked[card]),
                "inspected_by": [
                    s for s in range(config.num_players) if state.team_peeked[card] & (1 << s)
                ],
                "colour": int(state.colours[card]) if finished else (
                    int(known[card]) if known[card] >= 0 else None
                ),
                "hint": None if hint is None else {"id": hint.id, "colours": list(hint.colours)},
            }
        )
    hints = []
    for h in state.hints:
        revealed = h.status is not HintStatus.FACE_DOWN
        hints.append(
            {
                "id": h.id,
                "status": h.status.name.lower(),
                "colours": list(h.colours) if revealed or finished else None,
                "placed_on": h.placed_on,
            }
        )
    fd, rv, pl = state.hint_status_counts()
    view = {
        "schema": SCHEMA,
        "session": session.id,
        "version": session.version,
        "status": session.status,
        "config": config.to_dict(),
        "casual_memory": session.casual_memory,
        "seats": [
            {"seat": i, "kind": slot.kind, "policy": slot.spec, "joined": slot.joined}
            for i, slot in enumerate(session.seats)
        ],
        "you": {
            "seat": seat,
            "is_current": seat == state.current_player and not finished,
            "known_colours": {str(card): int(c) for card, c in enumerate(known) if c >= 0},
        },
        "current_player": state.current_player,
        "substep": int(state.substep),
        "substep_name": _substep_name(state.substep),
        "step_count": state.step_count,
        "max_steps": config.max_episode_steps,
        "board": {"grid_side": config.grid_side, "cards": cards},
        "hints": hints,
        "hint_counts": {"face_down": fd, "revealed": rv, "placed": pl},
        "log": list(session.log),
        "outcome": None,
    }
    if finished:
        view["outcome"] = {
            "won": state.outcome.won,
            "score": state.outcome.score,
            "ended_early": state.ended_early,
            "complete_clusters": count_complete_colour_clusters(state),
        }
        view["reveal"] = {"colours": [int(c) for c in state.colours]}
    return view


def legal_actions_payload(session: Session, seat: int) -> dict:
    state = session.state
    layout = cached_layout(session.config)
    mask = legal_mask(state, seat)
    actions = [
        {"index": int(i), **_action_payload(layout.decode(int(i)))} for i in np.flatnonzero(mask)
    ]
    return {
        "version": session.version,
        "seat": seat,
        "is_current": seat == state.current_player and not state.terminal,
        "actions": actions,
    }


class SessionStore:
    """All live sessions plus the locking and push plumbing around them."""

    def __init__(self) -> None:
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, payload: dict) -> Session:
        body = payload.get("config") or {}
        try:
            config = make_config(
                body.get("variant", "3x3"),
                int(body.get("players", 2)),
                hint_target_indexing=HintTargetIndexing(body.get("hint_indexing", "cell")),
            )
        except (ConfigError, ValueError) as exc:
            raise ServiceError("ILLEGAL_ACTION", f"bad config: {exc}") from None
        seats = _parse_seats(payload.get("seats", ["human"] * config.num_players), config)
        seed = payload.get("seed")
        seed = int(seed) if seed is not None else int.from_bytes(uuid.uuid4().bytes[:4], "big")
        casual = bool(payload.get("casual_memory", False))
        state = new_game(config, seed)
        session = Session(
            id=uuid.uuid4().hex[:12],
            config=config,
            casual_memory=casual,
            seats=seats,
            state=state,
            recorder=EpisodeRecorder(
                config,
                seed,
                memory=MemoryMode.PERFECT if casual else MemoryMode.STANDARD,
                policies=[slot.spec or "human" for slot in seats],
            ),
            rngs=[np.random.default_rng([seed, seat]) for seat in range(config.num_players)],
        )
        for seat, slot in enumerate(session.seats):
            if slot.policy is not None:
                slot.policy.reset(0, seat)
        with self._lock:
            self._sessions[session.id] = session
        with session.lock:
            if session.started:
                self._advance_scripted(session)
        return session

    def get(self, sid: str) -> Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            raise ServiceError("BAD_SESSION", f"no session {sid!r}")
        return session

    @staticmethod
    def authorize(session: Session, seat: int, token: str) -> None:
        if not 0 <= seat < len(session.seats):
            raise ServiceError("BAD_TOKEN", f"no seat {seat}")
        slot = session.seats[seat]
        if slot.token is None or token != slot.token:
            raise ServiceError("BAD_TOKEN", "token does not match the seat")

    def join(self, session: Session, requested: int | None) -> tuple[int, str]:
        with session.lock:
            if requested is None:
                candidates = [
                    i for i, s in enumerate(session.seats) if s.kind == "human" and not s.joined
                ]
                if not candidates:
                    raise ServiceError("SEAT_TAKEN", "no free human seat")
                seat = candidates[0]
            else:
                seat = requested
                if not 0 <= seat < len(session.seats):
                    raise ServiceError("SEAT_TAKEN", f"no seat {seat}")
                slot = session.seats[seat]
                if slot.kind != "human":
                    raise ServiceError("SEAT_TAKEN", f"seat {seat} is scripted")
                if slot.joined:
                    raise ServiceError("SEAT_TAKEN", f"seat {seat} already has a player")
            slot = session.seats[seat]
            slot.token = uuid.uuid4().hex
            slot.joined = True
            if session.started and not session.state.terminal:
                self._advance_scripted(session)
            self._notify(session)
            return seat, slot.token

    # -- game progression (always called with session.lock held) -----------

    def _apply(self, session: Session, seat: int, index: int) -> dict:
        layout = cached_layout(session.config)
        state = session.state
        joint = [layout.noop_index] * session.config.num_players
        joint[seat] = index
        pre = state
        nxt, events = apply_action(state, joint)
        session.recorder.record_step(pre, joint, events, nxt)
        session.state = nxt
        session.version += 1
        action = layout.decode(index)
        entry = {
            "version": session.version,
            "seat": seat,
            "substep": _substep_name(pre.substep),
            "turn_player": pre.current_player,
            **_action_payload(action),
            "describe": action.describe(),
        }
        session.log.append(entry)
        if nxt.terminal and session.record is None:
            session.record = session.recorder.finish(nxt)
        self._notify(session)
        return entry

    def _advance_scripted(self, session: Session) -> None:
        layout = cached_layout(session.config)
        while not session.state.terminal:
            seat = session.state.current_player
            slot = session.seats[seat]
            if slot.policy is None:
                break
            mask = legal_mask(session.state, seat)
            view = PolicyView(
                seat=seat,
                episode=0,
                step=session.state.step_count,
                mask=mask,
                layout=layout,
                state=session.state,
            )
            decision = slot.policy.act(view, session.rngs[seat])
            self._apply(session, seat, decision.action)

    def submit(self, session: Session, seat: int, token: str, payload: dict) -> dict:
        with session.lock:
            self.authorize(session, seat, token)
            if payload.get("version") is not None:
                try:
                    expected = int(payload["version"])
                except (TypeError, ValueError):
                    raise ServiceError("STALE_VIEW", "version must be an integer") from None
                if expected != session.version:
                    raise ServiceError(
                        "STALE_VIEW", f"view version {expected} is stale (now {session.version})"
                    )
            state = session.state
            if state.terminal:
                raise ServiceError("OUT_OF_TURN", "the game is over")
            if not session.started:
                raise ServiceError("OUT_OF_TURN", "waiting for all players to join")
            if seat != state.current_player:
                raise ServiceError("OUT_OF_TURN", f"it is seat {state.current_player}'s turn")
            index = _parse_action(session, payload)
            mask = legal_mask(state, seat)
            if not mask[index]:
                kind = cached_layout(session.config).decode(index).kind
                legal_kinds = {
                    cached_layout(session.config).decode(int(i)).kind
                    for i in np.flatnonzero(mask)
                }
                code = "ILLEGAL_TARGET" if kind in legal_kinds else "ILLEGAL_ACTION"
                raise ServiceError(code, f"{kind.value} is not legal here")
            try:
                applied = self._apply(session, seat, index)
            except RuleViolation as exc:
                raise ServiceError("ILLEGAL_ACTION", str(exc)) from None
            self._advance_scripted(session)
            return applied

    # -- websocket push part ------------------------------------------------

    def subscribe(self, session: Session, seat: int) -> Listener:
        listener = Listener(seat=seat, loop=asyncio.get_running_loop(), queue=asyncio.Queue())
        with session.lock:
            session.listeners.append(listener)
        return listener

    def unsubscribe(self, session: Session, listener: Listener) -> None:
        with session.lock:
            if listener in session.listeners:
                session.listeners.remove(listener)

    @staticmethod
    def _notify(session: Session) -> None:
        for listener in session.listeners:
            payload = {"type": "view", "view": seat_view(session, listener.seat)}
            listener.loop.call_soon_threadsafe(listener.queue.put_nowait, payload)


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="yokai service", version=SCHEMA)
    app.state.store = store = store or SessionStore()

    @app.exception_handler(ServiceError)
    async def handle_service_error(request, exc: ServiceError):
        return exc.response()

    @app.get("/")
    def root():
        return {"schema": SCHEMA, "sessions": len(store._sessions)}

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(default={})):
        session = store.create(payload)
        return {
            "schema": SCHEMA,
            "session": session.id,
            "status": session.status,
            "seats": [
                {"seat": i, "kind": slot.kind, "policy": slot.spec, "joined": slot.joined}
                for i, slot in enumerate(session.seats)
            ],
        }

    @app.post("/sessions/{sid}/join")
    def join_session(sid: str, payload: dict = Body(default={})):
        session = store.get(sid)
        requested = payload.get("seat")
        seat, token = store.join(session, None if requested is None else int(requested))
        with session.lock:
            view = seat_view(session, seat)
        return {"seat": seat, "token": token, "view": view}

    @app.get("/sessions/{sid}/view")
    def get_view(sid: str, seat: int = Query(...), token: str = Query(...)):
        session = store.get(sid)
        store.authorize(session, seat, token)
        with session.lock:
            return seat_view(session, seat)

    @app.get("/sessions/{sid}/legal_targets")
    def get_legal_targets(sid: str, seat: int = Query(...), token: str = Query(...)):
        session = store.get(sid)
        store.authorize(session, seat, token)
        with session.lock:
            return legal_actions_payload(session, seat)

    @app.post("/sessions/{sid}/actions")
    def post_action(sid: str, payload: dict = Body(default={})):
        session = store.get(sid)
        seat = payload.get("seat")
        token = payload.get("token")
        if not isinstance(seat, int) or not isinstance(token, str):
            raise ServiceError("BAD_TOKEN", "actions need integer 'seat' and string 'token'")
        applied = store.submit(session, seat, token, payload)
        with session.lock:
            return {"applied": applied, "view": seat_view(session, seat)}

    @app.get("/sessions/{sid}/record")
    def get_record(sid: str):
        session = store.get(sid)
        with session.lock:
            if session.record is None:
                raise ServiceError("NOT_FINISHED", "the episode record is published at game end")
            return session.record.to_dict()

    @app.websocket("/sessions/{sid}/ws")
    async def websocket_seat(ws: WebSocket, sid: str, seat: int = Query(...), token: str = Query(...)):
        try:
            session = store.get(sid)
            store.authorize(session, seat, token)
        except ServiceError as exc:
            await ws.close(code=4003, reason=exc.code)
            return
        await ws.accept()
        listener = store.subscribe(session, seat)
        try:
            with session.lock:
                first = {"type": "view", "view": seat_view(session, seat)}
            await ws.send_json(first)
            while True:
                await ws.send_json(await listener.queue.get())
        except WebSocketDisconnect:
            pass
        finally:
            store.unsubscribe(session, listener)

    return app
