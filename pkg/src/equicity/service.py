"""Turn-based HTTP front door: session API, decision submission, event push.

Plain HTTP/1.1 with JSON bodies plus a server-sent-event channel per game.
The game is strictly turn-based, so request/response covers all client-to-
server traffic; pushes flow through an append-only per-game event log that
reconnecting clients replay from their last seen id. Tokens are static per
game instance: one per actor plus a master token with elevated scope.
"""

from __future__ import annotations

import json
import queue
import secrets
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import analytics, engine
from .config import config_from_dict
from .errors import (
    ConfigInvalid,
    EquicityError,
    NegativeEntry,
    ShapeMismatch,
    UnknownActor,
    WrongPhase,
    ZeroRow,
)

SUBSCRIBER_BUFFER = 128


@dataclass
class Event:
    id: int
    type: str
    data: dict

    def sse(self) -> str:
        payload = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return f"id: {self.id}\nevent: {self.type}\ndata: {payload}\n\n"


class _Subscriber:
    def __init__(self):
        self.queue: queue.Queue[Event] = queue.Queue(maxsize=SUBSCRIBER_BUFFER)
        self.dropped = False


class GameSession:
    """One hosted game: engine state, tokens, and its ordered event log."""

    def __init__(self, game_id: str, state: engine.GameState):
        self.id = game_id
        self.state = state
        self.lock = threading.RLock()
        self.master_token = secrets.token_urlsafe(16)
        self.actor_tokens = {
            secrets.token_urlsafe(16): i for i in range(state.config.m)
        }
        self.events: list[Event] = []
        self.subscribers: list[_Subscriber] = []
        self.emit("ROUND_STARTED", {"t": state.t})

    # -- events ------------------------------------------------------------

    def emit(self, type_: str, data: dict) -> None:
        event = Event(len(self.events) + 1, type_, data)
        self.events.append(event)
        for sub in self.subscribers:
            if sub.dropped:
                continue
            try:
                sub.queue.put_nowait(event)
            except queue.Full:
                # slow consumer: stop feeding it; its stream closes with a resync hint
                sub.dropped = True

    def subscribe(self, last_event_id: int) -> tuple[list[Event], _Subscriber]:
        with self.lock:
            sub = _Subscriber()
            replay = [e for e in self.events if e.id > last_event_id]
            self.subscribers.append(sub)
            return replay, sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self.lock:
            if sub in self.subscribers:
                self.subscribers.remove(sub)

    # -- game actions --------------------------------------------------------

    def token_actor(self, token: str) -> int | None:
        return self.actor_tokens.get(token)

    def knows_token(self, token: str) -> bool:
        return token == self.master_token or token in self.actor_tokens

    def submit(self, actor: int, interests, weights, comment: str) -> dict:
        with self.lock:
            engine.submit_decision(self.state, actor, interests, weights, comment)
            self.emit(
                "DECISION_RECEIVED",
                {"round": self.state.t, "count": self.state.pending_count()},
            )
            if self.state.phase == engine.Phase.PROCESSING:
                self._process_round()
            return {"accepted": True, "pending": self.state.pending_count()}

    def advance(self, force: bool) -> dict:
        with self.lock:
            if self.state.phase == engine.Phase.COLLECTING and force:
                engine.fill_absentees(self.state)
            if self.state.phase != engine.Phase.PROCESSING:
                raise WrongPhase(engine.Phase.PROCESSING.value, self.state.phase.value)
            return self._process_round()

    def _process_round(self) -> dict:
        record = engine.advance_round(self.state)
        engine.acknowledge_round(self.state)
        self.emit(
            "ROUND_COMPLETE",
            {
                "t": record.t,
                "scores": record.scores,
                "badges": record.badges.public_view(),
            },
        )
        self.emit("ROUND_STARTED", {"t": self.state.t})
        return {"t": record.t, "scores": record.scores}


class GameService:
    """In-process registry of hosted games; the HTTP handler delegates here."""

    def __init__(self, root_token: str | None = None):
        self.root_token = root_token or secrets.token_urlsafe(16)
        self.games: dict[str, GameSession] = {}
        self.lock = threading.Lock()

    def create_game(self, config_dict: dict, field_root: str = ".") -> dict:
        config = config_from_dict(config_dict)
        state = engine.create_game(config, field_root=field_root)
        with self.lock:
            game_id = f"g{len(self.games) + 1:04d}"
            session = GameSession(game_id, state)
            self.games[game_id] = session
        return {
            "game_id": game_id,
            "master_token": session.master_token,
            "actor_tokens": {str(i): t for t, i in session.actor_tokens.items()},
        }

    def add_session(self, state: engine.GameState) -> GameSession:
        with self.lock:
            game_id = f"g{len(self.games) + 1:04d}"
            session = GameSession(game_id, state)
            self.games[game_id] = session
        return session


SCHEMAS = {
    "config": {
        "type": "object",
        "required": [
            "actors",
            "sites",
            "colours",
            "programme",
            "control",
            "closeness",
            "criteria",
            "grid",
        ],
        "properties": {
            "name": {"type": "string"},
            "actors": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "agenda"],
                    "properties": {
                        "name": {"type": "string"},
                        "role": {"type": "string"},
                        "agenda": {"description": "(sites x colours) matrix"},
                    },
                },
            },
            "sites": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": [
                        "name",
                        "polygon",
                        "entry",
                        "max_height",
                        "max_gfa",
                        "existing",
                        "change_cost",
                    ],
                },
            },
            "colours": {"type": "array", "items": {"required": ["name", "scale"]}},
            "programme": {"description": "(colours,) net floor areas, m2"},
            "control": {"description": "(sites x actors x colours) tensor"},
            "closeness": {"description": "(colours x colours) symmetric ratings"},
            "criteria": {
                "type": "array",
                "items": {"required": ["name", "kind"], "description": "kind: file | synthetic-solar"},
            },
            "grid": {"required": ["cell_size"]},
            "ipf": {"properties": {"eps": {}, "max_iter": {}}},
            "policy": {"enum": ["strict", "scale-rows", "scale-cols"]},
        },
    },
    "decision": {
        "type": "object",
        "required": ["interests", "weights"],
        "properties": {
            "interests": {"description": "(sites x colours) nonnegative matrix"},
            "weights": {"description": "(criteria,) nonnegative vector"},
            "comment": {"type": "string"},
        },
    },
    "events": {
        "types": ["ROUND_STARTED", "DECISION_RECEIVED", "ROUND_COMPLETE"],
        "resume": "reconnect with Last-Event-ID header or ?lastEventId=",
    },
    "round_record": {
        "description": "GET /games/{id}/rounds/{t}",
        "properties": {
            "t": {},
            "allocation": {},
            "volumes": {},
            "scores": {},
            "badges": {"description": "loser only present for the master token"},
            "voxels": {"items": {"required": ["morton", "site", "colour"]}},
        },
    },
}


class _HttpError(Exception):
    def __init__(self, status: int, code: str, detail: str = ""):
        self.status = status
        self.code = code
        self.detail = detail
        super().__init__(detail or code)


def _validation_code(err: EquicityError) -> str:
    if isinstance(err, (ZeroRow, NegativeEntry)):
        return "ZeroRowOrNegative"
    return err.code


class ServiceHandler(BaseHTTPRequestHandler):
    service: GameService  # injected by make_server
    protocol_version = "HTTP/1.1"

    # -- plumbing -----------------------------------------------------------

    def log_message(self, *args):  # quiet by default
        pass

    def _token(self) -> str | None:
        auth = self.headers.get("Authorization", "")
        if auth.startswith("Bearer "):
            return auth[len("Bearer ") :].strip()
        params = parse_qs(urlparse(self.path).query)
        values = params.get("token")
        return values[0] if values else None

    def _json_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            body = json.loads(raw or b"{}")
        except json.JSONDecodeError as err:
            raise _HttpError(400, "MalformedJson", str(err)) from err
        if not isinstance(body, dict):
            raise _HttpError(400, "MalformedJson", "body must be a JSON object")
        return body

    def _respond(self, status: int, payload: dict) -> None:
        blob = json.dumps(payload, sort_keys=True).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def _error(self, status: int, code: str, detail: str = "") -> None:
        self._respond(status, {"error": {"code": code, "detail": detail}})

    def _session(self, game_id: str) -> GameSession:
        session = self.service.games.get(game_id)
        if session is None:
            raise _HttpError(404, "UnknownGame", f"no game {game_id!r}")
        return session

    def _authorize(self, session: GameSession) -> tuple[str, int | None]:
        """Returns (scope, actor): scope in {'master', 'actor'}."""
        token = self._token()
        if token is None or not session.knows_token(token):
            raise _HttpError(401, "Unauthorized", "missing or unknown token")
        if token == session.master_token:
            return "master", None
        return "actor", session.token_actor(token)

    # -- routing ------------------------------------------------------------

    def do_GET(self):
        try:
            self._route("GET")
        except _HttpError as err:
            self._error(err.status, err.code, err.detail)
        except BrokenPipeError:
            pass

    def do_POST(self):
        try:
            self._route("POST")
        except _HttpError as err:
            self._error(err.status, err.code, err.detail)
        except BrokenPipeError:
            pass

    def _route(self, method: str):
        parts = [p for p in urlparse(self.path).path.split("/") if p]
        if method == "GET" and parts == ["schema"]:
            self._respond(200, SCHEMAS)
            return
        if method == "POST" and parts == ["games"]:
            self._create_game()
            return
        if len(parts) >= 2 and parts[0] == "games":
            session = self._session(parts[1])
            rest = parts[2:]
            if method == "GET" and rest == ["state"]:
                self._state(session)
            elif method == "GET" and rest == ["me"]:
                self._me(session)
            elif method == "POST" and rest == ["decisions"]:
                self._decide(session)
            elif method == "POST" and rest == ["advance"]:
                self._advance(session)
            elif method == "GET" and len(rest) == 2 and rest[0] == "rounds":
                self._round(session, rest[1])
            elif method == "GET" and rest == ["analytics"]:
                self._analytics(session)
            elif method == "GET" and rest == ["events"]:
                self._events(session)
            else:
                raise _HttpError(404, "UnknownRoute", self.path)
            return
        raise _HttpError(404, "UnknownRoute", self.path)

    # -- endpoints ----------------------------------------------------------

    def _create_game(self):
        token = self._token()
        if token != self.service.root_token:
            raise _HttpError(401, "Unauthorized", "game creation needs the root token")
        body = self._json_body()
        if "config" not in body:
            raise _HttpError(422, "MissingConfig", "body must carry a config object")
        try:
            created = self.service.create_game(body["config"], body.get("field_root", "."))
        except ConfigInvalid as err:
            raise _HttpError(422, err.code, str(err)) from err
        except EquicityError as err:
            raise _HttpError(422, err.code, str(err)) from err
        self._respond(201, created)

    def _state(self, session: GameSession):
        self._authorize(session)
        with session.lock:
            self._respond(200, engine.public_snapshot(session.state))

    def _me(self, session: GameSession):
        scope, actor = self._authorize(session)
        if scope != "actor":
            raise _HttpError(403, "Forbidden", "the master token has no actor identity")
        with session.lock:
            self._respond(200, engine.actor_view(session.state, actor))

    def _decide(self, session: GameSession):
        scope, actor = self._authorize(session)
        if scope != "actor":
            raise _HttpError(403, "Forbidden", "decisions need an actor token")
        body = self._json_body()
        if "interests" not in body or "weights" not in body:
            raise _HttpError(422, "MissingFields", "need interests and weights")
        try:
            result = session.submit(
                actor, body["interests"], body["weights"], body.get("comment", "")
            )
        except WrongPhase as err:
            raise _HttpError(409, err.code, str(err)) from err
        except (ZeroRow, NegativeEntry, ShapeMismatch, UnknownActor) as err:
            raise _HttpError(422, _validation_code(err), str(err)) from err
        except EquicityError as err:
            # pipeline failure during auto-processing; decisions survive intact
            raise _HttpError(500, err.code, str(err)) from err
        self._respond(200, result)

    def _advance(self, session: GameSession):
        scope, _ = self._authorize(session)
        if scope != "master":
            raise _HttpError(403, "Forbidden", "advance needs the master token")
        body = self._json_body()
        try:
            result = session.advance(bool(body.get("force", False)))
        except WrongPhase as err:
            raise _HttpError(409, err.code, str(err)) from err
        except EquicityError as err:
            raise _HttpError(500, err.code, str(err)) from err
        self._respond(200, result)

    def _round(self, session: GameSession, index: str):
        scope, _ = self._authorize(session)
        try:
            t = int(index)
        except ValueError as err:
            raise _HttpError(404, "UnknownRound", index) from err
        with session.lock:
            if not 0 <= t < len(session.state.history):
                raise _HttpError(404, "UnknownRound", f"round {t} not recorded")
            record = session.state.history[t]
            view = engine.record_view(record, session.state.config.o, master=scope == "master")
        self._respond(200, view)

    def _analytics(self, session: GameSession):
        scope, _ = self._authorize(session)
        if scope != "master":
            raise _HttpError(403, "Forbidden", "analytics needs the master token")
        with session.lock:
            tensor = engine.history_decision_tensor(session.state)
            records = [r.to_dict() for r in session.state.history]
        if tensor.shape[0] == 0:
            self._respond(200, {"error": "no rounds recorded yet"})
            return
        self._respond(200, analytics.build_report(tensor, records))

    def _events(self, session: GameSession):
        self._authorize(session)
        last_id = 0
        header = self.headers.get("Last-Event-ID")
        if header and header.isdigit():
            last_id = int(header)
        params = parse_qs(urlparse(self.path).query)
        if "lastEventId" in params:
            try:
                last_id = int(params["lastEventId"][0])
            except ValueError:
                pass
        replay, sub = session.subscribe(last_id)
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Connection", "close")
        self.end_headers()
        try:
            for event in replay:
                self.wfile.write(event.sse().encode())
            self.wfile.flush()
            while True:
                if sub.dropped:
                    self.wfile.write(b"event: RESYNC\ndata: {}\n\n")
                    self.wfile.flush()
                    break
                try:
                    event = sub.queue.get(timeout=0.5)
                except queue.Empty:
                    self.wfile.write(b": keep-alive\n\n")
                    self.wfile.flush()
                    continue
                self.wfile.write(event.sse().encode())
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            session.unsubscribe(sub)


def make_server(service: GameService, port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (ServiceHandler,), {"service": service})
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    server.daemon_threads = True
    return server


def serve_forever(service: GameService, port: int) -> None:
    server = make_server(service, port)
    host, bound_port = server.server_address
    print(f"listening on http://{host}:{bound_port}")
    print(f"root token: {service.root_token}")
    for game_id, session in service.games.items():
        print(f"game {game_id}: master token {session.master_token}")
        for token, actor in session.actor_tokens.items():
            name = session.state.config.actors[actor].name
            print(f"  actor {actor} ({name}): {token}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
