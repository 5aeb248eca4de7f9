import http.client
import json
import socket
import threading
import time

import numpy as np
import pytest

from equicity.config import config_to_dict
from equicity.service import GameService, make_server

from conftest import make_workshop_config


@pytest.fixture(scope="module")
def server(tmp_path_factory):
    root = tmp_path_factory.mktemp("service-workshop")
    config = make_workshop_config(root)
    service = GameService(root_token="root-secret")
    httpd = make_server(service, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield {
        "port": httpd.server_address[1],
        "service": service,
        "config": config,
        "field_root": root,
    }
    httpd.shutdown()


def request(port, method, path, token=None, body=None):
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=15)
    headers = {}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    payload = None
    if body is not None:
        payload = json.dumps(body).encode()
        headers["Content-Type"] = "application/json"
    conn.request(method, path, body=payload, headers=headers)
    resp = conn.getresponse()
    raw = resp.read()
    conn.close()
    return resp.status, json.loads(raw or b"{}"), raw


def new_game(server):
    status, created, _ = request(
        server["port"],
        "POST",
        "/games",
        token="root-secret",
        body={
            "config": config_to_dict(server["config"]),
            "field_root": str(server["field_root"]),
        },
    )
    assert status == 201, created
    return created


def submit_payload(cfg, rng, comment=""):
    return {
        "interests": (rng.random((cfg.n, cfg.o)) + 0.1).tolist(),
        "weights": (rng.random(cfg.e) + 0.1).tolist(),
        "comment": comment,
    }


def play_round(server, game, rng):
    cfg = server["config"]
    for i in range(cfg.m):
        token = game["actor_tokens"][str(i)]
        status, body, _ = request(
            server["port"],
            "POST",
            f"/games/{game['game_id']}/decisions",
            token=token,
            body=submit_payload(cfg, rng),
        )
        assert status == 200, body
    return body


def read_events(port, game_id, token, expect, last_event_id=None, timeout=15.0):
    sock = socket.create_connection(("127.0.0.1", port), timeout=0.5)
    req = (
        f"GET /games/{game_id}/events HTTP/1.1\r\n"
        f"Host: 127.0.0.1\r\n"
        f"Authorization: Bearer {token}\r\n"
        + (f"Last-Event-ID: {last_event_id}\r\n" if last_event_id is not None else "")
        + "\r\n"
    )
    sock.sendall(req.encode())
    reader = sock.makefile("rb")
    events = []
    current: dict = {}
    in_body = False
    deadline = time.time() + timeout
    while len(events) < expect and time.time() < deadline:
        try:
            line = reader.readline()
        except (TimeoutError, OSError):
            continue
        if not line:
            break
        line = line.decode().rstrip("\r\n")
        if not in_body:
            if line == "":
                in_body = True
            continue
        if line.startswith(":"):
            continue
        if line == "":
            if current:
                events.append(current)
                current = {}
            continue
        key, _, value = line.partition(": ")
        current[key] = value
    reader.close()
    sock.close()
    return events


class TestAuth:
    def test_create_requires_root_token(self, server):
        status, body, _ = request(server["port"], "POST", "/games", token="wrong", body={})
        assert status == 401

    def test_unknown_token_rejected(self, server):
        game = new_game(server)
        status, _, _ = request(
            server["port"], "GET", f"/games/{game['game_id']}/state", token="nope"
        )
        assert status == 401

    def test_unknown_game_404(self, server):
        status, _, _ = request(server["port"], "GET", "/games/zzz/state", token="root-secret")
        assert status == 404

    def test_master_cannot_submit(self, server):
        game = new_game(server)
        status, body, _ = request(
            server["port"],
            "POST",
            f"/games/{game['game_id']}/decisions",
            token=game["master_token"],
            body={"interests": [], "weights": []},
        )
        assert status == 403

    def test_actor_cannot_advance_or_read_analytics(self, server):
        game = new_game(server)
        actor_token = game["actor_tokens"]["0"]
        status, _, _ = request(
            server["port"],
            "POST",
            f"/games/{game['game_id']}/advance",
            token=actor_token,
            body={},
        )
        assert status == 403
        status, _, _ = request(
            server["port"], "GET", f"/games/{game['game_id']}/analytics", token=actor_token
        )
        assert status == 403

    def test_schema_published(self, server):
        status, schemas, _ = request(server["port"], "GET", "/schema")
        assert status == 200
        assert {"config", "decision", "events", "round_record"} <= set(schemas)


class TestRoundFlow:
    def test_submit_increments_pending(self, server):
        game = new_game(server)
        cfg = server["config"]
        rng = np.random.default_rng(0)
        gid = game["game_id"]
        _, before, _ = request(
            server["port"], "GET", f"/games/{gid}/state", token=game["master_token"]
        )
        assert before["pending_count"] == 0
        request(
            server["port"],
            "POST",
            f"/games/{gid}/decisions",
            token=game["actor_tokens"]["0"],
            body=submit_payload(cfg, rng),
        )
        _, after, _ = request(
            server["port"], "GET", f"/games/{gid}/state", token=game["master_token"]
        )
        assert after["pending_count"] == before["pending_count"] + 1

    def test_full_roster_advances_round(self, server):
        game = new_game(server)
        rng = np.random.default_rng(1)
        play_round(server, game, rng)
        _, snap, _ = request(
            server["port"],
            "GET",
            f"/games/{game['game_id']}/state",
            token=game["master_token"],
        )
        assert snap["round"] == 1
        assert snap["phase"] == "COLLECTING"
        assert len(snap["score_history"]) == 1
        assert snap["badge_history"][0]["gainer"] is not None

    def test_me_view(self, server):
        game = new_game(server)
        status, me, _ = request(
            server["port"],
            "GET",
            f"/games/{game['game_id']}/me",
            token=game["actor_tokens"]["2"],
        )
        assert status == 200
        assert me["actor"] == 2
        assert len(me["agenda"]) == server["config"].n
        assert len(me["power_surplus"]) == server["config"].n

    def test_negative_entry_422(self, server):
        game = new_game(server)
        cfg = server["config"]
        bad = np.ones((cfg.n, cfg.o))
        bad[0, 0] = -1.0
        status, body, _ = request(
            server["port"],
            "POST",
            f"/games/{game['game_id']}/decisions",
            token=game["actor_tokens"]["0"],
            body={"interests": bad.tolist(), "weights": [1.0] * cfg.e},
        )
        assert status == 422
        assert body["error"]["code"] == "ZeroRowOrNegative"

    def test_zero_column_422(self, server):
        game = new_game(server)
        cfg = server["config"]
        bad = np.ones((cfg.n, cfg.o))
        bad[:, 1] = 0.0
        status, body, _ = request(
            server["port"],
            "POST",
            f"/games/{game['game_id']}/decisions",
            token=game["actor_tokens"]["0"],
            body={"interests": bad.tolist(), "weights": [1.0] * cfg.e},
        )
        assert status == 422
        assert body["error"]["code"] == "ZeroRowOrNegative"

    def test_advance_wrong_phase_409(self, server):
        game = new_game(server)
        status, body, _ = request(
            server["port"],
            "POST",
            f"/games/{game['game_id']}/advance",
            token=game["master_token"],
            body={},
        )
        assert status == 409
        assert body["error"]["code"] == "WrongPhase"

    def test_force_advance_fills_absentees(self, server):
        game = new_game(server)
        cfg = server["config"]
        rng = np.random.default_rng(2)
        request(
            server["port"],
            "POST",
            f"/games/{game['game_id']}/decisions",
            token=game["actor_tokens"]["0"],
            body=submit_payload(cfg, rng),
        )
        status, body, _ = request(
            server["port"],
            "POST",
            f"/games/{game['game_id']}/advance",
            token=game["master_token"],
            body={"force": True},
        )
        assert status == 200
        assert body["t"] == 0

    def test_round_view_and_404(self, server):
        game = new_game(server)
        rng = np.random.default_rng(3)
        play_round(server, game, rng)
        gid = game["game_id"]
        status, view, _ = request(
            server["port"], "GET", f"/games/{gid}/rounds/0", token=game["actor_tokens"]["1"]
        )
        assert status == 200
        assert view["t"] == 0
        assert len(view["voxels"]) > 0
        status, _, _ = request(
            server["port"], "GET", f"/games/{gid}/rounds/7", token=game["actor_tokens"]["1"]
        )
        assert status == 404

    def test_analytics_master_only_content(self, server):
        game = new_game(server)
        rng = np.random.default_rng(4)
        for _ in range(2):
            play_round(server, game, rng)
        status, report, _ = request(
            server["port"],
            "GET",
            f"/games/{game['game_id']}/analytics",
            token=game["master_token"],
        )
        assert status == 200
        assert "anova" in report and "levene" in report


class TestInvariants:
    def test_idempotent_state_reads(self, server):
        game = new_game(server)
        rng = np.random.default_rng(5)
        play_round(server, game, rng)
        gid = game["game_id"]
        _, _, raw1 = request(
            server["port"], "GET", f"/games/{gid}/state", token=game["master_token"]
        )
        _, _, raw2 = request(
            server["port"], "GET", f"/games/{gid}/state", token=game["master_token"]
        )
        assert raw1 == raw2

    def test_no_loser_leakage(self, server):
        game = new_game(server)
        rng = np.random.default_rng(6)
        play_round(server, game, rng)
        gid = game["game_id"]
        actor_token = game["actor_tokens"]["0"]
        bodies = []
        for path in [f"/games/{gid}/state", f"/games/{gid}/me", f"/games/{gid}/rounds/0"]:
            _, _, raw = request(server["port"], "GET", path, token=actor_token)
            bodies.append(raw)
        for raw in bodies:
            assert b"loser" not in raw
        # the master view does carry it
        _, master_view, _ = request(
            server["port"], "GET", f"/games/{gid}/rounds/0", token=game["master_token"]
        )
        assert "loser" in master_view["badges"]

    def test_loser_never_in_event_stream(self, server):
        game = new_game(server)
        rng = np.random.default_rng(7)
        play_round(server, game, rng)
        events = read_events(
            server["port"],
            game["game_id"],
            game["actor_tokens"]["0"],
            expect=server["config"].m + 3,
        )
        assert all("loser" not in e.get("data", "") for e in events)


class TestEventStream:
    def test_submission_sequence(self, server):
        game = new_game(server)
        cfg = server["config"]
        rng = np.random.default_rng(8)
        play_round(server, game, rng)
        events = read_events(
            server["port"], game["game_id"], game["actor_tokens"]["0"], expect=cfg.m + 3
        )
        types = [e["event"] for e in events]
        assert types[0] == "ROUND_STARTED"
        assert types[1 : 1 + cfg.m] == ["DECISION_RECEIVED"] * cfg.m
        assert types[1 + cfg.m] == "ROUND_COMPLETE"
        assert types[2 + cfg.m] == "ROUND_STARTED"
        complete = json.loads(events[1 + cfg.m]["data"])
        assert complete["t"] == 0
        assert set(complete["badges"]) == {"gainer", "player", "contributor"}

    def test_replay_after_reconnect_identical(self, server):
        game = new_game(server)
        cfg = server["config"]
        rng = np.random.default_rng(9)
        play_round(server, game, rng)
        total = cfg.m + 3
        full = read_events(
            server["port"], game["game_id"], game["actor_tokens"]["0"], expect=total
        )
        replayed = read_events(
            server["port"],
            game["game_id"],
            game["actor_tokens"]["0"],
            expect=total - 2,
            last_event_id=2,
        )
        assert [e["id"] for e in replayed] == [e["id"] for e in full][2:]
        assert replayed == full[2:]

    def test_two_subscribers_identical(self, server):
        game = new_game(server)
        cfg = server["config"]
        rng = np.random.default_rng(10)
        play_round(server, game, rng)
        total = cfg.m + 3
        a = read_events(server["port"], game["game_id"], game["actor_tokens"]["0"], expect=total)
        b = read_events(server["port"], game["game_id"], game["actor_tokens"]["1"], expect=total)
        assert a == b

    def test_at_most_one_round_complete_per_index(self, server):
        game = new_game(server)
        cfg = server["config"]
        rng = np.random.default_rng(11)
        for _ in range(3):
            play_round(server, game, rng)
        events = read_events(
            server["port"],
            game["game_id"],
            game["actor_tokens"]["0"],
            expect=3 * (cfg.m + 2) + 1,
        )
        completes = [json.loads(e["data"])["t"] for e in events if e["event"] == "ROUND_COMPLETE"]
        assert sorted(completes) == sorted(set(completes)) == [0, 1, 2]

    def test_live_push_after_subscribe(self, server):
        game = new_game(server)
        cfg = server["config"]
        rng = np.random.default_rng(12)
        collected = {}

        def listen():
            collected["events"] = read_events(
                server["port"],
                game["game_id"],
                game["actor_tokens"]["0"],
                expect=cfg.m + 3,
                timeout=20,
            )

        thread = threading.Thread(target=listen)
        thread.start()
        time.sleep(0.3)
        play_round(server, game, rng)
        thread.join(timeout=25)
        types = [e["event"] for e in collected["events"]]
        assert types.count("ROUND_COMPLETE") == 1
