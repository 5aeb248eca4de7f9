#!/usr/bin/env python3
"""Regenerate the frontend's recorded-payload fixtures from the engine.

The web client's tests are locked to these files: the normalization cases
must stay byte-equal with the engine's normalization, and the view tests
replay real snapshots, record views, events, and an analytics report.

Usage: python scripts/export_frontend_fixtures.py [--dest frontend/fixtures]
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from equicity import analytics, engine, voxels
from equicity.config import normalize_decision_slice
from equicity.demo import make_demo_config


def compact(payload) -> str:
    return json.dumps(payload, separators=(",", ":"))


def normalization_cases() -> dict:
    rng = np.random.default_rng(20240515)
    cases = []
    for n, o in [(3, 2), (7, 5), (5, 1), (2, 4)]:
        raw = (rng.random((n, o)) * 4 + 0.25).round(3)  # strictly positive sliders
        normalized = normalize_decision_slice(raw, n, o)
        cases.append(
            {
                "input": raw.tolist(),
                "expected_json": compact(normalized.tolist()),
            }
        )
    # already-normalized input passes through bit-identically
    ready = normalize_decision_slice(np.array([[0.25, 0.5], [0.75, 0.5]]), 2, 2)
    cases.append({"input": ready.tolist(), "expected_json": compact(ready.tolist())})
    return {"cases": cases}


def decision_payload_case() -> dict:
    interests = [[1.5, 2.25], [0.75, 1.5], [2.25, 0.75]]
    weights = [0.25, 0.5, 0.25]
    comment = "shift housing north"
    payload = {"interests": interests, "weights": weights, "comment": comment}
    return {
        "interests": interests,
        "weights": weights,
        "comment": comment,
        "expected_json": compact(payload),
    }


def morton_cases() -> dict:
    cases = []
    for ijk in [(0, 0, 0), (1, 1, 1), (3, 5, 7), (20, 11, 2), (1024, 2048, 4096)]:
        cases.append({"ijk": list(ijk), "code": str(voxels.morton_encode(*ijk))})
    return {"cases": cases}


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--dest", default=str(Path(__file__).resolve().parents[1] / "frontend" / "fixtures"))
    args = parser.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        config = make_demo_config(root, seed=11)
        # stubborn actors: identical decisions -> identical mass in every round
        policies = [engine.ActorPolicy("stubborn") for _ in range(config.m)]
        state, records = engine.simulate(config, policies, rounds=3, seed=5, field_root=root)

        (dest / "normalization.json").write_text(json.dumps(normalization_cases(), indent=2))
        (dest / "decision_payload.json").write_text(json.dumps(decision_payload_case(), indent=2))
        (dest / "morton_cases.json").write_text(json.dumps(morton_cases(), indent=2))
        (dest / "snapshot.json").write_text(
            json.dumps(engine.public_snapshot(state), indent=2, sort_keys=True)
        )
        for t in (0, 1):
            view = engine.record_view(records[t], config.o, master=False)
            (dest / f"round{t}_view.json").write_text(json.dumps(view, indent=2, sort_keys=True))
        event = {
            "t": records[0].t,
            "scores": records[0].scores,
            "badges": records[0].badges.public_view(),
        }
        (dest / "round_complete_event.json").write_text(json.dumps(event, indent=2, sort_keys=True))
        # analytics fixture needs decision variance across rounds
        varied = [engine.ActorPolicy("random") for _ in range(config.m)]
        vstate, vrecords = engine.simulate(config, varied, rounds=4, seed=9, field_root=root)
        report = analytics.build_report(
            engine.history_decision_tensor(vstate), [r.to_dict() for r in vrecords]
        )
        (dest / "analytics_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    print(f"wrote fixtures to {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
