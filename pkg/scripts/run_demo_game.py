#!/usr/bin/env python3
"""Play a headless demo game and print the score/badge trajectory.

Usage: python scripts/run_demo_game.py [--rounds N] [--seed S] [--out DIR]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from equicity.config import save_config
from equicity.demo import make_demo_config
from equicity.engine import ActorPolicy, canonical_json, simulate


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--rounds", type=int, default=4)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="demo-out")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = make_demo_config(out)
    save_config(config, out / "config.json")

    policies = [
        ActorPolicy("stubborn"),
        ActorPolicy("drift", rate=0.5),
        ActorPolicy("drift", rate=1.0),
        ActorPolicy("random"),
        ActorPolicy("random"),
    ]
    state, records = simulate(config, policies, rounds=args.rounds, seed=args.seed, field_root=out)

    for record in records:
        (out / f"round_{record.t:04d}.json").write_text(canonical_json(record.to_dict()))
        scores = record.scores
        badge = record.badges.public_view()
        fields = ", ".join(
            f"{name}={entry['normalized']:.3f}" for name, entry in scores["fields"].items()
        )
        print(
            f"round {record.t}: {fields}, efficacy={scores['transport_efficacy']:.3f}, "
            f"change={scores['change_score']:.3f}, gainer={badge['gainer']}, "
            f"player={badge['player']}, contributor={badge['contributor']}"
        )
    print(f"\nwrote config and {len(records)} records to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
