"""Desk-scale command line: one subcommand per pipeline stage plus servers.

Matrices travel as comma-separated numeric files, tensors as long-format CSV
with named index columns, structured artifacts as JSON. Every subcommand is
a thin adapter over the library calls; exit code 2 marks input validation
failures, 1 runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analytics, engine, evaluation, ipf, pooling, voxels
from .badges import issue_badges
from .config import load_config
from .errors import (
    ConfigInvalid,
    CorruptState,
    EquicityError,
    InvalidTargets,
    NegativeEntry,
    NonFinite,
    ShapeMismatch,
    ZeroRow,
)
from .linalg import normalize_rows
from .service import GameService, serve_forever

VALIDATION_ERRORS = (
    ConfigInvalid,
    CorruptState,
    InvalidTargets,
    NegativeEntry,
    NonFinite,
    ShapeMismatch,
    ZeroRow,
    FileNotFoundError,
    json.JSONDecodeError,
    ValueError,
)

FLOAT_FMT = "%.17g"


def state_dir() -> Path:
    return Path(os.environ.get("EQUICITY_STATE_DIR", "."))


def read_matrix(path: str, header: bool = False) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1 if header else 0))


def read_vector(path: str, header: bool = False) -> np.ndarray:
    return np.atleast_1d(np.loadtxt(path, delimiter=",", skiprows=1 if header else 0)).ravel()


def write_matrix(path: str, matrix: np.ndarray, header: str | None = None) -> None:
    np.savetxt(path, np.asarray(matrix), delimiter=",", fmt=FLOAT_FMT,
               header=header or "", comments="")


def read_long_tensor(path: str, axes: tuple[str, ...]) -> np.ndarray:
    """Long-format CSV with header (axes..., value) into a dense tensor."""
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = [*axes, "value"]
    if header is None or [h.strip() for h in header] != expected:
        raise ConfigInvalid(f"{path}: expected header {','.join(expected)}")
    rows = [tuple(int(v) for v in r[:-1]) + (float(r[-1]),) for r in reader if r]
    if not rows:
        raise ConfigInvalid(f"{path}: no data rows")
    shape = tuple(max(r[i] for r in rows) + 1 for i in range(len(axes)))
    tensor = np.full(shape, np.nan)
    for *idx, value in rows:
        tensor[tuple(idx)] = value
    if np.any(np.isnan(tensor)):
        raise ConfigInvalid(f"{path}: missing cells for a dense {shape} tensor")
    return tensor


def _load_mass_inputs(args):
    config = load_config(args.config)
    field_root = Path(args.field_root) if args.field_root else Path(args.config).parent
    state = engine.create_game(config, clock=None, field_root=field_root)
    volumes = read_matrix(args.volumes, header=args.header).astype(int)
    if volumes.shape != (config.n, config.o):
        raise ShapeMismatch(f"volumes must be ({config.n}, {config.o}), got {volumes.shape}")
    return config, state, volumes


def cmd_pool(args) -> int:
    interests = read_long_tensor(args.interests, ("actor", "site", "colour"))
    controls = read_long_tensor(args.controls, ("site", "actor", "colour"))
    allocation = pooling.pool_opinions(interests, controls)
    write_matrix(args.out, allocation)
    print(f"wrote {args.out}: allocation {allocation.shape[0]}x{allocation.shape[1]}")
    return 0


def cmd_ipf(args) -> int:
    seed = read_matrix(args.seed, header=args.header)
    rows = read_vector(args.rows)
    cols = read_vector(args.cols)
    targets = ipf.MarginalTargets(rows, cols)
    result = ipf.ipf_fit(seed, targets, eps=args.eps, max_iter=args.max_iter)
    write_matrix(args.out, result.matrix)
    report = {
        "iterations": result.iterations,
        "error": result.error,
        "converged": result.converged,
    }
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2))
    print(json.dumps(report))
    return 0


def cmd_mass(args) -> int:
    config, state, volumes = _load_mass_inputs(args)
    if args.weights:
        submitted = read_matrix(args.weights)
        if submitted.shape[0] != config.e:
            submitted = submitted.T
        weights = voxels.mean_weights(submitted)
    else:
        weights = np.full(config.e, 1.0 / config.e)
    upsilon = voxels.aggregate_value(state.fields, weights)
    mass = voxels.mass_select(state.grid, upsilon, volumes)
    zoning = voxels.zone_assign(mass, volumes)
    payload = {
        "gridHash": state.grid.grid_hash,
        "volumes": volumes.tolist(),
        "weights": weights.tolist(),
        "voxels": voxels.voxel_records(zoning),
    }
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True))
    print(f"wrote {args.out}: {len(payload['voxels'])} voxels")
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config)
    field_root = Path(args.field_root) if args.field_root else Path(args.config).parent
    state = engine.create_game(config, clock=None, field_root=field_root)
    payload = json.loads(Path(args.voxels).read_text())
    if payload.get("gridHash") != state.grid.grid_hash:
        raise ConfigInvalid("voxel file gridHash does not match the config grid")
    rank = {int(code): i for i, code in enumerate(state.grid.buildable_morton)}
    selected = np.zeros(state.grid.buildable_count, dtype=bool)
    volumes = np.zeros((config.n, config.o), dtype=int)
    for rec in payload["voxels"]:
        idx = rank.get(int(rec["morton"]))
        if idx is None:
            raise ConfigInvalid(f"voxel {rec['morton']} is not a buildable cell of this grid")
        selected[idx] = True
        volumes[int(rec["site"]), int(rec["colour"])] += 1
    mass = voxels.MassConfiguration(state.grid, selected)
    totals, normalized = evaluation.integrate_field(state.fields, mass)
    r_matrix, _ = evaluation.expected_colour_distances(volumes, state.distances)
    try:
        _, efficacy = evaluation.transport_efficacy(config.closeness, r_matrix)
        flags = []
    except EquicityError:
        efficacy, flags = 1.0, ["degenerate-distances"]
    change = evaluation.change_cost(
        volumes, state.existing, state.change_weights, site_capacity=state.targets.row
    )
    scores = {
        "fields": {
            name: {"total": float(totals[i]), "normalized": float(normalized[i])}
            for i, name in enumerate(state.fields.names)
        },
        "transport_efficacy": float(efficacy),
        "change_score": float(change),
        "flags": flags,
    }
    Path(args.out).write_text(json.dumps(scores, indent=2, sort_keys=True))
    print(f"wrote {args.out}")
    return 0


def cmd_badges(args) -> int:
    interests = read_long_tensor(args.interests, ("actor", "site", "colour"))
    controls = read_long_tensor(args.controls, ("site", "actor", "colour"))
    decision = read_matrix(args.decision, header=args.header)
    for k in range(interests.shape[2]):
        interests[:, :, k] = normalize_rows(interests[:, :, k])
        controls[:, :, k] = normalize_rows(controls[:, :, k])
    result = issue_badges(interests, controls, decision)
    view = result.master_view()
    out = json.dumps(view, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(out)
    print(out)
    return 0


def _policy_from_dict(entry: dict) -> engine.ActorPolicy:
    return engine.ActorPolicy(
        kind=entry["kind"],
        decisions=entry.get("decisions"),
        weights=np.asarray(entry["weights"], dtype=float) if entry.get("weights") else None,
        rate=float(entry.get("rate", 1.0)),
        seed=int(entry.get("seed", 0)),
    )


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    field_root = Path(args.field_root) if args.field_root else Path(args.config).parent
    policies = [_policy_from_dict(p) for p in json.loads(Path(args.policies).read_text())]
    state, records = engine.simulate(
        config, policies, rounds=args.rounds, seed=args.seed, field_root=field_root
    )
    outdir = Path(args.out) if args.out else state_dir() / config.name / "records"
    outdir.mkdir(parents=True, exist_ok=True)
    for record in records:
        path = outdir / f"round_{record.t:04d}.json"
        path.write_text(engine.canonical_json(record.to_dict()))
    engine.save_state(state, outdir / "state.json")
    print(f"wrote {len(records)} records to {outdir}")
    return 0


def cmd_serve(args) -> int:
    config = load_config(args.config)
    field_root = Path(args.field_root) if args.field_root else Path(args.config).parent
    service = GameService(root_token=args.root_token)
    state = engine.create_game(config, field_root=field_root)
    service.add_session(state)
    serve_forever(service, args.port)
    return 0


def cmd_analyze(args) -> int:
    records_dir = Path(args.records)
    record_files = sorted(records_dir.glob("round_*.json"))
    if not record_files:
        raise ConfigInvalid(f"no round_*.json files under {records_dir}")
    records = [json.loads(p.read_text()) for p in record_files]
    tensor = np.stack([np.asarray(r["interests"], dtype=float) for r in records])
    report = analytics.build_report(tensor, records)
    written = analytics.write_report(report, args.out)
    print(f"wrote {len(written)} report files to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="equicity")
    parser.add_argument("--json", action="store_true", help="machine-readable errors on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="consensus allocation from interest/control tensors")
    p.add_argument("--interests", required=True)
    p.add_argument("--controls", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("ipf", help="fit a seed matrix to marginal targets")
    p.add_argument("--seed", required=True)
    p.add_argument("--rows", required=True)
    p.add_argument("--cols", required=True)
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_ipf)

    p = sub.add_parser("mass", help="select and colour voxels for a volume matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--volumes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--weights")
    p.add_argument("--field-root")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_mass)

    p = sub.add_parser("eval", help="score a voxel configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--voxels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--field-root")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("badges", help="issue round badges from tensors and a decision")
    p.add_argument("--interests", required=True)
    p.add_argument("--controls", required=True)
    p.add_argument("--decision", required=True)
    p.add_argument("--out")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_badges)

    p = sub.add_parser("simulate", help="run a headless game with scripted policies")
    p.add_argument("--config", required=True)
    p.add_argument("--policies", required=True)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--field-root")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="host the HTTP service for one game")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--root-token")
    p.add_argument("--field-root")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("analyze", help="dashboard report from recorded rounds")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as err:
        _report_error(args, err)
        return 2
    except EquicityError as err:
        _report_error(args, err)
        return 1


def _report_error(args, err: Exception) -> None:
    code = getattr(err, "code", type(err).__name__)
    if getattr(args, "json", False):
        print(json.dumps({"error": {"code": code, "detail": str(err)}}), file=sys.stderr)
    else:
        print(f"error [{code}]: {err}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
