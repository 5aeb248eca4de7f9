import json

import numpy as np
import pytest

from equicity import pooling
from equicity.cli import main
from equicity.config import save_config

from conftest import make_workshop_config


def write_long_tensor(path, tensor, axes):
    lines = [",".join([*axes, "value"])]
    it = np.ndindex(*tensor.shape)
    for idx in it:
        lines.append(",".join([*(str(i) for i in idx), repr(float(tensor[idx]))]))
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture(scope="module")
def cli_game(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-game")
    config = make_workshop_config(root)
    save_config(config, root / "config.json")
    return config, root


def test_pool_unanimity_fixture(tmp_path):
    m, n, o = 3, 4, 2
    shared = np.array([[0.4, 0.1], [0.3, 0.2], [0.2, 0.3], [0.1, 0.4]])  # (n, o)
    interests = np.stack([shared] * m).transpose(0, 1, 2)  # (m, n, o)
    controls = np.random.default_rng(0).random((n, m, o)) + 0.1
    write_long_tensor(tmp_path / "X.csv", interests, ("actor", "site", "colour"))
    write_long_tensor(tmp_path / "C.csv", controls, ("site", "actor", "colour"))
    out = tmp_path / "A.csv"
    code = main(["pool", "--interests", str(tmp_path / "X.csv"),
                 "--controls", str(tmp_path / "C.csv"), "--out", str(out)])
    assert code == 0
    allocation = np.loadtxt(out, delimiter=",")
    assert np.max(np.abs(allocation - shared)) <= 1e-9


def test_pool_matches_library_bit_for_bit(tmp_path, rng):
    interests = rng.random((4, 5, 3)) + 0.1
    controls = rng.random((5, 4, 3)) + 0.1
    write_long_tensor(tmp_path / "X.csv", interests, ("actor", "site", "colour"))
    write_long_tensor(tmp_path / "C.csv", controls, ("site", "actor", "colour"))
    out = tmp_path / "A.csv"
    assert main(["pool", "--interests", str(tmp_path / "X.csv"),
                 "--controls", str(tmp_path / "C.csv"), "--out", str(out)]) == 0
    from_cli = np.loadtxt(out, delimiter=",")
    direct = pooling.pool_opinions(interests, controls)
    assert np.array_equal(from_cli, direct)  # %.17g round-trips doubles exactly


def test_ipf_fixture(tmp_path):
    np.savetxt(tmp_path / "seed.csv", np.ones((2, 2)), delimiter=",")
    (tmp_path / "r.csv").write_text("3\n1\n")
    (tmp_path / "c.csv").write_text("2\n2\n")
    out = tmp_path / "fitted.csv"
    report = tmp_path / "report.json"
    code = main(["ipf", "--seed", str(tmp_path / "seed.csv"), "--rows", str(tmp_path / "r.csv"),
                 "--cols", str(tmp_path / "c.csv"), "--eps", "1e-18", "--max-iter", "10000",
                 "--out", str(out), "--report", str(report)])
    assert code == 0
    fitted = np.loadtxt(out, delimiter=",")
    assert np.max(np.abs(fitted.sum(axis=1) - [3, 1])) <= 1e-9
    assert np.max(np.abs(fitted.sum(axis=0) - [2, 2])) <= 1e-9
    assert json.loads(report.read_text())["converged"] is True


def test_badges_command(tmp_path, rng):
    interests = rng.random((3, 4, 2)) + 0.1
    controls = rng.random((4, 3, 2)) + 0.1
    decision = rng.random((4, 2)) + 0.1
    decision /= decision.sum(axis=0, keepdims=True)
    write_long_tensor(tmp_path / "X.csv", interests, ("actor", "site", "colour"))
    write_long_tensor(tmp_path / "C.csv", controls, ("site", "actor", "colour"))
    np.savetxt(tmp_path / "A.csv", decision, delimiter=",")
    out = tmp_path / "badges.json"
    code = main(["badges", "--interests", str(tmp_path / "X.csv"),
                 "--controls", str(tmp_path / "C.csv"),
                 "--decision", str(tmp_path / "A.csv"), "--out", str(out)])
    assert code == 0
    view = json.loads(out.read_text())
    assert {"gainer", "loser", "player", "contributor"} <= set(view)


def test_simulate_deterministic(cli_game, tmp_path):
    config, root = cli_game
    policies = [{"kind": "random"}] * config.m
    (tmp_path / "policies.json").write_text(json.dumps(policies))
    outs = []
    for run in ("a", "b"):
        outdir = tmp_path / run
        code = main(["simulate", "--config", str(root / "config.json"),
                     "--policies", str(tmp_path / "policies.json"),
                     "--rounds", "2", "--seed", "7", "--out", str(outdir)])
        assert code == 0
        outs.append(sorted(p.read_bytes() for p in outdir.glob("round_*.json")))
    assert outs[0] == outs[1]


def test_mass_eval_flow(cli_game, tmp_path):
    config, root = cli_game
    policies = [{"kind": "stubborn"}] * config.m
    (tmp_path / "policies.json").write_text(json.dumps(policies))
    records_dir = tmp_path / "records"
    assert main(["simulate", "--config", str(root / "config.json"),
                 "--policies", str(tmp_path / "policies.json"),
                 "--rounds", "1", "--seed", "0", "--out", str(records_dir)]) == 0
    record = json.loads((records_dir / "round_0000.json").read_text())
    volumes = np.asarray(record["volumes"])
    np.savetxt(tmp_path / "V.csv", volumes, delimiter=",", fmt="%d")
    voxels_out = tmp_path / "voxels.json"
    assert main(["mass", "--config", str(root / "config.json"),
                 "--volumes", str(tmp_path / "V.csv"), "--out", str(voxels_out)]) == 0
    payload = json.loads(voxels_out.read_text())
    assert len(payload["voxels"]) == int(volumes.sum())
    scores_out = tmp_path / "scores.json"
    assert main(["eval", "--config", str(root / "config.json"),
                 "--voxels", str(voxels_out), "--out", str(scores_out)]) == 0
    scores = json.loads(scores_out.read_text())
    assert 0.0 <= scores["transport_efficacy"] <= 1.0
    assert 0.0 <= scores["change_score"] <= 1.0


def test_analyze_flow(cli_game, tmp_path):
    config, root = cli_game
    policies = [{"kind": "random"}] * config.m
    (tmp_path / "policies.json").write_text(json.dumps(policies))
    records_dir = tmp_path / "records"
    assert main(["simulate", "--config", str(root / "config.json"),
                 "--policies", str(tmp_path / "policies.json"),
                 "--rounds", "3", "--seed", "1", "--out", str(records_dir)]) == 0
    report_dir = tmp_path / "report"
    assert main(["analyze", "--records", str(records_dir), "--out", str(report_dir)]) == 0
    report = json.loads((report_dir / "report.json").read_text())
    assert report["anova"][-1]["source"] == "Residual"
    assert (report_dir / "interaction_actor_colour.csv").exists()


def test_validation_error_exit_code(tmp_path, capsys):
    (tmp_path / "X.csv").write_text("bad,header\n1,2\n")
    (tmp_path / "C.csv").write_text("site,actor,colour,value\n0,0,0,1.0\n")
    code = main(["--json", "pool", "--interests", str(tmp_path / "X.csv"),
                 "--controls", str(tmp_path / "C.csv"), "--out", str(tmp_path / "A.csv")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["code"] == "ConfigInvalid"


def test_runtime_error_exit_code(tmp_path):
    # reducible chain: identity interaction -> NoConvergence (runtime, exit 1)
    interests = np.zeros((2, 2, 1))
    interests[0, 0, 0] = 1.0
    interests[1, 1, 0] = 1.0
    controls = np.zeros((2, 2, 1))
    controls[0, 0, 0] = 1.0
    controls[1, 1, 0] = 1.0
    write_long_tensor(tmp_path / "X.csv", interests, ("actor", "site", "colour"))
    write_long_tensor(tmp_path / "C.csv", controls, ("site", "actor", "colour"))
    code = main(["pool", "--interests", str(tmp_path / "X.csv"),
                 "--controls", str(tmp_path / "C.csv"), "--out", str(tmp_path / "A.csv")])
    assert code == 1
