import csv
import io
import json
import math

import pytest

from sympidx.cli import COMMANDS, ExperimentConfig, build_parser, config_from_args, fmt, main, run, validate


def manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_floer_levels_outputs(tmp_path, capsys):
    code = main(["floer-levels", "--m", "1", "--q", "1", "--r2", "1", "--eps0", "0.1",
                 "--output-dir", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "scheme.json").read_text())
    assert doc["k"] == 513 and all(doc["verdicts"].values())
    assert doc["C"] == pytest.approx(10.8909, abs=1e-4)
    rows = list(csv.DictReader(io.StringIO((tmp_path / "levels.csv").read_text())))
    assert len(rows) == 4 * 513
    assert '"k": 513' in capsys.readouterr().out


def test_sweep_flat_field(tmp_path):
    code = main(["sweep", "--B", "1", "--r", "0.2,0.1,0.05", "--output-dir", str(tmp_path)])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "sweep.csv").read_text())))
    assert len(rows) == 3
    assert all(abs(float(r["T"]) - 2 * math.pi) < 1e-8 for r in rows)
    assert manifest(tmp_path)["result"]["failed"] == 0


def test_index_command(tmp_path):
    code = main(["index", "--S", "[[1,0],[0,1]]", "--T", str(math.pi), "--output-dir", str(tmp_path)])
    assert code == 0
    res = manifest(tmp_path)["result"]
    assert res["conley_zehnder"] == 1
    assert res["delta_tilde"] == pytest.approx(1.0, abs=1e-9)
    assert (tmp_path / "winding.csv").read_text().startswith("t,theta,delta\n")


def test_index_from_path_file(tmp_path):
    from sympidx.paths import QuadHamiltonian, linear_flow
    p = linear_flow(QuadHamiltonian.constant([[2.0, 0.0], [0.0, 2.0]]), (0.0, 1.0), 50)
    src = tmp_path / "path.json"
    src.write_text(p.to_json())
    out = tmp_path / "out"
    assert main(["index", "--path", str(src), "--output-dir", str(out)]) == 0
    assert manifest(out)["result"]["conley_zehnder"] == 1


@pytest.mark.parametrize("argv", [
    ["floer-levels", "--m", "2", "--q", "1", "--r2", "0.5", "--eps0", "0.03"],
    ["sweep", "--B", "2", "--r", "0.1,0.05"],
    ["growth", "--B", "1", "--r", "0.1", "--k", "4"],
])
def test_same_seed_is_byte_identical(tmp_path, argv):
    outs = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        assert main(argv + ["--seed", "17", "--output-dir", str(d)]) == 0
        outs.append(d)
    arts = manifest(outs[0])["artifacts"]
    assert arts
    for name in arts:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert manifest(outs[0])["result"] == manifest(outs[1])["result"]


def test_manifest_is_complete(tmp_path):
    assert main(["magnetic", "--B", "1.5", "--r", "0.1", "--output-dir", str(tmp_path)]) == 0
    m = manifest(tmp_path)
    assert m["status"] == "ok" and m["seed"] == 0 and m["error"] is None
    assert {"sympidx", "numpy", "scipy", "python"} <= set(m["versions"])
    for name in m["artifacts"]:
        assert (tmp_path / name).stat().st_size > 0
    assert m["result"]["T"] == pytest.approx(2 * math.pi / 1.5, abs=1e-8)


def test_invalid_parameters_exit_2(tmp_path, capsys):
    code = main(["floer-levels", "--m", "1", "--q", "1", "--r2", "1", "--eps0", "0.5",
                 "--output-dir", str(tmp_path)])
    assert code == 2
    m = manifest(tmp_path)
    assert m["status"] == "invalid" and "eps0 <= r^2/10 required" in m["violations"]
    assert m["artifacts"] == []
    assert "eps0" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path):
    code = main(["index", "--S", "[[1,0],[0,1]]", "--T", str(2 * math.pi), "--output-dir", str(tmp_path)])
    assert code == 3
    m = manifest(tmp_path)
    assert m["status"] == "numerical_failure" and m["error"] == "DegenerateEndpoint"


def test_validate_messages(tmp_path):
    good = ExperimentConfig("floer-levels", {"m": 1, "q": 1, "r2": 1.0, "eps0": 0.1})
    assert validate(good) == []
    bad = ExperimentConfig("floer-levels", {"m": 1, "q": 1, "r2": 1.0, "eps0": 0.2})
    assert "eps0 <= r^2/10 required" in validate(bad)
    neg = ExperimentConfig("magnetic", {"B": -1.0, "r": [0.1]})
    assert any("symplectic magnetic field requires b > 0" in m for m in validate(neg))
    assert validate(ExperimentConfig("sweep", {"r": [0.05, 0.1]})) == ["r values must be in descending order"]
    assert validate(ExperimentConfig("growth", {"r": [0.1], "k": 2})) == ["growth needs k >= 3 iterates"]
    assert validate(ExperimentConfig("nope")) == ["unknown command 'nope'"]
    assert validate(ExperimentConfig("index", {"S": "[[1,2],[0,1]]", "T": 1.0})) == ["S must be symmetric"]
    assert validate(ExperimentConfig("sturm", {"S0": "[[1,0],[0,1]]", "S1": "[[0,0],[0,0]]", "T": 1.0})) \
        == ["H1 - H0 must be positive semidefinite"]
    assert validate(ExperimentConfig("index", {"S": "[[1,0],[0,1]]", "T": 1.0}, seed=-1))


def test_parser_covers_every_command():
    parser = build_parser()
    for cmd in COMMANDS:
        ns = parser.parse_args([cmd] + _required(cmd))
        cfg = config_from_args(ns)
        assert cfg.command == cmd and cfg.seed == 0


def _required(cmd):
    return {"index": [], "sturm": ["--S0", "[[0,0],[0,0]]", "--S1", "[[1,0],[0,1]]", "--T", "1"],
            "magnetic": ["--r", "0.1"], "growth": ["--r", "0.1"], "sweep": ["--r", "0.1"],
            "floer-levels": ["--m", "1", "--q", "1", "--r2", "1", "--eps0", "0.1"]}[cmd]


def test_sturm_command(tmp_path):
    assert main(["sturm", "--S0", "[[0,0],[0,0]]", "--S1", "[[1,0],[0,1]]", "--T", "10",
                 "--output-dir", str(tmp_path)]) == 0
    res = manifest(tmp_path)["result"]
    assert res["holds"] and res["margin"] == pytest.approx(10 / math.pi, abs=1e-6)


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 2.0 ** -40, 12345.678):
        assert float(fmt(x)) == x
