import json

import pytest

from cardcsp.cli import main
from cardcsp.instance import generate


@pytest.fixture
def c4_file(tmp_path):
    path = tmp_path / "c4.edges"
    path.write_text("kind maxcut-bisection\n0 1\n1 2\n2 3\n0 3\n")
    return str(path)


def test_oracle_subcommand(c4_file, capsys):
    assert main(["oracle", c4_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["optimum"] == pytest.approx(1.0)
    assert doc["witness"] == [0, 1, 0, 1]


def test_solve_subcommand(c4_file, tmp_path):
    out = tmp_path / "sol.json"
    assert main(["solve", c4_file, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["objective"] == pytest.approx(1.0, abs=1e-4)
    assert doc["status"] == "optimal"
    assert doc["feasibility"]["psd_violation"] <= 1e-5


def test_solve_accepts_json_instances(tmp_path):
    path = tmp_path / "inst.json"
    path.write_text(generate("cycle", 4).to_json())
    assert main(["solve", str(path)]) == 0


def test_round_subcommand(c4_file, tmp_path):
    out = tmp_path / "round.json"
    assert main(["round", c4_file, "--trials", "4", "--seed", "1",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["best"]["value"] == pytest.approx(1.0, abs=1e-6)
    assert abs(doc["best"]["balance"]) <= 1e-9


def test_round_is_deterministic(c4_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["round", c4_file, "--trials", "4", "--seed", "9", "--out", str(a)])
    main(["round", c4_file, "--trials", "4", "--seed", "9", "--out", str(b)])
    assert a.read_text() == b.read_text()


def test_landscape_sqrt_eps(tmp_path):
    out = tmp_path / "curve.json"
    assert main(["landscape", "sqrt-eps", "--eps", "0.01,0.04",
                 "--resolution", "80", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 2


def test_dict_subcommand(c4_file, tmp_path):
    out = tmp_path / "dict.json"
    assert main(["dict", c4_file, "--eps", "0.1", "-R", "3", "--soundness",
                 "--tau", "1.0", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["completeness_ok"]
    assert doc["soundness"]["candidates"] > 0


def test_bench_with_config(tmp_path):
    config = tmp_path / "bench.json"
    config.write_text(json.dumps({"instances": [
        {"name": "c4", "family": "cycle", "n": 4},
        {"name": "k4", "family": "complete", "n": 4},
    ]}))
    out = tmp_path / "bench_out.json"
    assert main(["bench", "--config", str(config), "--trials", "4",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["min_ratio"] >= 0.84
    assert [r["name"] for r in doc["rows"]] == ["c4", "k4"]


def test_usage_errors_exit_2(tmp_path):
    assert main(["solve", str(tmp_path / "missing.edges")]) == 2
    bad = tmp_path / "bad.edges"
    bad.write_text("kind maxcut-bisection\n0 zero\n")
    assert main(["solve", str(bad)]) == 2
    assert main(["frobnicate"]) == 2
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"instances": []}))
    assert main(["bench", "--config", str(empty)]) == 2


def test_capacity_errors_exit_3(tmp_path):
    big = tmp_path / "big.edges"
    lines = ["kind maxcut-bisection"]
    lines += [f"{i} {i + 1}" for i in range(29)]
    big.write_text("\n".join(lines) + "\n")
    assert main(["solve", str(big), "--level", "3"]) == 3
