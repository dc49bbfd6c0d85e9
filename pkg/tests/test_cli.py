import json

import pytest

from coxwalk.cli import main


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_fiber_tambourine(capsys):
    code, out, _ = run(capsys, "fiber", "--type", "C", "--n", "3", "--score", "0,0,0")
    doc = json.loads(out)
    assert code == 0 and doc["size"] == 16 and len(doc["tournaments"]) == 16
    assert doc["config"]["score"] == [0, 0, 0] and doc["config"]["command"] == "fiber"


def test_graph_snare_drum_dot(capsys):
    code, out, _ = run(capsys, "graph", "--type", "C", "--n", "3", "--score", "-2,0,2")
    assert code == 0
    assert out.startswith('// command="graph"')
    assert "// vertices=12" in out and "// degree=6" in out
    assert out.count(" -- ") == 36


def test_graph_files(tmp_path, capsys):
    target = tmp_path / "drum.dot"
    code, out, _ = run(capsys, "graph", "--type", "C", "--n", "3", "--score", "-2,0,2", "--out", str(target))
    assert code == 0 and out == ""
    doc = json.loads((tmp_path / "drum.json").read_text())
    assert doc["metrics"]["diameter"] >= 1 and target.read_text().count(" -- ") == 36


def test_walk_csv_and_occupancy(capsys):
    code, out, _ = run(capsys, "walk", "--type", "C", "--n", "3", "--score", "4,2,2", "--horizon", "6",
                       "--steps", "200", "--seed", "3")
    lines = out.splitlines()
    assert code == 0
    assert "# t_mix=4" in lines
    assert any(line.startswith("# occupancy=") for line in lines)
    rows = [line for line in lines if not line.startswith("#")]
    assert rows[0] == "t,tau" and len(rows) == 8


def test_couple_table(capsys):
    code, out, _ = run(capsys, "couple", "--type", "C", "--n", "3", "--score", "-2,0,2", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["gamma"] == 1
    assert all(p["ok"] for p in doc["pairs"]) and {p["case"] for p in doc["pairs"]} == {"1b", "2"}


def test_networks_census(capsys):
    code, out, _ = run(capsys, "networks", "--type", "C", "--n", "3")
    doc = json.loads(out)
    assert code == 0 and doc["crystals"] == 48 and doc["gamma"] == 1
    assert doc["by_class"] == {"double": 192, "heavy": 192, "quadruple": 144, "split": 96}


def test_verify_c3(capsys):
    code, out, _ = run(capsys, "verify", "--type", "C", "--n", "3", "--threads", "1")
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and doc["fibers"] == 135
    assert all(row["passed"] for row in doc["checks"].values())


def test_byte_identical(capsys):
    args = ("walk", "--type", "C", "--n", "3", "--score", "0,0,0", "--steps", "500", "--seed", "9")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]
    a = run(capsys, "verify", "--type", "D", "--n", "3", "--threads", "1")[1]
    assert a == run(capsys, "verify", "--type", "D", "--n", "3", "--threads", "2")[1]


@pytest.mark.parametrize("args,code", [
    (("fiber", "--type", "C", "--n", "3", "--score", "1,0,0"), 3),
    (("fiber", "--type", "D", "--n", "2", "--score", "0,0"), 3),
    (("fiber", "--type", "C", "--n", "3", "--score", "0,0"), 2),
    (("fiber", "--type", "Q", "--n", "3", "--score", "0,0,0"), 2),
    (("fiber", "--type", "C", "--n", "3"), 2),
    (("walk", "--type", "C", "--n", "3", "--score", "0,0,0", "--format", "dot"), 2),
    (("fiber", "--type", "C", "--n", "6", "--score", "0,0,0,0,0,0"), 5),
])
def test_exit_codes(capsys, args, code):
    assert run(capsys, *args)[0] == code


def test_cap_message_names_required_cap(capsys):
    _, _, err = run(capsys, "fiber", "--type", "C", "--n", "6", "--score", "0,0,0,0,0,0")
    assert "--cap 6" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fiber", "--n", "3"])
    assert exc.value.code == 2
