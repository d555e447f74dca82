import csv
import io
import json

import pytest

from ehall import cli
from ehall.cli import FIELDS, UsageError, main, make_config, parse_bidegrees, parse_range, parse_window


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_parse_helpers():
    assert parse_range("-5..5") == range(-5, 6)
    assert parse_range("3") == range(3, 4)
    w = parse_window("-1..2")
    assert (w.n_max, w.u_min, w.u_max, w.th_max) == (3, -1, 2, 0)
    w = parse_window("u=-4..4,th=4,n=2,tw=3")
    assert (w.n_max, w.u_min, w.u_max, w.th_max, w.theta_weight_max) == (2, -4, 4, 4, 3)
    assert [tuple(b) for b in parse_bidegrees("2,0..2")] == [(2, 0), (2, 1), (2, 2)]
    for bad in ["2..1", "x", "u=1..0"]:
        with pytest.raises(UsageError):
            parse_window(bad)


def test_check_cubic(capsys):
    code, out = run(capsys, "check-cubic", "--m", "-5..5")
    assert code == 0
    rep = json.loads(out.out)
    assert len(rep["records"]) == 11
    assert all(r["status"] == "PASS" for r in rep["records"])
    assert set(rep["records"][0]) == set(FIELDS)


def test_rank_example(capsys):
    code, out = run(capsys, "rank", "--bidegree", "2,1", "--window", "-1..2", "--prime", "2147483647",
                    "--seed", "42")
    assert code == 0
    (rec,) = json.loads(out.out)["records"]
    assert rec["data"]["quotient_rank"] == 3
    assert rec["prime"] == 2147483647 and rec["seed"] == 42


def test_records_sorted_and_config_echoed(capsys):
    code, out = run(capsys, "relators", "--window", "u=-1..2,th=2,n=2")
    rep = json.loads(out.out)
    ids = [r["check_id"] for r in rep["records"]]
    assert ids == sorted(ids)
    assert rep["config"]["window"]["u_min"] == -1
    assert rep["tool"] == "ehall" and "wall_ms" in rep["timing"]


def test_csv(capsys):
    code, out = run(capsys, "check-cubic", "--m", "0..1", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.out)))
    assert tuple(rows[0]) == FIELDS
    assert len(rows) == 3
    assert rows[1][FIELDS.index("status")] == "PASS"


def test_output_file(tmp_path, capsys):
    dest = tmp_path / "r.json"
    code, out = run(capsys, "check-cubic", "--m", "0..0", "--output", str(dest))
    assert code == 0 and out.out == ""
    assert json.loads(dest.read_text())["records"][0]["check_id"] == "CUBIC(0)"


def test_config_file_and_override(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("# comment\nwindow = u=-2..3,th=1,n=2\nseed = 7\nprimes = 2147483647,2147483629\n")
    cfg = make_config(["rank", "--config", str(cfgfile)])
    assert cfg.seed == 7 and cfg.primes == [2147483647, 2147483629]
    assert cfg.window.u_min == -2
    cfg = make_config(["rank", "--config", str(cfgfile), "--seed", "9", "--window", "-1..1"])
    assert cfg.seed == 9 and cfg.window.u_max == 1
    assert cfg.primes == [2147483647, 2147483629]


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "rank", "--bidegree", "2,1", "--window", "5..1")[0] == 2
    assert run(capsys, "rank")[0] == 2  # no bidegree
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "relators", "--families", "NOPE")[0] == 2
    assert run(capsys, "relators", "--config", str(tmp_path / "missing"))[0] == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    assert run(capsys, "relators", "--config", str(bad))[0] == 2


def test_inconclusive_exit(capsys):
    # without the cubic and mixed relators R(0,0,0) has no certificate
    code, out = run(capsys, "check-R", "--grid", "0..0", "--families", "THETA_COMM", "--window",
                    "u=-2..2,th=1,n=3", "--tw-max", "0")
    assert code == 3
    assert json.loads(out.out)["records"][0]["status"] == "INCONCLUSIVE"


def test_check_r_pass(capsys):
    code, out = run(capsys, "check-R", "--grid", "0..0", "--window", "u=-2..2,th=1,n=3", "--tw-max", "0")
    assert code == 0


def test_fail_exit(capsys, monkeypatch):
    monkeypatch.setitem(cli.COMMANDS, "relators", lambda cfg: [
        cli.record("x", "FAIL", {}), cli.record("y", "INCONCLUSIVE", {}), cli.record("z", "PASS", {})])
    assert run(capsys, "relators")[0] == 1


def test_exit_code_contract():
    rep = lambda *st: {"records": [{"status": s} for s in st]}
    assert cli.exit_code(rep("PASS", "PASS")) == 0
    assert cli.exit_code(rep("PASS", "FAIL", "INCONCLUSIVE")) == 1
    assert cli.exit_code(rep("PASS", "INCONCLUSIVE")) == 3


@pytest.mark.parametrize("argv", [
    ["relators", "--window", "u=-1..1,th=2,n=2"],
    ["lemma-tensor", "--trials", "5"],
    ["oracle", "--params", "-1..0", "--levels", "0..1"],
])
def test_determinism(argv):
    reps = [cli.execute(make_config(argv)) for _ in range(2)]
    a, b = (json.dumps(cli.payload(r), sort_keys=True) for r in reps)
    assert a == b
    assert "timing" not in cli.payload(reps[0])
    assert all("elapsed_ms" not in r for r in cli.payload(reps[0])["records"])


def test_version(capsys):
    assert run(capsys, "--version")[0] == 0
