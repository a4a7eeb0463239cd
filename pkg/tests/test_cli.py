import csv
import json

import pytest

from waveguide_lab import cli

SELF = "[selftest]\ncases = 3\nnx = 64\nny = 16\nlam = 1.0\n"
MEAS = """[measure-sweep]
variants = [M_FULL, M1_NO_ANGLE]
lam = [1, 2]
N1 = [16, 32]
N2 = [4]
M = [4]
theta = [0.125]
n_random = 2
max_ratio = 100
"""


def run(tmp_path, command, text, *extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = tmp_path / f"{command}.ini"
    cfg.write_text(text)
    out = tmp_path / "out"
    return cli.main([command, "--config", str(cfg), "--out", str(out), "--workers", "1", *extra]), out


def read_rows(p):
    with open(p, newline="") as fh:
        return list(csv.reader(fh))


def test_selftest_outputs(tmp_path):
    code, out = run(tmp_path, "selftest", SELF, "--seed", "5")
    assert code == 0
    rows = read_rows(out / "selftest.csv")
    assert rows[0][0] == "schema" and all(r[0] == "selftest/1" for r in rows[1:])
    man = json.loads((out / "selftest.manifest.json").read_text())
    assert man["status"] == "ok" and man["seed"] == 5 and man["config_text"] == SELF
    assert set(man["files"]) == {"selftest.csv", "selftest.jsonl"}
    assert man["constants"]["PHASE"] > 39
    lines = (out / "selftest.jsonl").read_text().splitlines()
    assert len(lines) == len(rows) - 1
    assert "PASS" in (out / "selftest.summary.txt").read_text()


def test_determinism_across_runs_and_workers(tmp_path):
    a, out_a = run(tmp_path / "a", "measure-sweep", MEAS)
    b, _ = run(tmp_path / "b", "measure-sweep", MEAS)
    cfg = tmp_path / "c.ini"
    cfg.write_text(MEAS)
    c = cli.main(["measure-sweep", "--config", str(cfg), "--out", str(tmp_path / "c"), "--workers", "2"])
    assert a == b == c
    ref = (out_a / "measure-sweep.csv").read_bytes()
    assert (tmp_path / "b" / "out" / "measure-sweep.csv").read_bytes() == ref
    assert (tmp_path / "c" / "measure-sweep.csv").read_bytes() == ref


def test_seed_changes_random_rows(tmp_path):
    _, o1 = run(tmp_path / "a", "selftest", SELF, "--seed", "1")
    _, o2 = run(tmp_path / "b", "selftest", SELF, "--seed", "2")
    assert (o1 / "selftest.csv").read_bytes() != (o2 / "selftest.csv").read_bytes()


def test_empty_grid(tmp_path):
    code, out = run(tmp_path, "measure-sweep", MEAS.replace("lam = [1, 2]", "lam = []"))
    assert code == 0
    assert len(read_rows(out / "measure-sweep.csv")) == 1


def test_config_errors_exit_2(tmp_path, capsys):
    code, _ = run(tmp_path, "selftest", "[selftest]\ncases = x\n")
    assert code == 2
    assert "line 2" in capsys.readouterr().err
    code, _ = run(tmp_path, "bilinear-sweep", "[bilinear-sweep]\nestimate = other\n")
    assert code == 2
    code, _ = run(tmp_path, "measure-sweep", "[measure-sweep]\nvariants = [M_X]\n")
    assert code == 2
    assert cli.main(["selftest", "--config", str(tmp_path / "missing.ini")]) == 2
    assert cli.main(["selftest", "--seed", str(2**64), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["selftest", "--workers", "0", "--out", str(tmp_path / "o")]) == 2


def test_failed_assertion_exit_1(tmp_path):
    code, out = run(tmp_path, "measure-sweep", MEAS.replace("max_ratio = 100", "max_ratio = 0.0"))
    assert code == 1
    man = json.loads((out / "measure-sweep.manifest.json").read_text())
    assert man["status"] == "assertion_failed"
    assert any(not a["ok"] for a in man["assertions"])
    # the same campaign with assertions disabled succeeds
    code, _ = run(tmp_path, "measure-sweep", "[campaign]\nassert = false\n" + MEAS.replace("max_ratio = 100", "max_ratio = 0.0"))
    assert code == 0


def test_env_overrides(tmp_path, monkeypatch):
    cfg = tmp_path / "s.ini"
    cfg.write_text(SELF)
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "envout"))
    monkeypatch.setenv(cli.ENV_WORKERS, "3")
    assert cli.main(["selftest", "--config", str(cfg)]) == 0
    man = json.loads((tmp_path / "envout" / "selftest.manifest.json").read_text())
    assert man["workers"] == 3
    assert cli.resolve_workers(2) == 2


def test_report_verifies_hashes(tmp_path):
    _, out = run(tmp_path, "selftest", SELF)
    run(tmp_path, "measure-sweep", MEAS)
    code = cli.main(["report", "--out", str(out)])
    assert code == 0
    rows = read_rows(out / "report.csv")
    assert len(rows) == 3 and all(r[5] == "1" for r in rows[1:])
    # tamper with an output: report fails
    with open(out / "selftest.csv", "a") as fh:
        fh.write("selftest/1,x,0,0,0,0\n")
    assert cli.main(["report", "--out", str(out)]) == 1


def test_interrupt_keeps_rows(tmp_path, monkeypatch):
    real = cli.HANDLERS["selftest"]

    def interrupted(sec, seed, workers, out, checks):
        ap = cli.Appender(out, "selftest", "selftest/1", cli.COLUMNS["selftest"])
        ap.write(dict(check="plancherel", case=0, value=0.0, tol=1e-10, passed=1))
        ap.close()
        raise KeyboardInterrupt

    monkeypatch.setitem(cli.HANDLERS, "selftest", interrupted)
    code, out = run(tmp_path, "selftest", SELF)
    assert code == 130
    assert len(read_rows(out / "selftest.csv")) == 2
    man = json.loads((out / "selftest.manifest.json").read_text())
    assert man["status"] == "interrupted" and "selftest.csv" in man["files"]
    assert real is not interrupted


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    cfg = tmp_path / "s.ini"
    cfg.write_text(SELF)
    r = subprocess.run([sys.executable, "-m", "waveguide_lab", "selftest", "--config", str(cfg),
                        "--out", str(tmp_path / "m"), "--workers", "1"], capture_output=True, text=True)
    assert r.returncode == 0 and "selftest: ok" in r.stdout
