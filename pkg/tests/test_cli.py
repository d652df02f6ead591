import csv
import json
import math
import subprocess
import sys

import pytest

from rwslab.cli import dumps, execute, main

from cli_cases import CASES, SYM, UNI


def results(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    assert code == 0, out
    return json.loads(out)["results"], out


def test_stats_example(capsys):
    res, _ = results(["stats", "--law", "two_point:a=2.718281828,b=0.367879441,p=0.5"], capsys)
    assert res["r"] == pytest.approx(0.3678794, abs=1e-7)
    assert res["R"] == pytest.approx(2.7182818, abs=1e-7)
    assert res["r0"] == pytest.approx(1.0, abs=1e-8)
    assert res["sigma2"] == pytest.approx(4.0, abs=1e-8)


def test_dynamics_example(capsys):
    res, _ = results(["dynamics", "--law", UNI], capsys)
    assert res["hypercyclic"] == "almostSurelyNo"
    assert res["supercyclic"] == "almostSurelyYes"


def test_manifest_fields(capsys):
    _, out = results(CASES["orbit"], capsys)
    m = json.loads(out)
    assert set(m) == {"toolVersion", "command", "argv", "law", "seed", "parameters", "startedAt",
                      "duration", "results"}
    assert m["command"] == "orbit" and m["seed"] == 0 and m["parameters"]["trials"] == 6
    assert len(m["results"]["trials"]) == 6


def test_pseudospectrum_csv(tmp_path):
    out = tmp_path / "ps.csv"
    code, manifest = execute(CASES["pseudospectrum"] + ["--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["re", "im", "smin"]
    assert len(rows) == 11**2 + 1
    vals = [tuple(map(float, r)) for r in rows[1:]]
    assert all(s >= 0 for _, _, s in vals)
    assert json.loads((tmp_path / "ps.csv.json").read_text())["results"]["points"] == 121
    assert manifest["results"]["minSmin"] == min(s for _, _, s in vals)


def test_pseudospectrum_needs_out():
    assert execute(CASES["pseudospectrum"])[0] == 2


@pytest.mark.parametrize("argv,code", [
    (["stats", "--law", "weird:x=1"], 2),
    (["stats", "--law", "uniform:lo=1"], 2),
    (["stats"], 2),
    (["nosuchcommand"], 2),
    (["orbit", "--law", UNI, "--threads", "0"], 2),
    (["lil", "--law", UNI, "--sequence", "power:alpha=2"], 4),
    (["momentlil", "--law", UNI, "--nmax", "100"], 4),
    (["hardy", "--law", SYM, "--sequence", "power:beta=2"], 2),
])
def test_exit_codes(argv, code, capsys):
    assert execute(argv)[0] == code
    err = capsys.readouterr().err
    assert err.strip().count("\n") <= 20 and err


def test_nonconvergence_exit_code(monkeypatch, tmp_path):
    import numpy as np

    from rwslab import cli
    from rwslab.spectral import PseudospectrumGrid

    def fake(shift, lams):
        lams = np.asarray(lams)
        return PseudospectrumGrid(lams, np.zeros(lams.shape), np.zeros(lams.shape, dtype=bool), shift.dim)

    monkeypatch.setattr(cli, "smin_grid", fake)
    assert execute(CASES["pseudospectrum"] + ["--out", str(tmp_path / "x.csv")])[0] == 3


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# orbit defaults\nN = 300\ntrials = 2\n")
    res, _ = results(["orbit", "--law", SYM, "--config", str(cfg)], capsys)
    assert res["N"] == 300 and len(res["trials"]) == 2
    res, _ = results(["orbit", "--law", SYM, "--config", str(cfg), "--trials", "3"], capsys)
    assert len(res["trials"]) == 3
    cfg.write_text("bogus = 1\n")
    assert execute(["orbit", "--law", SYM, "--config", str(cfg)])[0] == 2


def test_threads_environment_default(monkeypatch):
    monkeypatch.setenv("RWSLAB_THREADS", "3")
    _, m = execute(CASES["dynamics"])
    assert m is not None
    from rwslab.cli import _parse

    assert _parse(CASES["dynamics"]).threads == 3


@pytest.mark.parametrize("name", sorted(CASES))
def test_determinism(name, tmp_path):
    def payload(extra):
        argv = CASES[name] + extra
        if name == "pseudospectrum":
            argv = argv + ["--out", str(tmp_path / f"g{len(extra)}.csv")]
        code, m = execute(argv)
        assert code == 0
        return dumps(m["results"])

    a, b = payload([]), payload([])
    assert a == b
    assert payload(["--threads", "8"]) == a


def test_seed_changes_results():
    a = execute(CASES["orbit"])[1]["results"]
    b = execute(CASES["orbit"] + ["--seed", "1"])[1]["results"]
    assert dumps(a) != dumps(b)


def test_dumps_number_format():
    text = dumps({"x": 0.1, "n": 3, "nan": math.nan, "inf": math.inf, "ninf": -math.inf, "z": 1 + 2j})
    obj = json.loads(text)
    assert obj == {"x": 0.1, "n": 3, "nan": None, "inf": "inf", "ninf": "-inf", "z": [1.0, 2.0]}
    assert "0.10000000000000001" in text
    assert float(json.loads(dumps(1 / 3))) == 1 / 3


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "rwslab.cli", "dynamics", "--law", UNI],
                         capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["results"]["hypercyclic"] == "almostSurelyNo"
