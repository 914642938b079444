import csv
import json

import numpy as np
import pytest

from optpart import cli
from optpart.fucik import CSV_COLUMNS


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _report(d):
    with open(d / "report.json") as fh:
        return json.load(fh)


def test_fucik_trace_writes_curve(tmp_path):
    rc = cli.main(["fucik", "trace", "--domain", "interval", "--n", "401", "--r-grid", "0.25:4:9",
                   "--out-dir", str(tmp_path)])
    assert rc == 0
    rows = _rows(tmp_path / "curve.csv")
    assert len(rows) == 9
    assert tuple(rows[0]) == CSV_COLUMNS
    r = np.array([float(x["r"]) for x in rows])
    assert r[4] == 1.0 and np.allclose(r * r[::-1], 1.0)


def test_missing_domain_is_usage_error(tmp_path, capsys):
    assert cli.main(["fucik", "point", "--n", "101", "--out-dir", str(tmp_path)]) == 2
    assert "domain" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# point run\ndomain.kind = interval\ndomain.n = 201\nfucik.r = 4\n")
    assert cli.main(["fucik", "point", "--config", str(cfg), "--r", "2",
                     "--out-dir", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["config"]["fucik.r"] == 2.0
    assert rep["config"]["domain.n"] == 201
    assert rep["versions"]["optpart"] and "numpy" in rep["versions"]


def test_unknown_key_and_bad_value(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("domain.kind = interval\ndomain.n = 101\nfucik.slope = 2\n")
    assert cli.main(["fucik", "point", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["fucik", "point", "--domain", "interval", "--n", "101", "--r", "-1",
                     "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["fucik", "point", "--domain", "interval", "--n", "abc",
                     "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["fucik", "point", "--domain", "hexagon", "--n", "11",
                     "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        cli.main(["nonsense"])


def test_oned_curves(tmp_path):
    assert cli.main(["oned", "curves", "--k-max", "2", "--r-grid", "0.5:2:3",
                     "--out-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "curves.csv")
    assert len(rows) == 6
    assert list(rows[0]) == ["r", "k", "c_closed", "c_bruteforce", "lambda", "mu",
                             "identity_residual"]


def test_monotone_phi(tmp_path):
    assert cli.main(["monotone", "phi", "--n", "129", "--radii", "0.1:0.4:8",
                     "--out-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "phi.csv")
    assert len(rows) == 8 and {r["classification"] for r in rows} == {"constant"}
    assert cli.main(["monotone", "phi", "--field", "bogus", "--out-dir", str(tmp_path)]) == 2


def test_monotone_compete(tmp_path):
    assert cli.main(["monotone", "compete", "--n", "65", "--a", "10", "--boundary", "y+,y-",
                     "--radii", "0.1:0.4:8", "--out-dir", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["details"]["residual"] <= 1e-8
    assert rep["details"]["growth"]["advisory"] is True


def test_beta_command(tmp_path):
    assert cli.main(["beta", "--k", "3", "--N", "2", "--k-max", "4", "--out-dir", str(tmp_path)]) == 0
    assert _report(tmp_path)["details"]["beta_known"] == 3.0
    assert cli.main(["beta", "--k", "3", "--N", "3", "--k-max", "3", "--out-dir", str(tmp_path)]) == 1
    assert _report(tmp_path)["details"]["beta_known"] == "unknown"


def test_partition_command(tmp_path):
    assert cli.main(["partition", "--domain", "interval", "--n", "201", "--k", "3",
                     "--out-dir", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["command"] == "partition" and rep["passed"]
    assert (tmp_path / "partition.csv").exists()


def test_backends_give_identical_selftest(tmp_path):
    import os
    import subprocess
    import sys
    out = []
    for flag in ("0", "1"):
        d = tmp_path / f"b{flag}"
        env = dict(os.environ, OPTPART_DISABLE_NUMBA=flag)
        subprocess.run([sys.executable, "-m", "optpart.cli", "selftest", "--out-dir", str(d)],
                       env=env, check=True, capture_output=True)
        out.append((d / "selftest.csv").read_bytes())
    assert out[0] == out[1]
