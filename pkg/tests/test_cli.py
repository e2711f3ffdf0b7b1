import csv
import io
import subprocess
import sys

import pytest

from qlh_approx.cli import ConfigError, build_config, main


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    status = main([*args, "--out", str(out)])
    table = (tmp_path / f"{name}.csv").read_text() if (tmp_path / f"{name}.csv").exists() else None
    report = (tmp_path / f"{name}.txt").read_text() if (tmp_path / f"{name}.txt").exists() else None
    return status, table, report


def test_moments_example(tmp_path):
    status, table, report = _run(tmp_path, "--command", "moments", "--n-start", "10", "--n-end", "10",
                                 "--grid-points", "101")
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(table)))
    assert len(rows) == 101
    assert {"m0", "m1", "m2", "err0", "m2_upper_bound", "m2_deviation_bound"} <= set(rows[0])
    assert "verdict.second_moment_deviation: pass" in report
    assert "setting.tail_tol: 1e-10" in report


def test_alpha_out_of_range_is_config_error(tmp_path, capsys):
    status, table, _ = _run(tmp_path, "--command", "moments", "--alpha-rule", "const:1.5")
    assert status == 2 and table is None
    assert "alpha-rule" in capsys.readouterr().err


@pytest.mark.parametrize(
    "args,field",
    [
        (["--command", "moments", "--q-rule", "const:1"], "q-rule"),
        (["--command", "dwa-korovkin", "--matrix", "toeplitz"], "matrix"),
        (["--command", "psum-korovkin", "--pn", "harmonic"], "pn"),
        (["--command", "regularity", "--scheme", "half-deferred:n/x"], "scheme"),
        (["--command", "psum-korovkin", "--u-grid", "dyadic:9:4"], "u-grid"),
        (["--command", "moments", "--n-start", "5", "--n-end", "2"], "n-end"),
        (["--command", "moments", "--tail-tol", "-1"], "tail-tol"),
        (["--command", "dwa-korovkin", "--n-start", "3"], "n-start"),
        ([], "command"),
    ],
)
def test_config_errors_name_the_field(args, field):
    with pytest.raises(ConfigError) as exc:
        build_config(args)
    assert exc.value.field == field
    assert main(args) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\ncommand = moments\nn-start = 3\nn_end = 4\nalpha-rule = const:0.7\ngrid-points = 5\n")
    c = build_config(["--config", str(cfg), "--n-end", "6"])
    assert (c.command, c.n_start, c.n_end, c.grid_points) == ("moments", 3, 6, 5)
    assert c.schedule.params(3).alphas == (0.7,)
    (tmp_path / "bad.cfg").write_text("command = moments\nwibble = 3\n")
    with pytest.raises(ConfigError) as exc:
        build_config(["--config", str(tmp_path / "bad.cfg")])
    assert exc.value.field == "wibble"
    (tmp_path / "worse.cfg").write_text("command moments\n")
    with pytest.raises(ConfigError):
        build_config(["--config", str(tmp_path / "worse.cfg")])


def test_presets_resolve():
    c = build_config(["--command", "regularity", "--matrix", "cesaro-matrix", "--pn", "geometric-pn"])
    assert c.matrix == "cesaro-matrix"
    build_config(["--command", "psum-korovkin", "--pn", "ones-weights", "--matrix", "identity-matrix"])
    build_config(["--command", "psum-korovkin", "--pn", "geometric:0.25"])


def test_tables_are_byte_identical(tmp_path):
    args = ["--command", "psum-korovkin", "--n-end", "40", "--grid-points", "101", "--u-grid", "dyadic:4:9"]
    a = _run(tmp_path, *args, name="a")
    b = _run(tmp_path, *args, name="b")
    assert a == b
    assert a[1].splitlines()[0].startswith("index,residual_e0,residual_e1,residual_e2,residual_g,bound")


def test_regularity_command(tmp_path):
    status, table, report = _run(tmp_path, "--command", "regularity", "--matrix", "cesaro")
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(table)))
    assert [int(r["n"]) for r in rows] == list(range(100, 1001, 100))
    assert float(rows[-1]["V3"]) <= 1e-12


def test_normalization_command(tmp_path):
    status, _, report = _run(tmp_path, "--command", "normalization", "--r", "2", "--n-start", "2",
                             "--n-end", "5", "--n-step", "3", "--alpha-rule", "const:0.8",
                             "--q-rule", "const:0.6", "--grid-points", "11")
    assert status == 0, report


def test_counterexample_command(tmp_path):
    status, table, report = _run(tmp_path, "--command", "counterexample", "--grid-points", "201")
    assert status == 0, report
    rows = list(csv.DictReader(io.StringIO(table)))
    t0 = [float(r["residual_e0"]) for r in rows]
    tg = [float(r["residual_g"]) for r in rows]
    assert all(b <= a for a, b in zip(t0, t0[1:])) and t0[-1] <= 0.02
    assert all(b <= a for a, b in zip(tg, tg[1:])) and tg[-1] <= 0.02
    assert "verdict.classical_premise_fails: pass" in report


def test_failing_verdict_gives_status_one(tmp_path):
    # a constant alpha never approaches 1, so the first moment premise cannot decay to 1e-3
    status, _, report = _run(tmp_path, "--command", "psum-korovkin", "--alpha-rule", "const:0.5",
                             "--n-end", "30", "--grid-points", "51", "--u-grid", "dyadic:4:8")
    assert status == 1
    assert "verdict.premise_e1_small: FAIL" in report


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qlh_approx.cli", "--command", "moments", "--grid-points", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("n,x,m0")
    assert "status: PASS" in proc.stdout
