import io
import json

import numpy as np
import pytest

from rkhsflm.cli import main
from rkhsflm.errors import ParseError
from rkhsflm.estimators import FunctionalDataset
from rkhsflm.io import dumps_dataset, parse_dataset, read_dataset, write_dataset
from rkhsflm.kernels import Grid
from rkhsflm.simulate import ScenarioSpec, generate


def _parse(text):
    return parse_dataset(io.StringIO(text))


def test_round_trip_in_memory():
    data, _ = generate(ScenarioSpec("2b", n=7, seed=2))
    back = _parse(dumps_dataset(data))
    assert np.array_equal(back.grid.points, data.grid.points)
    assert np.array_equal(back.X, data.X)
    assert np.array_equal(back.Y, data.Y)


def test_write_read_write_bytes(tmp_path):
    data, _ = generate(ScenarioSpec("3", n=4, m=37, seed=3))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_dataset(data, a)
    write_dataset(read_dataset(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_hand_written_file():
    data = _parse("t_0,t_0.5,t_1,y\n1,2,3,4\n0,0,0,1.5\n-1,2.5,1e-3,0\n")
    assert (data.n, data.m) == (3, 3)
    assert data.grid.points.tolist() == [0.0, 0.5, 1.0]
    assert data.Y.tolist() == [4.0, 1.5, 0.0]


@pytest.mark.parametrize(
    "text, line",
    [
        ("t_0,t_0.5,t_0.2,y\n1,2,3,4\n", 1),
        ("t_0,t_1,y\n1,2,3\n1,2\n", 3),
        ("t_0,t_1,y\n1,2,3\n1,abc,3\n", 3),
        ("t_0,t_1,y\n1,nan,3\n", 2),
        ("t_0,t_1,z\n1,2,3\n", 1),
        ("", 1),
    ],
)
def test_parse_errors_report_line(text, line):
    with pytest.raises(ParseError) as exc:
        _parse(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_rescale_outside_unit_interval():
    text = "t_10,t_15,t_20,y\n1,2,3,4\n"
    data = _parse(text)
    assert data.grid.points.tolist() == [0.0, 0.5, 1.0]
    assert data.metadata["time_range"] == (10.0, 20.0)
    assert dumps_dataset(data) == "t_10,t_15,t_20,y\n1.0,2.0,3.0,4.0\n"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_schema_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(["simulate", "--scenario", "2a", "--n", 5, "--m", 101, "--seed", 7, "--out", path], capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    header = lines[0].split(",")
    assert len(header) == 102 and header[-1] == "y" and header[0] == "t_0" and header[1] == "t_0.01"
    assert len(lines) == 6


def test_simulate_scenario3_response_scale(tmp_path, capsys):
    path = tmp_path / "s3.csv"
    assert run(["simulate", "--scenario", "3", "--n", 100, "--out", path], capsys)[0] == 0
    assert 0.1 <= np.std(read_dataset(path).Y, ddof=1) <= 3.0


def test_simulate_bad_path(tmp_path, capsys):
    code, _, err = run(["simulate", "--out", tmp_path / "missing" / "x.csv"], capsys)
    assert code == 1 and err


def test_fit_impact_ols_noiseless(tmp_path, capsys):
    path = tmp_path / "d.csv"
    run(["simulate", "--scenario", "2a", "--n", 40, "--sigma", 0, "--out", path], capsys)
    code, out, _ = run(["fit", "--in", path, "--estimator", "impact-ols", "--points", "0.2,0.4,0.9"], capsys)
    assert code == 0
    summary = json.loads(out)
    np.testing.assert_allclose(summary["coefficients"], [2, -5, 1], atol=1e-8)
    assert summary["intercept"] == pytest.approx(0.0, abs=1e-8)


def test_fit_fpcr_q_too_large(tmp_path, capsys):
    path = tmp_path / "d.csv"
    run(["simulate", "--scenario", "3", "--n", 5, "--m", 21, "--out", path], capsys)
    code, _, err = run(["fit", "--in", path, "--estimator", "fpcr", "--q", 10], capsys)
    assert code != 0
    assert "q exceeds retained rank" in err


def test_fit_grid_ols_training_r2(tmp_path, capsys):
    path = tmp_path / "d.csv"
    run(["simulate", "--scenario", "2a", "--n", 300, "--seed", 1, "--out", path], capsys)
    code, out, _ = run(["fit", "--in", path, "--estimator", "grid-ols", "--p", 10], capsys)
    assert code == 0
    training = json.loads(out)["training"]
    assert training["adj_r2"] >= 0.95
    assert 0.15 <= training["residual_sd"] <= 0.25


def test_fit_tikhonov_and_fpcr_outputs(tmp_path, capsys):
    path = tmp_path / "d.csv"
    run(["simulate", "--scenario", "3", "--n", 80, "--out", path], capsys)
    code, out, _ = run(["fit", "--in", path, "--estimator", "tikhonov", "--gamma-rule", "2*n^-0.2"], capsys)
    assert code == 0
    summary = json.loads(out)
    assert summary["gamma"] == pytest.approx(2 * 80**-0.2)
    assert len(summary["alpha_hat"]) == 101
    code, out, _ = run(["fit", "--in", path, "--estimator", "fpcr", "--q", 3], capsys)
    assert code == 0 and len(json.loads(out)["score_coefficients"]) == 3


def test_fit_parse_error_has_line(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("t_0,t_1,y\n1,2,3\n1,2\n")
    code, _, err = run(["fit", "--in", path], capsys)
    assert code == 1 and "line 3" in err


def test_reproduce_table_shape_and_determinism(tmp_path, capsys):
    argv = ["reproduce", "--table", "2a", "--reps", 2, "--format", "csv", "--threads", 1]
    code, first, _ = run(argv, capsys)
    assert code == 0
    _, second, _ = run(argv, capsys)
    assert first == second
    rows = first.splitlines()[1:]
    assert len(rows) == 24
    assert sorted({r.split(",")[0] for r in rows}) == sorted(["6", "10", "14", "18", "L2_4", "L2_6"])
    assert sorted({int(r.split(",")[1]) for r in rows}) == [100, 300, 500, 700]
    code, md, _ = run(argv[:-4] + ["--format", "md"], capsys)
    table_lines = [line for line in md.splitlines() if line.startswith("|")]
    # header, rule and 6 estimator rows for each of the two metrics
    assert len(table_lines) == 16
    assert all(line.count("|") == 6 for line in table_lines)


def test_reproduce_rkhs_table_layout(capsys):
    code, out, _ = run(["reproduce", "--table", "rkhs-2b-est", "--reps", 1, "--n", "200", "--format", "csv"], capsys)
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "estimator,n,replications,rkhs_error,rkhs_error_se"
    assert [r.split(",")[0] for r in rows[1:]] == [str(p) for p in range(3, 18, 2)]


def test_unknown_table_is_usage_error(capsys):
    code, _, err = run(["reproduce", "--table", "9"], capsys)
    assert code == 1 and "invalid choice" in err


def test_no_command(capsys):
    assert run([], capsys)[0] == 1


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# defaults\nscenario = 3\nn = 4\nseed=5\n")
    _, from_cfg, _ = run(["--config", cfg, "simulate"], capsys)
    _, explicit, _ = run(["simulate", "--scenario", "3", "--n", 4, "--seed", 5], capsys)
    assert from_cfg == explicit
    _, override, _ = run(["--config", cfg, "simulate", "--n", 2], capsys)
    assert len(override.splitlines()) == 3


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 4\nwidth = 3\n")
    code, _, err = run(["--config", cfg, "simulate"], capsys)
    assert code == 1 and "line 2" in err and "width" in err


def test_numeric_failure_exit_code(monkeypatch, capsys):
    from rkhsflm import cli
    from rkhsflm.errors import NumericError

    def boom(args):
        raise NumericError("factorization failed")

    monkeypatch.setitem(cli.COMMANDS, "simulate", boom)
    assert run(["simulate"], capsys)[0] == 2


def test_dataset_metadata_not_required():
    data = FunctionalDataset(Grid([0.0, 1.0]), np.array([[1.0, 2.0]]), np.array([0.5]))
    assert dumps_dataset(data) == "t_0,t_1,y\n1.0,2.0,0.5\n"
