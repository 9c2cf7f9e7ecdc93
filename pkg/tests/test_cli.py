import json
import math
import subprocess
import sys

import numpy as np
import pytest

from goldenrule.cli import main
from goldenrule.io import ConfigError, RunConfig, build_config, format_value, load_config_file, read_csv


def run(args, tmp_path, name="out.csv"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out


def columns_of(path):
    return read_csv(path)[1]


def table(path):
    meta, cols, rows = read_csv(path)
    data = {c: [r[i] for r in rows] for i, c in enumerate(cols)}
    return meta, data


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert float(format_value(math.pi)) == math.pi
    assert format_value(3) == "3" and format_value(None) == "" and format_value(True) == "true"


def test_first_order_columns_and_metadata(tmp_path):
    code, out = run(["first-order", "--t-max-over-th", "2", "--points-per-interval", "50"], tmp_path)
    assert code == 0
    meta, data = table(out)
    for key in ("config", "gamma", "t_H", "alpha"):
        assert key in meta
    assert meta["alpha"] == pytest.approx([0, 0.25, 3 / 7, 0.5])
    assert meta["gamma"] == pytest.approx(2 * math.pi * 0.0225)
    cols = columns_of(out)
    assert cols[:4] == ["t", "t_over_th", "T", "interval"]
    assert "W[alpha=0.428571]" in cols and "P[alpha=0.5]" in cols
    # 101 grid points plus one duplicated interior boundary
    assert len(data["t"]) == 102


def test_first_order_curves_coincide_then_fan_out(tmp_path):
    code, out = run(["first-order", "--t-max-over-th", "4", "--points-per-interval", "50"], tmp_path)
    _, data = table(out)
    t_over = np.array(data["t_over_th"], float)
    W = np.array([[float(x) for x in data[f"W[alpha={a}]"]] for a in ("0", "0.25", "0.428571", "0.5")])
    first = t_over <= 1
    assert np.ptp(W[:, first], axis=0).max() <= 1e-12
    assert np.ptp(W[:, t_over > 1.5], axis=0).min() > 0.1
    # alpha = 1/2 returns to zero at even multiples of pi
    half = W[3]
    for k in (2, 4):
        assert np.abs(half[np.isclose(t_over, k)]).max() <= 1e-10


def test_boundaries_listed_from_both_sides(tmp_path):
    code, out = run(["exact", "--alpha", "0.3", "--t-max-over-th", "3", "--points-per-interval", "50"], tmp_path)
    _, data = table(out)
    t = np.array(data["t_over_th"], float)
    ids = np.array(data["interval"], int)
    for k in (1, 2):
        at = np.flatnonzero(np.isclose(t, k, rtol=0, atol=1e-12))
        assert list(ids[at]) == [k - 1, k]
        P = np.array(data["P_i[alpha=0.3]"], float)[at]
        assert abs(P[0] - P[1]) <= 1e-10


def test_zero_coupling_first_order(tmp_path):
    code, out = run(["first-order", "--g", "0", "--t-max-over-th", "2", "--points-per-interval", "50"], tmp_path)
    _, data = table(out)
    for c in data:
        if c.startswith("P["):
            assert all(float(v) == 0 for v in data[c])


def test_first_order_oracle_columns(tmp_path):
    code, out = run(
        ["first-order", "--alpha", "0.3", "--oracle", "--oracle-m", "20000", "--t-max-over-th", "1", "--points-per-interval", "50"],
        tmp_path,
    )
    _, data = table(out)
    W = np.array(data["W[alpha=0.3]"], float)
    D = np.array(data["W_direct[alpha=0.3]"], float)
    tail = np.array(data["tail_bound[alpha=0.3]"], float)
    assert np.all(W - D <= tail + 1e-12) and np.all(D <= W + 1e-9)


def test_exact_first_interval(tmp_path):
    code, out = run(["exact", "--t-max-over-th", "1", "--points-per-interval", "50"], tmp_path)
    assert code == 0
    _, data = table(out)
    t = np.array(data["t"], float)
    gamma = 2 * math.pi * 0.0225
    for c in data:
        if c.startswith("P_i["):
            assert np.abs(np.array(data[c], float) - np.exp(-gamma * t)).max() <= 1e-12
    assert columns_of(out)[:6] == ["t", "t_over_th", "interval", "ReS[alpha=0]", "ImS[alpha=0]", "P_i[alpha=0]"]


def test_exact_oracle_overlay(tmp_path):
    code, out = run(
        ["exact", "--alpha", "0.25", "--oracle", "--truncation-n", "1000", "--t-max-over-th", "3", "--points-per-interval", "50"],
        tmp_path,
    )
    assert code == 0
    _, data = table(out)
    assert max(float(v) for v in data["deviation[alpha=0.25]"]) <= 1e-3


def test_exact_span_beyond_table(tmp_path, capsys):
    code, _ = run(["exact", "--t-max-over-th", "9.5", "--points-per-interval", "50"], tmp_path)
    assert code == 1
    assert "--oracle" in capsys.readouterr().err


def test_exact_span_beyond_table_with_oracle(tmp_path):
    code, out = run(
        ["exact", "--alpha", "0.3", "--t-max-over-th", "9.5", "--points-per-interval", "50", "--oracle", "--truncation-n", "300"], tmp_path
    )
    assert code == 0
    _, data = table(out)
    ids = np.array(data["interval"], int)
    P = np.array(data["P_i[alpha=0.3]"], float)
    num = np.array(data["P_i_numeric[alpha=0.3]"], float)
    assert np.all(np.isnan(P[ids > 8])) and np.all(np.isfinite(num))


def test_sampling_figure_default(tmp_path):
    code, out = run(["sampling-figure"], tmp_path)
    meta, data = table(out)
    kinds = np.array(data["kind"])
    x = np.array(data["x"])[kinds == "sample"].astype(float)
    m = np.array(data["m"])[kinds == "sample"].astype(float)
    assert meta["alpha"] == pytest.approx([3 / 7])
    assert np.allclose(x, (np.arange(-10, 11) - 3 / 7) * 1.0, rtol=0, atol=1e-15)
    assert np.array_equal(m, np.arange(-10, 11))
    assert (kinds == "curve").sum() > 100


def test_sampling_figure_zero_offset(tmp_path):
    code, out = run(["sampling-figure", "--alpha", "0", "--T-sample", "2.5"], tmp_path)
    _, data = table(out)
    rows = [(float(x), float(y)) for k, x, y in zip(data["kind"], data["x"], data["sinc2"]) if k == "sample"]
    assert (0.0, 1.0) in rows


def test_sampling_figure_half_offset(tmp_path):
    code, out = run(["sampling-figure", "--alpha", "0.5", "--T-sample", str(math.pi)], tmp_path)
    _, data = table(out)
    for k, x, y in zip(data["kind"], data["x"], data["sinc2"]):
        if k == "sample":
            x, y = float(x), float(y)
            assert (x / math.pi) % 1 == pytest.approx(0.5)
            assert y == pytest.approx(1 / x**2, rel=1e-12)


def test_analyze_json_report(tmp_path, capsys):
    code, out = run(["analyze", "--alpha", "0.5", "--t-max-over-th", "3"], tmp_path, "report.json")
    assert code == 0
    report = json.loads(out.read_text())["report"]
    rows = [r for r in report["breakdown"] if r["interval"] == 1]
    assert rows[0]["max_relative_deviation"] == pytest.approx(1.0, abs=1e-12)
    assert report["alphas"][0]["first_order_kinks"]["matched"] == pytest.approx([1.0, 2.0])
    assert report["validity_window"]["t_max_over_th"] == 1.0
    summary = capsys.readouterr().out
    assert "breakdown" in summary and "golden-rule window" in summary


def test_analyze_defaults_lists_matches(tmp_path):
    code, out = run(["analyze"], tmp_path, "report.json")
    report = json.loads(out.read_text())["report"]
    entry = [e for e in report["alphas"] if e["alpha"] == pytest.approx(3 / 7)][0]
    assert entry["first_order_kinks"]["matched"] == pytest.approx([1.0, 2.0, 3.0])
    assert entry["exact_kinks"]["matched"] == pytest.approx([1.0, 2.0, 3.0])


def test_analyze_zero_coupling(tmp_path):
    code, out = run(["analyze", "--g", "0", "--alpha", "0.3"], tmp_path, "report.json")
    entry = json.loads(out.read_text())["report"]["alphas"][0]
    assert entry["first_order_rate"]["rate"] == 0.0
    assert entry["exact_rate"]["rate"] == 0.0
    assert entry["first_order_kinks"]["locations_over_th"] == []
    assert entry["exact_kinks"]["locations_over_th"] == []


def test_analyze_csv_breakdown(tmp_path):
    code, out = run(["analyze", "--alpha", "0.3", "--format", "csv"], tmp_path)
    assert columns_of(out) == ["alpha", "interval", "max_relative_deviation", "max_absolute_deviation", "t_at_max"]


def test_analyze_needs_dense_grid(tmp_path):
    code, _ = run(["analyze", "--points-per-interval", "20"], tmp_path, "r.json")
    assert code == 1


def test_convergence_columns(tmp_path):
    code, out = run(["convergence", "--n-list", "50", "100", "200", "--t-max-over-th", "1", "--points-per-interval", "50"], tmp_path)
    meta, data = table(out)
    assert columns_of(out) == ["N", "max_deviation", "edge_population"]
    dev = [float(v) for v in data["max_deviation"]]
    assert dev[0] > dev[1] > dev[2] == 0
    assert "smallest_converged_n" in meta and meta["warnings"]


def test_json_curve_output(tmp_path):
    code, out = run(["first-order", "--alpha", "0.3", "--t-max-over-th", "1", "--format", "json"], tmp_path, "c.json")
    payload = json.loads(out.read_text())
    assert payload["columns"][0] == "t" and len(payload["rows"]) == 201


def test_deterministic_output(tmp_path):
    args = ["exact", "--t-max-over-th", "3", "--points-per-interval", "60"]
    _, a = run(args, tmp_path, "a.csv")
    _, b = run(args, tmp_path, "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"g": 0.05, "alpha": [0.3], "t-max-over-th": 1, "points_per_interval": 50}))
    _, a = run(["first-order", "--config", str(cfg)], tmp_path, "a.csv")
    meta, _ = table(a)
    assert meta["config"]["g"] == 0.05 and meta["config"]["alphas"] == [0.3]
    _, b = run(["first-order", "--config", str(cfg), "--g", "0.1"], tmp_path, "b.csv")
    meta, _ = table(b)
    assert meta["config"]["g"] == 0.1 and meta["config"]["points_per_interval"] == 50


def test_e_b_sets_alpha(tmp_path):
    _, out = run(["first-order", "--e-b", "-1.25", "--t-max-over-th", "1"], tmp_path)
    meta, _ = table(out)
    assert meta["alpha"] == [0.75]


@pytest.mark.parametrize(
    "args",
    [
        ["first-order", "--delta", "0"],
        ["first-order", "--g", "-0.1"],
        ["first-order", "--alpha", "1.5"],
        ["first-order", "--t-max-over-th", "0"],
        ["exact", "--points-per-interval", "0"],
        ["convergence", "--n-list", "300", "100"],
    ],
)
def test_configuration_errors_exit_1(args, tmp_path):
    code, _ = run(args, tmp_path)
    assert code == 1


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["first-order", "--config", str(bad)]) == 1
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"colour": "red"}))
    assert main(["first-order", "--config", str(unknown)]) == 1
    assert main(["first-order", "--config", str(tmp_path / "missing.json")]) == 2


def test_io_error_exit_2(tmp_path):
    assert main(["sampling-figure", "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 2


def test_numerical_error_exit_3(tmp_path, monkeypatch):
    from goldenrule import cli
    from goldenrule.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("eigensolver failed", {"N": 10})

    monkeypatch.setattr(cli.propagator, "build", boom)
    code, _ = run(["exact", "--alpha", "0.3", "--oracle", "--t-max-over-th", "1"], tmp_path)
    assert code == 3


def test_build_config_precedence():
    cfg = build_config({"g": 0.2, "delta": 2.0}, {"g": 0.3, "delta": None})
    assert cfg.g == 0.3 and cfg.delta == 2.0
    with pytest.raises(ConfigError):
        RunConfig(format="xml").validate()


def test_load_config_rejects_non_object(tmp_path):
    p = tmp_path / "list.json"
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config_file(p)


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.csv"
    res = subprocess.run(
        [sys.executable, "-m", "goldenrule", "sampling-figure", "--out", str(out)], capture_output=True, text=True
    )
    assert res.returncode == 0, res.stderr
    assert out.read_text().startswith("# command")
