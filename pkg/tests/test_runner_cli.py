import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from steersep import cli
from steersep.errors import InvariantViolation, RangeViolation
from steersep.estimator import Accumulator
from steersep.qmat import werner
from steersep.runner import (
    CURVE_HEADER,
    SAMPLE_HEADER,
    RunConfig,
    analyze_states,
    iter_worker_records,
    run_accumulate,
    run_experiment,
)
from steersep.sampling import GINIBRE, SamplerConfig


def paper_cfg(iterations=400_000, seed=1, workers=1, processes=1, measures=("hs", "qse", "qse_alt", "bures")):
    return RunConfig(iterations, SamplerConfig(seed=seed, workers=workers), measures=measures, processes=processes)


def acc_state(acc):
    return (acc.iterations, acc.feasible, acc.ppt, acc.abs_sep, acc.batch_counts.tobytes(),
            acc.batch_sums.tobytes(), {k: acc.sum_value(k) for k in acc.sums})


def test_worker_ranges_cover_run():
    cfg = paper_cfg(iterations=1001, workers=4)
    ranges = [cfg.worker_range(w) for w in range(4)]
    assert ranges[0][0] == 0 and ranges[-1][1] == 1001
    assert all(a[1] == b[0] for a, b in zip(ranges, ranges[1:]))


def test_merged_workers_equal_one_owner_over_all_streams():
    cfg = paper_cfg(iterations=300_000, workers=4)
    merged = run_accumulate(cfg)
    single = Accumulator(cfg.iterations, cfg.batches, cfg.bins)
    for w in range(4):
        for lo, hi, recs in iter_worker_records(cfg, w):
            for r in recs:
                single.ingest(r)
            single.count_iterations(lo, hi)
    assert (merged.iterations, merged.feasible, merged.ppt, merged.abs_sep) == (
        single.iterations, single.feasible, single.ppt, single.abs_sep)
    assert np.array_equal(merged.batch_counts, single.batch_counts)
    assert merged.iterations == 300_000


def test_processes_do_not_change_results():
    a = run_accumulate(paper_cfg(iterations=200_000, workers=2, processes=1))
    b = run_accumulate(paper_cfg(iterations=200_000, workers=2, processes=2))
    assert acc_state(a) == acc_state(b)


def test_chunking_does_not_change_results():
    cfg = paper_cfg(iterations=200_000)
    whole = [r for _, _, recs in iter_worker_records(cfg, 0, chunk=200_000) for r in recs]
    parts = [r for _, _, recs in iter_worker_records(cfg, 0, chunk=30_000) for r in recs]
    assert whole == parts


def test_analyze_states_flags_violations():
    with pytest.raises(RangeViolation) as info:
        analyze_states(4 * werner(1).to_array()[None])
    assert info.value.matrix is not None
    feats = analyze_states(np.stack([werner(0.2).to_array(), werner(0.9).to_array()]))
    assert feats["is_ppt"].tolist() == [True, False]
    assert feats["v_a"][0] == pytest.approx(64 * math.pi / 3 * abs((1 + 0.6) * 0.8 ** 3 - 1.2 ** 3 * 0.4) / 256)


def test_summary_and_curve_files(tmp_path):
    s_path, c_path, x_path = tmp_path / "s.json", tmp_path / "c.csv", tmp_path / "x.csv"
    cfg = paper_cfg(iterations=500_000)
    acc, summary = run_experiment(cfg, s_path, c_path, x_path)
    loaded = json.loads(s_path.read_text())
    # JSON round trip reproduces every number exactly
    for name, est in summary["ratios"].items():
        assert loaded["ratios"][name] == est
    assert loaded["sums"] == summary["sums"]
    assert set(loaded) >= {"config", "iterations", "feasible", "ppt", "abs_sep", "exclusions", "ratios",
                           "max_weight_share", "timestamp"}
    assert loaded["config"]["cutoff"] == "4/15"
    rows = list(csv.reader(c_path.open()))
    assert tuple(rows[0]) == CURVE_HEADER and len(rows) == 21
    body = rows[1:]
    assert sum(int(r[2]) for r in body) == loaded["feasible"]
    assert sum(int(r[3]) for r in body) == loaded["ppt"]
    assert sum(float(r[4]) for r in body) == pytest.approx(loaded["sums"]["qse_all"], rel=1e-9)
    assert sum(float(r[5]) for r in body) == pytest.approx(loaded["sums"]["qse_sep"], rel=1e-9)
    samples = list(csv.reader(x_path.open()))
    assert tuple(samples[0]) == SAMPLE_HEADER and len(samples) - 1 == loaded["feasible"]
    assert sum(int(r[9]) for r in samples[1:]) == loaded["ppt"]


def test_measures_select_ratios():
    _, summary = run_experiment(paper_cfg(iterations=200_000, measures=("qse",)))
    assert set(summary["ratios"]) == {"qse_ratio", "qse_abs_sep_ratio"}


def test_ginibre_run():
    cfg = RunConfig(5000, SamplerConfig(kind=GINIBRE, seed=3))
    _, summary = run_experiment(cfg)
    assert summary["feasible"] == summary["iterations"] == 5000
    assert abs(summary["ratios"]["hs_ratio"]["estimate"] - 8 / 33) < 0.03


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(0)
    with pytest.raises(ValueError):
        RunConfig(10, bins=0)
    with pytest.raises(ValueError):
        RunConfig(10, measures=("nope",))


def test_cli_run(tmp_path, capsys):
    out = tmp_path / "s.json"
    code = cli.main(["run", "--iterations", "2e5", "--seed", "5", "--out-summary", str(out),
                     "--out-curve", str(tmp_path / "c.csv")])
    assert code == 0
    text = capsys.readouterr().out
    assert "feasible" in text and "8/33" in text
    assert json.loads(out.read_text())["iterations"] == 200_000


def test_cli_determinism(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert cli.main(["run", "--iterations", "3e5", "--seed", "9", "--workers", "2", "--out-summary", str(p)]) == 0
    a, b = (json.loads(p.read_text()) for p in paths)
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b


def test_cli_config_errors(tmp_path, capsys):
    base = ["run", "--iterations", "1000", "--out-summary", str(tmp_path / "s.json")]
    assert cli.main(base + ["--cutoff", "3/2"]) == 2
    assert cli.main(base + ["--bins", "0"]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["run", "--iterations", "abc"])
    assert info.value.code == 2


def test_cli_invariant_exit(tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise InvariantViolation("forced", matrix=np.eye(4))

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["run", "--iterations", "10", "--out-summary", str(tmp_path / "s.json")]) == 4
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InvariantViolation" and len(err["matrix_real"]) == 4


def test_cli_budget_exit(monkeypatch, capsys):
    from steersep.errors import IterationBudgetExceeded

    def boom(*args, **kwargs):
        raise IterationBudgetExceeded("cap")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["run", "--iterations", "10"]) == 3


def test_cli_moments(capsys):
    assert cli.main(["moments", "--n-max", "2", "--k-max", "1", "--alphas", "2", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    by = {(r["n"], r["k"]): r for r in rows}
    assert by[(1, 0)]["fraction"] == "-13/5394"
    assert by[(1, 0)]["decimal"].startswith("-0.00241008527994")
    assert all(by[(0, k)]["fraction"] == "1" for k in (0, 1))
    assert cli.main(["moments", "--n-max", "1", "--k-max", "0", "--format", "csv"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "n,k,alpha,fraction,decimal"
    assert cli.main(["moments", "--n-max", "-1"]) == 2


def test_moment_rows_grid():
    rows = cli.moment_rows(10, 5, [Fraction(1), Fraction(2), Fraction(4)])
    assert len(rows) == 3 * 6 * 11
    assert all(v == 1 for n, k, a, v in rows if n == 0)


def test_cli_validate(capsys):
    assert cli.main(["validate", "--states", "2000", "--paper-states", "200"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_cli_spectra(capsys):
    assert cli.main(["spectra", "--samples", "200000", "--grid", "400"]) == 0
    assert "quadrature fraction" in capsys.readouterr().out


def test_cli_workers_env(monkeypatch, tmp_path):
    monkeypatch.setenv("STEERSEP_WORKERS", "3")
    out = tmp_path / "s.json"
    assert cli.main(["run", "--iterations", "30000", "--processes", "1", "--out-summary", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["workers"] == 3
