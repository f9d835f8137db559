import json

import numpy as np
import pytest

from risfdd import cli
from risfdd.channel import load_channels, realize_channels
from risfdd.harness import (ExperimentError, ExperimentSpec, compare, paired, parse_seeds,
                            parse_sweep, read_csv, read_results, run, run_algorithm,
                            sign_test_p, write_comparison, write_csv)
from risfdd.scenario import default_paper_scenario, save_config
from risfdd.trace import OptimizationTrace
from risfdd.transceiver import RatePair


def small():
    return default_paper_scenario().replace(n_bs=4, k_ue=3, l_ris=4, l_h=2, l_v=2,
                                            n_streams_dl=2, n_streams_ul=2)


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    save_config(small(), path)
    return path


def test_trace_rows():
    t = OptimizationTrace()
    t.append(RatePair(1.0, 2.0, 1.5))
    t.append(RatePair(1.5, 2.0, 1.75), grad_norm=1e-5, wall_ms=3.0)
    assert [r.outer_iter for r in t.rows] == [0, 1]
    assert t.outer_iters == 1 and t.final.r_wsr == 1.75 and t.wall_ms == 3.0
    with pytest.raises(ValueError):
        t.append(RatePair(-1.0, 0.0, 0.0))


def test_converged_within():
    t = OptimizationTrace()
    for w in (1.0, 2.0, 2.5, 2.5001):
        t.append(RatePair(w, w, w))
    assert t.converged_within(3, 1e-3)
    assert not t.converged_within(2, 1e-3)


def test_parse_helpers():
    assert parse_seeds("0..3") == [0, 1, 2, 3]
    assert parse_seeds("4,7") == [4, 7]
    assert parse_sweep("eta:0,0.5,1") == ("eta", [0, 0.5, 1])
    with pytest.raises(ExperimentError):
        parse_seeds("5..2")
    with pytest.raises(ExperimentError):
        parse_sweep("eta")
    with pytest.raises(ExperimentError):
        parse_sweep("eta:a,b")


def test_spec_validation():
    with pytest.raises(ExperimentError):
        ExperimentSpec(small(), "manifold", [])
    with pytest.raises(ExperimentError):
        ExperimentSpec(small(), "simplex", [0])
    with pytest.raises(ExperimentError):
        ExperimentSpec(small(), "lcao", [0], sweep=("n_bs", [2]))
    with pytest.raises(ExperimentError):
        ExperimentSpec(small(), "lcao", [0], sweep=("L", [10]))
    with pytest.raises(ExperimentError):
        ExperimentSpec(small(), "lcao", [0], sweep=("eta", [1.5]))
    with pytest.raises(ExperimentError):
        run_algorithm("nope", small(), 0)


def test_channels_depend_only_on_seed():
    a = realize_channels(small(), 5)
    _, _, t1 = run_algorithm("lcao", small(), 5)
    b = realize_channels(small(), 5)
    assert np.array_equal(a.g_dl, b.g_dl)
    assert t1.final.r_wsr > 0


def test_run_single_seed_writes_one_trace(tmp_path):
    spec = ExperimentSpec(small(), "manifold", [0], output_path=tmp_path / "out")
    res = run(spec)
    assert len(res.cells) == 1
    assert len(list((tmp_path / "out" / "traces").iterdir())) == 1
    sidecar = json.loads((tmp_path / "out" / "results.json").read_text())
    assert sidecar["spec"]["scenario"]["n_bs"] == 4
    assert sidecar["code_version"]
    assert sidecar["rcg_settings"]["armijo_contraction"] == 0.5


def test_csv_round_trip(tmp_path):
    spec = ExperimentSpec(small(), "lcao", [0, 1], sweep=("eta", [0.1, 0.9]),
                          output_path=tmp_path)
    res = run(spec)
    back = read_results(tmp_path)
    assert back == res.cells
    header = (tmp_path / "results.csv").read_text().splitlines()[0]
    assert header == "sweep_value,seed,algorithm,r_dl,r_ul,r_wsr,outer_iters,wall_ms"
    summary = read_csv(tmp_path / "summary.csv")
    assert [r["sweep_value"] for r in summary] == [0.1, 0.9]
    assert summary[0]["n"] == 2
    cells = [c for c in res.cells if c.sweep_value == 0.1]
    assert summary[0]["mean_r_wsr"] == pytest.approx(np.mean([c.r_wsr for c in cells]))


def test_write_csv_exact_floats(tmp_path):
    rows = [{"a": 0.1 + 0.2, "b": 1e-300, "c": None, "d": "x"}]
    write_csv(tmp_path / "t.csv", ("a", "b", "c", "d"), rows)
    assert read_csv(tmp_path / "t.csv") == rows


def test_l_sweep_rows():
    spec = ExperimentSpec(small(), "random", [0], sweep=("L", [4, 16]))
    res = run(spec)
    assert len(res.summary()) == 2
    assert res.spec.scenario_for(16).l_h == 4


def test_sign_test():
    assert sign_test_p([1.0] * 20) == pytest.approx(0.5 ** 20)
    assert sign_test_p([0.0, 0.0]) == 1.0
    assert sign_test_p([-1.0] * 5) == 1.0


def test_compare_pairs_and_rejections(tmp_path):
    specs = [ExperimentSpec(small(), name, [0, 1, 2]) for name in ("manifold", "random")]
    report = compare(specs)
    p = report.pair("manifold", "random")
    assert p.n == 3 and len(p.deltas) == 3
    assert report.ranking()[0][0] == "manifold"
    write_comparison(report, tmp_path)
    assert (tmp_path / "comparison.csv").exists()
    assert (tmp_path / "manifold" / "results.csv").exists()
    other = ExperimentSpec(small().replace(eta=0.3), "lcao", [0, 1, 2])
    with pytest.raises(ExperimentError):
        compare([specs[0], other])
    with pytest.raises(ExperimentError):
        compare([specs[0], ExperimentSpec(small(), "lcao", [0, 1])])
    with pytest.raises(ExperimentError):
        compare(specs[:1])


def test_parallel_matches_serial():
    spec = ExperimentSpec(small(), "lcao", [0, 1, 2])
    a = run(spec)
    b = run(spec, workers=2)
    assert [c.r_wsr for c in a.cells] == [c.r_wsr for c in b.cells]


def test_cli_run_with_channel_dump(tmp_path, scenario_file, capsys):
    out = tmp_path / "run"
    code = cli.main(["run", "--scenario", str(scenario_file), "--algorithm", "lcao",
                     "--seeds", "0..1", "--out", str(out), "--dump-channels"])
    assert code == 0
    assert "R_WSR" in capsys.readouterr().out
    assert len(read_csv(out / "results.csv")) == 2
    ch, seed = load_channels(out / "channels" / "sweep-none_seed-1.bin")
    assert seed == 1
    assert np.array_equal(ch.h_ul, realize_channels(small(), 1).h_ul)


def test_cli_sweep(tmp_path, scenario_file):
    out = tmp_path / "sweep"
    assert cli.main(["sweep", "--scenario", str(scenario_file), "--algorithm", "random",
                     "--seeds", "0,1", "--sweep", "p_dl_max_dbm:20,30", "--out", str(out)]) == 0
    rows = read_csv(out / "summary.csv")
    assert [r["sweep_value"] for r in rows] == [20, 30]
    assert rows[1]["mean_r_dl"] > rows[0]["mean_r_dl"]


def test_cli_compare(tmp_path, scenario_file, capsys):
    out = tmp_path / "cmp"
    assert cli.main(["compare", "--scenario", str(scenario_file), "--algorithm",
                     "manifold,random", "--algorithm", "lcao", "--eta", "0.7",
                     "--seeds", "0..2", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "manifold vs random" in text and "lcao" in text
    assert json.loads((out / "lcao" / "results.json").read_text())["spec"]["scenario"]["eta"] == 0.7


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_bs": 4, "unknown_field": 1}))
    assert cli.main(["run", "--scenario", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "unknown_field" in capsys.readouterr().err
    assert cli.main(["sweep", "--sweep", "eta:2", "--out", str(tmp_path / "y")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["run", "--algorithm", "bogus", "--out", str(tmp_path)])
