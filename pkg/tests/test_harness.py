import csv
import io
import json
import math

import numpy as np
import pytest

from asepkpz.cli import main
from asepkpz.distributions import CylinderEstimate
from asepkpz.harness import (CSV_FIELDS, ConfigError, ExperimentConfig, Report, Row, _map_replicas,
                             binomial_stderr, clear_caches, collect_scenario, compare,
                             default_config, emit_report, independence_table, report_csv,
                             run_experiment, statistics, wilson_interval, z_score)
from asepkpz.scenario import ScenarioParams


def small(experiment, **kw):
    d = dict(p=0.8, t=100.0, replicas=100, master_seed=3)
    d.update(kw)
    return default_config(experiment, **d)


def test_config_validation():
    with pytest.raises(ConfigError):
        small("E2", replicas=99)
    with pytest.raises(ConfigError):
        ExperimentConfig("E9", ScenarioParams(0.8, 100.0))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(dict(experiment="E2", p=0.8, t=100.0, bogus=1))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(dict(experiment="E2", p=0.8))
    with pytest.raises(ConfigError):
        small("E8", t_values=(100.0,))
    cfg = ExperimentConfig.from_dict(dict(id="E4", p=0.8, t=100.0, A_sets=[[0], [0, 1]]))
    assert cfg.A_sets == ((0,), (0, 1)) and cfg.tol_extra == 0.02
    assert small("E2").tol_extra == 0.01


def test_toml_mandatory_keys(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text('id = "E2"\np = 0.8\nt = 100.0\nM = 1\n')
    with pytest.raises(ConfigError):
        ExperimentConfig.from_toml(f)
    f.write_text('id = "E2"\np = 0.8\nt = 100.0\nM = 1\nchi = 0.3\nchi_prime = 0.45\n'
                 'delta = 0.15\nreplicas = 200\nmaster_seed = 9\n')
    cfg = ExperimentConfig.from_toml(f, replicas=300)
    assert cfg.replicas == 300 and cfg.master_seed == 9 and cfg.params.t == 100.0


def test_statistics_helpers():
    assert binomial_stderr(0.5, 10 ** 4) == 0.005
    assert z_score(0.3, 0.3, 0.0) == 0.0
    assert z_score(0.3, 0.4, 0.0) == math.inf
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and math.isclose(lo + hi, 1.0)
    assert wilson_interval(0, 10)[0] == 0.0
    r = compare("x", CylinderEstimate(0.5, 0.01, 100), 0.52, 0.01)
    assert r.passed and math.isclose(r.tolerance, 0.04) and math.isclose(r.abs_z, 2.0)
    with pytest.raises(KeyError):
        statistics({"a": CylinderEstimate(0.1, 0.01, 10)}, {"b": 0.1})
    rows = statistics({"b": CylinderEstimate(0.1, 0.01, 10), "a": CylinderEstimate(0.2, 0.01, 10)},
                      {"a": 0.2, "b": 0.5})
    assert [r.quantity for r in rows] == ["a", "b"] and [r.passed for r in rows] == [True, False]


def test_independence_table_order_free():
    rng = np.random.default_rng(0)
    P, H = rng.integers(0, 5, 500), rng.integers(0, 5, 500)
    j, pr, dev = independence_table(P, H)
    perm = rng.permutation(500)
    j2, pr2, dev2 = independence_table(P[perm], H[perm])
    assert np.array_equal(j, j2) and np.array_equal(pr, pr2) and dev == dev2
    assert math.isclose(j.sum(), 1.0)


def test_empty_report_header_only(tmp_path):
    rep = Report("E2", {"master_seed": 5})
    assert report_csv(rep) == ",".join(CSV_FIELDS) + "\n"
    c, j = emit_report(rep, tmp_path)
    assert c.read_text() == ",".join(CSV_FIELDS) + "\n"
    s = json.loads(j.read_text())
    assert s["master_seed"] == 5 and s["verdicts"] == {} and s["verdict"] is True


def test_row_informational_not_in_verdict():
    rep = Report("E1", {}, [Row("a", 1, 0, 0, 0, None), Row("b", 0, 0, 0, 0, True)])
    assert rep.verdict
    rep.rows.append(Row("c", 1, 0, 0, 0, False))
    assert not rep.verdict and rep.row("c").passed is False


def test_rerun_byte_identical(tmp_path):
    cfg = small("E2")
    a = run_experiment(cfg)
    clear_caches()
    b = run_experiment(cfg)
    assert report_csv(a) == report_csv(b)
    _, ja = emit_report(a, tmp_path / "a")
    s = json.loads(ja.read_text())
    assert s["master_seed"] == 3 and "P_t=0" in s["verdicts"]


def test_parallel_collection_matches_serial():
    pr = ScenarioParams(0.8, 60.0)
    clear_caches()
    s1 = collect_scenario(pr, 24, 1, workers=1)
    clear_caches()
    s2 = collect_scenario(pr, 24, 1, workers=2)
    for k in ("P", "H", "X", "X_tilde", "eta1", "eta2"):
        assert np.array_equal(getattr(s1, k), getattr(s2, k))
    clear_caches()


def _square(i):
    return i * i


def test_map_replicas_keeps_id_order():
    ids = list(range(17))
    assert _map_replicas(_square, ids, 3) == [i * i for i in ids]


@pytest.mark.parametrize("exp", ["E3", "E4", "E5", "E6", "E8"])
def test_small_experiments_run(exp):
    kw = dict(t_values=(60.0, 100.0)) if exp == "E8" else {}
    if exp == "E5":
        kw.update(t_step=30.0, step_replicas=200)
    rep = run_experiment(small(exp, **kw))
    assert rep.rows and all(isinstance(r.passed, (bool, type(None))) for r in rep.rows)
    assert all(np.isfinite(r.predicted) for r in rep.rows)


def test_e1_and_e7_small():
    rep = run_experiment(small("E1", t=100.0))
    assert rep.row("L1_godunov_vs_profile").passed
    rep = run_experiment(small("E7", t=400.0, t_values=()))
    assert rep.row("coalescence<=hitting").passed


def test_cli_dist(capsys):
    assert main(["dist", "fgue", "--s", "0", "-2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "input,value,error_estimate,method"
    assert abs(float(out[1].split(",")[1]) - 0.969372828355263) < 1e-10
    assert main(["dist", "fmp", "--M", "2", "--p", "0.8", "--s", "1", "--method", "residue"]) == 0
    assert main(["dist", "plr", "--M", "1", "--p", "0.8", "--D", "2"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert sum(1 for r in rows if r[0].startswith("L=")) == 9


def test_cli_blocking(capsys):
    assert main(["blocking", "cyl", "--Z", "0", "--sites", "0,1", "--p", "0.8"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "Z,A,value,error_bound"
    assert main(["blocking", "sample", "--Z", "1", "--p", "0.8", "--n", "3", "--seed", "1"]) == 0
    cap = capsys.readouterr()
    assert len(cap.out.splitlines()) == 4 and "acceptance" in cap.err
    assert main(["blocking", "cyl", "--sites", "50", "--p", "0.8", "--W", "10"]) == 2


def test_cli_exp_exit_codes(tmp_path, capsys):
    code = main(["exp", "run", "--id", "E3", "--replicas", "100", "--seed", "2", "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "E3_summary.json").read_text())
    assert code == (0 if rep["verdict"] else 1)
    assert (tmp_path / "E3.csv").exists()
    f = tmp_path / "bad.toml"
    f.write_text('p = 0.8\nt = 100.0\n')
    assert main(["exp", "run", "--id", "E2", "--config", str(f)]) == 2
