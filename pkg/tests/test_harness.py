"""Trial harness, budget accounting, experiments, and the CLI."""

import io
import json
from dataclasses import dataclass
from fractions import Fraction

import pytest

import subcube.cli as cli
from subcube import (
    ExperimentConfig,
    FiniteDistribution,
    FunctionSpec,
    LBInstance,
    LBParams,
    MonotoneConj,
    RandomStream,
    compute_parameters,
    distinguishing_experiment,
    exact_distance_mconj,
    load_instance,
    query_budget_report,
    run_trials,
    summarize,
    write_experiment_csv,
    write_trials_csv,
)
from subcube.harness import CSV_HEADER, EXPERIMENT_HEADER
from helpers import rand_dist, zs

SMALL_LB = LBParams(n=60, h=4, r_blocks=7, m=3, s=1, blocks_per_side=2)


@dataclass(frozen=True)
class PairUnion(FunctionSpec):
    n: int

    def value_at(self, zeros):
        return 1 if zeros <= {1, 3} or zeros <= {2, 4} else 0


def inclass_instance(n=16, seed=900):
    f = MonotoneConj(n, frozenset({2, 5}))
    dist = rand_dist(RandomStream(seed), n, 6, max_zeros=5)
    return (n, f, dist)


def far_instance():
    pts = [(1,), (2,), (1, 2)]
    dist = FiniteDistribution(4, tuple(
        (zs(4, *p), Fraction(1, 3)) for p in pts))
    return (4, PairUnion(4), dist)


def key_of(r):
    return (r.trial, r.accepted, r.reason, r.blackbox_queries,
            r.sample_queries)


# -- configuration ------------------------------------------------------------


def test_config_validation():
    inst = inclass_instance()
    with pytest.raises(ValueError):
        ExperimentConfig(algo="magic", epsilon=Fraction(1), trials=1, seed=0,
                         instance=inst)
    with pytest.raises(ValueError):
        ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=-1, seed=0,
                         instance=inst)
    with pytest.raises(ValueError):
        ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1, seed=0,
                         amplify_k=0, instance=inst)
    with pytest.raises(ValueError):
        ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1, seed=0)
    with pytest.raises(ValueError):
        ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1, seed=0,
                         instance=inst, generator=(SMALL_LB, "no"))
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1,
                           seed=0, instance=inst)
    assert cfg.n == 16
    assert ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1,
                            seed=0, generator=(SMALL_LB, "no")).n == 60


# -- running trials -----------------------------------------------------------


def test_trials_on_fixed_instance():
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=4,
                           seed=1, instance=inclass_instance())
    results = run_trials(cfg)
    assert [r.trial for r in results] == [0, 1, 2, 3]
    for r in results:
        assert r.accepted
        assert r.outcome == "accept"
        assert r.verdict is not None
        assert len(r.attempt_transcripts) == 1
        assert r.wall_ms >= 0
        assert r.instance is None  # fixed instances are not echoed back
    s = summarize(results)
    assert s["trials"] == 4 and s["accepted"] == 4
    assert s["accept_rate"] == 1.0
    assert set(s["reasons"]) <= {"end-of-stage-2", "stage2-no-zero",
                                 "stage1-few-ones"}


def test_trials_deterministic_and_thread_invariant(monkeypatch):
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=4,
                           seed=2, instance=inclass_instance())
    monkeypatch.setenv("SUBCUBE_THREADS", "1")
    serial = [key_of(r) for r in run_trials(cfg)]
    monkeypatch.setenv("SUBCUBE_THREADS", "4")
    threaded = [key_of(r) for r in run_trials(cfg)]
    assert serial == threaded
    again = [key_of(r) for r in run_trials(cfg)]
    assert again == threaded


def test_trials_drop_details_when_asked():
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1,
                           seed=3, instance=inclass_instance(),
                           keep_details=False)
    r = run_trials(cfg)[0]
    assert r.verdict is None
    assert r.attempt_transcripts == []


def test_trials_regenerate_instances_per_trial():
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=2,
                           seed=4, generator=(SMALL_LB, "no"))
    results = run_trials(cfg)
    for r in results:
        assert isinstance(r.instance, LBInstance)
    assert results[0].instance.R != results[1].instance.R


def test_budget_forces_accept():
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=2,
                           seed=5, instance=inclass_instance(),
                           max_samples=100)
    for r in run_trials(cfg):
        assert r.accepted
        assert r.reason == "budget-exhausted"
        assert r.verdict is None
        assert r.sample_queries <= 100

    zero_bb = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1,
                               seed=6, instance=inclass_instance(),
                               max_blackbox=0)
    r = run_trials(zero_bb)[0]
    assert r.reason == "budget-exhausted"
    assert r.blackbox_queries == 0  # refused before counting


def test_amplified_far_instance_stops_on_reject():
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=3,
                           seed=7, amplify_k=5, instance=far_instance())
    for r in run_trials(cfg):
        assert not r.accepted
        assert r.reason == "stage0-nil-representative"
        assert len(r.attempt_transcripts) == 1  # first attempt already rejects
        assert r.sample_queries == sum(t.sample_count
                                       for t in r.attempt_transcripts)


def test_baseline_samples_override():
    cfg = ExperimentConfig(algo="dolev-ron", epsilon=Fraction(1), trials=2,
                           seed=8, instance=inclass_instance(),
                           baseline_samples=64)
    for r in run_trials(cfg):
        assert r.accepted
        assert r.sample_queries == 64


# -- CSV ----------------------------------------------------------------------


def test_trials_csv_shape():
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=2,
                           seed=9, instance=far_instance())
    results = run_trials(cfg)
    buf = io.StringIO()
    write_trials_csv(buf, results)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "0"
    assert first[1] == "reject"
    assert first[2] == "stage0-nil-representative"
    assert int(first[3]) >= 0 and int(first[4]) > 0 and int(first[5]) >= 0


def test_experiment_csv_formatting():
    rows = [{"budget": 4, "yes_accept": 1.0, "no_accept": 0.5, "gap": 0.5,
             "sim_yes_accept": 1.0, "sim_no_accept": 1 / 3, "sim_gap": 2 / 3}]
    buf = io.StringIO()
    write_experiment_csv(buf, rows)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(EXPERIMENT_HEADER)
    assert lines[1] == "4,1.000000,0.500000,0.500000,1.000000,0.333333,0.666667"


# -- query accounting ---------------------------------------------------------


def test_query_budget_report_happy_path():
    n = 64
    cfg = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=6,
                           seed=10, instance=(
                               n, MonotoneConj(n, frozenset({3, 17})),
                               rand_dist(RandomStream(901), n, 6,
                                         max_zeros=6)))
    results = run_trials(cfg)
    params = compute_parameters(n, Fraction(1))
    report = query_budget_report(results, params, n)
    assert report["trials"] == 6
    assert set(report) == {"trials", "mean_total_queries", "max_total_queries",
                           "closed_form", "ratio_to_closed_form",
                           "worst_blackbox_fraction_of_bound"}
    assert report["ratio_to_closed_form"] < 1.0
    assert report["worst_blackbox_fraction_of_bound"] <= 1.0
    assert report["max_total_queries"] >= report["mean_total_queries"]


def test_query_budget_report_rejects_unusable_batches():
    params = compute_parameters(16, Fraction(1))
    with pytest.raises(ValueError):
        query_budget_report([], params, 16)

    amped = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1,
                             seed=11, amplify_k=2, instance=inclass_instance())
    with pytest.raises(ValueError, match="unamplified"):
        query_budget_report(run_trials(amped), params, 16)

    bare = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1,
                            seed=12, instance=inclass_instance(),
                            keep_details=False)
    with pytest.raises(ValueError, match="logging absent"):
        query_budget_report(run_trials(bare), params, 16)

    capped = ExperimentConfig(algo="mconj", epsilon=Fraction(1), trials=1,
                              seed=13, instance=inclass_instance(),
                              max_samples=50)
    with pytest.raises(ValueError, match="unbudgeted"):
        query_budget_report(run_trials(capped), params, 16)


# -- distinguishing experiments -----------------------------------------------


def test_experiment_rows_schema_and_zero_budget():
    rows = distinguishing_experiment(
        algo="dolev-ron", params=SMALL_LB, yes_variant="yes", no_variant="no",
        epsilon=Fraction(1), trials=4, seed=14, budgets=[0, 8])
    assert [row["budget"] for row in rows] == [0, 8]
    for row in rows:
        assert set(row) == set(EXPERIMENT_HEADER)
    first = rows[0]
    assert first["yes_accept"] == first["no_accept"] == 1.0
    assert first["gap"] == 0.0 and first["sim_gap"] == 0.0
    assert rows[1]["yes_accept"] == 1.0  # the baseline is one-sided
    assert 0.0 <= rows[1]["no_accept"] <= 1.0

    again = distinguishing_experiment(
        algo="dolev-ron", params=SMALL_LB, yes_variant="yes", no_variant="no",
        epsilon=Fraction(1), trials=4, seed=14, budgets=[0, 8])
    assert again == rows


def test_experiment_input_validation():
    with pytest.raises(ValueError):
        distinguishing_experiment(algo="magic", params=SMALL_LB,
                                  yes_variant="yes", no_variant="no",
                                  epsilon=Fraction(1), trials=1, seed=0,
                                  budgets=[1])
    with pytest.raises(ValueError):
        distinguishing_experiment(algo="dolev-ron", params=SMALL_LB,
                                  yes_variant="yes", no_variant="no",
                                  epsilon=Fraction(1), trials=1, seed=0,
                                  budgets=[-1])


# -- command line -------------------------------------------------------------


SCALED = "h=4,r_blocks=7,m=3,s=1,bps=2"


def gen_file(tmp_path, variant="no", seed=5):
    path = tmp_path / f"{variant}.json"
    rc = cli.main(["gen-instance", "--variant", variant, "--n", "60",
                   "--scaled", SCALED, "--seed", str(seed),
                   "--out", str(path)])
    assert rc == 0
    return path


def test_cli_gen_instance_writes_instance_and_sidecar(tmp_path, capsys):
    path = gen_file(tmp_path)
    out = capsys.readouterr().out
    assert f"wrote {path}" in out
    inst = load_instance(path)
    assert inst.n == 60
    assert len(inst.distribution.entries) == 9
    sidecar = json.loads((tmp_path / "no.json.sidecar.json").read_text())
    assert sidecar["variant"] == "no"
    assert sidecar["params"]["m"] == 3
    assert len(sidecar["alpha"]) == 3


def test_cli_test_emits_csv_row(tmp_path, capsys):
    path = gen_file(tmp_path)
    capsys.readouterr()
    rc = cli.main(["test", "--instance", str(path), "--algo", "mconj",
                   "--epsilon", "1", "--seed", "3"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    row = lines[1].split(",")
    assert row[0] == "0"
    assert row[1] in ("accept", "reject")


def test_cli_test_logs_queries(tmp_path, capsys):
    path = gen_file(tmp_path)
    capsys.readouterr()
    rc = cli.main(["test", "--instance", str(path), "--algo", "dolev-ron",
                   "--epsilon", "1", "--seed", "3", "--log-queries"])
    assert rc == 0
    err = capsys.readouterr().err
    assert "query zeros=" in err
    assert "sample zeros=" in err


def test_cli_distance_value_and_witness(tmp_path, capsys):
    path = gen_file(tmp_path)
    capsys.readouterr()
    rc = cli.main(["distance", "--instance", str(path), "--class", "mconj"])
    assert rc == 0
    value = capsys.readouterr().out.strip()
    inst = load_instance(path)
    want = exact_distance_mconj(inst.function, inst.distribution)
    num, den = value.split("/")
    assert Fraction(int(num), int(den)) == want == Fraction(1, 3)

    rc = cli.main(["distance", "--instance", str(path), "--class", "mconj",
                   "--witness"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == value
    assert lines[1].startswith("witness: ")
    spec = json.loads(lines[1][len("witness: "):])
    assert spec["type"] == "monotone-conjunction"


def test_cli_violation_graph_and_prune(tmp_path, capsys):
    path = gen_file(tmp_path)
    capsys.readouterr()
    rc = cli.main(["violation", "--instance", str(path), "--epsilon", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "left 0:" in out and "right 0:" in out and "edge: " in out

    rc = cli.main(["violation", "--instance", str(path), "--epsilon", "1",
                   "--emit", "prune-report"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "exit_reason: " in out
    assert "W: " in out


def test_cli_experiment_to_stdout_and_file(tmp_path, capsys):
    argv = ["experiment", "--algo", "dolev-ron", "--variant-pair", "yes:no",
            "--n", "60", "--epsilon", "1", "--trials", "2", "--seed", "4",
            "--budget", "0,4", "--out", "-"]
    rc = cli.main(argv)
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(EXPERIMENT_HEADER)
    assert len(lines) == 3

    out = tmp_path / "sweep.csv"
    argv[-1] = str(out)
    rc = cli.main(argv)
    assert rc == 0
    assert out.read_text().splitlines()[0] == ",".join(EXPERIMENT_HEADER)


def test_cli_semantic_errors_exit_2(tmp_path, capsys):
    rc = cli.main(["gen-instance", "--variant", "no", "--n", "60",
                   "--out", str(tmp_path / "x.json")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error: ")

    rc = cli.main(["test", "--instance", str(tmp_path / "missing.json"),
                   "--algo", "mconj", "--epsilon", "1"])
    assert rc == 2
    assert "error: " in capsys.readouterr().err
