import json

import pytest

from gedbs.datasets import UnknownBenchmark, gen_circuit
from gedbs.experiment import (
    RunResult,
    _execute_run,
    build_treatments,
    effective_size_summary,
    make_fitness_fn,
    resolve_benchmark,
    run_experiment,
    select_training_data,
    score_phenotype,
)
from gedbs.ge import EvolutionConfig, evolve
from gedbs.grammars import load


def _tiny_config(**overrides):
    values = dict(population_size=25, generations=2, rng_seed=11, tournament_size=3)
    values.update(overrides)
    return EvolutionConfig(**values)


def test_resolve_benchmark_names():
    assert resolve_benchmark("parity5").name == "parity5"
    assert resolve_benchmark("keijzer-4").name == "keijzer-4"
    with pytest.raises(UnknownBenchmark):
        resolve_benchmark("mystery-1")


def test_single_run_zero_generations_has_one_score_per_treatment():
    report = run_experiment(
        "parity5", _tiny_config(generations=0), budgets=[50], runs=1
    )
    assert [t.label for t in report.treatments] == ["baseline", "dbs_50"]
    for treatment in report.treatments:
        assert len(treatment.runs) == 1
        assert len(treatment.runs[0].generation_test_scores) == 1


def test_comparator_baseline_test_set_is_full_table():
    report = run_experiment(
        "comparator5", _tiny_config(generations=0), budgets=[50], runs=1
    )
    assert report.baseline().train_size == 1024
    assert all(t.test_size == 1024 for t in report.treatments)


def test_sr_split_and_shared_test_set():
    name, baseline, test, rows = build_treatments(
        "keijzer-4", [70, 50], master_seed=5
    )
    assert name == "keijzer-4"
    assert len(baseline) == 282
    assert len(test) == 120
    # the split partitions the original cases (multiset identity; grid
    # benchmarks contain repeated input values)
    from gedbs.datasets import gen_synthetic_sr

    full = gen_synthetic_sr("keijzer-4", 5)
    combined = sorted((c.inputs, c.outputs) for c in baseline.cases + test.cases)
    assert combined == sorted((c.inputs, c.outputs) for c in full.cases)
    for label, budget, train, plan_info, _ in rows[1:]:
        plan, _ = plan_info
        indices = set(plan.selected_indices)
        assert indices < set(range(len(baseline)))  # strict subset of the baseline
        assert len(train) < len(baseline)


def test_circuit_treatments_subset_with_ceil_sizes():
    name, baseline, test, rows = build_treatments("parity5", [70, 50], master_seed=0)
    assert len(baseline) == 32 and len(test) == 32
    for label, budget, train, plan_info, _ in rows[1:]:
        plan, assignment = plan_info
        assert len(train) == len(plan.selected_indices)
        for cluster, count in enumerate(plan.per_cluster_counts):
            size = assignment.labels.count(cluster)
            import math

            assert count == min(size, math.ceil(round(budget * size / 100, 9)))
        assert set(plan.selected_indices) < set(range(len(baseline)))
        assert len(train) < len(baseline)


def test_report_round_trip_and_marks_rederivable():
    report = run_experiment("parity5", _tiny_config(), budgets=[50], runs=3)
    payload = json.loads(report.to_json())
    assert payload["benchmark"] == "parity5"
    assert payload["orientation"] == "higher_better"
    from gedbs.stats import mark_significance, wilcoxon_rank_sum

    base_scores = [r["final_test_score"] for r in payload["treatments"][0]["runs"]]
    for treatment in payload["treatments"][1:]:
        scores = [r["final_test_score"] for r in treatment["runs"]]
        expected_p = wilcoxon_rank_sum(scores, base_scores).p_two_sided
        assert treatment["p_value_vs_baseline"] == pytest.approx(expected_p)
        assert treatment["mark"] == mark_significance(
            base_scores, scores, "higher_better"
        )


def test_report_determinism_excluding_timings():
    a = run_experiment("parity5", _tiny_config(), budgets=[70], runs=2)
    b = run_experiment("parity5", _tiny_config(), budgets=[70], runs=2)
    assert a.score_fields() == b.score_fields()


def test_run_seeds_are_master_seed_plus_index():
    report = run_experiment("parity5", _tiny_config(rng_seed=40), budgets=[50], runs=3)
    for treatment in report.treatments:
        assert [r.seed for r in treatment.runs] == [40, 41, 42]


def test_failed_run_is_flagged_and_excluded():
    grammar = load("parity5")
    train = gen_circuit("parity5")
    bad_config = EvolutionConfig(
        population_size=10, generations=1, rng_seed=0, max_derivation_depth=1
    )
    result = _execute_run((grammar, bad_config, train, train, 0, 0))
    assert not result.ok
    assert "InitFailure" in result.error


def test_effective_size_summary():
    grammar = load("sr_1var")
    config = EvolutionConfig(population_size=15, generations=1, rng_seed=2)
    traces = [evolve(config, grammar, lambda p: float(len(p))) for _ in range(3)]
    expected = sum(t.final_best.effective_length for t in traces) / 3
    assert effective_size_summary(traces) == expected
    # single trace mean is just that size
    assert effective_size_summary(traces[:1]) == traces[0].final_best.effective_length


def test_circuit_fitness_is_negated_hits():
    train = gen_circuit("parity5")
    fitness = make_fitness_fn(train)
    assert fitness("i0 XOR i1 XOR i2 XOR i3 XOR i4") == -32.0
    assert fitness("0") == -16.0


def test_score_phenotype_orientation():
    data = gen_circuit("parity5")
    assert score_phenotype("0", data) == 16.0
    assert score_phenotype(None, data) == 0.0


def test_selection_seconds_and_cluster_metadata_present():
    report = run_experiment("parity5", _tiny_config(generations=0), budgets=[50], runs=1)
    baseline, dbs = report.treatments
    assert baseline.cluster_count is None
    assert dbs.cluster_count == 2
    assert dbs.per_cluster_counts == (8, 8)
    assert dbs.selection_seconds >= 0.0


def test_summary_csv_shape():
    report = run_experiment("parity5", _tiny_config(generations=0), budgets=[50], runs=1)
    lines = report.summary_csv().strip().splitlines()
    assert lines[0] == (
        "benchmark,treatment,train_size,mean_test_score,mark,"
        "mean_run_seconds,selection_seconds,mean_effective_size"
    )
    assert len(lines) == 3


def test_select_training_data_full_budget_keeps_everything():
    data = gen_circuit("parity5")
    subset, plan, assignment, _ = select_training_data(data, 100, 0)
    assert len(subset) == len(data)
    assert sorted(plan.selected_indices) == list(range(32))


def test_parallel_jobs_match_sequential():
    seq = run_experiment("parity5", _tiny_config(), budgets=[50], runs=2, jobs=1)
    par = run_experiment("parity5", _tiny_config(), budgets=[50], runs=2, jobs=2)
    assert seq.score_fields() == par.score_fields()
