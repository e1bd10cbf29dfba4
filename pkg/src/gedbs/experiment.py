"""Experiment protocol: baseline vs. budgeted selection treatments.

For regression benchmarks the data is split 70/30 once (seeded); the
baseline trains on the full training side.  For circuits the baseline
trains on the full truth table and testing is exhaustive over the same
table.  Each budget treatment clusters the baseline training inputs
(k-means++ with an elbow-chosen k for regression, complete-linkage AHC
for circuits), selects with the distance-greedy walk, and trains on the
selected subset.  All treatments of one benchmark share the identical
test set, and every run is seeded as ``master_seed + run_index``.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

from . import clustering, grammars, selection
from .datasets import (
    CIRCUITS,
    DOMAIN_CIRCUIT,
    SYNTHETIC_SR,
    Dataset,
    UnknownBenchmark,
    gen_circuit,
    gen_synthetic_sr,
)
from .fitness import PENALTY_FITNESS, eval_circuit, eval_sr
from .ge import EvolutionConfig, RunTrace, evolve
from .grammar import Grammar
from .stats import (
    ORIENTATION_HIGHER,
    ORIENTATION_LOWER,
    mark_significance,
    wilcoxon_rank_sum,
)

BASELINE_LABEL = "baseline"


def orientation_for(domain: str) -> str:
    return ORIENTATION_HIGHER if domain == DOMAIN_CIRCUIT else ORIENTATION_LOWER


def resolve_benchmark(benchmark_id: str, rng_seed: int = 0) -> Dataset:
    """Materialize a named benchmark dataset."""
    key = benchmark_id.strip().lower()
    if key in SYNTHETIC_SR:
        return gen_synthetic_sr(key, rng_seed)
    if key in CIRCUITS:
        return gen_circuit(key)
    raise UnknownBenchmark(
        f"unknown benchmark {benchmark_id!r}; valid ids: "
        + ", ".join(sorted(SYNTHETIC_SR) + sorted(CIRCUITS))
    )


def cluster_inputs(train: Dataset, rng_seed: int = 0) -> clustering.ClusterAssignment:
    """Domain-appropriate clustering of the training inputs."""
    if train.domain == DOMAIN_CIRCUIT:
        rows = [case.inputs for case in train.cases]
        return clustering.ahc_complete(rows)
    points = train.inputs_matrix
    k = clustering.choose_k_elbow(points, clustering.default_k_range(points), rng_seed)
    return clustering.kmeans_pp(points, k, rng_seed=rng_seed).assignment


def select_training_data(
    train: Dataset, budget_percent: float, rng_seed: int = 0
) -> tuple[Dataset, selection.SelectionPlan, clustering.ClusterAssignment, float]:
    """Cluster + select; returns (subset, plan, assignment, elapsed seconds)."""
    start = time.perf_counter()
    assignment = cluster_inputs(train, rng_seed)
    plan = selection.dbs_select(train, assignment, budget_percent)
    elapsed = time.perf_counter() - start
    subset = train.subset(
        plan.selected_indices, name=f"{train.name}-dbs{budget_percent:g}"
    )
    return subset, plan, assignment, elapsed


# ---------------------------------------------------------------------------
# per-run execution


def make_fitness_fn(train: Dataset):
    """Minimizing fitness over the training set, memoized per phenotype."""
    cache: dict[str, float] = {}
    if train.domain == DOMAIN_CIRCUIT:

        def fitness(phenotype: str) -> float:
            value = cache.get(phenotype)
            if value is None:
                value = -float(eval_circuit(phenotype, train))
                cache[phenotype] = value
            return value

    else:

        def fitness(phenotype: str) -> float:
            value = cache.get(phenotype)
            if value is None:
                value = eval_sr(phenotype, train)
                cache[phenotype] = value
            return value

    return fitness


def score_phenotype(phenotype: str | None, test: Dataset) -> float:
    """Domain-facing test score: RMSE (lower better) or hits (higher better)."""
    if test.domain == DOMAIN_CIRCUIT:
        return 0.0 if phenotype is None else float(eval_circuit(phenotype, test))
    return PENALTY_FITNESS if phenotype is None else eval_sr(phenotype, test)


@dataclass(frozen=True)
class RunResult:
    run_index: int
    seed: int
    ok: bool
    error: str | None
    final_test_score: float | None
    final_train_score: float | None
    effective_size: int | None
    best_phenotype: str | None
    run_seconds: float
    generation_test_scores: tuple[float, ...]


def _execute_run(args) -> RunResult:
    grammar, config, train, test, run_index, seed = args
    run_config = replace(config, rng_seed=seed)
    fitness_fn = make_fitness_fn(train)
    try:
        start = time.perf_counter()
        trace: RunTrace = evolve(run_config, grammar, fitness_fn)
        run_seconds = time.perf_counter() - start
    except Exception as exc:  # noqa: BLE001 - a failed run is data, not a crash
        return RunResult(
            run_index=run_index,
            seed=seed,
            ok=False,
            error=f"{type(exc).__name__}: {exc}",
            final_test_score=None,
            final_train_score=None,
            effective_size=None,
            best_phenotype=None,
            run_seconds=0.0,
            generation_test_scores=(),
        )
    generation_scores = tuple(
        score_phenotype(record.best.phenotype, test) for record in trace.records
    )
    best = trace.final_best
    train_score = best.fitness
    if train.domain == DOMAIN_CIRCUIT and train_score is not None:
        train_score = -train_score
    return RunResult(
        run_index=run_index,
        seed=seed,
        ok=True,
        error=None,
        final_test_score=generation_scores[-1],
        final_train_score=train_score,
        effective_size=best.effective_length,
        best_phenotype=best.phenotype,
        run_seconds=run_seconds,
        generation_test_scores=generation_scores,
    )


def effective_size_summary(traces: list[RunTrace]) -> float:
    """Mean effective length of the best-of-run individuals."""
    if not traces:
        raise ValueError("no traces")
    sizes = [trace.final_best.effective_length for trace in traces]
    return sum(sizes) / len(sizes)


# ---------------------------------------------------------------------------
# report structures


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


@dataclass
class TreatmentReport:
    label: str
    budget_percent: float | None
    train_size: int
    test_size: int
    selection_seconds: float
    cluster_count: int | None
    per_cluster_counts: tuple[int, ...] | None
    runs: list[RunResult]
    mean_test_score: float | None = None
    mean_run_seconds: float | None = None
    mean_effective_size: float | None = None
    p_value_vs_baseline: float | None = None
    mark: str | None = None

    def scores(self) -> list[float]:
        return [r.final_test_score for r in self.runs if r.ok]

    def finalize(self) -> None:
        ok_runs = [r for r in self.runs if r.ok]
        self.mean_test_score = _mean(r.final_test_score for r in ok_runs)
        self.mean_run_seconds = _mean(r.run_seconds for r in ok_runs)
        self.mean_effective_size = _mean(r.effective_size for r in ok_runs)


@dataclass
class ExperimentReport:
    benchmark: str
    domain: str
    orientation: str
    master_seed: int
    runs_per_treatment: int
    config: dict
    treatments: list[TreatmentReport]

    def baseline(self) -> TreatmentReport:
        return self.treatments[0]

    @property
    def all_runs_ok(self) -> bool:
        return all(r.ok for t in self.treatments for r in t.runs)

    def attach_statistics(self, alpha: float = 0.05) -> None:
        base_scores = self.baseline().scores()
        for treatment in self.treatments:
            treatment.finalize()
        for treatment in self.treatments[1:]:
            scores = treatment.scores()
            if base_scores and scores:
                treatment.p_value_vs_baseline = wilcoxon_rank_sum(
                    scores, base_scores
                ).p_two_sided
                treatment.mark = mark_significance(
                    base_scores, scores, self.orientation, alpha
                )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def summary_rows(self) -> list[dict]:
        rows = []
        for t in self.treatments:
            rows.append(
                {
                    "benchmark": self.benchmark,
                    "treatment": t.label,
                    "train_size": t.train_size,
                    "mean_test_score": _round4(t.mean_test_score),
                    "mark": t.mark or "",
                    "mean_run_seconds": _round4(t.mean_run_seconds),
                    "selection_seconds": _round4(t.selection_seconds),
                    "mean_effective_size": _round4(t.mean_effective_size),
                }
            )
        return rows

    def summary_csv(self) -> str:
        rows = self.summary_rows()
        header = list(rows[0])
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(str(row[k]) for k in header))
        return "\n".join(lines) + "\n"

    def score_fields(self) -> dict:
        """The deterministic (timing-free) portion of the report."""
        return {
            "benchmark": self.benchmark,
            "master_seed": self.master_seed,
            "treatments": [
                {
                    "label": t.label,
                    "train_size": t.train_size,
                    "test_size": t.test_size,
                    "cluster_count": t.cluster_count,
                    "per_cluster_counts": t.per_cluster_counts,
                    "mean_test_score": t.mean_test_score,
                    "mean_effective_size": t.mean_effective_size,
                    "p_value_vs_baseline": t.p_value_vs_baseline,
                    "mark": t.mark,
                    "runs": [
                        {
                            "seed": r.seed,
                            "final_test_score": r.final_test_score,
                            "final_train_score": r.final_train_score,
                            "effective_size": r.effective_size,
                            "best_phenotype": r.best_phenotype,
                            "generation_test_scores": r.generation_test_scores,
                        }
                        for r in t.runs
                    ],
                }
                for t in self.treatments
            ],
        }


def _round4(value):
    return None if value is None else round(value, 4)


# ---------------------------------------------------------------------------
# the full protocol


def build_treatments(
    benchmark: str | Dataset,
    budgets,
    *,
    master_seed: int = 0,
    train_fraction: float = 0.7,
) -> tuple[str, Dataset, Dataset, list[tuple[str, float | None, Dataset, object, float]]]:
    """Baseline plus one treatment per budget.

    Returns (name, baseline_train, shared_test, rows) where each row is
    (label, budget, training set, plan or None, selection seconds).
    """
    if isinstance(benchmark, Dataset):
        data = benchmark
    else:
        data = resolve_benchmark(benchmark, master_seed)
    from .datasets import split_train_test

    start = time.perf_counter()
    if data.domain == DOMAIN_CIRCUIT:
        baseline_train, test = data, data
    else:
        baseline_train, test = split_train_test(data, train_fraction, master_seed)
    baseline_seconds = time.perf_counter() - start
    rows: list = [(BASELINE_LABEL, None, baseline_train, None, baseline_seconds)]
    for budget in budgets:
        subset, plan, assignment, seconds = select_training_data(
            baseline_train, budget, master_seed
        )
        rows.append((f"dbs_{budget:g}", budget, subset, (plan, assignment), seconds))
    return data.name, baseline_train, test, rows


def run_experiment(
    benchmark: str | Dataset,
    config: EvolutionConfig,
    budgets=None,
    runs: int = 30,
    *,
    master_seed: int | None = None,
    train_fraction: float = 0.7,
    grammar: Grammar | None = None,
    jobs: int = 1,
) -> ExperimentReport:
    """Run the baseline and every budget treatment ``runs`` times each."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if budgets is None:
        budgets = selection.budget_schedule()
    if master_seed is None:
        master_seed = config.rng_seed
    name, baseline_train, test, rows = build_treatments(
        benchmark, budgets, master_seed=master_seed, train_fraction=train_fraction
    )
    if grammar is None:
        grammar = grammars.for_benchmark(name)
    domain = test.domain

    treatments: list[TreatmentReport] = []
    for label, budget, train, plan_info, sel_seconds in rows:
        payloads = [
            (grammar, config, train, test, r, master_seed + r) for r in range(runs)
        ]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_execute_run, payloads))
        else:
            results = [_execute_run(p) for p in payloads]
        plan = plan_info[0] if plan_info else None
        assignment = plan_info[1] if plan_info else None
        treatments.append(
            TreatmentReport(
                label=label,
                budget_percent=budget,
                train_size=len(train),
                test_size=len(test),
                selection_seconds=sel_seconds,
                cluster_count=assignment.k if assignment else None,
                per_cluster_counts=plan.per_cluster_counts if plan else None,
                runs=results,
            )
        )

    report = ExperimentReport(
        benchmark=name,
        domain=domain,
        orientation=orientation_for(domain),
        master_seed=master_seed,
        runs_per_treatment=runs,
        config=asdict(config),
        treatments=treatments,
    )
    report.attach_statistics()
    return report
