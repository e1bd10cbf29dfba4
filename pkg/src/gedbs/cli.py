"""Command-line front end: gen-data, select, evolve, experiment, stats.

Evolution parameters default to: population 250, 50 generations,
tournament selection, effective crossover at rate 0.9, per-codon
mutation 0.01, sensible initialization, 30 runs.  A TOML config file
mirroring the EvolutionConfig field names can override them, and command
line flags override the file.  When no seed is given anywhere, the
GE_DBS_SEED environment variable is used as a fallback.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import experiment, grammars, selection
from .datasets import (
    DOMAIN_CIRCUIT,
    Dataset,
    load_circuit_csv,
    load_csv,
    save_csv,
)
from .ge import EvolutionConfig, evolve
from .grammar import parse_bnf
from .stats import shapiro_wilk, wilcoxon_rank_sum, mark_significance
from .stats import SampleTooSmall, ZeroVariance

DEFAULT_SEED = 1

_CONFIG_FIELDS = {f.name for f in dataclasses.fields(EvolutionConfig)}


class CliError(Exception):
    pass


def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"IoError: config file not found: {p}")
    with p.open("rb") as fh:
        raw = tomllib.load(fh)
    unknown = set(raw) - _CONFIG_FIELDS - {"runs", "budgets", "train_fraction"}
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return raw


def _resolve_seed(args, file_config: dict) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    if "rng_seed" in file_config:
        return int(file_config["rng_seed"])
    env = os.environ.get("GE_DBS_SEED")
    if env is not None:
        return int(env)
    return DEFAULT_SEED


def _build_config(args, file_config: dict) -> EvolutionConfig:
    values = {k: v for k, v in file_config.items() if k in _CONFIG_FIELDS}
    for flag, key in (
        ("population", "population_size"),
        ("generations", "generations"),
        ("crossover_rate", "crossover_rate"),
        ("mutation_rate", "mutation_rate"),
        ("tournament_size", "tournament_size"),
        ("elitism", "elitism"),
        ("max_wraps", "max_wraps"),
        ("max_depth", "max_derivation_depth"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            values[key] = value
    values["rng_seed"] = _resolve_seed(args, file_config)
    return EvolutionConfig(**values)


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", None) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(args) -> Dataset:
    if getattr(args, "benchmark", None):
        return experiment.resolve_benchmark(args.benchmark, _resolve_seed(args, {}))
    if getattr(args, "data", None):
        path = Path(args.data)
        if not path.exists():
            raise CliError(f"IoError: data file not found: {path}")
        if getattr(args, "domain", None) == "circuit":
            return load_circuit_csv(path, args.outputs, header=args.header)
        target: int | str = args.target_col
        if isinstance(target, str) and target.lstrip("-").isdigit():
            target = int(target)
        return load_csv(path, target, header=args.header)
    raise CliError("provide a benchmark id or a --data CSV path")


def _load_grammar(args, dataset: Dataset):
    path = getattr(args, "grammar", None)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise CliError(f"IoError: grammar file not found: {p}")
        return parse_bnf(p.read_text(encoding="utf-8"))
    try:
        return grammars.for_benchmark(dataset.name)
    except KeyError:
        if dataset.domain == DOMAIN_CIRCUIT:
            text = grammars.circuit_grammar_text(
                dataset.feature_count, dataset.output_count
            )
        else:
            text = grammars.sr_grammar_text(dataset.feature_count)
        return parse_bnf(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_data(args) -> int:
    dataset = experiment.resolve_benchmark(args.benchmark, _resolve_seed(args, {}))
    out = _out_dir(args)
    path = out / f"{dataset.name}.csv"
    save_csv(dataset, path)
    print(f"{dataset.name}: wrote {len(dataset)} rows "
          f"({dataset.feature_count} features, {dataset.output_count} outputs) to {path}")
    return 0


def cmd_select(args) -> int:
    dataset = _load_dataset(args)
    out = _out_dir(args)
    seed = _resolve_seed(args, {})
    subset, plan, assignment, elapsed = experiment.select_training_data(
        dataset, args.budget, seed
    )
    tag = f"{args.budget:g}"
    training_path = out / f"training_{tag}.csv"
    plan_path = out / f"plan_{tag}.csv"
    clusters_path = out / "clusters.csv"
    save_csv(subset, training_path)
    plan_path.write_text(plan.to_csv())
    clusters_path.write_text(assignment.to_csv())
    print(f"clusters: {assignment.k} ({assignment.method})")
    print(f"per-cluster counts: {list(plan.per_cluster_counts)}")
    print(f"selected {len(subset)} of {len(dataset)} cases in {elapsed:.3f}s")
    print(f"wrote {training_path}, {plan_path}, {clusters_path}")
    return 0


def cmd_evolve(args) -> int:
    dataset = _load_dataset(args)
    grammar = _load_grammar(args, dataset)
    file_config = _read_config(args.config)
    config = _build_config(args, file_config)
    out = _out_dir(args)
    fitness_fn = experiment.make_fitness_fn(dataset)
    start = time.perf_counter()
    trace = evolve(config, grammar, fitness_fn)
    elapsed = time.perf_counter() - start
    trace_path = out / "trace.jsonl"
    trace_path.write_text(trace.json_lines())
    best = trace.final_best
    score = best.fitness
    if dataset.domain == DOMAIN_CIRCUIT and score is not None:
        score = -score
    print(f"run finished in {elapsed:.2f}s; trace written to {trace_path}")
    print(f"best fitness: {score}")
    print(f"best phenotype: {best.phenotype}")
    return 0


def cmd_experiment(args) -> int:
    dataset = _load_dataset(args)
    grammar = _load_grammar(args, dataset)
    file_config = _read_config(args.config)
    config = _build_config(args, file_config)
    runs = args.runs if args.runs is not None else int(file_config.get("runs", 30))
    if args.budgets is not None:
        budgets = [float(b) for b in args.budgets.split(",") if b.strip()]
    elif "budgets" in file_config:
        budgets = [float(b) for b in file_config["budgets"]]
    else:
        budgets = selection.budget_schedule()
    train_fraction = (
        args.train_fraction
        if args.train_fraction is not None
        else float(file_config.get("train_fraction", 0.7))
    )
    out = _out_dir(args)
    report = experiment.run_experiment(
        dataset,
        config,
        budgets,
        runs,
        master_seed=config.rng_seed,
        train_fraction=train_fraction,
        grammar=grammar,
        jobs=args.jobs,
    )
    (out / "report.json").write_text(report.to_json())
    (out / "summary.csv").write_text(report.summary_csv())
    for row in report.summary_rows():
        print(
            f"{row['treatment']:>10}  train={row['train_size']:<6} "
            f"score={row['mean_test_score']} mark={row['mark'] or '--'} "
            f"run_s={row['mean_run_seconds']} sel_s={row['selection_seconds']}"
        )
    print(f"wrote {out / 'report.json'} and {out / 'summary.csv'}")
    if not report.all_runs_ok:
        print("some runs failed", file=sys.stderr)
        return 1
    return 0


def _read_scores(path: str) -> list[float]:
    p = Path(path)
    if not p.exists():
        raise CliError(f"IoError: score file not found: {p}")
    scores = []
    for line in p.read_text().splitlines():
        line = line.strip().split(",")[0]
        if line:
            scores.append(float(line))
    if not scores:
        raise CliError(f"no scores in {p}")
    return scores


def cmd_stats(args) -> int:
    baseline = _read_scores(args.baseline)
    treatment = _read_scores(args.treatment)
    orientation = (
        "higher_better" if args.orientation == "higher" else "lower_better"
    )
    for label, sample in (("baseline", baseline), ("treatment", treatment)):
        try:
            w, p = shapiro_wilk(sample)
            print(f"shapiro-wilk {label}: W={w:.4f} p={p:.4f}")
        except (SampleTooSmall, ZeroVariance) as exc:
            print(f"shapiro-wilk {label}: skipped ({exc})")
    result = wilcoxon_rank_sum(treatment, baseline)
    print(
        f"wilcoxon rank-sum ({result.method}): W={result.statistic:g} "
        f"two-sided p={result.p_two_sided:.4f} "
        f"one-sided p(less)={result.p_less:.4f} p(greater)={result.p_greater:.4f}"
    )
    mark = mark_significance(baseline, treatment, orientation, args.alpha)
    print(f"mark vs baseline at alpha={args.alpha:g}: {mark}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_data_arguments(parser: argparse.ArgumentParser, positional: bool) -> None:
    if positional:
        parser.add_argument("benchmark", nargs="?", help="benchmark id")
    else:
        parser.add_argument("--benchmark", help="benchmark id")
    parser.add_argument("--data", help="CSV dataset path")
    parser.add_argument("--domain", choices=["sr", "circuit"], default="sr",
                        help="CSV data domain (default sr)")
    parser.add_argument("--target-col", default="-1",
                        help="CSV target column index or name (default last)")
    parser.add_argument("--outputs", type=int, default=1,
                        help="trailing output columns for circuit CSVs")
    parser.add_argument("--header", action="store_true",
                        help="CSV file has a header row")


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--population", type=int)
    parser.add_argument("--generations", type=int)
    parser.add_argument("--crossover-rate", dest="crossover_rate", type=float)
    parser.add_argument("--mutation-rate", dest="mutation_rate", type=float)
    parser.add_argument("--tournament-size", dest="tournament_size", type=int)
    parser.add_argument("--elitism", type=int)
    parser.add_argument("--max-wraps", dest="max_wraps", type=int)
    parser.add_argument("--max-depth", dest="max_depth", type=int)
    parser.add_argument("--grammar", help="BNF grammar file overriding the default")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gedbs",
        description="Grammatical evolution with distance-based training-data selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="materialize a benchmark dataset as CSV")
    p.add_argument("benchmark")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("select", help="cluster and select a training subset")
    _add_data_arguments(p, positional=True)
    p.add_argument("--budget", type=float, required=True, help="budget percent in (0, 100]")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_select)

    p = sub.add_parser("evolve", help="run a single GE search on a dataset")
    _add_data_arguments(p, positional=True)
    _add_config_arguments(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("experiment", help="baseline plus budget sweep with statistics")
    _add_data_arguments(p, positional=True)
    _add_config_arguments(p)
    p.add_argument("--runs", type=int)
    p.add_argument("--budgets", help="comma-separated budgets, e.g. 70,50")
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for runs")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("stats", help="compare two score files")
    p.add_argument("--baseline", required=True, help="file with one score per line")
    p.add_argument("--treatment", required=True, help="file with one score per line")
    p.add_argument("--orientation", choices=["lower", "higher"], default="lower")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(fn=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
