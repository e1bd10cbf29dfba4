"""Grammatical evolution with distance-based training-data selection."""

from .clustering import ClusterAssignment, ahc_complete, choose_k_elbow, kmeans_pp
from .datasets import Dataset, TestCase, gen_circuit, gen_synthetic_sr, load_csv, split_train_test
from .experiment import ExperimentReport, run_experiment, select_training_data
from .fitness import eval_circuit, eval_sr, hit_count, rmse
from .ge import EvolutionConfig, Individual, evolve, map_genotype, sensible_init
from .grammar import Grammar, parse_bnf
from .selection import SelectionPlan, budget_schedule, dbs_select
from .stats import mark_significance, shapiro_wilk, wilcoxon_rank_sum

__version__ = "0.1.0"

__all__ = [
    "ClusterAssignment",
    "Dataset",
    "EvolutionConfig",
    "ExperimentReport",
    "Grammar",
    "Individual",
    "SelectionPlan",
    "TestCase",
    "ahc_complete",
    "budget_schedule",
    "choose_k_elbow",
    "dbs_select",
    "eval_circuit",
    "eval_sr",
    "evolve",
    "gen_circuit",
    "gen_synthetic_sr",
    "hit_count",
    "kmeans_pp",
    "load_csv",
    "map_genotype",
    "mark_significance",
    "parse_bnf",
    "rmse",
    "run_experiment",
    "select_training_data",
    "sensible_init",
    "shapiro_wilk",
    "split_train_test",
    "wilcoxon_rank_sum",
]
