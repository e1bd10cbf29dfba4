"""Grammatical-evolution engine.

Genotypes are tuples of integer codons in [0, 255].  Mapping expands the
leftmost nonterminal of a derivation; a nonterminal with k >= 2
alternatives consumes the next codon c and picks alternative ``c mod k``,
while single-alternative nonterminals consume nothing.  When the genome
runs out the mapper wraps around to the start, at most ``max_wraps``
times; if nonterminals remain after that the individual is invalid.

Fitness is canonically minimized.  Invalid individuals stay in the
population with a penalty fitness instead of being retried.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache

from .fitness import PENALTY_FITNESS
from .grammar import Grammar, Symbol

CODON_MAX = 255


class InitFailure(RuntimeError):
    """Sensible initialization cannot produce a terminating derivation."""


@dataclass
class Individual:
    """One candidate solution: codon genotype plus derived phenotype."""

    genotype: tuple[int, ...]
    phenotype: str | None
    valid: bool
    effective_length: int
    fitness: float | None = None

    def copy(self) -> "Individual":
        return replace(self)


@dataclass(frozen=True)
class EvolutionConfig:
    """Parameters of one evolutionary run."""

    population_size: int = 250
    generations: int = 50
    crossover_rate: float = 0.9
    mutation_rate: float = 0.01
    tournament_size: int = 3
    elitism: int = 1
    max_wraps: int = 2
    max_derivation_depth: int = 10
    rng_seed: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.population_size < self.tournament_size:
            raise ValueError("population_size must be >= tournament_size")
        if not 0 <= self.elitism < self.population_size:
            raise ValueError("elitism must be in [0, population_size)")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.max_wraps < 0:
            raise ValueError("max_wraps must be >= 0")
        if self.max_derivation_depth < 1:
            raise ValueError("max_derivation_depth must be >= 1")


def map_genotype(
    genotype,
    grammar: Grammar,
    max_wraps: int = 2,
    max_steps: int = 100_000,
) -> tuple[str | None, int]:
    """Map a codon sequence to a phenotype string.

    Returns ``(phenotype, effective_length)``; the phenotype is ``None``
    when mapping does not terminate (invalidity is a value, not an
    error).  ``effective_length`` counts every codon read, including
    wrapped re-reads.  ``max_steps`` bounds expansions so that grammars
    which grow without consuming codons (e.g. a purely recursive
    single-alternative rule) terminate as invalid.
    """
    genotype = tuple(genotype)
    length = len(genotype)
    read_limit = length * (1 + max_wraps)
    reads = 0
    steps = 0
    # stack holds pending symbols, top of stack = leftmost
    stack = [Symbol(grammar.axiom, is_terminal=False)]
    parts: list[str] = []
    while stack:
        steps += 1
        if steps > max_steps:
            return None, reads
        sym = stack.pop()
        if sym.is_terminal:
            parts.append(sym.text)
            continue
        alternatives = grammar.alternatives(sym.text)
        k = len(alternatives)
        if k == 1:
            choice = 0
        else:
            if reads >= read_limit:
                return None, reads
            codon = genotype[reads % length]
            reads += 1
            choice = codon % k
        stack.extend(reversed(alternatives[choice].symbols))
    return "".join(parts), reads


def make_individual(genotype, grammar: Grammar, max_wraps: int = 2) -> Individual:
    phenotype, used = map_genotype(genotype, grammar, max_wraps)
    return Individual(
        genotype=tuple(int(c) for c in genotype),
        phenotype=phenotype,
        valid=phenotype is not None,
        effective_length=used,
    )


# ---------------------------------------------------------------------------
# grammar analysis used by sensible initialization


@dataclass(frozen=True)
class _GrammarInfo:
    min_depth: dict[str, float]
    prod_min_depth: dict[str, tuple[float, ...]]
    prod_recursive: dict[str, tuple[bool, ...]]


@lru_cache(maxsize=32)
def _analyze(grammar: Grammar) -> _GrammarInfo:
    """Minimum termination depth per rule and recursion flags per production."""
    nts = sorted(grammar.nonterminals)
    min_depth: dict[str, float] = {nt: math.inf for nt in nts}
    changed = True
    while changed:
        changed = False
        for nt in nts:
            for prod in grammar.alternatives(nt):
                refs = prod.nonterminals
                if refs:
                    depth = 1 + max(min_depth[r] for r in refs)
                else:
                    depth = 1
                if depth < min_depth[nt]:
                    min_depth[nt] = depth
                    changed = True
    prod_min_depth = {
        nt: tuple(
            1 + max((min_depth[r] for r in prod.nonterminals), default=0)
            for prod in grammar.alternatives(nt)
        )
        for nt in nts
    }
    # transitive reachability between nonterminals
    reach: dict[str, set[str]] = {
        nt: {r for prod in grammar.alternatives(nt) for r in prod.nonterminals}
        for nt in nts
    }
    changed = True
    while changed:
        changed = False
        for nt in nts:
            extra = set().union(*(reach[r] for r in reach[nt])) if reach[nt] else set()
            if not extra <= reach[nt]:
                reach[nt] |= extra
                changed = True
    prod_recursive = {
        nt: tuple(
            any(r == nt or nt in reach[r] for r in prod.nonterminals)
            for prod in grammar.alternatives(nt)
        )
        for nt in nts
    }
    return _GrammarInfo(min_depth, prod_min_depth, prod_recursive)


def min_viable_depth(grammar: Grammar) -> int:
    """Smallest derivation-tree depth at which the axiom can terminate."""
    depth = _analyze(grammar).min_depth[grammar.axiom]
    if not math.isfinite(depth):
        raise InitFailure("grammar has no terminating derivation")
    return int(depth)


def _grow_tree(
    grammar: Grammar,
    info: _GrammarInfo,
    nt: str,
    budget: int,
    full: bool,
    rng: random.Random,
    choices: list[tuple[int, int]],
) -> str:
    alternatives = grammar.alternatives(nt)
    depths = info.prod_min_depth[nt]
    allowed = [i for i in range(len(alternatives)) if depths[i] <= budget]
    if not allowed:
        raise InitFailure(f"<{nt}> cannot terminate within depth {budget}")
    if full:
        recursive = [i for i in allowed if info.prod_recursive[nt][i]]
        pool = recursive or allowed
    else:
        pool = allowed
    choice = pool[rng.randrange(len(pool))]
    if len(alternatives) >= 2:
        choices.append((choice, len(alternatives)))
    parts = []
    for sym in alternatives[choice].symbols:
        if sym.is_terminal:
            parts.append(sym.text)
        else:
            parts.append(_grow_tree(grammar, info, sym.text, budget - 1, full, rng, choices))
    return "".join(parts)


def _codon_for_choice(choice: int, k: int, rng: random.Random) -> int:
    # uniform codon in [0, 255] constrained to codon % k == choice
    multiples = (CODON_MAX + 1) // k
    if multiples == 0:
        raise InitFailure(f"rule with {k} alternatives exceeds the codon range")
    return rng.randrange(multiples) * k + choice


def sensible_init(
    grammar: Grammar,
    population_size: int,
    depth_range: tuple[int, int],
    rng: random.Random,
    max_wraps: int = 2,
) -> list[Individual]:
    """Build a population of valid individuals from ramped derivation trees.

    Half the individuals use the grow method and half the full method,
    with target depths cycled across ``depth_range``.  Genotypes are
    reverse-engineered from the derivation choices so that re-mapping
    reproduces the constructed phenotype exactly, then padded with a
    random tail half the consumed length.
    """
    lo, hi = depth_range
    if lo > hi:
        raise ValueError("depth_range must be (min, max) with min <= max")
    info = _analyze(grammar)
    viable = info.min_depth[grammar.axiom]
    if not math.isfinite(viable) or viable > hi:
        raise InitFailure(
            f"no terminating derivation within depth {hi} "
            f"(minimum viable depth is {viable})"
        )
    lo = max(lo, int(viable))
    depths = list(range(lo, hi + 1))
    population: list[Individual] = []
    for i in range(population_size):
        depth = depths[(i // 2) % len(depths)]
        full = i % 2 == 1
        choices: list[tuple[int, int]] = []
        phenotype = _grow_tree(grammar, info, grammar.axiom, depth, full, rng, choices)
        genome = [_codon_for_choice(c, k, rng) for c, k in choices]
        tail = max(1, len(genome) // 2)
        genome.extend(rng.randrange(CODON_MAX + 1) for _ in range(tail))
        ind = make_individual(genome, grammar, max_wraps)
        assert ind.valid and ind.phenotype == phenotype, "init mapping mismatch"
        population.append(ind)
    return population


# ---------------------------------------------------------------------------
# variation and selection operators


def tournament_select(
    population: list[Individual], tournament_size: int, rng: random.Random
) -> Individual:
    """Best-fitness member of a uniform with-replacement tournament.

    Ties are broken by the lowest population index.
    """
    if not population:
        raise ValueError("population is empty")
    best: int | None = None
    for _ in range(tournament_size):
        i = rng.randrange(len(population))
        if best is None or (population[i].fitness, i) < (population[best].fitness, best):
            best = i
    return population[best]


def effective_crossover(
    parent_a: Individual,
    parent_b: Individual,
    rng: random.Random,
    *,
    grammar: Grammar,
    max_wraps: int = 2,
) -> tuple[Individual, Individual]:
    """One-point crossover restricted to the effective (consumed) region.

    A single cut point is drawn uniformly from [1, min effective length
    of the parents] and the genotype tails beyond it are swapped, so the
    cut never exceeds either parent's effective length and identical
    parents reproduce themselves exactly.  Children are re-mapped and may
    be invalid.  Degenerate parents (invalid, or effective length 0) fall
    back to plain copies.
    """
    if (
        not parent_a.valid
        or not parent_b.valid
        or parent_a.effective_length == 0
        or parent_b.effective_length == 0
    ):
        return parent_a.copy(), parent_b.copy()
    cut = rng.randint(1, min(parent_a.effective_length, parent_b.effective_length))
    child_a = parent_a.genotype[:cut] + parent_b.genotype[cut:]
    child_b = parent_b.genotype[:cut] + parent_a.genotype[cut:]
    return (
        make_individual(child_a, grammar, max_wraps),
        make_individual(child_b, grammar, max_wraps),
    )


def codon_mutation(
    individual: Individual,
    rate: float,
    rng: random.Random,
    *,
    grammar: Grammar,
    max_wraps: int = 2,
) -> Individual:
    """Replace each codon with a fresh uniform value with probability ``rate``.

    The replacement may equal the old value.  The result is re-mapped.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must be in [0, 1]")
    genome = list(individual.genotype)
    for i in range(len(genome)):
        if rng.random() < rate:
            genome[i] = rng.randrange(CODON_MAX + 1)
    return make_individual(genome, grammar, max_wraps)


# ---------------------------------------------------------------------------
# generational loop


@dataclass
class GenerationRecord:
    generation: int
    best: Individual
    eval_millis: float


@dataclass
class RunTrace:
    """Best-of-generation individuals plus per-generation evaluation time."""

    records: list[GenerationRecord] = field(default_factory=list)

    @property
    def final_best(self) -> Individual:
        return self.records[-1].best

    def json_lines(self) -> str:
        import json

        lines = []
        for r in self.records:
            lines.append(
                json.dumps(
                    {
                        "generation": r.generation,
                        "best_fitness": r.best.fitness,
                        "best_phenotype": r.best.phenotype,
                        "effective_size": r.best.effective_length,
                        "eval_millis": r.eval_millis,
                    }
                )
            )
        return "\n".join(lines) + "\n"


def _evaluate(population, fitness_fn, invalid_fitness: float) -> float:
    start = time.perf_counter()
    for ind in population:
        if ind.fitness is None:
            if ind.valid:
                ind.fitness = float(fitness_fn(ind.phenotype))
            else:
                ind.fitness = invalid_fitness
    return (time.perf_counter() - start) * 1000.0


def _best_index(population) -> int:
    return min(range(len(population)), key=lambda i: (population[i].fitness, i))


def evolve(
    config: EvolutionConfig,
    grammar: Grammar,
    fitness_fn,
    *,
    invalid_fitness: float = PENALTY_FITNESS,
) -> RunTrace:
    """Run one generational GE search and return its trace.

    ``fitness_fn`` maps a phenotype string to a real value (lower is
    better) and must be total over valid phenotypes.  The run is
    deterministic for a fixed ``config.rng_seed``.
    """
    rng = random.Random(config.rng_seed)
    # ramp from the grammar's minimum viable depth (sensible_init clamps
    # the lower bound up) to the configured maximum
    depth_range = (1, config.max_derivation_depth)
    population = sensible_init(
        grammar, config.population_size, depth_range, rng, config.max_wraps
    )
    trace = RunTrace()
    millis = _evaluate(population, fitness_fn, invalid_fitness)
    trace.records.append(GenerationRecord(0, population[_best_index(population)], millis))
    for generation in range(1, config.generations + 1):
        elite_idx = sorted(
            range(len(population)), key=lambda i: (population[i].fitness, i)
        )[: config.elitism]
        next_population = [population[i] for i in elite_idx]
        need = config.population_size - config.elitism
        offspring: list[Individual] = []
        while len(offspring) < need:
            parent_a = tournament_select(population, config.tournament_size, rng)
            parent_b = tournament_select(population, config.tournament_size, rng)
            if rng.random() < config.crossover_rate:
                child_a, child_b = effective_crossover(
                    parent_a, parent_b, rng, grammar=grammar, max_wraps=config.max_wraps
                )
            else:
                child_a, child_b = parent_a, parent_b
            for child in (child_a, child_b):
                if len(offspring) < need:
                    offspring.append(
                        codon_mutation(
                            child,
                            config.mutation_rate,
                            rng,
                            grammar=grammar,
                            max_wraps=config.max_wraps,
                        )
                    )
        population = next_population + offspring
        millis = _evaluate(population, fitness_fn, invalid_fitness)
        trace.records.append(
            GenerationRecord(generation, population[_best_index(population)], millis)
        )
    return trace
