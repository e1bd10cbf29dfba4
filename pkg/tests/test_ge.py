import random

import pytest
from hypothesis import given, settings, strategies as st

from gedbs.datasets import Dataset, TestCase
from gedbs.fitness import PENALTY_FITNESS, eval_sr
from gedbs.ge import (
    EvolutionConfig,
    InitFailure,
    Individual,
    codon_mutation,
    effective_crossover,
    evolve,
    make_individual,
    map_genotype,
    min_viable_depth,
    sensible_init,
    tournament_select,
)
from gedbs.grammar import parse_bnf
from gedbs.grammars import load

THREE_WAY = parse_bnf("<s> ::= <a><b>|c|d\n<a> ::= a\n<b> ::= b")


# ---------------------------------------------------------------------------
# mapping


def test_codon_33_mod_3_selects_alternative_zero():
    phenotype, used = map_genotype([33], THREE_WAY)
    assert phenotype == "ab"  # 33 mod 3 = 0 -> first alternative
    assert used == 1


def test_modulo_picks_other_alternatives():
    assert map_genotype([34], THREE_WAY)[0] == "c"  # 34 mod 3 = 1
    assert map_genotype([35], THREE_WAY)[0] == "d"  # 35 mod 3 = 2


def test_single_alternative_consumes_no_codon():
    g = parse_bnf("<s>::=x")
    phenotype, used = map_genotype([9, 9, 9], g)
    assert phenotype == "x"
    assert used == 0


def test_pure_recursion_is_invalid():
    g = parse_bnf("<s>::=<s>")
    phenotype, used = map_genotype([1, 2, 3], g, max_wraps=2)
    assert phenotype is None


def test_growing_recursion_is_invalid():
    g = parse_bnf("<s>::=<s><s>")
    assert map_genotype([0, 1], g, max_wraps=2)[0] is None


def test_wrapping_reuses_codons_from_start():
    g = parse_bnf("<s>::=a<s>|b")
    # one codon, reused: 0 -> a<s> each pass, then the wrap limit kicks in
    phenotype, used = map_genotype([0], g, max_wraps=2)
    assert phenotype is None
    assert used == 3  # read limit = 1 codon * (1 + 2 wraps)
    phenotype, used = map_genotype([1], g, max_wraps=2)
    assert phenotype == "b"
    assert used == 1


def test_genome_exhaustion_without_wraps():
    g = parse_bnf("<s>::=a<s>|b")
    assert map_genotype([0, 0], g, max_wraps=0)[0] is None
    assert map_genotype([0, 1], g, max_wraps=0)[0] == "ab"


def test_effective_length_counts_wrapped_rereads():
    g = parse_bnf("<s>::=a<s>|b")
    phenotype, used = map_genotype([0, 0, 1], g, max_wraps=1)
    assert phenotype == "aab"
    assert used == 3
    phenotype, used = map_genotype([0, 0, 0, 0, 1], g, max_wraps=1)
    assert phenotype == "aaaab"
    assert used == 5


@given(
    st.lists(st.integers(0, 255), min_size=0, max_size=40),
    st.integers(0, 3),
)
def test_mapping_is_deterministic(genotype, wraps):
    g = load("sr_1var")
    assert map_genotype(genotype, g, wraps) == map_genotype(genotype, g, wraps)


@given(st.lists(st.integers(0, 255), min_size=1, max_size=40))
def test_effective_length_bounded(genotype):
    g = load("sr_1var")
    _, used = map_genotype(genotype, g, max_wraps=2)
    assert used <= len(genotype) * 3


# ---------------------------------------------------------------------------
# sensible initialization


def test_init_trivial_grammar_all_identical():
    g = parse_bnf("<s>::=a")
    pop = sensible_init(g, 10, (1, 3), random.Random(0))
    assert len(pop) == 10
    assert all(ind.phenotype == "a" and ind.valid for ind in pop)


def test_init_population_all_valid_on_example_grammar():
    g = load("sr_1var")
    pop = sensible_init(g, 250, (2, 10), random.Random(3))
    assert len(pop) == 250
    # oracle: re-map every genotype and assert validity
    for ind in pop:
        phenotype, used = map_genotype(ind.genotype, g, 2)
        assert phenotype is not None
        assert phenotype == ind.phenotype
        assert used == ind.effective_length
    assert sum(1 for ind in pop if not ind.valid) == 0


def test_init_failure_when_depth_too_small():
    g = parse_bnf(
        "<a>::=<b>\n<b>::=<c>\n<c>::=<d>\n<d>::=<e>\n<e>::=t"
    )
    assert min_viable_depth(g) == 5
    with pytest.raises(InitFailure):
        sensible_init(g, 5, (2, 2), random.Random(0))


def test_init_failure_on_nonterminating_grammar():
    g = parse_bnf("<s>::=<s>")
    with pytest.raises(InitFailure):
        sensible_init(g, 5, (2, 10), random.Random(0))


def test_init_codons_in_range():
    g = load("parity5")
    pop = sensible_init(g, 60, (3, 8), random.Random(11))
    for ind in pop:
        assert all(0 <= c <= 255 for c in ind.genotype)


# ---------------------------------------------------------------------------
# tournament selection


def _pop(fitnesses):
    return [
        Individual(genotype=(i,), phenotype=str(i), valid=True, effective_length=1, fitness=f)
        for i, f in enumerate(fitnesses)
    ]


def test_tournament_covering_population_returns_global_best():
    pop = _pop([5.0, 1.0, 3.0, 4.0, 2.0])
    rng = random.Random(0)
    # tournament the size of the population, repeated: the global best must
    # win every time its index is drawn; with enough repeats it always is
    winners = {tournament_select(pop, 200, rng).fitness for _ in range(20)}
    assert winners == {1.0}


def test_tournament_size_one_is_uniform():
    pop = _pop([5.0, 1.0, 3.0])
    rng = random.Random(1)
    picked = {tournament_select(pop, 1, rng).phenotype for _ in range(200)}
    assert picked == {"0", "1", "2"}


def test_tournament_tie_breaks_to_lowest_index():
    pop = _pop([2.0, 2.0, 2.0])
    rng = random.Random(2)
    for _ in range(50):
        state = rng.getstate()
        winner = tournament_select(pop, 3, rng)
        rng.setstate(state)
        drawn = [rng.randrange(len(pop)) for _ in range(3)]
        assert winner is pop[min(drawn)]


def test_tournament_empty_population_rejected():
    with pytest.raises(ValueError):
        tournament_select([], 2, random.Random(0))


# ---------------------------------------------------------------------------
# effective crossover


def test_identical_parents_reproduce_exactly():
    g = load("sr_1var")
    rng = random.Random(5)
    parent = sensible_init(g, 1, (4, 6), rng)[0]
    for _ in range(20):
        a, b = effective_crossover(parent, parent, rng, grammar=g)
        assert a.genotype == parent.genotype
        assert b.genotype == parent.genotype


def test_degenerate_parent_falls_back_to_copies():
    g = parse_bnf("<s>::=a")
    rng = random.Random(0)
    parent = make_individual([7, 8], g)
    assert parent.effective_length == 0
    a, b = effective_crossover(parent, parent, rng, grammar=g)
    assert a.genotype == parent.genotype and b.genotype == parent.genotype


def test_cut_point_forced_to_one_when_effective_length_one():
    g = parse_bnf("<s>::=a|b")
    rng = random.Random(0)
    pa = make_individual([10, 99, 98], g)
    pb = make_individual([11, 55, 54], g)
    assert pa.effective_length == 1
    for _ in range(10):
        a, b = effective_crossover(pa, pb, rng, grammar=g)
        assert a.genotype == (10, 55, 54)
        assert b.genotype == (11, 99, 98)


def test_crossover_tails_match_other_parent():
    g = load("sr_1var")
    rng = random.Random(9)
    pop = sensible_init(g, 40, (3, 8), rng)
    checked = 0
    for _ in range(1000):
        pa, pb = rng.sample(pop, 2)
        cut_max = min(pa.effective_length, pb.effective_length)
        state = rng.getstate()
        a, b = effective_crossover(pa, pb, rng, grammar=g)
        rng.setstate(state)
        cut = rng.randint(1, cut_max)
        assert a.genotype == pa.genotype[:cut] + pb.genotype[cut:]
        assert b.genotype == pb.genotype[:cut] + pa.genotype[cut:]
        assert 1 <= cut <= min(pa.effective_length, pb.effective_length)
        checked += 1
    assert checked == 1000


# ---------------------------------------------------------------------------
# mutation


def test_mutation_rate_zero_is_identity():
    g = load("sr_1var")
    rng = random.Random(4)
    ind = sensible_init(g, 1, (3, 5), rng)[0]
    mutated = codon_mutation(ind, 0.0, rng, grammar=g)
    assert mutated.genotype == ind.genotype
    assert mutated.phenotype == ind.phenotype


def test_mutation_rate_one_redraws_every_codon():
    g = parse_bnf("<s>::=a|b")
    rng = random.Random(4)
    ind = make_individual(tuple([7] * 64), g)
    mutated = codon_mutation(ind, 1.0, rng, grammar=g)
    assert len(mutated.genotype) == 64
    # all redrawn: collisions with the old value possible per codon but
    # statistically not everywhere
    assert mutated.genotype != ind.genotype


def test_mutation_binomial_expectation():
    g = parse_bnf("<s>::=a|b")
    rng = random.Random(123)
    base = make_individual(tuple([9] * 200), g)
    total_changed = 0
    trials = 10_000
    for _ in range(trials):
        mutated = codon_mutation(base, 0.01, rng, grammar=g)
        total_changed += sum(1 for a, b in zip(base.genotype, mutated.genotype) if a != b)
    mean_changed = total_changed / trials
    # binomial expectation 200 * 0.01 = 2.0 touched codons per trial
    # (a redraw matches the old value once in 256, well inside the band)
    assert abs(mean_changed - 2.0) < 0.15


def test_mutation_codons_stay_in_range():
    g = parse_bnf("<s>::=a|b")
    rng = random.Random(5)
    base = make_individual(tuple([250] * 50), g)
    for _ in range(50):
        mutated = codon_mutation(base, 0.5, rng, grammar=g)
        assert all(0 <= c <= 255 for c in mutated.genotype)


# ---------------------------------------------------------------------------
# evolve


def _xx_dataset():
    # target x^2 + x over a small grid
    cases = tuple(
        TestCase((x,), (x * x + x,)) for x in [i / 5 - 2 for i in range(21)]
    )
    return Dataset("xx", "real_sr", cases, 1, 1)


def test_generations_zero_trace_has_initial_best_only():
    g = load("sr_1var")
    config = EvolutionConfig(population_size=20, generations=0, rng_seed=1)
    trace = evolve(config, g, lambda p: float(len(p)))
    assert len(trace.records) == 1
    assert trace.records[0].generation == 0


def test_constant_fitness_keeps_best_constant():
    g = load("sr_1var")
    config = EvolutionConfig(population_size=20, generations=5, rng_seed=2)
    trace = evolve(config, g, lambda p: 7.5)
    assert [r.best.fitness for r in trace.records] == [7.5] * 6


def test_elitism_makes_best_fitness_monotone():
    g = load("sr_1var")
    data = _xx_dataset()
    config = EvolutionConfig(population_size=250, generations=50, rng_seed=42)
    cache = {}

    def fitness(p):
        if p not in cache:
            cache[p] = eval_sr(p, data)
        return cache[p]

    trace = evolve(config, g, fitness)
    fits = [r.best.fitness for r in trace.records]
    assert all(b <= a + 1e-12 for a, b in zip(fits, fits[1:]))
    assert fits[-1] <= fits[0]


def test_seed_determinism():
    g = load("parity5")
    config = EvolutionConfig(population_size=30, generations=4, rng_seed=77)
    f = lambda p: float(len(p))
    t1 = evolve(config, g, f)
    t2 = evolve(config, g, f)
    assert [r.best.fitness for r in t1.records] == [r.best.fitness for r in t2.records]
    assert [r.best.genotype for r in t1.records] == [r.best.genotype for r in t2.records]


def test_population_codons_in_range_throughout():
    g = load("sr_1var")
    config = EvolutionConfig(population_size=30, generations=5, rng_seed=3)
    seen = []

    def fitness(p):
        return float(len(p))

    trace = evolve(config, g, fitness)
    for record in trace.records:
        assert all(0 <= c <= 255 for c in record.best.genotype)


def test_invalid_offspring_get_penalty_fitness():
    # a grammar in which crossover/mutation can easily produce invalids
    g = parse_bnf("<s>::=a<s>|b")
    config = EvolutionConfig(
        population_size=20, generations=6, rng_seed=8, mutation_rate=0.2, max_wraps=0
    )
    trace = evolve(config, g, lambda p: float(len(p)))
    assert trace.final_best.fitness < PENALTY_FITNESS


def test_trace_json_lines_fields():
    g = load("sr_1var")
    config = EvolutionConfig(population_size=10, generations=1, rng_seed=4)
    trace = evolve(config, g, lambda p: 1.0)
    import json

    lines = trace.json_lines().strip().splitlines()
    assert len(lines) == 2
    record = json.loads(lines[0])
    assert set(record) == {
        "generation",
        "best_fitness",
        "best_phenotype",
        "effective_size",
        "eval_millis",
    }


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(crossover_rate=1.5)
    with pytest.raises(ValueError):
        EvolutionConfig(population_size=2, tournament_size=5)
    with pytest.raises(ValueError):
        EvolutionConfig(elitism=250, population_size=250)
