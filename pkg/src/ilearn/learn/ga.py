"""A small generic genetic algorithm.

Genes are described by CategoricalGene (a finite value set) or RealGene (a
closed interval, optionally searched in log space). A run evolves a
population with elitism, tournament selection, uniform crossover and
per-gene mutation, and returns the best chromosome ever evaluated along with
the per-generation best-fitness history.

Fitness functions are maximized. A fitness of NaN is treated as the worst
possible fitness rather than an error.
"""

from ilearn.util.randit import RandomStream

from dataclasses import dataclass, field, asdict
from typing import Optional
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

WORST_FITNESS = -math.inf

# Mutation noise as a fraction of the interval width
MUTATION_SIGMA = 0.1

#=============================================================================

@dataclass(frozen=True)
class CategoricalGene:
    """A gene taking one of a finite, nonempty set of values."""

    values: tuple

    def __post_init__(self):
        values = tuple(self.values)
        if not values:
            raise ValueError("categorical gene needs at least one value")
        object.__setattr__(self, "values", values)

    def contains(self, value):
        return value in self.values

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]

    def mutate(self, value, rng):
        return self.sample(rng)

#-----------------------------------------------------------------------------

@dataclass(frozen=True)
class RealGene:
    """A gene taking real values in [lo, hi].

    With log=True (which requires lo > 0) sampling and mutation act on
    log(value), so the gene spreads evenly over orders of magnitude.
    """

    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not self.lo < self.hi:
            raise ValueError("real gene interval must satisfy lo < hi")
        if self.log and self.lo <= 0:
            raise ValueError("log-scale gene interval must be positive")

    def _to_space(self, value):
        return math.log(value) if self.log else value

    def _from_space(self, value):
        return math.exp(value) if self.log else value

    def clamp(self, value):
        return min(max(float(value), self.lo), self.hi)

    def contains(self, value):
        return self.lo <= value <= self.hi

    def sample(self, rng):
        a, b = self._to_space(self.lo), self._to_space(self.hi)
        return self.clamp(self._from_space(float(rng.uniform(a, b))))

    def mutate(self, value, rng):
        a, b = self._to_space(self.lo), self._to_space(self.hi)
        moved = self._to_space(value) + float(rng.normal(
            0.0, MUTATION_SIGMA * (b - a)))
        return self.clamp(self._from_space(min(max(moved, a), b)))

#=============================================================================

@dataclass(frozen=True)
class GaConfig:
    """Genetic algorithm settings.

    Attributes:
    population_size -- chromosomes per generation (>= 2; default 20)
    generations -- generations including the initial one (>= 1; default 15)
    crossover_rate -- probability a child is bred by crossover (default 0.8)
    mutation_rate -- per-gene mutation probability (default 0.1)
    elite_count -- best chromosomes copied unchanged (>= 1; default 2)
    tournament_size -- draws per tournament (>= 2; default 3)
    seed -- random seed (default 0; -1 for random)
    target_fitness -- optional early stopping level (default None)
    """

    population_size: int = 20
    generations: int = 15
    crossover_rate: float = 0.8
    mutation_rate: float = 0.1
    elite_count: int = 2
    tournament_size: int = 3
    seed: int = 0
    target_fitness: Optional[float] = None

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population size must be at least 2")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("crossover rate must be in [0,1]")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation rate must be in [0,1]")
        if self.elite_count < 1:
            raise ValueError("elite count must be at least 1")
        if self.elite_count >= self.population_size:
            raise ValueError("elite count must be below population size")
        if self.tournament_size < 2:
            raise ValueError("tournament size must be at least 2")

    def with_seed(self, seed):
        """Returns a copy of this config with another seed."""

        return GaConfig(**{**asdict(self), "seed": int(seed)})

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

#=============================================================================

@dataclass
class Chromosome:
    """A candidate solution: one value per gene, plus its fitness once
    evaluated (None before)."""

    genes: tuple
    fitness: Optional[float] = None
    order: int = field(default=-1, compare=False)

    @property
    def evaluated(self):
        return self.fitness is not None

#-----------------------------------------------------------------------------

@dataclass
class GaResult:
    """Outcome of run_ga()."""

    best: Chromosome
    history: list
    evaluations: int

#=============================================================================

def random_chromosome(spec, rng):
    """Draws a chromosome uniformly from the gene domains."""

    return Chromosome(tuple(g.sample(rng) for g in spec))

#-----------------------------------------------------------------------------

def select_tournament(population, k, rng):
    """Returns the fittest of k uniform draws (with replacement).

    Ties go to the chromosome evaluated first.
    """

    draws = [population[int(i)] for i in rng.integers(len(population), size=k)]
    return max(draws, key=lambda ch: (ch.fitness, -ch.order))

#-----------------------------------------------------------------------------

def crossover_uniform(a, b, rng):
    """Returns a child taking each gene from a or b with probability 0.5."""

    mask = rng.random(len(a.genes)) < 0.5
    return Chromosome(tuple(gb if swap else ga
                            for ga, gb, swap in zip(a.genes, b.genes, mask)))

#-----------------------------------------------------------------------------

def mutate(chromosome, spec, rate, rng):
    """Returns a copy with each gene resampled or perturbed at the given rate.

    Categorical genes are redrawn uniformly; real genes receive Gaussian
    noise of 10% of their interval width (in log space for log genes) and
    are clamped back into their interval.
    """

    hits = rng.random(len(spec)) < rate
    return Chromosome(tuple(gene.mutate(value, rng) if hit else value
                            for gene, value, hit in zip(spec, chromosome.genes,
                                                        hits)))

#-----------------------------------------------------------------------------

def memoize_fitness(fitness):
    """Wraps a fitness function with a cache keyed on the gene values."""

    cache = {}

    def cached(chromosome):
        key = tuple(chromosome.genes)
        if key not in cache:
            cache[key] = fitness(chromosome)
        return cache[key]

    cached.cache = cache
    return cached

#=============================================================================

def run_ga(config, spec, fitness, initial=()):
    """Runs the genetic algorithm and returns a GaResult.

    Positional arguments:
    config -- GaConfig
    spec -- list of gene descriptors (CategoricalGene or RealGene)
    fitness -- function Chromosome -> float, deterministic during the run

    Keyword arguments:
    initial -- chromosomes (or gene tuples) placed into generation 0 ahead of
        the random ones (default none)

    The returned best chromosome is the highest-fitness one ever evaluated,
    with ties going to the earliest evaluation. The history holds the best
    fitness seen up to each generation and is therefore non-decreasing. The
    run ends after config.generations generations, or sooner once the best
    fitness reaches config.target_fitness.
    """

    spec = list(spec)
    if not spec:
        raise ValueError("gene spec must not be empty")
    rng = RandomStream(config.seed).generator
    counter = [0]

    def evaluate(chromosome):
        for gene, value in zip(spec, chromosome.genes):
            if not gene.contains(value):
                raise ValueError(f"gene value {value!r} outside its domain")
        value = float(fitness(chromosome))
        if math.isnan(value):
            value = WORST_FITNESS
        chromosome.fitness = value
        chromosome.order = counter[0]
        counter[0] += 1
        return chromosome

    seeds = [ch if isinstance(ch, Chromosome) else Chromosome(tuple(ch))
             for ch in initial][:config.population_size]
    population = [Chromosome(tuple(ch.genes)) for ch in seeds]
    while len(population) < config.population_size:
        population.append(random_chromosome(spec, rng))
    population = [evaluate(ch) for ch in population]

    def rank(ch):
        return (-ch.fitness, ch.order)

    best = min(population, key=rank)
    history = [best.fitness]
    logger.debug("generation 0: best fitness %.4f", best.fitness)

    for generation in range(1, config.generations):
        if (config.target_fitness is not None
                and best.fitness >= config.target_fitness):
            break

        ranked = sorted(population, key=rank)
        children = ranked[:config.elite_count]
        while len(children) < config.population_size:
            parent = select_tournament(population, config.tournament_size,
                                       rng)
            if rng.random() < config.crossover_rate:
                other = select_tournament(population, config.tournament_size,
                                          rng)
                child = crossover_uniform(parent, other, rng)
            else:
                child = Chromosome(parent.genes)
            child = mutate(child, spec, config.mutation_rate, rng)
            children.append(evaluate(child))
        population = children

        leader = min(population, key=rank)
        if rank(leader) < rank(best):
            best = leader
        history.append(best.fitness)
        logger.debug("generation %d: best fitness %.4f", generation,
                     best.fitness)

    return GaResult(best=best, history=history, evaluations=counter[0])
