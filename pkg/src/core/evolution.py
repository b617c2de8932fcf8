"""
Generational microbial GA.

Every generation: draw one light square, pair all members at random,
score each member on every light (mean distance cost), and in each pair
replace the costlier member by a mutated copy of the other.

Randomness comes from independent streams keyed on (seed, generation,
stream, index), and trials are evaluated in fixed-size member chunks,
so the worker count never changes the outcome.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.errors import ConfigError
from src.core.genome import (
    NetworkGenome,
    decode,
    decode_genes,
    genome_length,
    mutate,
    random_genome,
)
from src.core.trial import TrialConfig, decode_for, run_trials
from src.core.world import LightPosition

logger = logging.getLogger(__name__)

__all__ = [
    "EvolutionConfig",
    "GenerationSummary",
    "NetworkGenome",
    "Population",
    "decode",
    "decode_genes",
    "evolve",
    "light_square",
    "mutate",
    "random_genome",
    "random_population",
    "rank_members",
    "run_generation",
    "select_best",
]

LIGHT_STREAM = 0
MUTATION_STREAM = 1
INIT_STREAM = 2


class EvolutionConfig(BaseModel):
    """GA hyperparameters plus the trial template."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    population_size: int = Field(default=50, ge=2)
    generations: int = Field(default=2000, ge=0)
    mutation_sigma: float = Field(default=0.05, gt=0)
    mutation_rate: float = Field(default=0.1, ge=0, le=1)
    trial: TrialConfig = TrialConfig()
    lights_per_generation: int = Field(default=4, ge=1)
    light_radius: float = Field(default=3.0, gt=0)
    seed: int = Field(default=0, ge=0)
    centre_crossing: bool = True
    chunk_size: int = Field(default=10, ge=1)

    @field_validator("population_size")
    @classmethod
    def _even(cls, size: int) -> int:
        if size % 2:
            raise ValueError("population size must be even (members are paired)")
        return size

    @model_validator(mode="after")
    def _trial_template(self) -> "EvolutionConfig":
        if self.trial.perturbation.scripted:
            raise ConfigError("evolution trials cannot use scripted stimuli")
        return self


class Population(BaseModel):
    """Genomes plus bookkeeping."""

    model_config = ConfigDict(frozen=True)

    members: List[NetworkGenome]
    generation: int = 0
    rng_seed: int = 0
    next_id: int = 0

    @property
    def size(self) -> int:
        return len(self.members)

    def genes(self) -> np.ndarray:
        return np.array([member.array for member in self.members])

    def member(self, genome_id: str) -> NetworkGenome:
        for genome in self.members:
            if genome.id == genome_id:
                return genome
        raise KeyError(genome_id)


class GenerationSummary(NamedTuple):
    generation: int
    best: float
    mean: float
    light_angle: float
    pairs: Tuple[Tuple[int, int], ...]


class GenerationReport(NamedTuple):
    population: Population
    summary: GenerationSummary
    scores: np.ndarray


def member_id(number: int) -> str:
    return f"m{number:06d}"


def stream(seed: int, generation: int, kind: int, index: int = 0) -> np.random.Generator:
    """Independent generator for one (seed, generation, purpose, index)."""
    return np.random.default_rng([seed, generation, kind, index])


def random_population(cfg: EvolutionConfig) -> Population:
    n = cfg.trial.network.n
    members = [
        random_genome(
            stream(cfg.seed, 0, INIT_STREAM, i), n, cfg.centre_crossing, member_id(i)
        )
        for i in range(cfg.population_size)
    ]
    return Population(
        members=members, generation=0, rng_seed=cfg.seed, next_id=cfg.population_size
    )


def light_square(
    rng: np.random.Generator, radius: float, count: int = 4
) -> List[LightPosition]:
    """`count` lights evenly spaced on a circle, first angle uniform."""
    if radius <= 0:
        raise ConfigError("light radius must be positive", key="light_radius")
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return lights_at_angle(phi, radius, count)


def lights_at_angle(phi: float, radius: float, count: int = 4) -> List[LightPosition]:
    step = 2.0 * math.pi / count
    return [
        LightPosition(radius * math.cos(phi + j * step), radius * math.sin(phi + j * step))
        for j in range(count)
    ]


def _evaluate_chunk(
    genes: np.ndarray, lights: Sequence[LightPosition], trial: TrialConfig
) -> np.ndarray:
    """Scores (members, lights) for one chunk; runs inside worker processes."""
    members, _ = genes.shape
    batch = np.repeat(genes, len(lights), axis=0)
    rollout = run_trials(decode_for(batch, trial), list(lights) * members, trial)
    assert rollout.fitness is not None
    return rollout.fitness.reshape(members, len(lights))


def evaluate_population(
    genes: np.ndarray,
    lights: Sequence[LightPosition],
    trial: TrialConfig,
    chunk_size: int,
    workers: int = 1,
) -> np.ndarray:
    """Per-light scores of every member, (members, lights)."""
    chunks = [genes[i : i + chunk_size] for i in range(0, len(genes), chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(chunks))) as executor:
            parts = list(
                executor.map(
                    _evaluate_chunk,
                    chunks,
                    [lights] * len(chunks),
                    [trial] * len(chunks),
                )
            )
    else:
        parts = [_evaluate_chunk(chunk, lights, trial) for chunk in chunks]
    return np.concatenate(parts, axis=0)


def combine_scores(scores: np.ndarray) -> np.ndarray:
    """Mean over lights; anything non-finite always loses."""
    combined = np.mean(scores, axis=1)
    return np.where(np.isfinite(combined), combined, math.inf)


def run_generation(
    pop: Population, cfg: EvolutionConfig, workers: int = 1
) -> GenerationReport:
    """One tournament per member, then reproduction for the whole population."""
    if pop.size % 2:
        raise ConfigError("population size must be even")

    rng = stream(pop.rng_seed, pop.generation, LIGHT_STREAM)
    lights = light_square(rng, cfg.light_radius, cfg.lights_per_generation)
    order = rng.permutation(pop.size)
    pairs = tuple((int(a), int(b)) for a, b in order.reshape(-1, 2))

    scores = evaluate_population(
        pop.genes(), lights, cfg.trial, cfg.chunk_size, workers
    )
    combined = combine_scores(scores)

    members = list(pop.members)
    next_id = pop.next_id
    for a, b in pairs:
        # ties go to the first of the pair
        winner, loser = (a, b) if combined[a] <= combined[b] else (b, a)
        members[loser] = mutate(
            pop.members[winner],
            stream(pop.rng_seed, pop.generation, MUTATION_STREAM, loser),
            cfg.mutation_sigma,
            cfg.mutation_rate,
            new_id=member_id(next_id),
        )
        next_id += 1

    finite = combined[np.isfinite(combined)]
    summary = GenerationSummary(
        generation=pop.generation,
        best=float(np.min(combined)),
        mean=float(np.mean(finite)) if finite.size else math.inf,
        light_angle=math.atan2(lights[0].y, lights[0].x) % (2.0 * math.pi),
        pairs=pairs,
    )
    logger.debug(
        "generation %d best=%.4f mean=%.4f angle=%.4f",
        summary.generation,
        summary.best,
        summary.mean,
        summary.light_angle,
    )
    population = Population(
        members=members,
        generation=pop.generation + 1,
        rng_seed=pop.rng_seed,
        next_id=next_id,
    )
    return GenerationReport(population, summary, scores)


def evolve(
    cfg: EvolutionConfig,
    initial: Optional[Population] = None,
    workers: int = 1,
    on_generation: Optional[Callable[[GenerationSummary], None]] = None,
) -> Tuple[Population, List[GenerationSummary]]:
    """Run cfg.generations generations from `initial` (or a fresh population)."""
    if initial is None:
        pop = random_population(cfg)
    elif initial.rng_seed != cfg.seed and cfg.generations > 0:
        # descendant run: keep the genomes and counters, draw from the new seed
        pop = initial.model_copy(update={"rng_seed": cfg.seed})
    else:
        pop = initial
    expected = genome_length(cfg.trial.network.n)
    if any(len(member.genes) != expected for member in pop.members):
        raise ConfigError(
            f"population genomes do not match a {cfg.trial.network.n}-neuron network"
        )
    if pop.size != cfg.population_size:
        logger.info(
            "population has %d members; config asks for %d, keeping %d",
            pop.size,
            cfg.population_size,
            pop.size,
        )

    logger.info(
        "evolving %d members for %d generations from generation %d",
        pop.size,
        cfg.generations,
        pop.generation,
    )
    history: List[GenerationSummary] = []
    for _ in range(cfg.generations):
        report = run_generation(pop, cfg, workers)
        pop = report.population
        history.append(report.summary)
        if on_generation is not None:
            on_generation(report.summary)

    if history:
        logger.info("finished at generation %d, best %.4f", pop.generation, history[-1].best)
    return pop, history


def rank_members(
    pop: Population,
    trial: TrialConfig,
    lights: Sequence[LightPosition],
    chunk_size: int = 10,
    workers: int = 1,
) -> np.ndarray:
    """Mean cost of every member over `lights`."""
    scores = evaluate_population(pop.genes(), lights, trial, chunk_size, workers)
    return combine_scores(scores)


def select_best(
    pop: Population,
    trial: TrialConfig,
    lights: Sequence[LightPosition],
    chunk_size: int = 10,
    workers: int = 1,
) -> Tuple[NetworkGenome, float]:
    """Lowest mean cost; ties go to the earlier member."""
    costs = rank_members(pop, trial, lights, chunk_size, workers)
    index = int(np.argmin(costs))
    return pop.members[index], float(costs[index])
