"""
Genome codec and mutation.

A genome is a flat vector of normalised genes in [0, 1]. Per neuron i the
layout is [tau gene, beta gene, n incoming-weight genes (j -> i)], giving
n * (n + 2) genes in total.
"""

from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.ctrnn import (
    BIAS_BOUND,
    DEFAULT_INPUT_IDS,
    OMEGA_INPUT,
    OMEGA_MAX,
    TAU_MAX,
    TAU_MIN,
    WEIGHT_BOUND,
    NetworkParams,
    centre_crossing_biases,
)
from src.core.errors import ConfigError, GenomeError


class NetworkGenome(BaseModel):
    """Evolvable parameter vector plus bookkeeping."""

    model_config = ConfigDict(frozen=True)

    id: str
    genes: List[float] = Field(min_length=1)
    lineage: Optional[str] = None

    @field_validator("genes")
    @classmethod
    def _genes_in_unit_interval(cls, genes: List[float]) -> List[float]:
        values = np.asarray(genes, dtype=float)
        if not np.all(np.isfinite(values)) or np.any((values < 0) | (values > 1)):
            raise ValueError("genes must lie in [0, 1]")
        return genes

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.genes, dtype=float)


def genome_length(n: int) -> int:
    return n * (n + 2)


def decode_genes(
    genes: np.ndarray,
    n: int,
    *,
    omega_max: float = OMEGA_MAX,
    omega_input: float = OMEGA_INPUT,
    input_ids: Sequence[int] = DEFAULT_INPUT_IDS,
) -> NetworkParams:
    """Linear gene maps for a gene array of shape (..., n*(n+2))."""
    genes = np.asarray(genes, dtype=float)
    if genes.shape[-1] != genome_length(n):
        raise GenomeError(
            f"genome has {genes.shape[-1]} genes, expected {genome_length(n)} for n={n}"
        )
    blocks = genes.reshape(genes.shape[:-1] + (n, n + 2))

    tau = np.clip(TAU_MIN + blocks[..., 0] * (TAU_MAX - TAU_MIN), TAU_MIN, TAU_MAX)
    beta = -BIAS_BOUND + 2.0 * BIAS_BOUND * blocks[..., 1]
    # rows of the block are targets i, columns sources j; params want [j, i]
    incoming = -WEIGHT_BOUND + 2.0 * WEIGHT_BOUND * blocks[..., 2:]
    weights = np.ascontiguousarray(np.swapaxes(incoming, -1, -2))
    weights[..., list(input_ids)] = 0.0

    return NetworkParams(
        tau=tau,
        beta=beta,
        weights=weights,
        omega_max=omega_max,
        omega_input=omega_input,
        input_ids=tuple(input_ids),
    )


def decode(
    genome: NetworkGenome,
    n: int,
    *,
    omega_max: float = OMEGA_MAX,
    omega_input: float = OMEGA_INPUT,
) -> NetworkParams:
    return decode_genes(genome.array, n, omega_max=omega_max, omega_input=omega_input)


def bias_gene(beta: np.ndarray) -> np.ndarray:
    """Inverse of the bias map."""
    return (np.asarray(beta) + BIAS_BOUND) / (2.0 * BIAS_BOUND)


def random_genome(
    rng: np.random.Generator,
    n: int,
    centre_crossing: bool,
    genome_id: str = "m000000",
) -> NetworkGenome:
    """Uniform genes; optionally overwrite bias genes with centre-crossing values."""
    genes = rng.random(genome_length(n))
    if centre_crossing:
        params = decode_genes(genes, n)
        blocks = genes.reshape(n, n + 2)
        blocks[:, 1] = np.clip(bias_gene(centre_crossing_biases(params.weights)), 0, 1)
    return NetworkGenome(id=genome_id, genes=genes.tolist())


def reflect_unit(values: np.ndarray) -> np.ndarray:
    """Fold values back into [0, 1] by reflection at both bounds."""
    folded = np.mod(values, 2.0)
    return np.where(folded > 1.0, 2.0 - folded, folded)


def mutate(
    genome: NetworkGenome,
    rng: np.random.Generator,
    sigma: float,
    rate: float,
    new_id: Optional[str] = None,
) -> NetworkGenome:
    """Per-gene Gaussian perturbation with probability `rate`."""
    if sigma <= 0:
        raise ConfigError("mutation sigma must be positive", key="mutation_sigma")
    if not 0 <= rate <= 1:
        raise ConfigError("mutation rate must lie in [0, 1]", key="mutation_rate")

    genes = genome.array
    mask = rng.random(genes.shape) < rate
    noise = rng.normal(0.0, sigma, genes.shape)
    mutated = np.where(mask, reflect_unit(genes + noise), genes)
    return NetworkGenome(
        id=new_id or genome.id,
        genes=mutated.tolist(),
        lineage=genome.id,
    )
