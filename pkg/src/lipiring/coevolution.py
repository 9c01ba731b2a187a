"""One generation of coevolutionary GAN training inside a single cell."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .gan import DEFAULT_LOSS, Genome, LossConfig, evaluate_pair, train_discriminator_step, train_generator_step

LR_FLOOR = 1e-8
LR_CEIL = 1.0


@dataclass
class Neighborhood:
    """Sub-population of a cell; index 0 is the cell's own center pair."""

    generators: list[Genome]
    discriminators: list[Genome]
    # fitness matrix from the last evaluation, rows/cols in list order
    fitness: np.ndarray | None = None

    def __post_init__(self):
        if not self.generators or len(self.generators) != len(self.discriminators):
            raise ValueError("neighborhood needs equally many (>= 1) generators and discriminators")

    @property
    def size(self) -> int:
        return len(self.generators)

    def copy(self) -> "Neighborhood":
        return Neighborhood([g.copy() for g in self.generators], [d.copy() for d in self.discriminators])


@dataclass(frozen=True)
class CoevParams:
    tournament_size: int = 2
    mutation_probability: float = 0.5
    mutation_scale: float = 1e-4
    disc_skip: int = 1

    def __post_init__(self):
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if not 0.0 <= self.mutation_probability <= 1.0:
            raise ValueError("mutation_probability must lie in [0, 1]")
        if self.mutation_scale < 0:
            raise ValueError("mutation_scale must be >= 0")
        if self.disc_skip < 1:
            raise ValueError("disc_skip must be >= 1")


PairEvaluator = Callable[[Sequence[Genome], Sequence[Genome], np.ndarray, np.ndarray, LossConfig], np.ndarray]


def evaluate_all_pairs(generators, discriminators, eval_batch, latent_batch,
                       cfg: LossConfig = DEFAULT_LOSS) -> np.ndarray:
    """All-vs-all fitness matrix; entry (i, j) is L(generator i, discriminator j)."""
    if isinstance(generators, Neighborhood):
        generators, discriminators = generators.generators, generators.discriminators
    out = np.empty((len(generators), len(discriminators)))
    for i, g in enumerate(generators):
        for j, d in enumerate(discriminators):
            out[i, j] = evaluate_pair(g, d, eval_batch, latent_batch, cfg)
    return out


def generator_scores(f: np.ndarray) -> np.ndarray:
    return f.mean(axis=1)


def discriminator_scores(f: np.ndarray) -> np.ndarray:
    return f.mean(axis=0)


def _tournament(scores: np.ndarray, tau: int, rng: np.random.Generator, lower_is_better: bool) -> int:
    candidates = np.sort(rng.choice(len(scores), size=tau, replace=False))
    vals = scores[candidates] if lower_is_better else -scores[candidates]
    # argmin returns the first minimum, i.e. the lowest index on ties
    return int(candidates[np.argmin(vals)])


def tournament_select(f: np.ndarray, tau: int, rng: np.random.Generator) -> tuple[int, int]:
    s_g, s_d = f.shape
    if tau > min(s_g, s_d):
        raise ValueError(f"tournament size {tau} exceeds sub-population size {min(s_g, s_d)}")
    g = _tournament(generator_scores(f), tau, rng, lower_is_better=True)
    d = _tournament(discriminator_scores(f), tau, rng, lower_is_better=False)
    return g, d


def mutate_learning_rate(lr: float, probability: float, scale: float, rng: np.random.Generator) -> float:
    if not lr > 0:
        raise ValueError("learning rate must be > 0")
    if rng.uniform() >= probability:
        return lr
    return float(np.clip(lr + rng.normal(0.0, scale), LR_FLOOR, LR_CEIL))


def _with_lr(genome: Genome, lr: float) -> Genome:
    if lr == genome.learning_rate:
        return genome
    return Genome(genome.network, lr, genome.adam)


def coev_generation(n: Neighborhood, batches: Sequence[np.ndarray], params: CoevParams,
                    cfg: LossConfig, rng: np.random.Generator, latent_dim: int | None = None,
                    eval_batch: np.ndarray | None = None,
                    pair_evaluator: PairEvaluator = evaluate_all_pairs) -> Neighborhood:
    """Evaluate, select, train offspring over every batch, replace, recenter.

    ``eval_batch`` defaults to one of ``batches`` picked at random; it is the
    single batch used for both evaluation passes. The returned neighborhood
    has the same size as ``n`` with the best generator and discriminator at
    index 0. The input neighborhood is not modified.
    """
    latent_dim = latent_dim or n.generators[0].network.input_dim
    if eval_batch is None:
        if not batches:
            raise ValueError("need an evaluation batch or at least one training batch")
        eval_batch = batches[int(rng.integers(len(batches)))]
    eval_latent = rng.uniform(-1.0, 1.0, size=(len(eval_batch), latent_dim))
    gens, discs = list(n.generators), list(n.discriminators)
    s = len(gens)

    fitness = pair_evaluator(gens, discs, eval_batch, eval_latent, cfg)
    gi, di = tournament_select(fitness, min(params.tournament_size, s), rng)
    g_b, d_b = gens[gi], discs[di]
    # opponent pools; the selected slots follow the offspring while it trains
    gen_pool, disc_pool = list(gens), list(discs)

    for k, batch in enumerate(batches):
        g_b = _with_lr(g_b, mutate_learning_rate(g_b.learning_rate, params.mutation_probability,
                                                 params.mutation_scale, rng))
        d_b = _with_lr(d_b, mutate_learning_rate(d_b.learning_rate, params.mutation_probability,
                                                 params.mutation_scale, rng))
        disc_pool[di] = d_b
        opponent = disc_pool[int(rng.integers(s))]
        z = rng.uniform(-1.0, 1.0, size=(len(batch), latent_dim))
        g_b = train_generator_step(g_b, opponent, z, cfg)
        gen_pool[gi] = g_b
        opponent = gen_pool[int(rng.integers(s))]
        if k % params.disc_skip == 0:
            z = rng.uniform(-1.0, 1.0, size=(len(batch), latent_dim))
            d_b = train_discriminator_step(d_b, opponent, batch, z, cfg)

    gens.append(g_b)
    discs.append(d_b)
    fitness = pair_evaluator(gens, discs, eval_batch, eval_latent, cfg)

    # drop the worst of each population; on ties drop the later entry
    g_scores, d_scores = generator_scores(fitness), discriminator_scores(fitness)
    worst_g = len(g_scores) - 1 - int(np.argmax(g_scores[::-1]))
    worst_d = len(d_scores) - 1 - int(np.argmin(d_scores[::-1]))
    keep_g = [i for i in range(s + 1) if i != worst_g]
    keep_d = [j for j in range(s + 1) if j != worst_d]
    fitness = fitness[np.ix_(keep_g, keep_d)]
    gens = [gens[i] for i in keep_g]
    discs = [discs[j] for j in keep_d]

    best_g = int(np.argmin(generator_scores(fitness)))
    best_d = int(np.argmax(discriminator_scores(fitness)))
    g_order = [best_g] + [i for i in range(s) if i != best_g]
    d_order = [best_d] + [j for j in range(s) if j != best_d]
    return Neighborhood([gens[i] for i in g_order], [discs[j] for j in d_order],
                        fitness[np.ix_(g_order, d_order)])
