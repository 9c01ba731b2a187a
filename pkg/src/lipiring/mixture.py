"""Generator ensembles with simplex weights tuned by a (1+1)-ES."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .gan import Genome
from .metrics import frechet_score
from .nn import forward

SUCCESS_WINDOW = 10
STEP_FACTOR = 1.22


def normalize_weights(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    if np.any(raw < 0) or not np.any(raw > 0):
        raise ValueError("weights must be non-negative with at least one positive entry")
    return raw / raw.sum()


@dataclass
class MixtureModel:
    generators: list[Genome]
    weights: np.ndarray = field(default=None)
    fitness: float | None = None
    # cell the generators were taken from, when built by the orchestrator
    cell: int | None = None

    def __post_init__(self):
        if not self.generators:
            raise ValueError("mixture needs at least one generator")
        if self.weights is None:
            self.weights = np.full(len(self.generators), 1.0 / len(self.generators))
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(self.generators),):
            raise ValueError("one weight per generator")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must lie on the probability simplex")

    @property
    def latent_dim(self) -> int:
        return self.generators[0].network.input_dim


def _pick_components(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(weights) - 1)


def _compose(outputs: list[np.ndarray], components: np.ndarray) -> np.ndarray:
    stacked = np.stack(outputs)  # (k, n, dim)
    return stacked[components, np.arange(len(components))]


def sample_mixture(m: MixtureModel, count: int, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    components = _pick_components(m.weights, rng.uniform(size=count))
    z = rng.uniform(-1.0, 1.0, size=(count, m.latent_dim))
    out = None
    for i in np.unique(components):
        rows = components == i
        x = forward(m.generators[i].network, z[rows])
        if out is None:
            out = np.empty((count, x.shape[1]))
        out[rows] = x
    return out


def frechet_fitness(generators: list[Genome], reference: np.ndarray, n_samples: int,
                    rng: np.random.Generator) -> Callable[[np.ndarray], float]:
    """Fréchet score of the mixture for weights ``w`` against ``reference``.

    Latent draws and component uniforms are frozen up front, so the returned
    function is deterministic in ``w``.
    """
    z = rng.uniform(-1.0, 1.0, size=(n_samples, generators[0].network.input_dim))
    u = rng.uniform(size=n_samples)
    outputs = [forward(g.network, z) for g in generators]

    def fitness(weights: np.ndarray) -> float:
        return frechet_score(_compose(outputs, _pick_components(weights, u)), reference)

    return fitness


def es_one_plus_one(m: MixtureModel, fitness_fn: Callable[[np.ndarray], float], iterations: int = 200,
                    step_sigma: float = 0.05, rng: np.random.Generator | None = None,
                    history: list | None = None) -> MixtureModel:
    """Elitist (1+1)-ES over the mixture weights; lower fitness is better.

    The child replaces the parent when it is no worse. Every ``SUCCESS_WINDOW``
    iterations the step size grows by ``STEP_FACTOR`` if more than a fifth of
    them strictly improved, and shrinks by it otherwise.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0:
        return m
    rng = rng or np.random.default_rng()
    parent = m.weights.copy()
    best = fitness_fn(parent)
    sigma = step_sigma
    successes = 0
    for it in range(1, iterations + 1):
        child = np.clip(parent + rng.normal(0.0, sigma, size=parent.shape), 0.0, None)
        if child.sum() > 0:
            child = child / child.sum()
            f = fitness_fn(child)
            if f < best:
                successes += 1
            if f <= best:
                parent, best = child, f
        if history is not None:
            history.append(best)
        if it % SUCCESS_WINDOW == 0:
            sigma = sigma * STEP_FACTOR if successes / SUCCESS_WINDOW > 0.2 else sigma / STEP_FACTOR
            successes = 0
    return MixtureModel(list(m.generators), parent, best, m.cell)
