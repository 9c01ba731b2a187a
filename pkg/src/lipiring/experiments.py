"""Reusable experiment harnesses: the desk benchmark, marker takeover and timing.

The desk benchmark is a ring of 6 cells (r=1) learning the 8-Gaussian ring
in 2D with small tanh MLPs for 300 generations of batch 100. Its training
knobs (learning rate, Adam beta1, training-set size, generator objective) were
tuned on seeds 0..7; ``HELD_OUT_SEEDS`` were not looked at during tuning.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .gan import GanPair, Genome
from .metrics import mode_histogram, mode_tvd
from .mixture import MixtureModel, sample_mixture
from .nn import Network
from .orchestrator import Population, initialize, run_generation, run_training, stream
from .topology import Grid, Ring

DESK_SETTINGS = {
    "topology": {"kind": "ring", "size": 6, "radius": 1},
    "generations": 300,
    "data": {"kind": "gaussian_mixture", "modes": 8, "radius": 1.0, "sigma": 0.05,
             "batch_size": 100, "dataset_size": 2000},
    "network": {"latent_dim": 8, "generator_hidden": [32, 32], "discriminator_hidden": [32, 32]},
    "learning_rate": 0.0005,
    "optimizer": {"beta1": 0.5},
    "loss": {"generator_objective": "non_saturating"},
}
QUALITY_SAMPLES = 5000
HELD_OUT_SEEDS = tuple(range(1000, 1010))
# stream tag for evaluation draws; kept clear of the orchestrator's tags
_EVAL = 100


def desk_config(seed: int = 0, **changes) -> ExperimentConfig:
    return ExperimentConfig().replace(**DESK_SETTINGS).replace(seed=seed, **changes)


@dataclass
class MixtureQuality:
    covered_modes: int
    high_quality_fraction: float
    tvd: float

    def passes(self, min_modes: int = 6, min_quality: float = 0.7) -> bool:
        return self.covered_modes >= min_modes and self.high_quality_fraction >= min_quality


def mixture_quality(m: MixtureModel, cfg: ExperimentConfig, n: int = QUALITY_SAMPLES) -> MixtureQuality:
    modes = cfg.data.source.center_array
    x = sample_mixture(m, n, stream(cfg.seed, _EVAL))
    h = mode_histogram(x, modes, cfg.metrics.threshold)
    return MixtureQuality(h.covered_modes, h.high_quality_fraction, mode_tvd(x, modes, cfg.metrics.threshold))


@dataclass
class RunSummary:
    cfg: ExperimentConfig
    quality: MixtureQuality
    mixture_fitness: float
    # population mean pairwise generator L2 per generation
    diversity: dict[int, float] = field(default_factory=dict)
    final_median_frechet: float = float("nan")
    seconds: float = 0.0


def summarize(cfg: ExperimentConfig) -> RunSummary:
    """Run ``cfg`` to completion and reduce it to the numbers the benchmarks need."""
    start = time.perf_counter()
    _, mixture, log = run_training(cfg)
    elapsed = time.perf_counter() - start
    per_gen: dict[int, list[float]] = {}
    for r in log.records:
        per_gen.setdefault(r["generation"], []).append(r["mean_l2_diversity"])
    final = [r["frechet"] for r in log.records if r["generation"] == cfg.generations]
    return RunSummary(
        cfg=cfg,
        quality=mixture_quality(mixture, cfg),
        mixture_fitness=float(mixture.fitness),
        # per-cell means over equally many partners average to the off-diagonal mean
        diversity={g: float(np.mean(v)) for g, v in per_gen.items()},
        final_median_frechet=statistics.median(final) if final else float("nan"),
        seconds=elapsed,
    )


# --- marker takeover ------------------------------------------------------------

MARKER_BIAS = 12345.0


def is_marker(g: Genome) -> bool:
    return g.params[-1] == MARKER_BIAS


def marker_evaluator(generators, discriminators, eval_batch, latent_batch, cfg):
    """Fitness that ranks exact marker copies first and everything else equal."""
    rows = np.array([-1.0 if is_marker(g) else 0.0 for g in generators])
    return np.repeat(rows[:, None], len(discriminators), axis=1)


def plant_marker(pop: Population, cell: int = 0) -> Population:
    pop = pop.copy()
    g = pop.centers[cell].generator
    params = g.params.copy()
    params[-1] = MARKER_BIAS
    pop.centers[cell] = GanPair(Genome(Network(g.network.layers, params), g.learning_rate, g.adam.copy()),
                                pop.centers[cell].discriminator)
    return pop


def marker_takeover(topology: Grid | Ring, max_generations: int = 50, seed: int = 0) -> tuple[int, list[int]]:
    """Generations until every cell's center is the marker, plus the per-generation counts."""
    cfg = ExperimentConfig().replace(
        topology=_topology_dict(topology), seed=seed,
        data={"kind": "gaussian_mixture", "dataset_size": 20, "batch_size": 10},
        network={"latent_dim": 2, "generator_hidden": [4], "discriminator_hidden": [4]},
        coev={"mutation_probability": 0.0},
    )
    pop = plant_marker(initialize(cfg))
    counts = [_marked(pop)]
    while counts[-1] < pop.size:
        if pop.generation >= max_generations:
            raise RuntimeError(f"marker did not take over within {max_generations} generations")
        pop = run_generation(pop, cfg, marker_evaluator)
        counts.append(_marked(pop))
    return pop.generation, counts


def _marked(pop: Population) -> int:
    return sum(int(is_marker(p.generator)) for p in pop.centers)


def _topology_dict(t: Grid | Ring) -> dict:
    if isinstance(t, Ring):
        return {"kind": "ring", "size": t.size, "radius": t.radius}
    return {"kind": "grid", "rows": t.rows, "cols": t.cols}


# --- timing ------------------------------------------------------------------------

def timed_run(cfg: ExperimentConfig) -> float:
    """Total wall-clock seconds of ``run_training``, mixture step included."""
    start = time.perf_counter()
    run_training(cfg)
    return time.perf_counter() - start
