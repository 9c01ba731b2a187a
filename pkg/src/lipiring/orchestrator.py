"""Population lifecycle over a spatial topology.

Each generation every cell copies its neighbors' centers into a
sub-population, runs one coevolutionary generation on it and publishes the
new center. Afterwards every cell fits mixture weights over its final
neighborhood and the cell with the best mixture is returned.

Two execution modes exist. ``sequential`` visits cells in index order and all
of them read the centers published at the start of the generation, which
makes runs reproducible bit for bit. ``async`` runs one thread per cell; a
cell reads whatever its neighbors have published most recently and nobody
waits for anybody.

Random streams are derived from ``(seed, stream, generation, cell)``, never
from a shared generator, so results do not depend on visiting order and a
run resumed from a checkpoint continues exactly as the uninterrupted one.
"""

from __future__ import annotations

import functools
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import topology as topo
from .coevolution import Neighborhood, PairEvaluator, coev_generation, evaluate_all_pairs, generator_scores
from .config import ExecutionMode, ExperimentConfig
from .data import GaussianMixture, batch_iterator, sample_real, training_set
from .gan import GanPair, Genome
from .metrics import frechet_score, genome_l2_matrix, mode_tvd
from .mixture import MixtureModel, es_one_plus_one, frechet_fitness
from .nn import AdamState, forward, init_network

METRICS_SCHEMA_VERSION = 1

# random stream tags
_INIT, _DATA, _HELDOUT, _COEV, _METRICS, _MIXTURE = range(6)


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([seed, *keys])


@dataclass
class Population:
    centers: list[GanPair]
    generation: int = 0

    @property
    def size(self) -> int:
        return len(self.centers)

    def generator_params(self) -> list[np.ndarray]:
        return [p.generator.params for p in self.centers]

    def copy(self) -> "Population":
        return Population([p.copy() for p in self.centers], self.generation)


@dataclass
class MetricsLog:
    records: list[dict] = field(default_factory=list)
    # wall-clock timings kept apart from records so sequential logs stay reproducible
    timings: list[dict] = field(default_factory=list)


@dataclass
class Experiment:
    """Per-run fixed material derived from a config: data, reference samples, specs."""

    cfg: ExperimentConfig
    dataset: np.ndarray
    reference: np.ndarray
    metric_latent: np.ndarray
    modes: np.ndarray | None


@functools.lru_cache(maxsize=32)
def experiment(cfg: ExperimentConfig) -> Experiment:
    seed = cfg.seed
    src = cfg.data.source
    return Experiment(
        cfg=cfg,
        dataset=training_set(cfg.data, stream(seed, _DATA)),
        reference=sample_real(cfg.data, cfg.metrics.samples, stream(seed, _HELDOUT)),
        metric_latent=stream(seed, _METRICS).uniform(-1.0, 1.0, size=(cfg.metrics.samples, cfg.network.latent_dim)),
        modes=src.center_array if isinstance(src, GaussianMixture) else None,
    )


def run_id(cfg: ExperimentConfig) -> str:
    return f"{topo.describe(cfg.topology)}-seed{cfg.seed}"


def initialize(cfg: ExperimentConfig) -> Population:
    if cfg.seed < 0:
        raise ValueError("seed must be >= 0")
    g_specs, d_specs = cfg.generator_specs(), cfg.discriminator_specs()
    opt = cfg.optimizer

    def genome(specs, rng):
        net = init_network(specs, rng)
        adam = AdamState.zeros(net.params.size, beta1=opt.beta1, beta2=opt.beta2, epsilon=opt.epsilon)
        return Genome(net, cfg.learning_rate, adam)

    centers = []
    for cell in range(cfg.population_size):
        rng = stream(cfg.seed, _INIT, cell)
        centers.append(GanPair(genome(g_specs, rng), genome(d_specs, rng)))
    return Population(centers, 0)


def copy_neighbours(pop: Population | list[GanPair], t: topo.Topology, cell: int) -> Neighborhood:
    """Snapshot of ``cell``'s sub-population: own center first, then neighbor centers."""
    centers = pop.centers if isinstance(pop, Population) else pop
    pairs = [centers[c] for c in topo.neighbors(t, cell)]
    return Neighborhood([p.generator.copy() for p in pairs], [p.discriminator.copy() for p in pairs])


def train_cell(n: Neighborhood, cfg: ExperimentConfig, cell: int, generation: int,
               pair_evaluator: PairEvaluator = evaluate_all_pairs) -> Neighborhood:
    """Run one coevolutionary generation for ``cell``; ``generation`` is 0-based."""
    exp = experiment(cfg)
    rng = stream(cfg.seed, _COEV, generation, cell)
    batches = list(batch_iterator(exp.dataset, cfg.data.batch_size, rng))
    eval_batch = batches[int(rng.integers(len(batches)))]
    return coev_generation(n, batches, cfg.coev, cfg.loss, rng, cfg.network.latent_dim,
                           eval_batch=eval_batch, pair_evaluator=pair_evaluator)


def _center(n: Neighborhood) -> GanPair:
    return GanPair(n.generators[0], n.discriminators[0])


def cell_record(cfg: ExperimentConfig, centers: list[GanPair], cell: int, generation: int,
                best_fitness: float | None, l2: np.ndarray | None = None) -> dict:
    exp = experiment(cfg)
    g = centers[cell].generator
    samples = forward(g.network, exp.metric_latent)
    if l2 is None:
        l2 = genome_l2_matrix([p.generator.params for p in centers])
    others = np.delete(l2[cell], cell)
    return {
        "schema_version": METRICS_SCHEMA_VERSION,
        "run_id": run_id(cfg),
        "generation": generation,
        "cell": cell,
        "wall_clock_ms": None,
        "best_fitness": best_fitness,
        "frechet": frechet_score(samples, exp.reference),
        "tvd": None if exp.modes is None else mode_tvd(samples, exp.modes, cfg.metrics.threshold),
        "mean_l2_diversity": float(others.mean()) if others.size else 0.0,
        "learning_rate": g.learning_rate,
    }


RecordSink = Callable[[dict], None]


class _Clock:
    def __init__(self):
        self.start = time.perf_counter()

    def ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0


def run_generation(pop: Population, cfg: ExperimentConfig,
                   pair_evaluator: PairEvaluator = evaluate_all_pairs) -> Population:
    """Advance every cell by one generation and return the new population."""
    return _run_generation(pop, cfg, pair_evaluator)[0]


def _run_generation(pop, cfg, pair_evaluator):
    t = cfg.topology
    gen = pop.generation
    if cfg.execution_mode is ExecutionMode.SEQUENTIAL:
        snapshot = pop.centers
        outs = [train_cell(copy_neighbours(snapshot, t, c), cfg, c, gen, pair_evaluator)
                for c in range(pop.size)]
        return Population([_center(n) for n in outs], gen + 1), outs
    box = _Mailbox(pop.centers)

    def work(c):
        n = train_cell(box.neighborhood(t, c), cfg, c, gen, pair_evaluator)
        box.publish(c, _center(n))
        return n

    with ThreadPoolExecutor(max_workers=pop.size) as pool:
        outs = list(pool.map(work, range(pop.size)))
    return Population(box.centers(), gen + 1), outs


class _Mailbox:
    """Latest published center per cell. Entries are replaced, never mutated."""

    def __init__(self, centers):
        self._centers = list(centers)
        self._lock = threading.Lock()

    def publish(self, cell: int, pair: GanPair) -> None:
        with self._lock:
            self._centers[cell] = pair

    def centers(self) -> list[GanPair]:
        with self._lock:
            return list(self._centers)

    def neighborhood(self, t, cell: int) -> Neighborhood:
        return copy_neighbours(self.centers(), t, cell)


def _deadline(cfg: ExperimentConfig) -> float | None:
    if cfg.stop.kind == "wall_clock":
        return time.perf_counter() + cfg.stop.seconds
    return None


def _keep_going(cfg: ExperimentConfig, generation: int, deadline: float | None) -> bool:
    if deadline is not None:
        return time.perf_counter() < deadline
    return generation < cfg.generations


def run_training(cfg: ExperimentConfig, population: Population | None = None,
                 on_record: RecordSink | None = None,
                 pair_evaluator: PairEvaluator = evaluate_all_pairs,
                 on_generation: Callable[[Population], None] | None = None,
                 ) -> tuple[Population, MixtureModel, MetricsLog]:
    """Train until the stop condition, then fit mixtures and return the best cell's.

    With an epoch stop the run ends once ``cfg.generations`` generations have
    been completed in total, so a population resumed from a checkpoint only
    runs the remainder. A wall-clock stop lets in-flight generations finish.
    ``on_generation`` sees the population after each sequential generation;
    in async mode cells have no common generation, so it is not called.
    """
    log = MetricsLog()
    lock = threading.Lock()
    clock = _Clock()
    sequential = cfg.execution_mode is ExecutionMode.SEQUENTIAL

    def emit(record: dict) -> None:
        elapsed = clock.ms()
        timing = {"run_id": record["run_id"], "generation": record["generation"],
                  "cell": record["cell"], "wall_clock_ms": elapsed}
        if not sequential:
            record["wall_clock_ms"] = elapsed
        with lock:
            log.records.append(record)
            log.timings.append(timing)
            if on_record is not None:
                on_record(record)

    pop = initialize(cfg) if population is None else population.copy()
    deadline = _deadline(cfg)
    if pop.generation == 0:
        l2 = genome_l2_matrix(pop.generator_params())
        for c in range(pop.size):
            emit(cell_record(cfg, pop.centers, c, 0, None, l2))

    if sequential:
        while _keep_going(cfg, pop.generation, deadline):
            pop, outs = _run_generation(pop, cfg, pair_evaluator)
            l2 = genome_l2_matrix(pop.generator_params())
            for c, n in enumerate(outs):
                best = float(generator_scores(n.fitness)[0]) if n.fitness is not None else None
                emit(cell_record(cfg, pop.centers, c, pop.generation, best, l2))
            if on_generation is not None:
                on_generation(pop)
    else:
        pop = _run_async(pop, cfg, deadline, emit, pair_evaluator)

    mixture = best_mixture(pop, cfg)
    return pop, mixture, log


def _run_async(pop: Population, cfg: ExperimentConfig, deadline, emit, pair_evaluator) -> Population:
    box = _Mailbox(pop.centers)
    t = cfg.topology

    def worker(cell: int) -> int:
        gen = pop.generation
        while _keep_going(cfg, gen, deadline):
            n = train_cell(box.neighborhood(t, cell), cfg, cell, gen, pair_evaluator)
            box.publish(cell, _center(n))
            gen += 1
            best = float(generator_scores(n.fitness)[0])
            emit(cell_record(cfg, box.centers(), cell, gen, best))
        return gen

    with ThreadPoolExecutor(max_workers=pop.size) as pool:
        finished = list(pool.map(worker, range(pop.size)))
    return Population(box.centers(), min(finished))


def cell_mixture(pop: Population, cfg: ExperimentConfig, cell: int) -> MixtureModel:
    exp = experiment(cfg)
    n = copy_neighbours(pop, cfg.topology, cell)
    fitness = frechet_fitness(n.generators, exp.reference, cfg.mixture.samples,
                              stream(cfg.seed, _MIXTURE, cell, 0))
    start = MixtureModel(n.generators)
    return es_one_plus_one(start, fitness, cfg.mixture.iterations, cfg.mixture.step_sigma,
                           stream(cfg.seed, _MIXTURE, cell, 1))


def best_mixture(pop: Population, cfg: ExperimentConfig) -> MixtureModel:
    """ES-tuned mixture of every cell; the lowest-fitness one wins, first cell on ties."""
    best = None
    for cell in range(pop.size):
        m = cell_mixture(pop, cfg, cell)
        if m.fitness is None:
            fitness = frechet_fitness(m.generators, experiment(cfg).reference, cfg.mixture.samples,
                                      stream(cfg.seed, _MIXTURE, cell, 0))
            m.fitness = fitness(m.weights)
        m.cell = cell
        if best is None or m.fitness < best.fitness:
            best = m
    return best
