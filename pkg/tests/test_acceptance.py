"""End-to-end acceptance checks, one test per criterion.

Criteria 4, 6 and 7 train about fifty desk-benchmark runs and take the
better part of an hour on one core; the runs are shared through a cache.
Each test records a one-line verdict that is printed in the terminal summary.
"""

import functools
import math
import statistics
import time

import numpy as np

from lipiring import checkpoint as ckpt
from lipiring.config import ExperimentConfig
from lipiring.data import IdxFormatError, load_idx
from lipiring.experiments import HELD_OUT_SEEDS, desk_config, marker_takeover, summarize, timed_run
from lipiring.gan import gan_loss
from lipiring.metrics import frechet_score, genome_l2_matrix, tvd
from lipiring.mixture import MixtureModel, es_one_plus_one
from lipiring.nn import Activation, LayerSpec, backward, init_network
from lipiring.orchestrator import run_training
from lipiring.topology import Grid, Ring, neighbors, subpopulation_size, takeover_time

from test_mixture import const_generator, quadratic
from test_nn import max_rel_error, numeric_grad


def verdict(acceptance, number, ok, detail):
    acceptance[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


@functools.lru_cache(maxsize=None)
def desk_run(seed, size=6, radius=1):
    return summarize(desk_config(seed, topology={"kind": "ring", "size": size, "radius": radius}))


def test_criterion_1_topology(acceptance):
    start = time.perf_counter()
    g = Grid(4, 4)
    ok = (
        {g.coords(c) for c in neighbors(g, g.index(1, 1))[1:]} == {(0, 1), (2, 1), (1, 0), (1, 2)}
        and set(neighbors(Ring(6, 1), 0)[1:]) == {5, 1}
        and set(neighbors(Ring(6, 2), 0)[1:]) == {4, 5, 1, 2}
        and subpopulation_size(Ring(6, 1)) == 3
        and subpopulation_size(Ring(6, 2)) == 5
        and subpopulation_size(Grid(3, 3)) == 5
    )
    elapsed = time.perf_counter() - start
    verdict(acceptance, 1, ok and elapsed < 1.0, f"neighbors and s exact, {elapsed * 1000:.1f} ms")


def test_criterion_2_numeric_core(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    acts = list(Activation)
    for _ in range(100):
        depth = int(rng.integers(1, 4))
        dims = rng.integers(1, 6, size=depth + 1)
        specs = [LayerSpec(int(dims[i]), int(dims[i + 1]), acts[int(rng.integers(3))]) for i in range(depth)]
        net = init_network(specs, rng)
        x = rng.uniform(-1, 1, size=(4, specs[0].input_dim))
        og = rng.normal(size=(4, specs[-1].output_dim))
        worst = max(worst, max_rel_error(backward(net, x, og), numeric_grad(net, x, og)))
    loss_err = abs(gan_loss([0.5] * 16, [0.5] * 16) + 2 * math.log(2))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and loss_err <= 1e-9 and elapsed < 30
    verdict(acceptance, 2, ok, f"max rel err {worst:.2e}, |loss + 2ln2| {loss_err:.1e}, {elapsed:.1f} s")


def test_criterion_3_propagation(acceptance):
    start = time.perf_counter()
    cases = [(Ring(6, 1), 3), (Ring(6, 2), 2), (Grid(3, 3), 2)]
    got = [marker_takeover(t)[0] for t, _ in cases]
    elapsed = time.perf_counter() - start
    ok = all(g == want == takeover_time(t) for g, (t, want) in zip(got, cases)) and elapsed < 60
    verdict(acceptance, 3, ok, f"takeover {got} vs expected [3, 2, 2], {elapsed:.1f} s")


def test_criterion_4_desk_quality(acceptance):
    runs = [desk_run(s) for s in HELD_OUT_SEEDS]
    passing = [r.quality.passes() and r.quality.tvd < 0.3 for r in runs]
    slowest = max(r.seconds for r in runs)
    detail = ", ".join(f"{r.quality.covered_modes}/{r.quality.high_quality_fraction:.2f}/{r.quality.tvd:.2f}"
                       for r in runs)
    ok = sum(passing) >= 8 and slowest < 600
    verdict(acceptance, 4, ok, f"{sum(passing)}/10 seeds pass (modes/hq/tvd: {detail}); slowest {slowest:.0f} s")


def test_criterion_5_time_saving(acceptance):
    base = dict(generations=30, execution_mode="async")
    grid = desk_config(0, topology={"kind": "grid", "rows": 3, "cols": 3}, **base)
    ring = desk_config(0, topology={"kind": "ring", "size": 9, "radius": 1}, **base)
    grid_t, ring_t = [], []
    for _ in range(5):
        grid_t.append(timed_run(grid))
        ring_t.append(timed_run(ring))
    g, r = statistics.median(grid_t), statistics.median(ring_t)
    excess = 100 * (g - r) / r
    verdict(acceptance, 5, excess >= 10, f"grid 3x3 {g:.2f} s vs ring Z=9 {r:.2f} s: +{excess:.1f}%")


def test_criterion_6_diversity(acceptance):
    r1 = [desk_run(s) for s in HELD_OUT_SEEDS]
    r2 = [desk_run(s, radius=2) for s in HELD_OUT_SEEDS]
    shrink = sum(r.diversity[300] < r.diversity[150] for r in r1)
    wider = sum(a.diversity[300] >= b.diversity[300] for a, b in zip(r1, r2))
    ok = shrink >= 7 and wider >= 7
    verdict(acceptance, 6, ok, f"L2(300) < L2(150) in {shrink}/10; r=1 >= r=2 at 300 in {wider}/10")


def test_criterion_7_scaling(acceptance):
    sizes = (2, 4, 6, 9)
    medians = [statistics.median(desk_run(s, size=z).mixture_fitness for s in HELD_OUT_SEEDS) for z in sizes]
    ok = all(b <= a * 1.05 for a, b in zip(medians, medians[1:]))
    detail = ", ".join(f"Z={z}: {m:.4f}" for z, m in zip(sizes, medians))
    verdict(acceptance, 7, ok, f"median final Frechet {detail}")


def test_criterion_8_mixture_es(acceptance):
    gens = [const_generator(0.0), const_generator(1.0)]
    finals, elitist = [], True
    for seed in range(20):
        hist = []
        out = es_one_plus_one(MixtureModel(gens), quadratic([0.7, 0.3]), 500, 0.05,
                              np.random.default_rng(seed), history=hist)
        finals.append(out.fitness)
        elitist &= all(b <= a for a, b in zip(hist, hist[1:])) and hist[0] <= quadratic([0.7, 0.3])(np.full(2, 0.5))
    ok = max(finals) < 1e-3 and elitist
    verdict(acceptance, 8, ok, f"worst final fitness {max(finals):.2e} over 20 seeds, elitism {elitist}")


def test_criterion_9_metric_oracles(acceptance):
    rng = np.random.default_rng(9)
    x = rng.normal(size=1000)
    x = (x - x.mean()) / x.std(ddof=1)
    a2 = rng.normal(size=(100_000, 2))
    b2 = rng.normal(size=(100_000, 2)) + [3.0, 4.0]
    vecs = list(rng.normal(size=(4, 50)))
    # correctly rounded per-pair sums; agreement is to the last ulp or two
    brute = np.array([[math.sqrt(math.fsum((p - q) ** 2 for p, q in zip(u, v))) for v in vecs] for u in vecs])
    m = genome_l2_matrix(vecs)
    checks = {
        "tvd p=q": tvd([3, 1], [3, 1]) == 0.0,
        "tvd disjoint": tvd([1, 0], [0, 1]) == 1.0,
        "tvd [3,1]/[1,3]": tvd([3, 1], [1, 3]) == 0.5,
        "frechet identical": frechet_score(a2[:500], a2[:500]) <= 1e-9,
        "frechet 1D shift": abs(frechet_score(x, x + 1) - 1.0) <= 1e-9,
        "frechet 2D shift": abs(frechet_score(a2, b2) - 25.0) <= 0.2,
        "l2 brute force": np.allclose(m, brute, rtol=1e-13, atol=0) and np.array_equal(m, m.T),
    }
    failed = [k for k, v in checks.items() if not v]
    verdict(acceptance, 9, not failed, "all oracles match" if not failed else f"failed: {failed}")


def test_criterion_10_determinism_and_persistence(acceptance, tmp_path):
    cfg = ExperimentConfig().replace(
        topology={"kind": "ring", "size": 6, "radius": 1}, generations=6, seed=3,
        data={"kind": "gaussian_mixture", "dataset_size": 400},
        mixture={"iterations": 20, "samples": 200}, metrics={"samples": 200})
    _, m1, log1 = run_training(cfg)
    _, m2, log2 = run_training(cfg)
    identical = log1.records == log2.records and m1.weights.tobytes() == m2.weights.tobytes()

    part, _, part_log = run_training(cfg.replace(generations=3))
    ckpt.checkpoint_save(part, cfg, tmp_path / "k.bin")
    loaded, loaded_cfg = ckpt.checkpoint_load(tmp_path / "k.bin")
    resumed, m3, res_log = run_training(loaded_cfg, loaded)
    resume_ok = part_log.records + res_log.records == log1.records and m3.weights.tobytes() == m1.weights.tobytes()

    blob = (tmp_path / "k.bin").read_bytes()
    (tmp_path / "cut.bin").write_bytes(blob[: len(blob) - 100])
    try:
        ckpt.checkpoint_load(tmp_path / "cut.bin")
        truncated_ok = False
    except ckpt.CheckpointError:
        truncated_ok = True

    (tmp_path / "bad.idx").write_bytes(b"\x00\x00\x08\x03" + (2).to_bytes(4, "big") * 3 + b"\x00" * 5)
    try:
        load_idx(tmp_path / "bad.idx")
        idx_ok = False
    except IdxFormatError:
        idx_ok = True

    ok = identical and resume_ok and truncated_ok and idx_ok
    verdict(acceptance, 10, ok, f"byte-identical {identical}, resume {resume_ok}, "
                                f"truncated ckpt error {truncated_ok}, malformed IDX error {idx_ok}")
