import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipiring.gan import Genome
from lipiring.mixture import MixtureModel, es_one_plus_one, frechet_fitness, normalize_weights, sample_mixture
from lipiring.nn import Activation, LayerSpec, Network, forward, init_network, mlp_specs


def const_generator(value, latent=2):
    # zero weights, bias = value: every sample equals ``value``
    return Genome(Network((LayerSpec(latent, 1, Activation.IDENTITY),), np.array([0.0] * latent + [value])), 1e-3)


def test_normalize_examples():
    assert normalize_weights([1]).tolist() == [1.0]
    assert normalize_weights([2, 2]).tolist() == [0.5, 0.5]
    assert normalize_weights([1, 3]).tolist() == [0.25, 0.75]


def test_normalize_errors():
    with pytest.raises(ValueError):
        normalize_weights([0, 0])
    with pytest.raises(ValueError):
        normalize_weights([1, -1])


def test_model_defaults_uniform_and_validates():
    m = MixtureModel([const_generator(0.0), const_generator(1.0)])
    assert m.weights.tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        MixtureModel([const_generator(0.0)], np.array([0.5]))


def test_sample_single_component():
    m = MixtureModel([const_generator(0.0), const_generator(1.0)], np.array([1.0, 0.0]))
    x = sample_mixture(m, 500, np.random.default_rng(0))
    assert np.all(x == 0.0)


def test_sample_counts_binomial():
    m = MixtureModel([const_generator(0.0), const_generator(1.0)], np.array([0.5, 0.5]))
    x = sample_mixture(m, 10_000, np.random.default_rng(1))
    ones = int((x == 1.0).sum())
    assert abs(ones - 5000) <= 3 * np.sqrt(10_000 * 0.25)


def test_single_generator_equals_direct_sampling():
    g = Genome(init_network(mlp_specs([3, 4, 2], "tanh", "identity"), 0), 1e-3)
    rng = np.random.default_rng(7)
    x = sample_mixture(MixtureModel([g]), 100, rng)
    rng = np.random.default_rng(7)
    rng.uniform(size=100)  # component draws
    z = rng.uniform(-1, 1, size=(100, 3))
    assert np.array_equal(x, forward(g.network, z))


def quadratic(target):
    target = np.asarray(target)
    return lambda w: float(np.sum((w - target) ** 2))


def test_es_zero_iterations_identity():
    m = MixtureModel([const_generator(0.0), const_generator(1.0)])
    assert es_one_plus_one(m, quadratic([0.7, 0.3]), iterations=0) is m


def test_es_quadratic_convergence_all_seeds():
    gens = [const_generator(0.0), const_generator(1.0)]
    for seed in range(20):
        out = es_one_plus_one(MixtureModel(gens), quadratic([0.7, 0.3]), 500, 0.05, np.random.default_rng(seed))
        assert out.fitness < 1e-3


def test_es_constant_fitness_never_increases():
    hist = []
    out = es_one_plus_one(MixtureModel([const_generator(0.0)] * 3), lambda w: 1.0, 100, 0.05,
                          np.random.default_rng(0), history=hist)
    assert all(h == 1.0 for h in hist)
    assert out.fitness == 1.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_es_elitism_and_simplex(seed, k):
    rng = np.random.default_rng(seed)
    target = rng.dirichlet(np.ones(k))
    seen = []

    def fitness(w):
        seen.append(w.copy())
        return quadratic(target)(w)

    hist = []
    gens = [const_generator(float(i)) for i in range(k)]
    start = MixtureModel(gens)
    out = es_one_plus_one(start, fitness, 100, 0.1, rng, history=hist)
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert hist[-1] == out.fitness <= fitness(start.weights)
    for w in seen + [out.weights]:
        assert abs(w.sum() - 1.0) < 1e-12 and np.all(w >= 0)


def test_frechet_fitness_deterministic_and_prefers_matching_mix():
    gens = [const_generator(0.0), const_generator(1.0)]
    reference = np.random.default_rng(0).normal(1.0, 0.1, size=(500, 1))
    f = frechet_fitness(gens, reference, 400, np.random.default_rng(1))
    assert f(np.array([0.2, 0.8])) == f(np.array([0.2, 0.8]))
    assert f(np.array([0.0, 1.0])) < f(np.array([1.0, 0.0]))
