"""GAN objective and the gradient steps used as mutation.

The objective is the classic minimax value with a log measuring function,
``L(g, d) = E[log D(x)] + E[log(1 - D(G(z)))]``, with probabilities clamped
to ``[eps, 1 - eps]``. The discriminator ascends it. The generator descends it
directly by default (the saturating form); the non-saturating ``-log D(G(z))``
objective is available as an option.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .nn import AdamState, Network, adam_step, backward_from_cache, forward, forward_with_cache


class MeasuringFunction(str, enum.Enum):
    LOG = "log"


class GeneratorObjective(str, enum.Enum):
    MINIMAX = "minimax"  # descend E[log(1 - D(G(z)))]
    NON_SATURATING = "non_saturating"  # ascend E[log D(G(z))]


@dataclass(frozen=True)
class LossConfig:
    measuring_function: MeasuringFunction = MeasuringFunction.LOG
    clamp_epsilon: float = 1e-7
    generator_objective: GeneratorObjective = GeneratorObjective.MINIMAX

    def __post_init__(self):
        object.__setattr__(self, "measuring_function", MeasuringFunction(self.measuring_function))
        object.__setattr__(self, "generator_objective", GeneratorObjective(self.generator_objective))
        if not 0 < self.clamp_epsilon < 0.5:
            raise ValueError(f"clamp_epsilon must lie in (0, 0.5), got {self.clamp_epsilon}")

    @property
    def bound(self) -> float:
        """Largest possible |gan_loss| under clamping."""
        return 2.0 * abs(math.log(self.clamp_epsilon))


@dataclass
class Genome:
    """A network together with its own learning rate and Adam moments."""

    network: Network
    learning_rate: float
    adam: AdamState | None = None

    def __post_init__(self):
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError(f"learning rate must be positive and finite, got {self.learning_rate}")
        if self.adam is None:
            self.adam = AdamState.zeros(self.network.params.size)
        elif self.adam.m.shape != self.network.params.shape:
            raise ValueError("Adam state does not match network size")

    @property
    def params(self) -> np.ndarray:
        return self.network.params

    def copy(self) -> "Genome":
        return Genome(self.network.copy(), self.learning_rate, self.adam.copy())


@dataclass
class GanPair:
    generator: Genome
    discriminator: Genome

    def __post_init__(self):
        g, d = self.generator.network, self.discriminator.network
        if g.output_dim != d.input_dim:
            raise ValueError(f"generator emits {g.output_dim} dims but discriminator reads {d.input_dim}")
        if d.output_dim != 1:
            raise ValueError("discriminator must have a single output")

    def copy(self) -> "GanPair":
        return GanPair(self.generator.copy(), self.discriminator.copy())


DEFAULT_LOSS = LossConfig()


def _clamp(p: np.ndarray, eps: float) -> np.ndarray:
    return np.clip(p, eps, 1.0 - eps)


def gan_loss(d_on_real, d_on_fake, cfg: LossConfig = DEFAULT_LOSS) -> float:
    real = np.asarray(d_on_real, dtype=np.float64).ravel()
    fake = np.asarray(d_on_fake, dtype=np.float64).ravel()
    if real.size == 0 or fake.size == 0:
        raise ValueError("gan_loss needs non-empty batches")
    eps = cfg.clamp_epsilon
    return float(np.mean(np.log(_clamp(real, eps))) + np.mean(np.log(1.0 - _clamp(fake, eps))))


def _unclamped(p: np.ndarray, eps: float) -> np.ndarray:
    # gradient of the clamp is zero outside [eps, 1 - eps]
    return ((p > eps) & (p < 1.0 - eps)).astype(np.float64)


def _check_latent(g: Genome, latent: np.ndarray) -> np.ndarray:
    latent = np.asarray(latent, dtype=np.float64)
    if latent.ndim != 2 or latent.shape[1] != g.network.input_dim or latent.shape[0] == 0:
        raise ValueError(f"latent batch must be (n, {g.network.input_dim}), got {latent.shape}")
    return latent


def generator_objective(g: Genome, d: Genome, latent_batch, cfg: LossConfig = DEFAULT_LOSS) -> float:
    """The quantity the generator step descends on ``latent_batch``."""
    latent = _check_latent(g, latent_batch)
    p = _clamp(forward(d.network, forward(g.network, latent)), cfg.clamp_epsilon)
    if cfg.generator_objective is GeneratorObjective.NON_SATURATING:
        return float(-np.mean(np.log(p)))
    return float(np.mean(np.log(1.0 - p)))


def train_generator_step(g: Genome, d: Genome, latent_batch, cfg: LossConfig = DEFAULT_LOSS) -> Genome:
    latent = _check_latent(g, latent_batch)
    fake, g_cache = forward_with_cache(g.network, latent)
    p, d_cache = forward_with_cache(d.network, fake)
    eps = cfg.clamp_epsilon
    if cfg.generator_objective is GeneratorObjective.NON_SATURATING:
        # d/dp -mean(log p)
        dp = -_unclamped(p, eps) / _clamp(p, eps) / p.shape[0]
    else:
        # d/dp mean(log(1 - p))
        dp = -_unclamped(p, eps) / (1.0 - _clamp(p, eps)) / p.shape[0]
    _, d_fake = backward_from_cache(d.network, d_cache, dp)
    grad, _ = backward_from_cache(g.network, g_cache, d_fake)
    net, adam = adam_step(g.network, grad, g.adam, g.learning_rate)
    return Genome(net, g.learning_rate, adam)


def train_discriminator_step(d: Genome, g: Genome, real_batch, latent_batch,
                             cfg: LossConfig = DEFAULT_LOSS) -> Genome:
    latent = _check_latent(g, latent_batch)
    real = np.asarray(real_batch, dtype=np.float64)
    if real.ndim != 2 or real.shape[1] != d.network.input_dim or real.shape[0] == 0:
        raise ValueError(f"real batch must be (n, {d.network.input_dim}), got {real.shape}")
    fake = forward(g.network, latent)
    eps = cfg.clamp_epsilon
    p_real, real_cache = forward_with_cache(d.network, real)
    p_fake, fake_cache = forward_with_cache(d.network, fake)
    # descend -L
    dp_real = -_unclamped(p_real, eps) / _clamp(p_real, eps) / p_real.shape[0]
    dp_fake = _unclamped(p_fake, eps) / (1.0 - _clamp(p_fake, eps)) / p_fake.shape[0]
    grad = (backward_from_cache(d.network, real_cache, dp_real)[0]
            + backward_from_cache(d.network, fake_cache, dp_fake)[0])
    net, adam = adam_step(d.network, grad, d.adam, d.learning_rate)
    return Genome(net, d.learning_rate, adam)


def evaluate_pair(g: Genome, d: Genome, real_batch, latent_batch, cfg: LossConfig = DEFAULT_LOSS) -> float:
    """Fitness L(g, d) on fixed batches. Generators want it low, discriminators high."""
    latent = _check_latent(g, latent_batch)
    real = np.asarray(real_batch, dtype=np.float64)
    if real.ndim != 2 or real.shape[0] == 0:
        raise ValueError("real batch must be a non-empty matrix")
    fake = forward(g.network, latent)
    return gan_loss(forward(d.network, real), forward(d.network, fake), cfg)
