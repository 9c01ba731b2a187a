"""Sample-quality and diversity measures.

The Fréchet score here is computed on raw samples, not on Inception features,
so its values are only comparable between runs of this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EIG_TOL = 1e-10


def tvd(p, q) -> float:
    """Total variation distance between two histograms over the same bins."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("histograms must share a bin structure")
    if p.sum() <= 0 or q.sum() <= 0:
        raise ValueError("histograms must have positive mass")
    return float(0.5 * np.abs(p / p.sum() - q / q.sum()).sum())


def _psd_eigvals(mat, what: str) -> tuple[np.ndarray, np.ndarray]:
    mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
    mat = 0.5 * (mat + mat.T)
    vals, vecs = np.linalg.eigh(mat)
    tol = _EIG_TOL * max(1.0, float(np.abs(vals).max(initial=0.0)))
    if np.any(vals < -tol):
        raise ValueError(f"{what} is not positive semi-definite (min eigenvalue {vals.min():.3g})")
    return np.clip(vals, 0.0, None), vecs


def _gaussian_fit(samples) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < x.shape[1] + 1:
        raise ValueError(f"need at least dim+1={x.shape[1] + 1} samples, got {x.shape[0]}")
    return x.mean(axis=0), np.atleast_2d(np.cov(x, rowvar=False))


def frechet_from_moments(mu_a, cov_a, mu_b, cov_b) -> float:
    vals, vecs = _psd_eigvals(cov_a, "covariance")
    sqrt_a = (vecs * np.sqrt(vals)) @ vecs.T
    # sqrt(A) B sqrt(A) shares its spectrum with A B and is symmetric
    cross, _ = _psd_eigvals(sqrt_a @ cov_b @ sqrt_a, "covariance product")
    diff = np.asarray(mu_a) - np.asarray(mu_b)
    score = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.sqrt(cross).sum())
    return max(score, 0.0)


def frechet_score(samples_a, samples_b) -> float:
    mu_a, cov_a = _gaussian_fit(samples_a)
    mu_b, cov_b = _gaussian_fit(samples_b)
    if mu_a.shape != mu_b.shape:
        raise ValueError("sample sets have different dimensions")
    return frechet_from_moments(mu_a, cov_a, mu_b, cov_b)


def genome_l2_matrix(vectors) -> np.ndarray:
    """Pairwise L2 distances between flattened parameter vectors."""
    vecs = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not vecs:
        raise ValueError("need at least one parameter vector")
    if len({v.shape for v in vecs}) != 1:
        raise ValueError("parameter vectors come from mismatched architectures")
    n = len(vecs)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = np.linalg.norm(vecs[i] - vecs[j])
    return out


def mean_pairwise(matrix: np.ndarray) -> float:
    n = matrix.shape[0]
    if n < 2:
        return 0.0
    return float(matrix[np.triu_indices(n, k=1)].mean())


@dataclass(frozen=True)
class ModeHistogram:
    counts: np.ndarray
    high_quality_fraction: float
    covered_modes: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def mode_histogram(samples, modes, threshold: float) -> ModeHistogram:
    """Assign each sample to its nearest mode and count high-quality hits.

    A sample is high quality when it lies within ``threshold`` of its mode; a
    mode is covered when it received at least one high-quality sample.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    centers = np.atleast_2d(np.asarray(modes, dtype=np.float64))
    if centers.shape[0] < 1:
        raise ValueError("need at least one mode")
    dist = np.linalg.norm(x[:, None, :] - centers[None, :, :], axis=2)
    nearest = dist.argmin(axis=1)
    close = dist[np.arange(len(x)), nearest] <= threshold
    counts = np.bincount(nearest, minlength=len(centers))
    covered = np.unique(nearest[close]).size
    fraction = float(close.mean()) if len(x) else 0.0
    return ModeHistogram(counts, fraction, int(covered))


def mode_tvd(samples, modes, threshold: float, weights=None) -> float:
    """TVD between the nearest-mode histogram of ``samples`` and the target weights."""
    hist = mode_histogram(samples, modes, threshold)
    target = np.ones(len(hist.counts)) if weights is None else np.asarray(weights)
    return tvd(hist.counts, target)
