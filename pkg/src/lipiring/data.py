"""Training data: Gaussian-mixture targets, latent noise, IDX files, batching."""

from __future__ import annotations

import gzip
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801
_MAX_IDX_ELEMENTS = 2**31 - 1


class IdxFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianMixture:
    centers: tuple[tuple[float, ...], ...]
    sigma: float

    def __post_init__(self):
        centers = tuple(tuple(float(v) for v in c) for c in self.centers)
        if not centers:
            raise ValueError("mixture needs at least one center")
        if len({len(c) for c in centers}) != 1:
            raise ValueError("all mixture centers must share a dimension")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        object.__setattr__(self, "centers", centers)

    @property
    def dim(self) -> int:
        return len(self.centers[0])

    @property
    def center_array(self) -> np.ndarray:
        return np.array(self.centers, dtype=np.float64)


@dataclass(frozen=True)
class IdxFile:
    path: str


@dataclass(frozen=True)
class DataSpec:
    source: GaussianMixture | IdxFile
    batch_size: int = 100
    # training-set size drawn once per run from a synthetic mixture
    dataset_size: int = 1000

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.dataset_size < 1:
            raise ValueError("dataset_size must be >= 1")


@dataclass(frozen=True)
class LatentSpec:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("latent dim must be >= 1")


def ring_of_gaussians(n_modes: int = 8, radius: float = 1.0, sigma: float = 0.05) -> GaussianMixture:
    angles = 2 * np.pi * np.arange(n_modes) / n_modes
    centers = [(radius * math.cos(a), radius * math.sin(a)) for a in angles]
    return GaussianMixture(tuple(centers), sigma)


_dataset_cache: dict[str, np.ndarray] = {}


def _idx_dataset(path: str) -> np.ndarray:
    if path not in _dataset_cache:
        _dataset_cache[path] = load_idx(path)
    return _dataset_cache[path]


def data_dim(spec: DataSpec) -> int:
    if isinstance(spec.source, GaussianMixture):
        return spec.source.dim
    return _idx_dataset(spec.source.path).shape[1]


def sample_real(spec: DataSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    src = spec.source
    if isinstance(src, GaussianMixture):
        centers = src.center_array
        picks = rng.integers(0, len(centers), size=n)
        return centers[picks] + rng.normal(0.0, src.sigma, size=(n, src.dim))
    data = _idx_dataset(src.path)
    return data[rng.integers(0, len(data), size=n)]


def training_set(spec: DataSpec, rng: np.random.Generator) -> np.ndarray:
    """The full training set: the IDX file as-is, or ``dataset_size`` mixture draws."""
    if isinstance(spec.source, IdxFile):
        return _idx_dataset(spec.source.path)
    return sample_real(spec, spec.dataset_size, rng)


def sample_latent(spec: LatentSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.uniform(-1.0, 1.0, size=(n, spec.dim))


def batch_iterator(dataset: np.ndarray, batch_size: int, rng: np.random.Generator):
    """Yield one epoch of shuffled batches; the last batch may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if len(dataset) == 0:
        raise ValueError("cannot batch an empty dataset")
    order = rng.permutation(len(dataset))
    for start in range(0, len(order), batch_size):
        yield dataset[order[start:start + batch_size]]


def _open(path: Path, mode: str):
    if path.suffix == ".gz":
        return gzip.open(path, mode)
    return open(path, mode)


def read_idx(path) -> np.ndarray:
    """Parse an IDX file into a uint8 array of its declared shape."""
    path = Path(path)
    try:
        with _open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IdxFormatError(f"cannot read {path}: {exc}") from exc
    if len(raw) < 8:
        raise IdxFormatError(f"{path}: truncated header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic == IDX_IMAGES:
        ndim = 3
    elif magic == IDX_LABELS:
        ndim = 1
    else:
        raise IdxFormatError(f"{path}: bad magic 0x{magic:08x}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError(f"{path}: truncated header")
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    count = math.prod(dims)
    if count > _MAX_IDX_ELEMENTS:
        raise IdxFormatError(f"{path}: dimensions {dims} overflow")
    payload = raw[header:]
    if len(payload) < count:
        raise IdxFormatError(f"{path}: truncated payload ({len(payload)} of {count} bytes)")
    if len(payload) > count:
        raise IdxFormatError(f"{path}: {len(payload) - count} trailing bytes")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims).copy()


def load_idx(path) -> np.ndarray:
    """IDX file as a float64 (samples, features) matrix with bytes mapped to [-1, 1]."""
    arr = read_idx(path)
    flat = arr.reshape(arr.shape[0], -1).astype(np.float64)
    return flat / 127.5 - 1.0


def write_idx(path, array: np.ndarray) -> None:
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        raise ValueError("IDX writer expects uint8 data")
    if arr.ndim == 3:
        magic = IDX_IMAGES
    elif arr.ndim == 1:
        magic = IDX_LABELS
    else:
        raise ValueError("only 3D image tensors and 1D label vectors are supported")
    header = struct.pack(">I", magic) + struct.pack(">" + "I" * arr.ndim, *arr.shape)
    with _open(Path(path), "wb") as fh:
        fh.write(header + arr.tobytes())


def to_pixels(scaled: np.ndarray) -> np.ndarray:
    """Inverse of the [-1, 1] scaling used by ``load_idx``."""
    return np.rint((np.asarray(scaled) + 1.0) * 127.5).astype(np.uint8)
