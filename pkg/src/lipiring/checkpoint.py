"""Binary checkpoints of a population.

Layout, all integers little-endian::

    b"LIPICKPT"                       magic
    u32 format version
    u32 n, n bytes                    config as UTF-8 JSON
    u64 generation counter
    u32 cell count
    per cell, generator then discriminator:
        f64 learning rate
        u32 parameter count p
        f64[p] parameters, f64[p] Adam m, f64[p] Adam v
        u64 Adam step, f64 beta1, f64 beta2, f64 epsilon
    32 bytes SHA-256 of everything above

Network shapes are not stored; they are rebuilt from the config.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, from_dict, to_dict
from .gan import GanPair, Genome
from .nn import AdamState, Network
from .orchestrator import Population

MAGIC = b"LIPICKPT"
FORMAT_VERSION = 1
_DIGEST = 32


class CheckpointError(ValueError):
    pass


def _pack_genome(g: Genome) -> bytes:
    p = g.params.size
    a = g.adam
    return b"".join([
        struct.pack("<dI", g.learning_rate, p),
        g.params.astype("<f8").tobytes(),
        a.m.astype("<f8").tobytes(),
        a.v.astype("<f8").tobytes(),
        struct.pack("<Qddd", a.t, a.beta1, a.beta2, a.epsilon),
    ])


def encode(pop: Population, cfg: ExperimentConfig) -> bytes:
    cfg_bytes = json.dumps(to_dict(cfg), sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(cfg_bytes)), cfg_bytes,
             struct.pack("<QI", pop.generation, pop.size)]
    for pair in pop.centers:
        parts.append(_pack_genome(pair.generator))
        parts.append(_pack_genome(pair.discriminator))
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def checkpoint_save(pop: Population, cfg: ExperimentConfig, path) -> None:
    """Write atomically: a reader sees the old file or the complete new one."""
    path = Path(path)
    blob = encode(pop, cfg)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError("checkpoint is truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)


def _read_genome(r: _Reader, layers) -> Genome:
    lr, p = r.unpack("<dI")
    params, m, v = r.floats(p), r.floats(p), r.floats(p)
    t, b1, b2, eps = r.unpack("<Qddd")
    net = Network(layers, params)
    return Genome(net, lr, AdamState(m, v, t, b1, b2, eps))


def decode(blob: bytes) -> tuple[Population, ExperimentConfig]:
    if len(blob) < len(MAGIC) + _DIGEST or blob[:len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic or too short)")
    body, digest = blob[:-_DIGEST], blob[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint digest mismatch: file is corrupted or truncated")
    r = _Reader(body)
    r.take(len(MAGIC))
    version, cfg_len = r.unpack("<II")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
    cfg = from_dict(json.loads(r.take(cfg_len).decode()))
    generation, cells = r.unpack("<QI")
    if cells != cfg.population_size:
        raise CheckpointError(f"checkpoint holds {cells} cells but its config describes {cfg.population_size}")
    g_layers, d_layers = cfg.generator_specs(), cfg.discriminator_specs()
    try:
        centers = [GanPair(_read_genome(r, g_layers), _read_genome(r, d_layers)) for _ in range(cells)]
    except ValueError as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"checkpoint does not match its config: {exc}") from exc
    if r.pos != len(body):
        raise CheckpointError(f"{len(body) - r.pos} unexpected trailing bytes in checkpoint")
    return Population(centers, generation), cfg


def checkpoint_load(path) -> tuple[Population, ExperimentConfig]:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return decode(blob)


def describe(path) -> dict:
    pop, cfg = checkpoint_load(path)
    return {
        "format_version": FORMAT_VERSION,
        "generation": pop.generation,
        "cells": pop.size,
        "topology": to_dict(cfg)["topology"],
        "seed": cfg.seed,
        "learning_rates": [[p.generator.learning_rate, p.discriminator.learning_rate] for p in pop.centers],
        "generator_params": int(pop.centers[0].generator.params.size),
        "discriminator_params": int(pop.centers[0].discriminator.params.size),
    }
