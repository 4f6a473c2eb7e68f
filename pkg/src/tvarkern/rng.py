"""Deterministic seed derivation and stream construction.

Every simulation stream is a counter-based Philox generator keyed by a
value mixed from the root seed and stable labels only, never from
execution order, so replications can be scheduled on any number of
workers without changing a single bit of output.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    # splitmix64 finalizer; full-avalanche 64-bit mix.
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix64(*parts: int) -> int:
    """Fold integers into one 64-bit value; order-sensitive, process-stable."""
    acc = 0
    for part in parts:
        acc = _splitmix64(acc ^ (int(part) & _MASK64))
    return acc


def label_hash(label: str) -> int:
    """Stable 64-bit hash of a text label (no per-process salt)."""
    acc = _splitmix64(len(label))
    for byte in label.encode("utf-8"):
        acc = _splitmix64(acc ^ byte)
    return acc


def replication_seed(root_seed: int, cell: str, rep: int) -> int:
    """Seed for replication `rep` of the labelled experiment cell."""
    return mix64(root_seed, label_hash(cell), rep)


def stream(seed: int) -> np.random.Generator:
    """Counter-based generator for one simulation stream."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
