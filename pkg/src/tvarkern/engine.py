"""Batched replication engine.

Runs many independent trajectories of y_k = S(k/n) y_{k-1} + xi_k in
lockstep lanes (one lane per replication) and accumulates kernel- or
shape-weighted window sums per lane. Every per-lane number is
bit-identical to simulating that replication alone and summing with
`kahan_sum`: the recursion applies the same multiply/add per step, the
weighted terms are formed with the same left-to-right factor order, and
`LaneKahan` replays the compensation ops of the scalar path.

Lanes are processed in chunks sized by element count so memory stays
bounded; chunks are independent tasks handed to `run_ordered`, and the
per-lane layout makes the output independent of worker count.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from .estimator import Schedule, design_window
from .model import CoefFunction, NoiseDensity, coef_values
from .rng import stream
from .util import LaneKahan, run_ordered

CHUNK_ELEMS = 1 << 23  # target floats per noise buffer; speed knob only

KINDS = ("yy", "ycur", "yxi")


@dataclass(frozen=True)
class WeightedSum:
    """One per-lane accumulator over the design window.

    kind "yy" sums w_i * y_{k-1} * y_{k-1}, "ycur" sums
    w_i * y_{k-1} * y_k, and "yxi" sums w_i * y_{k-1} * xi_k, where
    w_i is the weight at window position i and k runs over the window.
    """

    name: str
    kind: str
    weights: np.ndarray


def _run_chunk(chunk_seeds, s_list, noise, n, y0, first, stop, plans):
    r = len(chunk_seeds)
    xi = np.empty((stop, r))
    for j, seed in enumerate(chunk_seeds):
        # Full-length draw: each lane's noise prefix must be identical to
        # a standalone simulation with the same seed, whatever internal
        # call pattern the sampler uses.
        xi[:, j] = noise.sample(stream(seed), n)[:stop]

    y_prev = np.full(r, float(y0))
    y_cur = np.empty(r)
    t1 = np.empty(r)
    t2 = np.empty(r)
    triples = [(weights, kind, LaneKahan(r)) for weights, kind in plans]
    mul, add = np.multiply, np.add

    for step in range(1, stop + 1):
        row = xi[step - 1]
        mul(y_prev, s_list[step - 1], out=y_cur)
        add(y_cur, row, out=y_cur)
        i = step - first
        if i >= 0:
            for weights, kind, acc in triples:
                mul(y_prev, weights[i], out=t1)
                if kind == 0:
                    mul(t1, y_prev, out=t2)
                elif kind == 1:
                    mul(t1, y_cur, out=t2)
                else:
                    mul(t1, row, out=t2)
                acc.add(t2)
        y_prev, y_cur = y_cur, y_prev
    return [acc.total for _, _, acc in triples]


def window_sums(coef: CoefFunction, noise: NoiseDensity, n: int, y0: float,
                seeds, sched: Schedule, sums, workers: int | None = None,
                chunk_elems: int = CHUNK_ELEMS) -> dict[str, np.ndarray]:
    """Per-replication weighted window sums, one array entry per seed.

    The recursion stops at the last window index; design points past the
    window cannot influence any accumulator.
    """
    if sched.n != n:
        raise ValueError(f"schedule is for n = {sched.n}, engine called with n = {n}")
    k, _ = design_window(sched)
    width = int(k.size)
    first, stop = int(k[0]), int(k[-1])
    specs = list(sums)
    if not specs:
        raise ValueError("at least one weighted sum is required")
    names = [spec.name for spec in specs]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate accumulator names in {names}")
    plans = []
    for spec in specs:
        if spec.kind not in KINDS:
            raise ValueError(f"unknown accumulator kind {spec.kind!r}; use one of {KINDS}")
        w = np.asarray(spec.weights, dtype=np.float64)
        if w.shape != (width,):
            raise ValueError(
                f"accumulator {spec.name!r} has {w.shape} weights, window needs ({width},)"
            )
        plans.append((w.tolist(), KINDS.index(spec.kind)))

    seeds = [int(s) for s in seeds]
    if not seeds:
        return {name: np.empty(0) for name in names}
    s_list = coef_values(coef, n, upto=stop).tolist()
    lanes = max(1, int(chunk_elems) // stop)
    tasks = [partial(_run_chunk, seeds[i:i + lanes], s_list, noise, n, y0,
                     first, stop, plans)
             for i in range(0, len(seeds), lanes)]
    parts = run_ordered(tasks, workers)
    return {name: np.concatenate([part[j] for part in parts])
            for j, name in enumerate(names)}


def _profile_chunk(chunk_seeds, s_list, noise, n, y0):
    r = len(chunk_seeds)
    xi = np.empty((n, r))
    for j, seed in enumerate(chunk_seeds):
        xi[:, j] = noise.sample(stream(seed), n)
    y = np.full(r, float(y0))
    nxt = np.empty(r)
    pw = np.empty(r)
    out = np.empty(n + 1)
    out[0] = float(y0) ** 4 * r
    mul, add = np.multiply, np.add
    for step in range(1, n + 1):
        mul(y, s_list[step - 1], out=nxt)
        add(nxt, xi[step - 1], out=nxt)
        y, nxt = nxt, y
        mul(y, y, out=pw)
        mul(pw, pw, out=pw)
        out[step] = np.add.reduce(pw)
    return out


def fourth_moment_profile(coef: CoefFunction, noise: NoiseDensity, n: int,
                          y0: float, seeds, workers: int | None = None,
                          chunk_elems: int = CHUNK_ELEMS) -> np.ndarray:
    """Monte Carlo estimate of E[y_k^4] for k = 0..n over the given seeds.

    Deterministic for a fixed seed list and chunk size; worker count
    never changes the result because chunk subtotals are reduced in
    chunk order.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("at least one seed is required")
    s_list = coef_values(coef, n).tolist()
    lanes = max(1, int(chunk_elems) // n)
    tasks = [partial(_profile_chunk, seeds[i:i + lanes], s_list, noise, n, y0)
             for i in range(0, len(seeds), lanes)]
    parts = run_ordered(tasks, workers)
    total = np.zeros(n + 1)
    for part in parts:
        total += part
    return total / len(seeds)
