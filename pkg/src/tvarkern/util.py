"""Shared numeric and output plumbing.

The compensated-summation helpers here pin an exact operation order:
`kahan_sum` over a 1-D term array performs, per index, the same four
floating operations as one lane of `LaneKahan.add`, which is what makes
the single-trajectory estimator and the batched Monte Carlo engine
bit-identical.
"""
from __future__ import annotations

import concurrent.futures
import os

import numpy as np

ENV_THREADS = "TVARKERN_THREADS"


def kahan_sum(values) -> float:
    """Compensated sequential sum in index order."""
    total = 0.0
    carry = 0.0
    for v in np.asarray(values, dtype=np.float64).tolist():
        t = v - carry
        u = total + t
        carry = (u - total) - t
        total = u
    return total


class LaneKahan:
    """Compensated accumulator over independent lanes.

    Each lane sums its own term sequence; add() applies the same
    operation order as kahan_sum, elementwise. Buffers are reused so a
    step costs four vector operations with no allocation.
    """

    __slots__ = ("total", "_carry", "_t", "_u")

    def __init__(self, n_lanes: int):
        self.total = np.zeros(n_lanes)
        self._carry = np.zeros(n_lanes)
        self._t = np.empty(n_lanes)
        self._u = np.empty(n_lanes)

    def add(self, term: np.ndarray) -> None:
        t, u = self._t, self._u
        np.subtract(term, self._carry, out=t)
        np.add(self.total, t, out=u)
        np.subtract(u, self.total, out=self._carry)
        np.subtract(self._carry, t, out=self._carry)
        self.total, self._u = u, self.total


def fmt(value) -> str:
    """One CSV cell: floats at 17 significant digits, bools as 1/0."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header: str, rows) -> None:
    """Write a fixed-header CSV with deterministic cell formatting."""
    lines = [header]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def thread_count() -> int:
    """Worker count: TVARKERN_THREADS if set, else min(8, cpu count).

    Affects scheduling only; every result is assembled into
    replication-indexed slots, so output bytes never depend on this.
    """
    raw = os.environ.get(ENV_THREADS, "").strip()
    if raw:
        try:
            k = int(raw)
        except ValueError as exc:
            raise ValueError(f"{ENV_THREADS} must be a positive integer, got {raw!r}") from exc
        if k < 1:
            raise ValueError(f"{ENV_THREADS} must be a positive integer, got {raw!r}")
        return k
    return min(8, os.cpu_count() or 1)


def run_ordered(tasks, workers: int | None = None) -> list:
    """Run argument-free thunks, returning results in task order.

    Tasks must be pure and independent; results land in per-task slots,
    so the outcome is identical for any worker count.
    """
    if workers is None:
        workers = thread_count()
    out = [None] * len(tasks)
    if workers <= 1 or len(tasks) <= 1:
        for i, task in enumerate(tasks):
            out[i] = task()
        return out
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(task): i for i, task in enumerate(tasks)}
        for fut in concurrent.futures.as_completed(futures):
            out[futures[fut]] = fut.result()
    return out
