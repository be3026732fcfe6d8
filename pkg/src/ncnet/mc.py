"""Deterministic chunked Monte Carlo estimation.

Samples are drawn in fixed-size chunks. Chunk ``i`` owns a generator seeded
from ``(seed, i)``, and partial statistics are merged in chunk order, so the
estimate does not depend on how chunks are scheduled across workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

DEFAULT_CHUNK = 65536


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_se * self.std_error


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chunk_index)]))


def _chunk_sizes(n_samples: int, chunk_size: int) -> list[int]:
    full, rest = divmod(n_samples, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _partial(draw, seed, index, size):
    x = np.asarray(draw(chunk_rng(seed, index), size), dtype=float)
    if x.shape != (size,):
        raise ValueError(f"sampler returned shape {x.shape}, expected ({size},)")
    mean = float(x.mean())
    m2 = float(((x - mean) ** 2).sum())
    return size, mean, m2


def merge_partials(parts: Iterable[tuple[int, float, float]]) -> tuple[int, float, float]:
    """Chan et al. pairwise merge of (count, mean, M2) triples, left to right."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if n == 0:
            n, mean, m2 = nb, mb, m2b
            continue
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def estimate(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> McEstimate:
    """Mean and standard error of ``draw`` over ``n_samples`` i.i.d. samples.

    ``draw(rng, size)`` must return a 1-D array of ``size`` samples.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples for a standard error")
    sizes = _chunk_sizes(n_samples, chunk_size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _partial(draw, seed, *a), enumerate(sizes)))
    else:
        parts = [_partial(draw, seed, i, s) for i, s in enumerate(sizes)]
    n, mean, m2 = merge_partials(parts)
    std = math.sqrt(m2 / (n - 1))
    return McEstimate(mean=mean, std_error=std / math.sqrt(n), n_samples=n, seed=int(seed))


def write_estimates_csv(path, estimates: Iterable[McEstimate]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["estimate", "std_error", "n", "seed"])
        for e in estimates:
            w.writerow([f"{e.mean:.17g}", f"{e.std_error:.17g}", e.n_samples, e.seed])


def read_estimates_csv(path) -> list[McEstimate]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        McEstimate(float(r["estimate"]), float(r["std_error"]), int(r["n"]), int(r["seed"]))
        for r in rows
    ]
