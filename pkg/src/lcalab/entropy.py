"""Entropy in bits: exact conditional entropies, plug-in block estimates, bound functions."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .measures import ALPHA, delta_distribution_averaged

METHODS = ("exact-conditional", "plug-in-empirical", "bound")
MAX_BLOCK = 24


@dataclass(frozen=True)
class EntropyReport:
    block_length: int
    entropy_bits: float
    method: str
    note: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.entropy_bits < 0:
            raise ValueError("entropy must be non-negative")

    @property
    def rate(self) -> float:
        return self.entropy_bits / self.block_length


def reports_to_csv(reports: Sequence[EntropyReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["block_length", "entropy_bits", "method"])
    for r in reports:
        w.writerow([r.block_length, format(r.entropy_bits, ".17g"), r.method])
    return buf.getvalue()


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@lru_cache(maxsize=4096)
def _cached_delta(n: int, depth: int) -> float:
    return delta_distribution_averaged(1, n, depth)


def exact_conditional_entropy(n: int, depth: int) -> float:
    """``sum_{m=1}^{2^n} H(delta_m)`` with each ``delta_m`` shift-averaged exactly.

    After averaging over the shift every ``delta_m`` coincides, so the sum is
    evaluated once per level.
    """
    if n < 0 or not n < depth:
        raise ValueError(f"need 0 <= n < depth (n={n}, depth={depth})")
    return 2 ** n * binary_entropy(_cached_delta(n, depth))


def block_counts(windows: np.ndarray) -> np.ndarray:
    """Histogram of length-L binary blocks (rows of ``windows``) over ``2**L`` codes."""
    L = windows.shape[1]
    if L > MAX_BLOCK:
        raise ValueError(f"block length {L} exceeds {MAX_BLOCK}")
    weights = (1 << np.arange(L, dtype=np.int64))
    codes = windows.astype(np.int64) @ weights
    return np.bincount(codes, minlength=1 << L)


def plugin_entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(max(0.0, -(p * np.log2(p)).sum()))


def empirical_block_entropy(sampler, block_length: int, samples: int, rng: np.random.Generator,
                            chunk: int = 1 << 20) -> EntropyReport:
    """Plug-in Shannon entropy of the empirical length-L block distribution."""
    if not 1 <= block_length <= MAX_BLOCK:
        raise ValueError(f"block length must be in [1, {MAX_BLOCK}]")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    counts = np.zeros(1 << block_length, dtype=np.int64)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        counts += block_counts(sampler.sample(rng, m, block_length))
        done += m
    note = f"plug-in estimate from {samples} samples; biased low by about (support-1)/(2N ln 2) bits"
    return EntropyReport(block_length, plugin_entropy(counts), "plug-in-empirical", note)


def conditional_block_rate(sampler, block_length: int, samples: int, rng: np.random.Generator) -> float:
    """``H_L - H_{L-1}`` from one batch of samples (entropy of the last cell given the rest)."""
    if not 2 <= block_length <= MAX_BLOCK:
        raise ValueError(f"block length must be in [2, {MAX_BLOCK}]")
    windows = sampler.sample(rng, samples, block_length)
    return plugin_entropy(block_counts(windows)) - plugin_entropy(block_counts(windows[:, :-1]))


class LemmaBounds(NamedTuple):
    delta_upper: float
    entropy_upper: float
    cumulative: float


def lemma_bounds(n: int, c: float = 1.0) -> LemmaBounds:
    """``8 alpha^n``, ``2 n alpha^n`` and ``c n (2 alpha)^n``.

    The first two are only claimed for ``n > 5`` and ``n > 20``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = ALPHA ** n
    return LemmaBounds(8.0 * a, 2.0 * n * a, c * n * (2.0 * ALPHA) ** n)


def fit_cumulative_constant(levels: Sequence[int], depth_offset: int = 6, start: int = 20) -> float:
    """Smallest ``c`` with ``sum_{n=start}^{N-1} H_n <= c N (2 alpha)^N`` for each ``N`` given."""
    worst = 0.0
    for N in levels:
        if N <= start:
            raise ValueError("levels must exceed start")
        acc = math.fsum(exact_conditional_entropy(n, n + depth_offset) for n in range(start, N))
        worst = max(worst, acc / (N * (2.0 * ALPHA) ** N))
    return worst
