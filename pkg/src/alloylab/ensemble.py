"""Deterministic parallel Monte Carlo orchestration.

Per-sample seeds are derived from a master seed by an avalanche-quality
integer mix, every sample is a pure function of its seed, and the reduction
runs over a fixed binary tree on sample indices.  The reduced result is
therefore bit-identical for any worker count; workers are only a throughput
hint.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1


class SampleFailure(RuntimeError):
    """A per-sample task failed in an expected, countable way."""


class EnsembleAbort(RuntimeError):
    """Too many sample failures for the configured failure policy."""


def derive_seed(master_seed: int, sample_index: int) -> int:
    """SplitMix64-style mix of (master seed, sample index) into a 64-bit seed."""
    z = (master_seed ^ ((sample_index + 1) * 0x9E3779B97F4A7C15)) & _MASK
    for _ in range(2):
        z = (z + 0x9E3779B97F4A7C15) & _MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z = z ^ (z >> 31)
    return z


def sample_rng(master_seed: int, sample_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, sample_index)))


@dataclass(frozen=True)
class EnsembleConfig:
    n_samples: int
    master_seed: int
    workers: int = 1
    failure_policy: float = 0.01

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("sample count must be >= 1")
        if not 0.0 <= self.failure_policy <= 1.0:
            raise ValueError("failure policy must be a fraction in [0, 1]")


@dataclass(frozen=True)
class Statistic:
    """Streaming-mergeable moments of a scalar sample set."""

    n: int
    mean: float
    variance: float  # unbiased; 0.0 by convention when n == 1
    minimum: float
    maximum: float

    @property
    def stderr(self) -> float:
        return float(np.sqrt(self.variance / self.n)) if self.n > 0 else float("nan")

    @staticmethod
    def of_value(x: float) -> "Statistic":
        x = float(x)
        return Statistic(1, x, 0.0, x, x)

    def merge(self, other: "Statistic") -> "Statistic":
        if self.n == 0:
            return other
        if other.n == 0:
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = (self.variance * max(self.n - 1, 0)
              + other.variance * max(other.n - 1, 0)
              + delta * delta * (self.n * other.n / n))
        return Statistic(n, mean, m2 / (n - 1) if n > 1 else 0.0,
                         min(self.minimum, other.minimum),
                         max(self.maximum, other.maximum))


EMPTY_STATISTIC = Statistic(0, float("nan"), 0.0, float("inf"), float("-inf"))


def reduce_samples(values) -> Statistic:
    """Pairwise-tree reduction over the sample-index order (fixed tree shape)."""
    vals = list(values)

    def rec(lo: int, hi: int) -> Statistic:
        if hi - lo == 0:
            return EMPTY_STATISTIC
        if hi - lo == 1:
            return Statistic.of_value(vals[lo])
        mid = (lo + hi) // 2
        return rec(lo, mid).merge(rec(mid, hi))

    return rec(0, len(vals))


@dataclass(frozen=True)
class EnsembleResult:
    """Reduction of a per-sample task over an ensemble.

    ``stat`` is a single Statistic for scalar tasks or a tuple of Statistics,
    one per component, for vector tasks.  ``failures`` counts samples that
    raised SampleFailure; n + failures == n_samples always.
    """

    stat: Statistic | tuple[Statistic, ...]
    n: int
    failures: int
    master_seed: int

    @property
    def stats(self) -> tuple[Statistic, ...]:
        return self.stat if isinstance(self.stat, tuple) else (self.stat,)


def map_samples(task, cfg: EnsembleConfig, **params) -> list:
    """Evaluate ``task(rng, **params)`` once per sample, in index order.

    Returns one entry per sample index; samples that raised SampleFailure
    appear as None.  The list is a pure function of (task, params, N, seed),
    independent of the worker count.
    """

    def one(i: int):
        try:
            return task(sample_rng(cfg.master_seed, i), **params)
        except SampleFailure:
            return None

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(one, range(cfg.n_samples)))
    return [one(i) for i in range(cfg.n_samples)]


def run_ensemble(task, cfg: EnsembleConfig, **params) -> EnsembleResult:
    """Evaluate ``task(rng, **params)`` over the ensemble and reduce.

    The task must be pure given its generator; it may return a float or a
    1-d array (reduced componentwise).  Raising SampleFailure marks the
    sample failed; the run aborts when failures/N exceeds the policy.
    """
    raw = map_samples(task, cfg, **params)
    values = [v for v in raw if v is not None]
    failures = cfg.n_samples - len(values)
    if failures > cfg.failure_policy * cfg.n_samples:
        raise EnsembleAbort(
            f"{failures}/{cfg.n_samples} samples failed, exceeding the "
            f"{cfg.failure_policy:.2%} failure policy")
    if not values:
        raise EnsembleAbort("all samples failed")

    first = np.asarray(values[0], dtype=float)
    if first.ndim == 0:
        stat = reduce_samples([float(v) for v in values])
    else:
        arr = np.asarray(values, dtype=float)
        stat = tuple(reduce_samples(arr[:, j]) for j in range(arr.shape[1]))
    return EnsembleResult(stat, len(values), failures, cfg.master_seed)
