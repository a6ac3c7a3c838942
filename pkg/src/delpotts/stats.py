"""Small statistical helpers shared by samplers, experiments and tests."""

import math

import numpy as np


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) seedable generator; the seed is recorded in
    every output that uses it."""
    return np.random.Generator(np.random.Philox(seed))


def spawn_seed(master_seed: int, index: int) -> int:
    """Deterministic per-task sub-seed."""
    x = (master_seed + (index + 1) * 0x9E3779B97F4A7C15) & ((1 << 64) - 1)
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & ((1 << 64) - 1)
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & ((1 << 64) - 1)
    return x ^ (x >> 31)


def batch_mean_se(values, n_batches: int = 32):
    """(mean, standard error, autocorrelation-aware) via batch means.

    The series is split into batches whose means are treated as
    independent; adequate once batches exceed the autocorrelation time.
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n == 0:
        return math.nan, math.nan
    b = max(2, min(n_batches, n))
    usable = (n // b) * b
    means = x[:usable].reshape(b, -1).mean(axis=1)
    se = means.std(ddof=1) / math.sqrt(b) if b > 1 else math.nan
    return float(x.mean()), float(se)


def integrated_autocorr_time(values, n_batches: int = 32):
    """Crude integrated autocorrelation estimate from the batch-mean
    variance inflation; 1.0 for white noise."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n < 4 or x.var() == 0:
        return 1.0
    _, se_b = batch_mean_se(x, n_batches)
    se_naive = x.std(ddof=1) / math.sqrt(n)
    if se_naive == 0 or math.isnan(se_b):
        return 1.0
    return max(1.0, (se_b / se_naive) ** 2)


def binomial_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / n)
