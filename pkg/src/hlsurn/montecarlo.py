"""Batches of urn runs, empirical entropy curves and fair-coin importance sampling.

Runs are simulated in lockstep over fixed blocks of run indices. Run ``r``
uses the ``r``-th uniform stream of the batch seed, exactly as
``simulate(..., run_index=r)`` does, so a batch is a pure function of its
inputs. Blocks are independent and their results are merged in block order,
which keeps every output bit-identical for any number of workers.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .curves import ScalarCurve, write_csv
from .errors import DegenerateEstimateWarning, ValidationError
from .urn import SeedComposition, UrnFunction, _check_capacity

BLOCK = 4096
STEP_CHUNK = 512


@dataclass(frozen=True)
class BatchResult:
    spec: UrnFunction
    T: int
    seed: SeedComposition
    R: int
    rng_seed: int
    histogram: np.ndarray
    shares: np.ndarray | None = None

    @property
    def counts(self) -> np.ndarray:
        return np.arange(self.histogram.size)

    def mean_share(self) -> float:
        return float(np.dot(self.counts, self.histogram)) / (self.R * self.T)

    def to_json(self) -> str:
        nz = np.flatnonzero(self.histogram)
        return json.dumps({
            "urn": self.spec.to_dict(), "T": self.T, "b0": self.seed.b0, "w0": self.seed.w0,
            "R": self.R, "rng_seed": self.rng_seed,
            "histogram": {str(int(k)): int(self.histogram[k]) for k in nz},
        }, sort_keys=True)

    def shares_to_csv(self, target):
        if self.shares is None:
            raise ValidationError("batch was run without keep_shares")
        write_csv(target, ["run", "psi"], [np.arange(self.R), self.shares])


def _blocks(R):
    return [(lo, min(lo + BLOCK, R)) for lo in range(0, R, BLOCK)]


def _map_blocks(fn, R, workers):
    blocks = _blocks(R)
    if workers <= 1 or len(blocks) == 1:
        return [fn(lo, hi) for lo, hi in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), blocks))


def _check_batch(T, seed, R, workers):
    _check_capacity(T, seed)
    if int(R) != R or R < 1:
        raise ValidationError("R must be a positive integer")
    if int(workers) != workers or workers < 1:
        raise ValidationError("workers must be a positive integer")


def _final_counts(spec, T, seed, rng_seed, lo, hi):
    runs = np.arange(lo, hi)
    k = np.full(runs.size, seed.b0, dtype=np.int64)
    steps = T - seed.n0
    for a in range(0, steps, STEP_CHUNK):
        b = min(a + STEP_CHUNK, steps)
        u = rng.uniforms(rng_seed, runs, a, b)
        for j in range(b - a):
            n = seed.n0 + a + j
            k += u[:, j] < spec(k / n)
    return k


def run_batch(spec: UrnFunction, T: int, seed: SeedComposition = SeedComposition(), R: int = 1000,
              rng_seed: int = 0, workers: int = 1, keep_shares: bool = False) -> BatchResult:
    """``R`` independent runs; histogram of the final black counts (index ``k = 0..T``)."""
    _check_batch(T, seed, R, workers)
    parts = _map_blocks(lambda lo, hi: _final_counts(spec, T, seed, rng_seed, lo, hi), R, workers)
    finals = np.concatenate(parts)
    hist = np.bincount(finals, minlength=T + 1).astype(np.int64)
    shares = finals / T if keep_shares else None
    return BatchResult(spec, int(T), seed, int(R), int(rng_seed), hist, shares)


def empirical_entropy(b: BatchResult, T: int | None = None) -> ScalarCurve:
    """``(1/T) log(count / R)`` on the occupied bins; empty bins are left out."""
    T = b.T if T is None else T
    k = np.flatnonzero(b.histogram)
    if k.size == 0:
        raise ValidationError("empty histogram")
    return ScalarCurve(k / b.T, np.log(b.histogram[k] / b.R) / T, "entropy_phi_of_x")


def _log_weights(spec, T, seed, rng_seed, lo, hi):
    """Final counts and log-likelihood ratios of fair-coin runs against the urn."""
    runs = np.arange(lo, hi)
    k = np.full(runs.size, seed.b0, dtype=np.int64)
    logw = np.zeros(runs.size)
    steps = T - seed.n0
    with np.errstate(divide="ignore"):
        for a in range(0, steps, STEP_CHUNK):
            b = min(a + STEP_CHUNK, steps)
            u = rng.uniforms(rng_seed, runs, a, b)
            for j in range(b - a):
                n = seed.n0 + a + j
                p = spec(k / n)
                black = u[:, j] < 0.5
                logw += np.where(black, np.log(p), np.log1p(-p))
                k += black
    return k, logw + steps * math.log(2.0)


def importance_estimate(spec: UrnFunction, T: int, seed: SeedComposition = SeedComposition(),
                        event=(0, None), R: int = 10_000, rng_seed: int = 0, workers: int = 1):
    """Estimate ``P(kmin <= k_T <= kmax)`` by sampling fair-coin histories.

    Each history is weighted by its likelihood ratio ``2^(T - n0) prod pi-step
    probabilities``; log-weights are shifted by their maximum before
    exponentiating. Returns ``(estimate, standard_error)``.
    """
    _check_batch(T, seed, R, workers)
    kmin, kmax = event
    kmax = T if kmax is None else kmax
    kmin, kmax = max(int(kmin), seed.b0), min(int(kmax), T - seed.w0)
    if kmin > kmax:
        return 0.0, 0.0
    parts = _map_blocks(lambda lo, hi: _log_weights(spec, T, seed, rng_seed, lo, hi), R, workers)
    k = np.concatenate([p[0] for p in parts])
    logw = np.concatenate([p[1] for p in parts])
    inside = (k >= kmin) & (k <= kmax) & np.isfinite(logw)
    if not inside.any():
        warnings.warn("no sampled history in the event carries positive weight; the estimate is 0",
                      DegenerateEstimateWarning, stacklevel=2)
        return 0.0, 0.0
    shift = float(np.max(logw[inside]))
    x = np.where(inside, np.exp(np.where(inside, logw, shift) - shift), 0.0)
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1)) if R > 1 else 0.0
    scale = math.exp(shift)
    return mean * scale, sd * scale / math.sqrt(R)
