"""Seeded, block-parallel Monte-Carlo machinery shared by all tiers.

Shots are generated in fixed-size blocks, each with its own child stream
spawned from one :class:`numpy.random.SeedSequence`.  Results depend only on
``(seed, n_shots, block_size)``, never on the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .errors import ValidationError

DEFAULT_BLOCK_SIZE = 1 << 18

# dense histogram limit for mixed-radix pattern codes
_DENSE_CODES = 1 << 22


@dataclass(frozen=True, eq=False)
class SampleSet:
    """``n_shots`` detected patterns, stored as a pattern -> count map.

    ``captured_mass`` records the probability covered by a truncated
    enumeration when the draws came from one (the Gaussian path).
    """

    n_shots: int
    counts: MappingProxyType
    mode_frequencies: np.ndarray
    seed: int | None = None
    captured_mass: float | None = None

    def __post_init__(self):
        freqs = np.array(self.mode_frequencies, dtype=float)
        freqs.setflags(write=False)
        m = freqs.size
        counts = {}
        for pattern, n in sorted(self.counts.items()):
            pattern = tuple(int(x) for x in pattern)
            if len(pattern) != m or min(pattern, default=0) < 0:
                raise ValidationError(f"bad pattern {pattern} for {m} modes")
            if int(n) < 1:
                raise ValidationError("stored pattern counts must be >= 1")
            counts[pattern] = int(n)
        if sum(counts.values()) != self.n_shots:
            raise ValidationError("pattern counts do not add up to n_shots")
        object.__setattr__(self, "mode_frequencies", freqs)
        object.__setattr__(self, "counts", MappingProxyType(counts))

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (
            self.n_shots == other.n_shots
            and dict(self.counts) == dict(other.counts)
            and np.array_equal(self.mode_frequencies, other.mode_frequencies)
            and self.seed == other.seed
            and self.captured_mass == other.captured_mass
        )

    __hash__ = None

    @property
    def num_modes(self):
        return self.mode_frequencies.size

    def probabilities(self):
        return {pattern: n / self.n_shots for pattern, n in self.counts.items()}

    def mean_photons(self):
        total = np.zeros(self.num_modes)
        for pattern, n in self.counts.items():
            total += n * np.asarray(pattern, dtype=float)
        return total / self.n_shots


def _block_sizes(n_shots, block_size):
    full, rest = divmod(n_shots, block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(draw, n_shots, seed, block_size=DEFAULT_BLOCK_SIZE, workers=1):
    """Evaluate ``draw(rng, size)`` on each shot block and sum the results.

    ``draw`` must return an array of identical shape for every block; the
    reduction runs in block order so the sum is reproducible.
    """
    if n_shots < 1:
        raise ValidationError("n_shots must be >= 1")
    if block_size < 1:
        raise ValidationError("block_size must be >= 1")
    sizes = _block_sizes(int(n_shots), int(block_size))
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def job(k):
        return draw(np.random.default_rng(children[k]), sizes[k])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(k) for k in range(len(sizes))]
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def cdf_table(pmf):
    """Cumulative table for inverse-CDF draws; the last entry is forced to 1.

    Forcing the final entry assigns any truncated tail mass to the cutoff value.
    """
    cdf = np.cumsum(np.asarray(pmf, dtype=float))
    cdf[-1] = 1.0
    return cdf


def inverse_cdf(cdf, u):
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


def sample_independent(pmfs, n_shots, seed, block_size=DEFAULT_BLOCK_SIZE, workers=1):
    """Draw patterns whose modes are independent with the given marginals.

    Args:
        pmfs (list[array]): per-mode probability tables over ``0..cutoff_i``.

    Returns:
        dict: pattern tuple -> count.
    """
    cdfs = [cdf_table(p) for p in pmfs]
    radices = np.array([c.size for c in cdfs], dtype=np.int64)
    m = len(cdfs)
    if m == 0:
        return {(): int(n_shots)}
    strides = np.ones(m, dtype=np.int64)
    for k in range(m - 2, -1, -1):
        strides[k] = strides[k + 1] * radices[k + 1]
    n_codes = int(np.prod(radices.astype(float)))
    dense = n_codes <= _DENSE_CODES

    def draw(rng, size):
        u = rng.random((size, m))
        code = np.zeros(size, dtype=np.int64)
        for k in range(m):
            code += inverse_cdf(cdfs[k], u[:, k]) * strides[k]
        if dense:
            return np.bincount(code, minlength=n_codes)
        keys, counts = np.unique(code, return_counts=True)
        return _SparseCounts(dict(zip(keys.tolist(), counts.tolist())))

    hist = run_blocks(draw, n_shots, seed, block_size, workers)
    if dense:
        nz = np.flatnonzero(hist)
        items = zip(nz.tolist(), hist[nz].tolist())
    else:
        items = sorted(hist.data.items())
    return {_decode(c, strides, radices): n for c, n in items}


def sample_categorical(probs, n_shots, seed, block_size=DEFAULT_BLOCK_SIZE, workers=1):
    """Counts per category index for i.i.d. draws from ``probs``."""
    cdf = cdf_table(probs)

    def draw(rng, size):
        return np.bincount(inverse_cdf(cdf, rng.random(size)), minlength=cdf.size)

    return run_blocks(draw, n_shots, seed, block_size, workers)


def _decode(code, strides, radices):
    return tuple(int(code // s % r) for s, r in zip(strides, radices))


class _SparseCounts:
    __slots__ = ("data",)

    def __init__(self, data):
        self.data = data

    def __add__(self, other):
        merged = dict(self.data)
        for k, v in other.data.items():
            merged[k] = merged.get(k, 0) + v
        return _SparseCounts(merged)

