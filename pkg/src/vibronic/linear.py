"""Linear coupling approximation: independent coherent states.

Each mode contributes a Poisson distribution with mean equal to its
Huang-Rhys factor; squeezing and mode mixing are ignored.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.stats import poisson

from .errors import ValidationError
from .sampling import DEFAULT_BLOCK_SIZE, SampleSet, sample_independent

PhotonPattern = tuple  # tuple[int, ...], one count per mode

# tail mass below which a truncated table is exact in double precision
EXACT_TAIL = 2.0**-60


def mode_list(modes):
    """Accept either a decomposition or a sequence of modes."""
    return tuple(getattr(modes, "modes", modes))


def as_pattern(m, num_modes):
    pattern = tuple(int(x) for x in m)
    if len(pattern) != num_modes:
        raise ValidationError(f"pattern has {len(pattern)} entries, expected {num_modes}")
    if any(x < 0 for x in pattern) or any(int(x) != x for x in m):
        raise ValidationError(f"pattern {tuple(m)} must hold non-negative integers")
    return pattern


def poisson_pmf(mean, n):
    if n < 0:
        return 0.0
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mean) - mean - math.lgamma(n + 1))


def poisson_cutoff(mean, tail):
    """Smallest ``c`` with ``P(N > c) < tail`` for ``N ~ Poisson(mean)``."""
    if mean == 0.0:
        return 0
    c = int(poisson.ppf(1.0 - tail, mean)) if tail > 1e-12 else int(mean)
    while poisson.sf(c, mean) >= tail:
        c += 1
    while c > 0 and poisson.sf(c - 1, mean) < tail:
        c -= 1
    return c


def poisson_table(mean, cutoff):
    return np.array([poisson_pmf(mean, n) for n in range(cutoff + 1)])


def linear_fcf(modes, m):
    """Franck-Condon factor of pattern ``m``: a product of Poisson pmfs."""
    modes = mode_list(modes)
    pattern = as_pattern(m, len(modes))
    p = 1.0
    for mode, n in zip(modes, pattern):
        p *= poisson_pmf(mode.huang_rhys(), n)
    return p


def product_support(tables):
    """All patterns of independent per-mode tables with non-zero probability."""
    supports = [np.flatnonzero(t) for t in tables]
    out = []
    for pattern in itertools.product(*supports):
        p = 1.0
        for table, n in zip(tables, pattern):
            p *= table[n]
        out.append((tuple(int(n) for n in pattern), float(p)))
    return out


def linear_enumerate(modes, tail_bound=1e-6):
    """Deterministic list of ``(pattern, probability)`` covering ``>= 1 - tail_bound``.

    Each mode is truncated where its own tail drops below ``tail_bound / M``.
    """
    if not 0.0 < tail_bound < 1.0:
        raise ValidationError("tail_bound must lie in (0, 1)")
    modes = mode_list(modes)
    share = tail_bound / max(len(modes), 1)
    tables = []
    for mode in modes:
        s = mode.huang_rhys()
        tables.append(poisson_table(s, poisson_cutoff(s, share)))
    return product_support(tables)


def linear_sample(modes, n_shots, seed, block_size=DEFAULT_BLOCK_SIZE, workers=1):
    """Draw ``n_shots`` patterns with each mode Poisson(``|beta|^2``).

    Draws are by inversion against a cumulative table whose truncated tail
    is below double-precision resolution, so the sampler is exact.
    """
    modes = mode_list(modes)
    tables = []
    for mode in modes:
        s = mode.huang_rhys()
        tables.append(poisson_table(s, poisson_cutoff(s, EXACT_TAIL)))
    counts = sample_independent(tables, n_shots, seed, block_size, workers)
    return SampleSet(
        n_shots=int(n_shots),
        counts=counts,
        mode_frequencies=[mode.omega_final for mode in modes],
        seed=seed,
    )
