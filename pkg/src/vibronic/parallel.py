r"""Parallel approximation: independent displaced squeezed states.

The single-mode photon statistics of :math:`D(\beta)S(r)|0\rangle` have the
closed form

.. math::

    P(m) = \frac{(\tfrac12\tanh|r|)^m}{m!\cosh|r|}
           \left|H_m\!\left(\frac{\gamma}{\sqrt{\epsilon\sinh 2|r|}}\right)\right|^2
           \exp\left[-|\beta|^2 - \operatorname{Re}(\beta^{*2}\epsilon)\tanh|r|\right]

with :math:`\gamma = \beta\cosh|r| + \beta^*\epsilon\sinh|r|`.  For the
squeezing convention of :mod:`vibronic.model` the phase factor is
:math:`\epsilon = -e^{i\theta}`.

The Hermite factor is evaluated through the rescaled sequence
:math:`h_n = H_n(z)\,s^n/\sqrt{n!}` with :math:`s^2 = \tfrac12\tanh|r|`, which
obeys

.. math:: h_{n+1} = \frac{2zs\,h_n - 2\sqrt{n}\,s^2 h_{n-1}}{\sqrt{n+1}},
          \qquad 2zs = \frac{\gamma\,\epsilon^{-1/2}}{\cosh|r|}.

Both coefficients stay bounded as :math:`r \to 0`, so nothing overflows even
where :math:`z` itself diverges.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import NumericalError, ValidationError
from .linear import as_pattern, mode_list, poisson_table, product_support
from .sampling import DEFAULT_BLOCK_SIZE, SampleSet, sample_independent

#: below this squeezing magnitude the Poisson limit is used verbatim
R_POISSON_LIMIT = 1e-12

MAX_CUTOFF = 4096


def _squeeze_factor(mode):
    # -e^{i theta}: positive r stretches the position quadrature
    return -complex(math.cos(mode.r_phase), math.sin(mode.r_phase))


def dsq_table(mode, cutoff):
    """Photon-number probabilities ``P(0..cutoff)`` of one displaced squeezed mode."""
    if cutoff < 0:
        raise ValidationError("cutoff must be non-negative")
    r = mode.r_abs
    if r < R_POISSON_LIMIT:
        return poisson_table(mode.huang_rhys(), cutoff)

    beta = mode.beta
    eps = _squeeze_factor(mode)
    ch, th = math.cosh(r), math.tanh(r)
    gamma = beta * ch + beta.conjugate() * eps * math.sinh(r)
    a = gamma / cmath.sqrt(eps) / ch
    b = th
    h = np.empty(cutoff + 1, dtype=complex)
    h[0] = 1.0
    if cutoff >= 1:
        h[1] = a
    for n in range(1, cutoff):
        h[n + 1] = (a * h[n] - b * math.sqrt(n) * h[n - 1]) / math.sqrt(n + 1)

    expo = -abs(beta) ** 2 - (beta.conjugate() ** 2 * eps).real * th
    return np.abs(h) ** 2 * (math.exp(expo) / ch)


def dsq_mode_prob(mode, m):
    """Probability of ``m`` photons in a single displaced squeezed mode."""
    m = int(m)
    if m < 0:
        raise ValidationError("photon number must be non-negative")
    return float(dsq_table(mode, m)[m])


def parallel_fcf(modes, m):
    """Product of single-mode displaced-squeezed probabilities."""
    modes = mode_list(modes)
    pattern = as_pattern(m, len(modes))
    p = 1.0
    for mode, n in zip(modes, pattern):
        p *= dsq_mode_prob(mode, n)
    return p


def mode_table(mode, tail):
    """Smallest table ``P(0..c)`` with listed mass ``>= 1 - tail``."""
    cutoff = max(16, int(4 * (mode.huang_rhys() + math.sinh(mode.r_abs) ** 2)) + 8)
    while cutoff <= MAX_CUTOFF:
        table = dsq_table(mode, cutoff)
        mass = np.cumsum(table)
        hit = np.flatnonzero(mass >= 1.0 - tail)
        if hit.size:
            return table[: hit[0] + 1]
        cutoff *= 2
    raise NumericalError(f"photon-number table did not reach mass 1 - {tail:g} below {MAX_CUTOFF}")


def parallel_enumerate(modes, tail_bound=1e-6):
    """Deterministic ``(pattern, probability)`` list with mass ``>= 1 - tail_bound``."""
    if not 0.0 < tail_bound < 1.0:
        raise ValidationError("tail_bound must lie in (0, 1)")
    modes = mode_list(modes)
    share = tail_bound / max(len(modes), 1)
    return product_support([mode_table(mode, share) for mode in modes])


def parallel_sample(modes, n_shots, seed, block_size=DEFAULT_BLOCK_SIZE, workers=1, tail=1e-14):
    """Inverse-CDF sampling of independent displaced squeezed modes.

    Residual probability beyond each table's cutoff is assigned to the cutoff.
    """
    modes = mode_list(modes)
    tables = [mode_table(mode, tail) for mode in modes]
    counts = sample_independent(tables, n_shots, seed, block_size, workers)
    return SampleSet(
        n_shots=int(n_shots),
        counts=counts,
        mode_frequencies=[mode.omega_final for mode in modes],
        seed=seed,
    )
