import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_hermite

from reference import squeezed_vacuum
from vibronic import (
    DisplacedSqueezedMode,
    DoktorovDecomposition,
    ValidationError,
    dsq_mode_prob,
    fock_oracle_fcf,
    linear_enumerate,
    linear_fcf,
    parallel_enumerate,
    parallel_fcf,
    parallel_sample,
)
from vibronic.parallel import dsq_table


def _mode(beta, r, omega=1000.0):
    return DisplacedSqueezedMode.from_complex(beta, r, omega)


def _hermite_closed_form(mode, n):
    # direct evaluation with physicists' Hermite polynomials, moderate n only
    r, beta = mode.r_abs, mode.beta
    eps = -complex(math.cos(mode.r_phase), math.sin(mode.r_phase))
    gamma = beta * math.cosh(r) + beta.conjugate() * eps * math.sinh(r)
    z = gamma / np.sqrt(eps * math.sinh(2 * r))
    herm = sum(
        c * z**k for k, c in enumerate(np.polynomial.hermite.herm2poly([0] * n + [1]))
    )
    pref = (0.5 * math.tanh(r)) ** n / (math.factorial(n) * math.cosh(r))
    expo = -abs(beta) ** 2 - (beta.conjugate() ** 2 * eps).real * math.tanh(r)
    return pref * abs(herm) ** 2 * math.exp(expo)


def test_hermite_helper_sane():
    assert eval_hermite(3, 0.7) == pytest.approx(
        np.polynomial.hermite.hermval(0.7, [0, 0, 0, 1]), rel=1e-14
    )


@pytest.mark.parametrize("beta", [0.3, -1.1, 0.8 + 0.5j])
@pytest.mark.parametrize("r", [0.2, -0.45, 0.6j])
def test_recurrence_matches_closed_form(beta, r):
    mode = _mode(beta, r)
    for n in range(12):
        assert dsq_mode_prob(mode, n) == pytest.approx(_hermite_closed_form(mode, n), rel=1e-10, abs=1e-15)


def test_squeezed_vacuum_values():
    assert dsq_mode_prob(_mode(0.0, 0.5), 0) == pytest.approx(1 / math.cosh(0.5), rel=1e-14)
    assert dsq_mode_prob(_mode(0.0, 0.5), 0) == pytest.approx(0.886819, abs=5e-7)
    assert dsq_mode_prob(_mode(0.0, 0.5), 1) == 0.0
    for n in range(0, 30, 2):
        assert dsq_mode_prob(_mode(0.0, 0.4), n) == pytest.approx(squeezed_vacuum(0.4, n), rel=1e-12)


@pytest.mark.parametrize("beta", [0.0, 0.5, -1.7, 1j])
def test_unsqueezed_equals_linear(beta):
    mode = _mode(beta, 0.0)
    for n in range(20):
        assert parallel_fcf([mode], (n,)) == pytest.approx(linear_fcf([mode], (n,)), abs=1e-14)


def test_tiny_squeezing_approaches_linear():
    for n in range(10):
        assert dsq_mode_prob(_mode(0.9, 1e-9), n) == pytest.approx(
            linear_fcf([_mode(0.9, 0.0)], (n,)), abs=1e-8
        )


def test_product_over_modes():
    a, b = _mode(0.6, 0.2), _mode(-0.3, -0.5)
    assert parallel_fcf([a, b], (2, 3)) == pytest.approx(
        dsq_mode_prob(a, 2) * dsq_mode_prob(b, 3), rel=1e-15
    )


def test_matches_fock_oracle():
    d = DoktorovDecomposition.from_parts(np.eye(1), [math.exp(0.3)], [0.8], [1000.0])
    for n in range(8):
        assert parallel_fcf(d, (n,)) == pytest.approx(fock_oracle_fcf(d, (n,)), abs=1e-10)


def test_negative_photon_number():
    with pytest.raises(ValidationError):
        dsq_mode_prob(_mode(0.1, 0.1), -1)


@settings(max_examples=60, deadline=None)
@given(
    beta=st.floats(0.0, 2.0),
    beta_phase=st.floats(0.0, 2 * math.pi),
    r=st.floats(0.0, 1.0),
    r_phase=st.floats(0.0, 2 * math.pi),
)
def test_normalization(beta, beta_phase, r, r_phase):
    mode = DisplacedSqueezedMode(beta, beta_phase, r, r_phase)
    table = dsq_table(mode, 120)
    assert np.all(table >= 0)
    assert 1.0 - 1e-9 <= math.fsum(table) <= 1.0 + 1e-12


def test_cutoff_sixty_is_too_short_for_strong_squeezing():
    # the squeezed vacuum at r = 1 leaves more than 1e-9 beyond 60 photons
    tail = 1.0 - math.fsum(squeezed_vacuum(1.0, n) for n in range(61))
    assert tail > 1e-9
    assert 1.0 - math.fsum(dsq_table(_mode(0.0, 1.0), 60)) == pytest.approx(tail, rel=1e-6)


def test_enumerate_reductions():
    modes = [_mode(0.7, 0.0), _mode(-0.4, 0.0)]
    assert parallel_enumerate(modes, 1e-8) == linear_enumerate(modes, 1e-8)
    sv = parallel_enumerate([_mode(0.0, 0.5)], 1e-9)
    assert all(p == 0.0 for (n,), p in sv if n % 2)
    assert math.fsum(p for _, p in sv) >= 1 - 1e-9


def test_sample_parity_and_reproducibility():
    s = parallel_sample([_mode(0.0, 0.5)], 200_000, seed=5)
    assert all(n % 2 == 0 for (n,) in s.counts)
    assert s == parallel_sample([_mode(0.0, 0.5)], 200_000, seed=5, workers=2)


def test_sample_frequencies_within_five_sigma():
    modes = [_mode(0.8, 0.3), _mode(0.2, -0.6)]
    n = 1_000_000
    s = parallel_sample(modes, n, seed=9)
    for pattern in [(0, 0), (1, 0), (2, 0), (0, 2), (1, 2), (3, 1)]:
        p = parallel_fcf(modes, pattern)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(s.counts.get(pattern, 0) / n - p) < 5 * sigma
