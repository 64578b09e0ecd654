import math

import numpy as np
import pytest
from scipy.linalg import polar

from reference import patterns_upto, random_unitary, squeezed_vacuum
from vibronic import (
    DoktorovDecomposition,
    GaussianState,
    NumericalError,
    ValidationError,
    VibronicProblem,
    build_gaussian,
    decompose,
    fock_oracle_fcf,
    gbs_enumerate,
    gbs_fcf,
    gbs_sample,
    linear_fcf,
    parallel_fcf,
    parse_molecule,
)
from vibronic.gbs import fock_oracle_state, patterns_up_to, pure_kernel


def _dec(u, r, beta, omega=None):
    m = len(r)
    omega = omega or [1000.0 + 250.0 * k for k in range(m)]
    r = np.asarray(r, dtype=complex)
    return DoktorovDecomposition.from_parts(u, np.exp(r.real), beta, omega, squeezing=r)


def test_vacuum_state():
    state = build_gaussian(_dec(np.eye(2), [0, 0], [0, 0]))
    assert np.array_equal(state.mean, np.zeros(4))
    assert np.allclose(state.cov, np.eye(4), atol=1e-15)
    assert state.is_pure()
    assert gbs_fcf(state, (0, 0)) == pytest.approx(1.0, abs=1e-15)
    table, captured = gbs_enumerate(state, 4)
    assert captured == pytest.approx(1.0, abs=1e-15)
    s = gbs_sample(state, 500, seed=1)
    assert dict(s.counts) == {(0, 0): 500}


@pytest.mark.parametrize("r", [0.3, -0.5])
def test_squeezed_variances_match_fock_moments(r):
    # with S(r) = exp((r a^dag^2 - r^* a^2)/2), real r > 0 stretches x
    dec = _dec(np.eye(1), [r], [0.0])
    state = build_gaussian(dec)
    assert state.cov[0, 0] == pytest.approx(math.exp(2 * r), rel=1e-12)
    assert state.cov[1, 1] == pytest.approx(math.exp(-2 * r), rel=1e-12)

    amps, deficit = fock_oracle_state(dec, cutoff=60)
    assert deficit < 1e-12
    dim = amps.size
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    x, p = a + a.T, -1j * (a - a.T)
    assert np.vdot(amps, x @ x @ amps).real == pytest.approx(state.cov[0, 0], rel=1e-9)
    assert np.vdot(amps, p @ p @ amps).real == pytest.approx(state.cov[1, 1], rel=1e-9)


def test_displacement_mean():
    state = build_gaussian(_dec(np.eye(1), [0.0], [0.5 - 0.25j]))
    assert np.allclose(state.mean, [2 * 0.5, 2 * -0.25])
    assert state.complex_mean() == pytest.approx([0.5 - 0.25j])


def test_beam_splitter_on_one_squeezed_mode():
    bs = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2)
    state = build_gaussian(_dec(bs, [0.6, 0.0], [0.0, 0.0]))
    assert abs(state.cov[0, 1]) > 0.1
    table, _ = gbs_enumerate(state, 12)
    marg0, marg1 = np.zeros(13), np.zeros(13)
    for (n0, n1), p in table:
        marg0[n0] += p
        marg1[n1] += p
    assert np.allclose(marg0, marg1, atol=1e-14)


@pytest.mark.parametrize("r, beta", [([0.2, -0.4], [0.5, 1.0j]), ([0.0, 0.0], [0.9, -0.3])])
def test_diagonal_interferometer_matches_parallel(r, beta):
    dec = _dec(np.eye(2), r, beta)
    state = build_gaussian(dec)
    for pattern in patterns_upto(2, 7):
        assert gbs_fcf(state, pattern) == pytest.approx(parallel_fcf(dec, pattern), abs=1e-10)
        if not any(r):
            assert gbs_fcf(state, pattern) == pytest.approx(linear_fcf(dec, pattern), abs=1e-10)


def test_squeezed_vacuum_closed_form():
    state = build_gaussian(_dec(np.eye(1), [0.4], [0.0]))
    for n in range(0, 16):
        assert gbs_fcf(state, (n,)) == pytest.approx(squeezed_vacuum(0.4, n), abs=1e-14)


def test_single_mode_fock_oracle_value():
    dec = _dec(np.eye(1), [0.3], [0.8])
    assert gbs_fcf(build_gaussian(dec), (2,)) == pytest.approx(fock_oracle_fcf(dec, (2,)), abs=1e-10)


def test_formic_style_two_mode_subproblem_matches_oracle(data_dir):
    full = parse_molecule(data_dir / "formic_style.json")
    keep = [3, 4]
    u, _ = polar(full.duschinsky[np.ix_(keep, keep)])
    sub = VibronicProblem(
        "formic-style pair",
        full.omega_initial[keep],
        full.omega_final[keep],
        u,
        beta=full.beta[keep],
    )
    dec = decompose(sub)
    state = build_gaussian(dec)
    amps, deficit = fock_oracle_state(dec, cutoff=30)
    assert deficit < 1e-8
    for pattern in patterns_upto(2, 6):
        assert gbs_fcf(state, pattern) == pytest.approx(abs(amps[pattern]) ** 2, abs=1e-8)


def test_three_mode_complex_against_oracle():
    rng = np.random.default_rng(31)
    dec = _dec(random_unitary(3, rng), [0.3, -0.2j, 0.1], [0.4, -0.3 + 0.2j, 0.1j])
    state = build_gaussian(dec)
    for pattern in [(0, 0, 0), (1, 0, 0), (1, 1, 0), (2, 0, 1), (1, 1, 1), (0, 3, 1)]:
        assert gbs_fcf(state, pattern) == pytest.approx(fock_oracle_fcf(dec, pattern), abs=1e-8)


def test_enumerate_agrees_with_fcf():
    rng = np.random.default_rng(4)
    state = build_gaussian(_dec(random_unitary(3, rng), [0.25, -0.1, 0.3j], [0.5, 0.2j, -0.6]))
    table, captured = gbs_enumerate(state, 6)
    for pattern, p in table:
        assert p == pytest.approx(gbs_fcf(state, pattern), abs=1e-14)
    assert captured == pytest.approx(math.fsum(p for _, p in table), abs=0)
    assert [pat for pat, _ in table] == patterns_up_to(3, 6)


def test_pattern_order():
    pats = patterns_up_to(3, 4)
    assert len(pats) == math.comb(4 + 3, 3)
    assert pats[0] == (0, 0, 0)
    totals = [sum(p) for p in pats]
    assert totals == sorted(totals)
    assert len(set(pats)) == len(pats)


def test_kernel_of_vacuum():
    b, gamma, p0 = pure_kernel(build_gaussian(_dec(np.eye(2), [0, 0], [0, 0])))
    assert np.allclose(b, 0) and np.allclose(gamma, 0)
    assert p0 == pytest.approx(1.0)


def test_state_validation():
    with pytest.raises(ValidationError):
        GaussianState(np.zeros(2), [[1.0, 0.2], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        GaussianState(np.zeros(2), 0.5 * np.eye(2))
    with pytest.raises(ValidationError):
        GaussianState(np.zeros(3), np.eye(3))
    with pytest.raises(ValidationError):
        GaussianState(np.zeros(2), np.eye(2), ordering="xpxp")
    thermal = GaussianState(np.zeros(2), 2.0 * np.eye(2))
    assert not thermal.is_pure()
    assert thermal.symplectic_eigenvalues() == pytest.approx([2.0])
    with pytest.raises(ValidationError):
        gbs_fcf(thermal, (0,))


def test_budget_errors():
    state = build_gaussian(_dec(np.eye(1), [0.0], [1.5]))
    with pytest.raises(ValidationError):
        gbs_fcf(state, (25,))
    with pytest.raises(NumericalError):
        gbs_sample(state, 100, seed=0, photon_budget=2)
    with pytest.raises(ValidationError):
        gbs_enumerate(state, -1)


def test_sample_matches_parallel_statistics():
    dec = _dec(np.eye(2), [0.3, -0.2], [0.7, 0.4])
    n = 1_000_000
    s = gbs_sample(build_gaussian(dec), n, seed=3, photon_budget=14)
    assert s.captured_mass >= 0.999
    for pattern in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (3, 1)]:
        p = parallel_fcf(dec, pattern)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(s.counts.get(pattern, 0) / n - p) < 5 * sigma


def test_sample_reproducible(data_dir):
    state = build_gaussian(decompose(parse_molecule(data_dir / "mild_squeeze_three_mode.json")))
    a = gbs_sample(state, 300_000, seed=12)
    b = gbs_sample(state, 300_000, seed=12, workers=2)
    assert a == b
    assert a.captured_mass >= 0.999
