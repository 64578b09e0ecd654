import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import polar

from reference import overlap_fcf, random_orthogonal
from vibronic import (
    DisplacedSqueezedMode,
    DoktorovDecomposition,
    Tier,
    ValidationError,
    VibronicProblem,
    decompose,
    filter_modes,
    gbs_fcf,
    no_frequency_change_decompose,
    parallel_fcf,
    recommend_tier,
    select_modes,
)
from vibronic.constants import (
    DELTA_Q_UNITS,
    HARTREE_TO_WAVENUMBER,
    beta_to_delta_q,
    delta_q_to_beta,
)
from vibronic.gbs import build_gaussian
from vibronic.model import jacobian

PRINTED_UL = np.array([
    [-0.072, -0.692, -0.079, -0.121, -0.278, -0.641, 0.086],
    [0.172, 0.038, -0.765, 0.375, -0.463, 0.155, -0.069],
    [0.698, -0.179, -0.100, 0.260, 0.579, -0.197, -0.170],
    [0.483, 0.081, 0.561, 0.315, -0.528, -0.007, 0.260],
    [0.363, -0.269, -0.169, -0.575, 0.003, 0.444, 0.489],
    [0.005, 0.523, -0.231, -0.028, 0.140, -0.507, 0.629],
    [-0.336, -0.369, 0.038, 0.589, 0.274, 0.269, 0.505],
])
PRINTED_R = np.array([-0.148, -0.085, -0.027, 0.029, 0.045, 0.066, 0.122])


def _problem(**kw):
    base = dict(name="t", omega_initial=[1000.0], omega_final=[1000.0], beta=[0.0])
    base.update(kw)
    return VibronicProblem(**base)


def test_hartree_conversion():
    assert HARTREE_TO_WAVENUMBER == pytest.approx(219474.6313632, rel=1e-10)


@pytest.mark.parametrize("unit", sorted(DELTA_Q_UNITS))
def test_delta_q_round_trip(unit):
    dq = np.array([0.3, -1.2, 4.0])
    w = np.array([500.0, 1500.0, 3000.0])
    assert np.allclose(beta_to_delta_q(delta_q_to_beta(dq, w, unit), w, unit), dq, rtol=1e-14)


def test_delta_q_unit_scale():
    # 1 amu^1/2 bohr = sqrt(1822.888...) atomic units
    w = [1000.0]
    ratio = delta_q_to_beta([1.0], w, "amu^1/2 bohr")[0] / delta_q_to_beta([1.0], w, "au")[0]
    assert ratio == pytest.approx(math.sqrt(1822.888486), rel=1e-8)


def test_identity_decomposition():
    p = VibronicProblem("id", [800.0, 1200.0], [800.0, 1200.0], beta=[0.0, 0.0])
    d = decompose(p)
    assert np.array_equal(d.u_left, np.eye(2))
    assert np.allclose(d.sigma, 1.0, atol=1e-15)
    assert np.allclose(d.r, 0.0, atol=1e-15)
    assert np.all(d.beta == 0)
    assert recommend_tier(d) is Tier.LINEAR


def test_single_mode_frequency_change():
    d = decompose(_problem(omega_final=[4000.0]))
    assert d.sigma[0] == pytest.approx(2.0, rel=1e-15)
    assert d.r[0] == pytest.approx(math.log(2.0), rel=1e-15)


@pytest.mark.parametrize("dq", [0.7, -0.7, 25.0])
def test_single_mode_matches_wavefunction_overlap(dq):
    # independent check of the squeezing sign and the displacement convention
    w, wp = [1000.0], [2500.0]
    d = decompose(_problem(omega_initial=w, omega_final=wp, beta=None, delta_q=[dq]))
    for n in range(6):
        assert parallel_fcf(d, (n,)) == pytest.approx(
            overlap_fcf(w, wp, [[1.0]], [dq], (n,), points=2001), abs=1e-10
        )


@pytest.mark.parametrize("angle", [0.3, -1.1])
def test_two_mode_duschinsky_matches_wavefunction_overlap(angle):
    c, s = math.cos(angle), math.sin(angle)
    u = [[c, -s], [s, c]]
    w, wp, dq = [1000.0, 1600.0], [800.0, 1900.0], [15.0, -10.0]
    d = decompose(VibronicProblem("t", w, wp, u, delta_q=dq))
    state = build_gaussian(d)
    for pattern in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (3, 1), (1, 3)]:
        assert gbs_fcf(state, pattern) == pytest.approx(overlap_fcf(w, wp, u, dq, pattern), abs=1e-10)


def test_decompose_is_bitwise_deterministic():
    rng = np.random.default_rng(1)
    u = random_orthogonal(4, rng)
    p = VibronicProblem("d", rng.uniform(500, 3000, 4), rng.uniform(500, 3000, 4), u, beta=rng.normal(size=4))
    a, b = decompose(p), decompose(p)
    assert a.u_left.tobytes() == b.u_left.tobytes()
    assert a.sigma.tobytes() == b.sigma.tobytes()
    assert a.u_right.tobytes() == b.u_right.tobytes()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 6))
def test_decomposition_reconstructs_jacobian(seed, m):
    rng = np.random.default_rng(seed)
    w = rng.uniform(200.0, 4000.0, m)
    wp = rng.uniform(200.0, 4000.0, m)
    p = VibronicProblem("h", w, wp, random_orthogonal(m, rng), beta=rng.normal(size=m))
    d = decompose(p)
    assert np.max(np.abs(d.reconstruct() - jacobian(p))) < 1e-10
    # |det J| = prod sqrt(w'/w) fixes the sum of squeezing parameters
    assert np.sum(d.r) == pytest.approx(0.5 * np.sum(np.log(wp / w)), abs=1e-10)
    assert np.max(np.abs(d.u_left.T @ d.u_left - np.eye(m))) < 1e-12


def test_no_frequency_change_requires_equal_frequencies():
    with pytest.raises(ValidationError):
        no_frequency_change_decompose(_problem(omega_final=[1100.0]))
    rng = np.random.default_rng(3)
    w = rng.uniform(300, 3000, 5)
    d = no_frequency_change_decompose(VibronicProblem("n", w, w, random_orthogonal(5, rng), beta=np.zeros(5)))
    assert abs(np.sum(d.r)) < 1e-10


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(omega_initial=[0.0]),
        dict(omega_final=[-5.0]),
        dict(omega_final=[1000.0, 2000.0]),
        dict(omega_initial=[float("nan")]),
        dict(beta=[float("inf")]),
        dict(beta=None),
        dict(delta_q=[1.0]),
        dict(beta=None, delta_q=[1.0], delta_q_unit="furlong"),
        dict(duschinsky=[[1.0, 0.0]]),
        dict(duschinsky=[[1.001]]),
        dict(squeezing=[0.1, 0.2]),
    ],
)
def test_problem_validation(kwargs):
    with pytest.raises(ValidationError):
        _problem(**kwargs)


def test_near_orthogonal_accepted():
    _problem(duschinsky=[[1.0 + 5e-9]])


def test_mode_phase_wrapping_and_derived_values():
    mode = DisplacedSqueezedMode.from_complex(-0.5, -0.2, 1500.0)
    assert 0.0 <= mode.beta_phase < 2 * math.pi
    assert mode.beta_phase == pytest.approx(math.pi)
    assert mode.r_phase == pytest.approx(math.pi)
    assert mode.huang_rhys() == 0.25
    assert mode.reorganization_energy() == pytest.approx(375.0)
    assert mode.beta == pytest.approx(-0.5)
    with pytest.raises(ValidationError):
        DisplacedSqueezedMode(beta_abs=-1.0)


def test_squeezing_override():
    d = decompose(_problem(omega_final=[4000.0], squeezing=[0.1j]))
    assert d.squeezing_overridden
    assert d.modes[0].r == pytest.approx(0.1j)
    assert d.sigma[0] == pytest.approx(2.0)


def test_recommend_parallel_for_squeezed_independent_modes():
    d = DoktorovDecomposition.from_parts(np.eye(2), np.exp([0.3, 0.0]), [0.5, 0.5], [1000.0, 1500.0])
    assert recommend_tier(d, eps_r=0.01) is Tier.PARALLEL


def test_recommend_full_for_printed_formic_rotation():
    # the classifier is conservative: strong U_L mixing forces the full tier
    u, _ = polar(PRINTED_UL)
    d = DoktorovDecomposition.from_parts(u, np.exp(PRINTED_R), 0.3, 1000.0)
    assert recommend_tier(d, eps_u=0.1) is Tier.FULL


def test_recommend_rejects_bad_thresholds():
    d = DoktorovDecomposition.from_parts(np.eye(1), [1.0], [0.0], [1.0])
    with pytest.raises(ValidationError):
        recommend_tier(d, eps_r=0.0)


def _modes(s_values):
    return [DisplacedSqueezedMode.from_complex(math.sqrt(s), 0.0, 1000.0) for s in s_values]


@pytest.mark.parametrize(
    "s_values, min_s, kept",
    [((0.5, 5e-5), 1e-4, [0]), ((1e-4,), 1e-4, []), ((0.0, 0.3), 0.0, [1])],
)
def test_select_modes(s_values, min_s, kept):
    assert select_modes(_modes(s_values), min_s) == kept


def test_filter_modes():
    d = DoktorovDecomposition.from_parts(np.eye(3), [1.0, 1.2, 1.0], [0.7, 0.001, 0.2], [500.0, 900.0, 1400.0])
    out = filter_modes(d, 1e-4)
    assert out.num_modes == 2
    assert np.array_equal(out.omega_final, [500.0, 1400.0])
    assert filter_modes(d, 0.0) is d
    c, s = math.cos(0.2), math.sin(0.2)
    mixed = DoktorovDecomposition.from_parts([[c, -s], [s, c]], [1.0, 1.0], [0.5, 0.0], [1.0, 2.0])
    with pytest.raises(ValidationError):
        filter_modes(mixed)
