r"""Full Duschinsky tier: Gaussian boson sampling of :math:`D(\beta)R(U_L)S(\Sigma)|0\rangle`.

States are stored as quadrature mean and covariance in ``xxpp`` ordering
with :math:`\hbar = 2` (vacuum covariance is the identity).  All
convention-dependent constants live in :func:`build_gaussian` and
:func:`pure_kernel`.

Probabilities use the loop-hafnian formula for pure Gaussian states: the
Fock amplitude of pattern ``m`` is

.. math:: \langle m|\psi\rangle = \langle 0|\psi\rangle\,
          \frac{\operatorname{lhaf}(\tilde B_m)}{\sqrt{\prod_i m_i!}},

where :math:`\tilde B_m` repeats rows and columns of the kernel :math:`B`
according to ``m`` and carries the loop vector :math:`\gamma` on its diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .hafnian import loop_hafnian, reduction
from .linear import as_pattern
from .model import decompose
from .oracle import fock_oracle_fcf, fock_oracle_state  # noqa: F401
from .sampling import DEFAULT_BLOCK_SIZE, SampleSet, sample_categorical

HBAR = 2.0
PHYSICALITY_TOL = 1e-9
PURITY_TOL = 1e-8
DEFAULT_MAX_PHOTONS = 20


def _omega_form(m):
    z, i = np.zeros((m, m)), np.eye(m)
    return np.block([[z, i], [-i, z]])


@dataclass(frozen=True)
class GaussianState:
    """Quadrature mean and covariance of an ``M``-mode Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray
    ordering: str = "xxpp"
    hbar: float = HBAR
    omega_final: np.ndarray | None = None

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        n = mean.size
        if n % 2 or cov.shape != (n, n):
            raise ValidationError("mean must have length 2M and cov shape 2M x 2M")
        if self.ordering != "xxpp":
            raise ValidationError(f"unsupported quadrature ordering {self.ordering!r}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValidationError("covariance matrix is not symmetric")
        heis = cov + 0.5j * self.hbar * _omega_form(n // 2)
        if np.linalg.eigvalsh(heis).min() < -PHYSICALITY_TOL:
            raise ValidationError("covariance violates the uncertainty principle")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if self.omega_final is not None:
            w = np.array(self.omega_final, dtype=float)
            w.setflags(write=False)
            object.__setattr__(self, "omega_final", w)

    @property
    def num_modes(self):
        return self.mean.size // 2

    def complex_mean(self):
        m = self.num_modes
        return (self.mean[:m] + 1j * self.mean[m:]) / math.sqrt(2.0 * self.hbar)

    def symplectic_eigenvalues(self):
        """Williamson spectrum in units of the vacuum noise, ascending."""
        m = self.num_modes
        ev = np.abs(np.linalg.eigvals(1j * _omega_form(m) @ self.cov)) * 2.0 / self.hbar
        return np.sort(ev)[::2]

    def is_pure(self, tol=PURITY_TOL):
        return bool(np.all(np.abs(self.symplectic_eigenvalues() - 1.0) < tol))


def _squeezer(r_abs, theta):
    # S(r) = exp((r a^dag^2 - r^* a^2)/2); theta = 0 stretches x
    ch, sh = math.cosh(r_abs), math.sinh(r_abs)
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[ch + c * sh, s * sh], [s * sh, ch - c * sh]])


def passive_symplectic(u):
    """Real ``xxpp`` representation of the mode transformation ``a -> u a``."""
    u = np.asarray(u, dtype=complex)
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def build_gaussian(decomp):
    """Gaussian state of the Doktorov operator applied to vacuum.

    Squeezing first, then the interferometer ``u_left``, then displacement.
    ``u_right`` acts on vacuum and is never consulted.
    """
    m = decomp.num_modes
    sq = np.zeros((2 * m, 2 * m))
    for k, mode in enumerate(decomp.modes):
        blk = _squeezer(mode.r_abs, mode.r_phase)
        sq[np.ix_([k, k + m], [k, k + m])] = blk
    s = passive_symplectic(decomp.u_left) @ sq
    cov = 0.5 * HBAR * s @ s.T
    beta = decomp.beta
    mean = math.sqrt(2.0 * HBAR) * np.concatenate([beta.real, beta.imag])
    return GaussianState(mean=mean, cov=cov, omega_final=decomp.omega_final)


def q_matrix(state):
    """Husimi covariance ``Q = sigma + I/2`` in the ``(a, a^dag)`` basis."""
    m = state.num_modes
    scale = 2.0 / state.hbar
    x = state.cov[:m, :m] * scale
    xp = state.cov[:m, m:] * scale
    p = state.cov[m:, m:] * scale
    eye = np.eye(m)
    aidaj = (x + p + 1j * (xp - xp.T) - 2.0 * eye) / 4.0
    aiaj = (x - p + 1j * (xp + xp.T)) / 4.0
    return np.block([[aidaj, aiaj.conj()], [aiaj, aidaj.conj()]]) + np.eye(2 * m)


def pure_kernel(state):
    """Kernel ``B``, loop vector ``gamma`` and vacuum probability of a pure state."""
    m = state.num_modes
    q = q_matrix(state)
    qinv = np.linalg.inv(q)
    xmat = np.block([[np.zeros((m, m)), np.eye(m)], [np.eye(m), np.zeros((m, m))]])
    a = xmat @ (np.eye(2 * m) - qinv).conj()
    # A = B^* (+) B in this basis; the lower block is the amplitude kernel
    b = a[m:, m:]
    b = 0.5 * (b + b.T)
    alpha = state.complex_mean()
    gamma = alpha - b @ alpha.conj()
    abar = np.concatenate([alpha, alpha.conj()])
    p0 = np.exp(-0.5 * (abar @ qinv @ abar.conj())).real / math.sqrt(np.linalg.det(q).real)
    return b, gamma, p0


def _check_pure(state):
    if not state.is_pure():
        raise ValidationError("the Gaussian sampling path handles pure states only")


def gbs_fcf(state, m, max_photons=DEFAULT_MAX_PHOTONS):
    """Probability of detecting pattern ``m`` from a pure Gaussian state."""
    pattern = as_pattern(m, state.num_modes)
    if sum(pattern) > max_photons:
        raise ValidationError(f"pattern {pattern} exceeds the photon budget {max_photons}")
    _check_pure(state)
    b, gamma, p0 = pure_kernel(state)
    lh = loop_hafnian(reduction(b, pattern), reduction(gamma, pattern))
    norm = math.prod(math.factorial(n) for n in pattern)
    return float(p0 * abs(lh) ** 2 / norm)


def patterns_up_to(num_modes, photon_budget):
    """All patterns with at most ``photon_budget`` photons, ordered by total."""
    out = []
    for total in range(photon_budget + 1):
        out.extend(_fixed_total(num_modes, total))
    return out


def _fixed_total(num_modes, total):
    if num_modes == 0:
        return [()] if total == 0 else []
    if num_modes == 1:
        return [(total,)]
    return [
        (n, *rest) for n in range(total, -1, -1) for rest in _fixed_total(num_modes - 1, total - n)
    ]


def gbs_enumerate(state, photon_budget):
    """Probabilities of every pattern with at most ``photon_budget`` photons.

    Amplitudes come from the multidimensional Hermite recurrence
    ``a(n + e_i) = (gamma_i a(n) + sum_j B_ij sqrt(n_j) a(n - e_j)) / sqrt(n_i + 1)``,
    which yields the same loop hafnians as :func:`gbs_fcf` at O(M) cost per pattern.

    Returns:
        tuple: ``(list of (pattern, probability), captured_mass)``.
    """
    if photon_budget < 0:
        raise ValidationError("photon_budget must be non-negative")
    _check_pure(state)
    m = state.num_modes
    b, gamma, p0 = pure_kernel(state)
    amp = {(0,) * m: math.sqrt(p0)}
    out = []
    for pattern in patterns_up_to(m, photon_budget):
        if any(pattern):
            i = next(k for k, n in enumerate(pattern) if n)
            prev = list(pattern)
            prev[i] -= 1
            prev_t = tuple(prev)
            val = gamma[i] * amp[prev_t]
            for j in range(m):
                if prev[j]:
                    lower = list(prev)
                    lower[j] -= 1
                    val += b[i, j] * math.sqrt(prev[j]) * amp[tuple(lower)]
            amp[pattern] = val / math.sqrt(pattern[i])
        out.append((pattern, float(abs(amp[pattern]) ** 2)))
    captured = math.fsum(p for _, p in out)
    return out, captured


def gbs_sample(
    state,
    n_shots,
    seed,
    photon_budget=10,
    mass_floor=0.99,
    block_size=DEFAULT_BLOCK_SIZE,
    workers=1,
):
    """Exhaustive enumeration within the photon budget, then categorical draws.

    Raises:
        NumericalError: if the enumerated mass is below ``mass_floor``.
    """
    table, captured = gbs_enumerate(state, photon_budget)
    if captured < mass_floor:
        raise NumericalError(
            f"photon budget {photon_budget} captures only {captured:.6f} of the probability "
            f"(floor {mass_floor})"
        )
    probs = np.array([p for _, p in table]) / captured
    hist = sample_categorical(probs, n_shots, seed, block_size, workers)
    counts = {table[k][0]: int(hist[k]) for k in np.flatnonzero(hist)}
    freqs = state.omega_final if state.omega_final is not None else np.ones(state.num_modes)
    return SampleSet(
        n_shots=int(n_shots),
        counts=counts,
        mode_frequencies=freqs,
        seed=seed,
        captured_mass=captured,
    )


def no_frequency_change_decompose(problem, rtol=1e-12):
    """Decomposition of a problem with pure Duschinsky mixing (``omega == omega'``).

    Squeezing is generally non-zero here even though no frequency changes,
    but the parameters always satisfy ``sum(r) == log|det U| == 0``.
    """
    if not np.allclose(problem.omega_initial, problem.omega_final, rtol=rtol, atol=0.0):
        raise ValidationError("initial and final frequencies differ")
    return decompose(problem)

