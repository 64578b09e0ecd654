r"""Molecular input data and its Doktorov decomposition.

A vibronic transition at zero temperature is fully described by the
Duschinsky matrix :math:`U`, the two frequency vectors and the displacement.
:func:`decompose` maps this onto the photonic parameters of the operator
:math:`D(\beta) R(U_L) S(\Sigma)` acting on vacuum.

Squeezing convention
--------------------
Throughout the package a squeezing parameter :math:`r = |r| e^{i\theta}` acts as

.. math:: S(r) = \exp\left[\tfrac12 \left(r\, a^{\dagger 2} - r^* a^2\right)\right],

so a real positive ``r`` *stretches* the position quadrature by
:math:`e^{r}`.  With :math:`r_i = \ln \Sigma_{ii}` this is the sign for which a
mode whose frequency increases (:math:`\omega' > \omega`) sees the initial
ground state as a wider-than-vacuum wave packet, as it physically is.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .constants import DELTA_Q_UNITS, delta_q_to_beta
from .errors import NumericalError, ValidationError

ORTHOGONALITY_TOL = 1e-8
RECONSTRUCTION_TOL = 1e-10

TWO_PI = 2.0 * math.pi


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _wrap_phase(phi):
    phi = math.fmod(float(phi), TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    # fmod can hand back exactly 2*pi after the shift for tiny negatives
    return 0.0 if phi >= TWO_PI else phi


def _finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")


def orthogonality_error(u):
    """Largest entry of ``|U^T U - I|``."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))


@dataclass(frozen=True)
class VibronicProblem:
    """Raw molecular input for one electronic transition.

    Exactly one of ``delta_q`` (mass-weighted origin shifts, in
    ``delta_q_unit``) and ``beta`` (dimensionless, possibly complex) must be
    given.  ``squeezing`` optionally overrides the squeezing parameters that
    :func:`decompose` would otherwise derive from the singular values.
    """

    name: str
    omega_initial: np.ndarray
    omega_final: np.ndarray
    duschinsky: np.ndarray | None = None
    delta_q: np.ndarray | None = None
    beta: np.ndarray | None = None
    delta_q_unit: str = "au"
    squeezing: np.ndarray | None = None

    def __post_init__(self):
        w = _frozen(self.omega_initial)
        wp = _frozen(self.omega_final)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("omega_initial must be a non-empty vector")
        m = w.size
        if wp.shape != (m,):
            raise ValidationError(f"omega_final has shape {wp.shape}, expected ({m},)")
        _finite("omega_initial", w)
        _finite("omega_final", wp)
        if np.any(w <= 0) or np.any(wp <= 0):
            raise ValidationError("all frequencies must be strictly positive")

        u = np.eye(m) if self.duschinsky is None else np.array(self.duschinsky, dtype=float)
        if u.shape != (m, m):
            raise ValidationError(f"duschinsky has shape {u.shape}, expected ({m}, {m})")
        _finite("duschinsky", u)
        err = orthogonality_error(u)
        if err >= ORTHOGONALITY_TOL:
            raise ValidationError(f"duschinsky matrix is not orthogonal (|U^T U - I| = {err:.3e})")
        u.setflags(write=False)

        if (self.delta_q is None) == (self.beta is None):
            raise ValidationError("exactly one of delta_q and beta must be given")
        if self.delta_q_unit not in DELTA_Q_UNITS:
            raise ValidationError(f"unknown delta_q unit {self.delta_q_unit!r}")
        dq = None if self.delta_q is None else _frozen(self.delta_q)
        b = None if self.beta is None else _frozen(self.beta, complex)
        for label, vec in (("delta_q", dq), ("beta", b)):
            if vec is not None:
                if vec.shape != (m,):
                    raise ValidationError(f"{label} has shape {vec.shape}, expected ({m},)")
                _finite(label, vec)

        sq = None if self.squeezing is None else _frozen(self.squeezing, complex)
        if sq is not None:
            if sq.shape != (m,):
                raise ValidationError(f"squeezing has shape {sq.shape}, expected ({m},)")
            _finite("squeezing", sq)

        object.__setattr__(self, "omega_initial", w)
        object.__setattr__(self, "omega_final", wp)
        object.__setattr__(self, "duschinsky", u)
        object.__setattr__(self, "delta_q", dq)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "squeezing", sq)

    @property
    def num_modes(self):
        return self.omega_initial.size

    def displacement(self):
        """Dimensionless complex displacement vector."""
        if self.beta is not None:
            return np.array(self.beta)
        return delta_q_to_beta(self.delta_q, self.omega_final, self.delta_q_unit).astype(complex)


@dataclass(frozen=True)
class DisplacedSqueezedMode:
    r"""Single-mode parameters of a displaced squeezed state.

    Derived quantities follow from the stored polar forms:
    ``huang_rhys()`` is :math:`|\beta|^2`, ``reorganization_energy()`` is
    :math:`S\omega'` in cm^-1, and ``gamma()`` is the Hermite argument
    numerator of the closed-form photon statistics (see
    :mod:`vibronic.parallel`).
    """

    beta_abs: float
    beta_phase: float = 0.0
    r_abs: float = 0.0
    r_phase: float = 0.0
    omega_final: float = 1.0

    def __post_init__(self):
        if not (self.beta_abs >= 0.0 and self.r_abs >= 0.0):
            raise ValidationError("beta_abs and r_abs must be non-negative")
        for name in ("beta_abs", "beta_phase", "r_abs", "r_phase", "omega_final"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        object.__setattr__(self, "beta_abs", float(self.beta_abs))
        object.__setattr__(self, "r_abs", float(self.r_abs))
        object.__setattr__(self, "beta_phase", _wrap_phase(self.beta_phase))
        object.__setattr__(self, "r_phase", _wrap_phase(self.r_phase))
        object.__setattr__(self, "omega_final", float(self.omega_final))

    @classmethod
    def from_complex(cls, beta, r=0.0, omega_final=1.0):
        beta = complex(beta)
        r = complex(r)
        return cls(
            beta_abs=abs(beta),
            beta_phase=math.atan2(beta.imag, beta.real) if beta else 0.0,
            r_abs=abs(r),
            r_phase=math.atan2(r.imag, r.real) if r else 0.0,
            omega_final=omega_final,
        )

    @property
    def beta(self):
        return self.beta_abs * complex(math.cos(self.beta_phase), math.sin(self.beta_phase))

    @property
    def r(self):
        return self.r_abs * complex(math.cos(self.r_phase), math.sin(self.r_phase))

    def gamma(self):
        b = self.beta
        rot = complex(math.cos(self.r_phase), math.sin(self.r_phase))
        return b * math.cosh(self.r_abs) - b.conjugate() * rot * math.sinh(self.r_abs)

    def huang_rhys(self):
        return self.beta_abs**2

    def reorganization_energy(self):
        return self.huang_rhys() * self.omega_final


@dataclass(frozen=True)
class DoktorovDecomposition:
    """Photonic parameters ``J = u_left @ diag(sigma) @ u_right``.

    ``modes[k]`` carries the displacement of output mode ``k`` and the
    squeezing applied to interferometer input ``k``; the two coincide when
    ``u_left`` is diagonal.
    """

    u_left: np.ndarray
    u_right: np.ndarray
    sigma: np.ndarray
    modes: tuple
    omega_final: np.ndarray
    squeezing_overridden: bool = field(default=False)

    def __post_init__(self):
        object.__setattr__(self, "u_left", _frozen(self.u_left, np.result_type(self.u_left, float)))
        object.__setattr__(self, "u_right", _frozen(self.u_right, np.result_type(self.u_right, float)))
        object.__setattr__(self, "sigma", _frozen(self.sigma))
        object.__setattr__(self, "omega_final", _frozen(self.omega_final))
        object.__setattr__(self, "modes", tuple(self.modes))
        m = len(self.modes)
        if (
            self.u_left.shape != (m, m)
            or self.u_right.shape != (m, m)
            or self.sigma.shape != (m,)
            or self.omega_final.shape != (m,)
        ):
            raise ValidationError("decomposition components have inconsistent sizes")

    @classmethod
    def from_parts(cls, u_left, sigma, beta, omega_final, u_right=None, squeezing=None):
        """Assemble a decomposition directly from photonic parameters.

        ``squeezing`` defaults to ``log(sigma)``.
        """
        sigma = np.asarray(sigma, dtype=float)
        m = sigma.size
        beta = np.broadcast_to(np.asarray(beta, dtype=complex), (m,))
        omega_final = np.broadcast_to(np.asarray(omega_final, dtype=float), (m,))
        r = np.log(sigma) if squeezing is None else np.asarray(squeezing, dtype=complex)
        modes = tuple(
            DisplacedSqueezedMode.from_complex(beta[k], r[k], omega_final[k]) for k in range(m)
        )
        return cls(
            u_left=np.asarray(u_left),
            u_right=np.eye(m) if u_right is None else np.asarray(u_right),
            sigma=sigma,
            modes=modes,
            omega_final=omega_final,
            squeezing_overridden=squeezing is not None,
        )

    @property
    def num_modes(self):
        return len(self.modes)

    @property
    def r(self):
        """Squeezing parameters ``log(sigma)``."""
        return np.log(self.sigma)

    @property
    def beta(self):
        return np.array([mode.beta for mode in self.modes])

    @property
    def squeezing(self):
        """Complex squeezing actually carried by the modes."""
        return np.array([mode.r for mode in self.modes])

    def huang_rhys(self):
        return np.array([mode.huang_rhys() for mode in self.modes])

    def reconstruct(self):
        return (self.u_left * self.sigma) @ self.u_right

    def offdiagonal_norm(self):
        """Frobenius norm of the off-diagonal part of ``u_left``."""
        off = self.u_left - np.diag(np.diag(self.u_left))
        return float(np.linalg.norm(off))


class Tier(str, enum.Enum):
    LINEAR = "linear"
    PARALLEL = "parallel"
    FULL = "full"


def jacobian(problem):
    r"""``J = Omega' U Omega^{-1}`` with ``Omega = diag(sqrt(omega))``."""
    return np.sqrt(problem.omega_final)[:, None] * problem.duschinsky / np.sqrt(problem.omega_initial)[None, :]


def _ordered_svd(j):
    """SVD with singular triplets index-aligned to the natural mode order.

    Columns of ``u`` are matched to modes by maximum overlap and signed so
    that ``diag(u)`` is non-negative wherever it is non-zero.
    """
    m = j.shape[0]
    if not np.any(j - np.diag(np.diag(j))):
        d = np.diag(j)
        return np.eye(m), np.abs(d), np.diag(np.sign(d))

    try:
        u, s, vh = np.linalg.svd(j)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc

    if s[0] - s[-1] <= 1e-14 * s[0]:
        # fully degenerate: any orthogonal u_left works, pick the identity
        sig = np.full(m, s.mean())
        return np.eye(m), sig, j / sig[:, None]

    _, col = linear_sum_assignment(-np.abs(u))
    u, s, vh = u[:, col], s[col], vh[col, :]
    signs = np.where(np.diag(u) < 0, -1.0, 1.0)
    return u * signs, s, vh * signs[:, None]


def decompose(problem):
    """Doktorov decomposition of a :class:`VibronicProblem`.

    Returns:
        DoktorovDecomposition: with ``sigma`` in natural mode order.

    Raises:
        NumericalError: if the SVD fails or does not reconstruct ``J``.
    """
    j = jacobian(problem)
    u, s, vh = _ordered_svd(j)
    if not np.all(s > 0) or not np.all(np.isfinite(s)):
        raise NumericalError("degenerate singular values in J")
    err = float(np.max(np.abs((u * s) @ vh - j)))
    if err >= RECONSTRUCTION_TOL:
        raise NumericalError(f"SVD reconstruction error {err:.3e} exceeds {RECONSTRUCTION_TOL}")

    beta = problem.displacement()
    r = np.log(s).astype(complex) if problem.squeezing is None else problem.squeezing
    modes = tuple(
        DisplacedSqueezedMode.from_complex(beta[k], r[k], problem.omega_final[k])
        for k in range(problem.num_modes)
    )
    return DoktorovDecomposition(
        u_left=u,
        u_right=vh,
        sigma=s,
        modes=modes,
        omega_final=problem.omega_final,
        squeezing_overridden=problem.squeezing is not None,
    )


def recommend_tier(decomp, eps_r=1e-2, eps_u=1e-2):
    """Cheapest approximation tier whose assumptions the decomposition meets.

    ``LINEAR`` needs both negligible squeezing (``max|r| < eps_r``) and a
    near-diagonal ``u_left`` (off-diagonal Frobenius norm ``< eps_u``);
    ``PARALLEL`` needs only the latter.  The test is conservative: mixing
    between modes that carry no squeezing is harmless but still counts.
    """
    if eps_r <= 0 or eps_u <= 0:
        raise ValidationError("tier thresholds must be positive")
    if decomp.offdiagonal_norm() >= eps_u:
        return Tier.FULL
    if decomp.num_modes == 0 or max(mode.r_abs for mode in decomp.modes) < eps_r:
        return Tier.LINEAR
    return Tier.PARALLEL


def select_modes(modes, min_s=1e-4):
    """Indices of modes with Huang-Rhys factor strictly above ``min_s``."""
    if min_s < 0:
        raise ValidationError("min_s must be non-negative")
    return [k for k, mode in enumerate(modes) if mode.huang_rhys() > min_s]


def filter_modes(decomp, min_s=1e-4, independence_tol=1e-10):
    """Drop weakly displaced modes from an independent-mode decomposition.

    Raises:
        ValidationError: if ``u_left`` mixes modes, since dropping a mode is
            then not a marginalisation.
    """
    if decomp.offdiagonal_norm() > independence_tol:
        raise ValidationError("cannot filter modes of a decomposition with mode mixing")
    if min_s == 0:
        return decomp
    keep = select_modes(decomp.modes, min_s)
    idx = np.ix_(keep, keep)
    return replace(
        decomp,
        u_left=decomp.u_left[idx],
        u_right=decomp.u_right[idx],
        sigma=decomp.sigma[keep],
        modes=tuple(decomp.modes[k] for k in keep),
        omega_final=decomp.omega_final[keep],
    )
