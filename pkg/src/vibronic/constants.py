"""Physical constants and unit conversions.

Everything downstream of :func:`vibronic.model.decompose` is dimensionless.
The only unit-bearing inputs are frequencies (cm^-1) and mass-weighted
displacements; both are converted here and nowhere else.
"""

import math

import numpy as np
from scipy import constants as _sc

#: 1 hartree expressed in cm^-1.
HARTREE_TO_WAVENUMBER = _sc.physical_constants["hartree-inverse meter relationship"][0] / 100.0

#: Unified atomic mass unit in electron masses.
AMU_TO_ELECTRON_MASS = _sc.physical_constants["atomic mass constant"][0] / _sc.m_e

#: Bohr radius in angstrom.
BOHR_TO_ANGSTROM = _sc.physical_constants["Bohr radius"][0] * 1e10

#: Multiplicative factors taking a mass-weighted displacement into atomic
#: units (sqrt(m_e) * bohr), where hbar = 1.
DELTA_Q_UNITS = {
    "au": 1.0,
    "amu^1/2 bohr": math.sqrt(AMU_TO_ELECTRON_MASS),
    "amu^1/2 angstrom": math.sqrt(AMU_TO_ELECTRON_MASS) / BOHR_TO_ANGSTROM,
}


def wavenumber_to_hartree(omega):
    return omega / HARTREE_TO_WAVENUMBER


def delta_q_to_beta(delta_q, omega_final, unit="au"):
    r"""Convert a mass-weighted origin shift into a dimensionless displacement.

    Implements :math:`\beta_i = \sqrt{\omega'_i / 2\hbar}\,\Delta q_i` with
    :math:`\hbar = 1` in atomic units.

    Args:
        delta_q (array): mass-weighted shifts in ``unit``.
        omega_final (array): final-state frequencies in cm^-1.
        unit (str): one of :data:`DELTA_Q_UNITS`.

    Returns:
        array: real displacement amplitudes.
    """
    scale = DELTA_Q_UNITS[unit]
    omega_au = wavenumber_to_hartree(np.asarray(omega_final, dtype=float))
    return np.sqrt(omega_au / 2.0) * np.asarray(delta_q, dtype=float) * scale


def beta_to_delta_q(beta, omega_final, unit="au"):
    """Inverse of :func:`delta_q_to_beta` for real displacements."""
    scale = DELTA_Q_UNITS[unit]
    omega_au = wavenumber_to_hartree(np.asarray(omega_final, dtype=float))
    return np.asarray(beta, dtype=float) / np.sqrt(omega_au / 2.0) / scale
