"""Brute-force Fock-space reference for the Doktorov state.

Builds truncated ladder operators, exponentiates the squeezing, rotation
and displacement generators literally and applies them to vacuum.  Nothing
here shares code with the Gaussian/hafnian path, so agreement between the
two is a meaningful check.  Memory grows as ``cutoff**M``; intended for
``M <= 3``.
"""

import numpy as np
from scipy import sparse
from scipy.linalg import expm, logm
from scipy.sparse.linalg import expm_multiply

from .errors import NumericalError, ValidationError

MAX_ORACLE_MODES = 3
DEFICIT_TOL = 1e-8


def _lowering(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def _apply_one(op, psi, axis):
    out = np.tensordot(op, psi, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def fock_oracle_state(decomp, cutoff, pad=None):
    """Fock amplitudes of ``D(beta) R(U_L) S(r) |0>`` truncated to ``cutoff`` per mode.

    The operators act in a working space of ``cutoff + pad`` levels per mode;
    the returned deficit is the norm lost when projecting back to ``cutoff``.

    Returns:
        tuple: ``(amplitudes with shape (cutoff,)*M, deficit)``.
    """
    m = decomp.num_modes
    if m > MAX_ORACLE_MODES:
        raise ValidationError(f"Fock oracle supports at most {MAX_ORACLE_MODES} modes")
    if pad is None:
        pad = cutoff
    dim = cutoff + pad
    a = _lowering(dim)
    ad = a.T
    a2, ad2 = a @ a, ad @ ad

    psi = np.zeros((dim,) * m, dtype=complex)
    psi[(0,) * m] = 1.0

    for k, mode in enumerate(decomp.modes):
        r = mode.r
        if r:
            psi = _apply_one(expm(0.5 * (r * ad2 - np.conj(r) * a2)), psi, k)

    u = np.asarray(decomp.u_left, dtype=complex)
    if not np.allclose(u, np.eye(m), atol=0.0, rtol=0.0):
        gen = logm(u)
        eye = sparse.identity(dim, format="csr")
        lower = sparse.csr_matrix(a)
        ops = []
        for k in range(m):
            factors = [eye] * m
            factors[k] = lower
            op = factors[0]
            for f in factors[1:]:
                op = sparse.kron(op, f, format="csr")
            ops.append(op)
        g = sparse.csr_matrix((dim**m, dim**m), dtype=complex)
        for i in range(m):
            for j in range(m):
                if gen[i, j] != 0:
                    g = g + gen[i, j] * (ops[i].T @ ops[j])
        psi = expm_multiply(g.tocsc(), psi.ravel()).reshape((dim,) * m)

    for k, mode in enumerate(decomp.modes):
        b = mode.beta
        if b:
            psi = _apply_one(expm(b * ad - np.conj(b) * a), psi, k)

    kept = psi[(slice(0, cutoff),) * m]
    deficit = max(0.0, 1.0 - float(np.sum(np.abs(kept) ** 2)))
    return kept, deficit


def fock_oracle_fcf(decomp, m, cutoff=None, pad=None):
    """Probability of pattern ``m`` from the truncated Fock-space construction.

    Raises:
        NumericalError: if the truncation deficit exceeds ``1e-8``.
    """
    pattern = tuple(int(x) for x in m)
    if len(pattern) != decomp.num_modes:
        raise ValidationError("pattern length does not match the number of modes")
    top = max(pattern, default=0)
    if cutoff is not None:
        if cutoff <= top:
            raise ValidationError("cutoff must exceed every photon number in the pattern")
        amps, deficit = fock_oracle_state(decomp, cutoff, pad)
    else:
        # grow the truncation until the lost norm is negligible
        cutoff = top + 16
        limit = 96 if decomp.num_modes <= 2 else 40
        while True:
            amps, deficit = fock_oracle_state(decomp, cutoff, pad)
            if deficit <= DEFICIT_TOL or cutoff >= limit:
                break
            cutoff = min(limit, cutoff + 8)
    if deficit > DEFICIT_TOL:
        raise NumericalError(f"Fock truncation deficit {deficit:.2e} exceeds {DEFICIT_TOL:g}")
    return float(abs(amps[pattern]) ** 2)
