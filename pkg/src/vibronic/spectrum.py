"""Stick spectra: binning, run recombination, loss handling and similarity.

A pattern ``m`` contributes at transition energy ``sum(m * omega')``.  Two
energies within ``bin_tolerance`` of a bin's lowest member share that bin,
both when assembling a spectrum and when aligning two spectra.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .linear import mode_list
from .sampling import SampleSet

DEFAULT_TOLERANCE = 1e-10
MASS_SLACK = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Binned Franck-Condon profile with strictly increasing bin energies.

    ``stderr`` holds optional Poissonian standard errors ``sqrt(N)/N_S`` per
    bin for sampled spectra; ``discarded_mass`` is the probability pruned when
    the spectrum was built by :func:`convolve`.
    """

    energies: np.ndarray
    probabilities: np.ndarray
    bin_tolerance: float = DEFAULT_TOLERANCE
    stderr: np.ndarray | None = None
    discarded_mass: float = 0.0

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        p = np.array(self.probabilities, dtype=float).ravel()
        if e.shape != p.shape:
            raise ValidationError("energies and probabilities differ in length")
        if not (self.bin_tolerance >= 0):
            raise ValidationError("bin_tolerance must be non-negative")
        if e.size > 1 and np.any(np.diff(e) <= self.bin_tolerance):
            raise ValidationError("bin energies must increase by more than bin_tolerance")
        if np.any(p <= 0) or not np.all(np.isfinite(p)) or not np.all(np.isfinite(e)):
            raise ValidationError("bin probabilities must be positive and finite")
        if p.sum() > 1.0 + MASS_SLACK:
            raise ValidationError(f"total mass {p.sum()!r} exceeds 1")
        for arr in (e, p):
            arr.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "probabilities", p)
        if self.stderr is not None:
            se = np.array(self.stderr, dtype=float).ravel()
            if se.shape != e.shape:
                raise ValidationError("stderr must have one entry per bin")
            se.setflags(write=False)
            object.__setattr__(self, "stderr", se)

    @property
    def bins(self):
        return list(zip(self.energies.tolist(), self.probabilities.tolist()))

    @property
    def total_mass(self):
        return float(self.probabilities.sum())

    def __len__(self):
        return self.energies.size


def _anchor_walk(values, tol):
    starts = []
    anchor = None
    for k, e in enumerate(values):
        if anchor is None or e - anchor > tol:
            starts.append(k)
            anchor = e
    return starts


def _cluster_starts(sorted_energies, tol):
    """Indices where a new bin opens under anchor-based greedy merging."""
    e = sorted_energies
    if e.size == 0:
        return np.zeros(0, dtype=np.intp)
    # a gap above tol always opens a bin; runs narrower than tol need nothing else
    gap_starts = np.concatenate([[0], np.flatnonzero(np.diff(e) > tol) + 1])
    ends = np.concatenate([gap_starts[1:], [e.size]])
    wide = np.flatnonzero(e[ends - 1] - e[gap_starts] > tol)
    if wide.size == 0:
        return gap_starts.astype(np.intp)
    extra = []
    for k in wide.tolist():
        lo, hi = gap_starts[k], ends[k]
        extra.extend(lo + s for s in _anchor_walk(e[lo:hi].tolist(), tol)[1:])
    return np.sort(np.concatenate([gap_starts, np.array(extra, dtype=np.intp)])).astype(np.intp)


def bin_sticks(energies, probabilities, bin_tolerance=DEFAULT_TOLERANCE, counts=None):
    """Merge coincident sticks; the result does not depend on input order.

    Returns:
        tuple: ``(bin energies, bin probabilities, summed counts or None)``.
    """
    e = np.asarray(energies, dtype=float).ravel()
    p = np.asarray(probabilities, dtype=float).ravel()
    keep = p > 0
    e, p = e[keep], p[keep]
    c = None if counts is None else np.asarray(counts, dtype=float).ravel()[keep]
    if e.size == 0:
        return e, p, c
    order = np.lexsort((p, e))
    e, p = e[order], p[order]
    starts = _cluster_starts(e, bin_tolerance)
    summed_c = None if c is None else np.add.reduceat(c[order], starts)
    return e[starts], np.add.reduceat(p, starts), summed_c


def _pattern_energies(patterns, frequencies):
    freqs = np.asarray(frequencies, dtype=float)
    if np.any(freqs <= 0):
        raise ValidationError("mode frequencies must be positive")
    pats = np.asarray(patterns, dtype=float)
    if pats.size == 0:
        return np.zeros(0)
    pats = pats.reshape(len(patterns), -1)
    if pats.shape[1] != freqs.size:
        raise ValidationError(
            f"patterns have {pats.shape[1]} modes but {freqs.size} frequencies were given"
        )
    # fixed left-to-right summation keeps energies bitwise reproducible
    energy = np.zeros(pats.shape[0])
    for k in range(freqs.size):
        energy = energy + pats[:, k] * freqs[k]
    return energy


def assemble(source, omega_final=None, bin_tolerance=DEFAULT_TOLERANCE):
    """Franck-Condon profile from a :class:`SampleSet` or a ``(pattern, p)`` list.

    Sample sets contribute ``N(m)/N_S`` per pattern and carry per-bin standard
    errors.  Enumerated distributions need ``omega_final``.
    """
    if isinstance(source, SampleSet):
        patterns = list(source.counts)
        counts = np.array([source.counts[k] for k in patterns], dtype=float)
        energy = _pattern_energies(patterns, source.mode_frequencies)
        e, p, c = bin_sticks(energy, counts / source.n_shots, bin_tolerance, counts)
        return Spectrum(e, p, bin_tolerance, stderr=np.sqrt(c) / source.n_shots)

    if omega_final is None:
        raise ValidationError("omega_final is required for enumerated distributions")
    entries = list(source)
    patterns = [pat for pat, _ in entries]
    probs = np.array([prob for _, prob in entries], dtype=float)
    energy = _pattern_energies(patterns, omega_final)
    e, p, _ = bin_sticks(energy, probs, bin_tolerance)
    return Spectrum(e, p, bin_tolerance)


def _same_tolerance(a, b):
    if a.bin_tolerance != b.bin_tolerance:
        raise ValidationError(
            f"bin tolerances differ ({a.bin_tolerance!r} vs {b.bin_tolerance!r})"
        )


def convolve(a, b, prune=0.0):
    """Combine spectra of independent runs: energies add, probabilities multiply.

    Bins below ``prune`` are dropped after binning; their total is stored in
    ``discarded_mass`` of the result.
    """
    _same_tolerance(a, b)
    energy = np.add.outer(a.energies, b.energies).ravel()
    prob = np.multiply.outer(a.probabilities, b.probabilities).ravel()
    e, p, _ = bin_sticks(energy, prob, a.bin_tolerance)
    drop = p < prune
    dropped = float(p[drop].sum())
    return Spectrum(e[~drop], p[~drop], a.bin_tolerance, discarded_mass=dropped)


def align(p, q, tolerance=None):
    """Put two spectra on a shared energy grid; unmatched bins get zero.

    Returns:
        tuple: ``(energies, p values, q values)``.
    """
    if tolerance is None:
        _same_tolerance(p, q)
        tolerance = p.bin_tolerance
    e = np.concatenate([p.energies, q.energies])
    vp = np.concatenate([p.probabilities, np.zeros(len(q))])
    vq = np.concatenate([np.zeros(len(p)), q.probabilities])
    if e.size == 0:
        return e, vp, vq
    order = np.argsort(e, kind="stable")
    e, vp, vq = e[order], vp[order], vq[order]
    starts = _cluster_starts(e, tolerance)
    return e[starts], np.add.reduceat(vp, starts), np.add.reduceat(vq, starts)


def similarity(p, q, tolerance=None):
    """Bhattacharyya coefficient ``sum(sqrt(p * q))`` over aligned bins."""
    _, vp, vq = align(p, q, tolerance)
    return float(np.sum(np.sqrt(vp * vq)))


def display_filter(spectrum, fraction=0.005):
    """Bins at or above ``fraction`` of the tallest one; for plotting only."""
    if len(spectrum) == 0:
        return spectrum
    keep = spectrum.probabilities >= fraction * spectrum.probabilities.max()
    se = None if spectrum.stderr is None else spectrum.stderr[keep]
    return replace(
        spectrum,
        energies=spectrum.energies[keep],
        probabilities=spectrum.probabilities[keep],
        stderr=se,
    )


@dataclass(frozen=True)
class LossModel:
    """Per-mode photon loss probabilities ``0 <= L_i < 1``."""

    losses: np.ndarray

    def __post_init__(self):
        arr = np.array(self.losses, dtype=float).ravel()
        if np.any(arr < 0) or np.any(arr >= 1) or not np.all(np.isfinite(arr)):
            raise ValidationError("losses must satisfy 0 <= L < 1")
        arr.setflags(write=False)
        object.__setattr__(self, "losses", arr)

    @property
    def transmission(self):
        return 1.0 - self.losses


def compensate_loss(modes, loss):
    """Pre-scale coherent amplitudes so that lossy detection sees the target.

    Uses ``beta' = beta / sqrt(1 - L)``.  Only valid for unsqueezed modes,
    since loss does not preserve squeezed photon statistics.
    """
    modes = mode_list(modes)
    if not isinstance(loss, LossModel):
        loss = LossModel(loss)
    if loss.losses.size != len(modes):
        raise ValidationError("one loss value per mode is required")
    if any(mode.r_abs != 0.0 for mode in modes):
        raise ValidationError("loss compensation applies to coherent (unsqueezed) modes only")
    return tuple(
        replace(mode, beta_abs=mode.beta_abs / np.sqrt(1.0 - L))
        for mode, L in zip(modes, loss.losses.tolist())
    )


def apply_loss_to_samples(samples, loss, seed):
    """Binomially thin every detected photon with per-mode survival ``1 - L_i``.

    ``loss`` may be a :class:`LossModel` or a plain sequence, in which case a
    loss of exactly 1 (every photon lost) is also accepted.
    """
    losses = loss.losses if isinstance(loss, LossModel) else np.asarray(loss, dtype=float).ravel()
    if losses.size != samples.num_modes:
        raise ValidationError("one loss value per mode is required")
    if np.any(losses < 0) or np.any(losses > 1):
        raise ValidationError("losses must lie in [0, 1]")
    keep = 1.0 - losses
    rng = np.random.default_rng(seed)
    thinned = []
    for pattern, count in samples.counts.items():
        block = np.empty((count, samples.num_modes), dtype=np.int64)
        for k, n in enumerate(pattern):
            block[:, k] = rng.binomial(n, keep[k], size=count) if n else 0
        thinned.append(block)
    rows, counts = np.unique(np.concatenate(thinned), axis=0, return_counts=True)
    return SampleSet(
        n_shots=samples.n_shots,
        counts={tuple(int(x) for x in row): int(c) for row, c in zip(rows, counts)},
        mode_frequencies=samples.mode_frequencies,
        seed=seed,
    )
