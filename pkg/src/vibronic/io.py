"""Molecule files, spectrum files and atomic writes.

Molecule files are JSON documents::

    {
      "name": "example",
      "omega_initial": [1500.0],
      "omega_final": [1500.0],
      "duschinsky": [[1.0]],
      "huang_rhys": [1.0]
    }

with exactly one of ``delta_q`` (plus optional ``delta_q_unit``), ``beta``
(list of ``{"abs", "phase"}``) or ``huang_rhys``.  ``squeezing`` optionally
overrides per-mode squeezing as ``{"abs", "phase"}`` objects.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from .constants import DELTA_Q_UNITS
from .errors import ParseError, ValidationError
from .model import VibronicProblem
from .spectrum import Spectrum

SPECTRUM_FORMAT = "vibronic-spectrum/1"

_number_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_polar = {
    "type": "object",
    "properties": {"abs": {"type": "number", "minimum": 0}, "phase": {"type": "number"}},
    "required": ["abs"],
    "additionalProperties": False,
}

MOLECULE_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "omega_initial": _number_list,
        "omega_final": _number_list,
        "duschinsky": {"type": "array", "items": _number_list, "minItems": 1},
        "delta_q": _number_list,
        "delta_q_unit": {"enum": sorted(DELTA_Q_UNITS)},
        "beta": {"type": "array", "items": _polar, "minItems": 1},
        "huang_rhys": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "squeezing": {"type": "array", "items": _polar, "minItems": 1},
    },
    "required": ["name", "omega_initial", "omega_final"],
    "additionalProperties": False,
}

_DISPLACEMENTS = ("delta_q", "beta", "huang_rhys")


def _current_umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write_bytes(path, data):
    """Write ``data`` through a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        # mkstemp creates 0600 files; give the result ordinary permissions
        os.chmod(tmp, 0o666 & ~_current_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def _reject_constant(token):
    raise ParseError(f"non-finite number {token!r} in input")


def _load_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def _polar_to_complex(entries):
    return np.array([e["abs"] * np.exp(1j * e.get("phase", 0.0)) for e in entries], dtype=complex)


def problem_from_dict(doc):
    """Validated :class:`VibronicProblem` from a parsed molecule document.

    Raises:
        ParseError: on schema violations.
        ValidationError: on conflicting or inconsistent physical content.
    """
    try:
        jsonschema.validate(doc, MOLECULE_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParseError(f"schema violation at {where}: {exc.message}") from exc

    given = [key for key in _DISPLACEMENTS if key in doc]
    if len(given) != 1:
        raise ValidationError(
            f"exactly one of {', '.join(_DISPLACEMENTS)} is required (got {given or 'none'})"
        )
    if "delta_q_unit" in doc and "delta_q" not in doc:
        raise ValidationError("delta_q_unit given without delta_q")

    kwargs = {}
    if "delta_q" in doc:
        kwargs["delta_q"] = doc["delta_q"]
        kwargs["delta_q_unit"] = doc.get("delta_q_unit", "au")
    elif "beta" in doc:
        kwargs["beta"] = _polar_to_complex(doc["beta"])
    else:
        kwargs["beta"] = np.sqrt(np.asarray(doc["huang_rhys"], dtype=float)).astype(complex)
    if "squeezing" in doc:
        kwargs["squeezing"] = _polar_to_complex(doc["squeezing"])

    return VibronicProblem(
        name=doc["name"],
        omega_initial=doc["omega_initial"],
        omega_final=doc["omega_final"],
        duschinsky=doc.get("duschinsky"),
        **kwargs,
    )


def parse_molecule(path):
    """Read and validate a JSON molecule file."""
    return problem_from_dict(_load_json(path))


def _complex_to_polar(values):
    out = []
    for z in np.asarray(values, dtype=complex).tolist():
        phase = math.atan2(z.imag, z.real) % (2.0 * math.pi) if z != 0 else 0.0
        out.append({"abs": abs(z), "phase": phase})
    return out


def problem_to_dict(problem):
    """Canonical molecule document; parsing it back gives the same problem."""
    doc = {
        "name": problem.name,
        "omega_initial": problem.omega_initial.tolist(),
        "omega_final": problem.omega_final.tolist(),
        "duschinsky": problem.duschinsky.tolist(),
    }
    if problem.delta_q is not None:
        doc["delta_q"] = problem.delta_q.tolist()
        doc["delta_q_unit"] = problem.delta_q_unit
    else:
        doc["beta"] = _complex_to_polar(problem.beta)
    if problem.squeezing is not None:
        doc["squeezing"] = _complex_to_polar(problem.squeezing)
    return doc


def write_molecule(path, problem):
    atomic_write_text(path, json.dumps(problem_to_dict(problem), indent=2) + "\n")


def decomposition_to_dict(decomp):
    """Machine-readable summary of a Doktorov decomposition."""
    return {
        "num_modes": decomp.num_modes,
        "u_left": {"real": decomp.u_left.real.tolist(), "imag": decomp.u_left.imag.tolist()},
        "sigma": decomp.sigma.tolist(),
        "r": _complex_to_polar(decomp.squeezing),
        "beta": _complex_to_polar(decomp.beta),
        "huang_rhys": decomp.huang_rhys().tolist(),
        "omega_final": decomp.omega_final.tolist(),
        "squeezing_overridden": decomp.squeezing_overridden,
        "offdiagonal_norm": decomp.offdiagonal_norm(),
        "sum_r": float(np.sum(decomp.squeezing.real)),
    }


def _header_value(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def spectrum_to_text(spectrum, metadata=None):
    """Two-column text (energy, probability) behind a ``#`` metadata header.

    Floats are written with ``repr`` so the file round-trips exactly.  The
    header always carries ``bin_tolerance`` and ``total_mass``.
    """
    meta = dict(metadata or {})
    meta["bin_tolerance"] = spectrum.bin_tolerance
    meta["total_mass"] = spectrum.total_mass
    if spectrum.discarded_mass:
        meta["discarded_mass"] = spectrum.discarded_mass
    lines = [f"# format: {SPECTRUM_FORMAT}"]
    lines += [f"# {key}: {_header_value(meta[key])}" for key in sorted(meta)]
    has_err = spectrum.stderr is not None
    lines.append("# columns: energy_cm-1 probability" + (" stderr" if has_err else ""))
    cols = [spectrum.energies.tolist(), spectrum.probabilities.tolist()]
    if has_err:
        cols.append(spectrum.stderr.tolist())
    lines += [" ".join(repr(x) for x in row) for row in zip(*cols)]
    return "\n".join(lines) + "\n"


def spectrum_to_dict(spectrum, metadata=None):
    doc = {
        "format": SPECTRUM_FORMAT,
        "metadata": dict(metadata or {}),
        "bin_tolerance": spectrum.bin_tolerance,
        "total_mass": spectrum.total_mass,
        "discarded_mass": spectrum.discarded_mass,
        "energies": spectrum.energies.tolist(),
        "probabilities": spectrum.probabilities.tolist(),
    }
    if spectrum.stderr is not None:
        doc["stderr"] = spectrum.stderr.tolist()
    return doc


def write_spectrum(path, spectrum, metadata=None):
    """Write a spectrum as text, or as JSON when ``path`` ends in ``.json``."""
    if str(path).endswith(".json"):
        text = json.dumps(spectrum_to_dict(spectrum, metadata), indent=2, sort_keys=True) + "\n"
    else:
        text = spectrum_to_text(spectrum, metadata)
    atomic_write_text(path, text)


def _parse_header_value(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def read_spectrum(path):
    """Load a spectrum file written by :func:`write_spectrum`.

    Returns:
        tuple: ``(Spectrum, metadata dict)``.
    """
    if str(path).endswith(".json"):
        doc = _load_json(path)
        try:
            spec = Spectrum(
                doc["energies"],
                doc["probabilities"],
                float(doc["bin_tolerance"]),
                stderr=doc.get("stderr"),
                discarded_mass=float(doc.get("discarded_mass", 0.0)),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: malformed spectrum document ({exc})") from exc
        meta = dict(doc.get("metadata", {}))
        meta["bin_tolerance"] = spec.bin_tolerance
        return spec, meta

    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    meta, rows = {}, []
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, raw = line[1:].partition(":")
            if sep:
                meta[key.strip()] = _parse_header_value(raw.strip())
            continue
        try:
            rows.append([float(x) for x in line.split()])
        except ValueError as exc:
            raise ParseError(f"{path}:{n}: cannot parse data row") from exc
        if len(rows[-1]) not in (2, 3):
            raise ParseError(f"{path}:{n}: expected 2 or 3 columns")
    if "bin_tolerance" not in meta:
        raise ParseError(f"{path}: header lacks bin_tolerance")
    data = np.array(rows, dtype=float).reshape(len(rows), -1) if rows else np.zeros((0, 2))
    stderr = data[:, 2] if data.shape[1] == 3 else None
    spec = Spectrum(
        data[:, 0],
        data[:, 1],
        float(meta["bin_tolerance"]),
        stderr=stderr,
        discarded_mass=float(meta.get("discarded_mass", 0.0)),
    )
    return spec, meta
