"""Command-line interface.

Subcommands: ``decompose``, ``recommend``, ``spectrum``, ``sample`` and
``compare``.  Exit codes: 0 success, 2 bad command line, 3 unreadable or
malformed input, 4 physically invalid input, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import io as _stdio
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError, VibronicError
from .gbs import DEFAULT_MAX_PHOTONS, build_gaussian, gbs_enumerate, gbs_sample
from .io import (
    atomic_write_bytes,
    atomic_write_text,
    decomposition_to_dict,
    parse_molecule,
    read_spectrum,
    write_spectrum,
)
from .linear import linear_enumerate, linear_sample
from .model import Tier, decompose, recommend_tier, select_modes
from .parallel import parallel_enumerate, parallel_sample
from .spectrum import (
    DEFAULT_TOLERANCE,
    LossModel,
    Spectrum,
    align,
    apply_loss_to_samples,
    assemble,
    compensate_loss,
    convolve,
    display_filter,
    similarity,
)

TIERS = ("auto", "linear", "parallel", "full")
MODES = ("exact", "sample")
PLOT_FRACTION = 0.005


@dataclass
class RunConfig:
    """Everything that determines a spectrum run besides the molecule."""

    tier: str = "auto"
    mode: str = "exact"
    shots: int = 100_000
    seed: int | None = None
    tail_bound: float = 1e-6
    photon_budget: int = 10
    mass_floor: float = 0.99
    prune: float = 0.0
    min_s: float = 0.0
    loss: list[float] | None = None
    max_modes_per_run: int | None = None
    bin_tolerance: float = DEFAULT_TOLERANCE
    workers: int = 1
    output: str | None = None
    json_output: str | None = None
    plot: str | None = None

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValidationError(f"tier must be one of {TIERS}, got {self.tier!r}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "sample" and self.shots < 1:
            raise ValidationError("shots must be >= 1 when sampling")
        if not 0.0 < self.tail_bound < 1.0:
            raise ValidationError("tail_bound must lie in (0, 1)")
        if self.photon_budget < 0 or self.photon_budget > DEFAULT_MAX_PHOTONS:
            raise ValidationError(f"photon_budget must lie in [0, {DEFAULT_MAX_PHOTONS}]")
        if self.prune < 0 or self.min_s < 0:
            raise ValidationError("prune and min_s must be non-negative")
        if self.max_modes_per_run is not None and self.max_modes_per_run < 1:
            raise ValidationError("max_modes_per_run must be >= 1")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")


def _resolve_seed(seed):
    # an unseeded run still records the seed it used, so it can be replayed
    if seed is not None:
        return int(seed)
    return int(np.random.SeedSequence().entropy % (1 << 63))


def _chunks(indices, size):
    if size is None:
        return [indices]
    return [indices[k : k + size] for k in range(0, len(indices), size)]


def _independent_run(modes, tier, config, seed, loss):
    """Spectrum of one group of independent modes and its metadata."""
    omega = [mode.omega_final for mode in modes]
    if config.mode == "exact":
        enum = linear_enumerate if tier is Tier.LINEAR else parallel_enumerate
        return assemble(enum(modes, config.tail_bound), omega, config.bin_tolerance), {}

    meta = {}
    if loss is not None and tier is Tier.LINEAR:
        modes = compensate_loss(modes, LossModel(loss))
        meta["loss_compensated"] = True
    draw = linear_sample if tier is Tier.LINEAR else parallel_sample
    samples = draw(modes, config.shots, seed, workers=config.workers)
    if loss is not None:
        samples = apply_loss_to_samples(samples, loss, seed)
    return assemble(samples, bin_tolerance=config.bin_tolerance), meta


def run_spectrum(problem, config):
    """Run the pipeline selected by ``config``.

    Returns:
        tuple: ``(Spectrum, metadata dict)``.
    """
    decomp = decompose(problem)
    tier = recommend_tier(decomp) if config.tier == "auto" else Tier(config.tier)
    seed = _resolve_seed(config.seed) if config.mode == "sample" else None
    m = decomp.num_modes

    loss = None
    if config.loss is not None:
        if config.mode != "sample":
            raise ValidationError("loss only applies to sample mode")
        loss = np.asarray(config.loss, dtype=float)
        if loss.size == 1:
            loss = np.full(m, loss[0])
        if loss.size != m:
            raise ValidationError(f"loss needs 1 or {m} values, got {loss.size}")

    meta = {
        "molecule": problem.name,
        "tier": tier.value,
        "tier_requested": config.tier,
        "mode": config.mode,
        "num_modes": m,
        "version": __version__,
    }
    if config.mode == "sample":
        meta.update(seed=seed, n_shots=config.shots)
    if loss is not None:
        meta["loss"] = loss.tolist()

    if tier is Tier.FULL:
        if config.min_s > 0 or (config.max_modes_per_run or m) < m:
            raise ValidationError("mode filtering and run splitting need independent modes")
        state = build_gaussian(decomp)
        meta["photon_budget"] = config.photon_budget
        if config.mode == "exact":
            table, captured = gbs_enumerate(state, config.photon_budget)
            if captured < config.mass_floor:
                raise NumericalError(
                    f"photon budget {config.photon_budget} captures only {captured:.6f} "
                    f"(floor {config.mass_floor})"
                )
            spec = assemble(table, decomp.omega_final, config.bin_tolerance)
        else:
            samples = gbs_sample(
                state,
                config.shots,
                seed,
                config.photon_budget,
                config.mass_floor,
                workers=config.workers,
            )
            captured = samples.captured_mass
            if loss is not None:
                samples = apply_loss_to_samples(samples, loss, seed)
            spec = assemble(samples, bin_tolerance=config.bin_tolerance)
        meta["captured_mass"] = captured
        return spec, meta

    keep = select_modes(decomp.modes, config.min_s) if config.min_s > 0 else list(range(m))
    meta["modes_kept"] = keep
    if config.mode == "exact":
        meta["tail_bound"] = config.tail_bound
    if not keep:
        # nothing displaced: only the 0-0 line remains
        return Spectrum([0.0], [1.0], config.bin_tolerance), meta
    groups = _chunks(keep, config.max_modes_per_run)
    children = np.random.SeedSequence(seed).generate_state(len(groups)) if seed is not None else None

    spec, discarded = None, 0.0
    for g, idx in enumerate(groups):
        modes = [decomp.modes[k] for k in idx]
        run_seed = None if children is None else int(children[g]) if len(groups) > 1 else seed
        part, extra = _independent_run(
            modes, tier, config, run_seed, None if loss is None else loss[idx]
        )
        meta.update(extra)
        if spec is None:
            spec = part
        else:
            spec = convolve(spec, part, config.prune)
            discarded += spec.discarded_mass
    meta["runs"] = len(groups)
    if discarded:
        meta["pruned_mass"] = discarded
    return spec, meta


def _format_decomposition(decomp):
    out = _stdio.StringIO()
    out.write(f"{'mode':>4} {'omega_f':>12} {'sigma':>12} {'|r|':>12} {'arg r':>8} "
              f"{'|beta|':>12} {'arg beta':>8} {'S':>12}\n")
    for k, mode in enumerate(decomp.modes):
        out.write(
            f"{k:>4d} {mode.omega_final:>12.4f} {decomp.sigma[k]:>12.6g} {mode.r_abs:>12.6g} "
            f"{mode.r_phase:>8.4f} {mode.beta_abs:>12.6g} {mode.beta_phase:>8.4f} "
            f"{mode.huang_rhys():>12.6g}\n"
        )
    out.write(f"sum r = {np.sum(decomp.squeezing.real):.6g}\n")
    out.write("U_L =\n")
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        u = decomp.u_left.real if np.allclose(decomp.u_left.imag, 0) else decomp.u_left
        out.write(f"{u}\n")
    return out.getvalue()


def _plot(path, spectrum, title):
    shown = display_filter(spectrum, PLOT_FRACTION)
    if not str(path).endswith(".png"):
        rows = [f"# plot filter: >= {PLOT_FRACTION} * max; display only"]
        rows += [f"{e!r} {p!r}" for e, p in shown.bins]
        atomic_write_text(path, "\n".join(rows) + "\n")
        return
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.vlines(shown.energies, 0.0, shown.probabilities, lw=1.2)
    ax.set_xlabel("energy (cm$^{-1}$)")
    ax.set_ylabel("FCF")
    ax.set_title(title)
    fig.tight_layout()
    buf = _stdio.BytesIO()
    fig.savefig(buf, format="png")
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def cmd_decompose(args):
    problem = parse_molecule(args.molecule)
    decomp = decompose(problem)
    print(f"molecule: {problem.name}  ({decomp.num_modes} modes)")
    print(_format_decomposition(decomp), end="")
    if args.json:
        doc = decomposition_to_dict(decomp)
        atomic_write_text(args.json, json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_recommend(args):
    decomp = decompose(parse_molecule(args.molecule))
    tier = recommend_tier(decomp, args.eps_r, args.eps_u)
    print(f"max |r| = {max(mode.r_abs for mode in decomp.modes):.6g}")
    print(f"off-diagonal |U_L| = {decomp.offdiagonal_norm():.6g}")
    print(f"recommended tier: {tier.value}")
    return 0


def _config_from_args(args, mode):
    return RunConfig(
        tier=args.tier,
        mode=mode,
        shots=args.shots,
        seed=args.seed,
        tail_bound=args.tail_bound,
        photon_budget=args.photon_budget,
        mass_floor=args.mass_floor,
        prune=args.prune,
        min_s=args.min_s,
        loss=args.loss,
        max_modes_per_run=args.max_modes_per_run,
        bin_tolerance=args.bin_tolerance,
        workers=args.workers,
        output=args.output,
        json_output=args.json,
        plot=args.plot,
    )


def _run_and_write(args, mode):
    problem = parse_molecule(args.molecule)
    config = _config_from_args(args, mode)
    spec, meta = run_spectrum(problem, config)
    if config.output:
        write_spectrum(config.output, spec, meta)
    if config.json_output:
        write_spectrum(config.json_output, spec, meta)
    if config.plot:
        _plot(config.plot, spec, problem.name)
    print(f"tier: {meta['tier']}  mode: {meta['mode']}  bins: {len(spec)}")
    if "seed" in meta:
        print(f"seed: {meta['seed']}  shots: {meta['n_shots']}")
    print(f"total mass: {spec.total_mass!r}")
    if not config.output and not config.json_output:
        for e, p in spec.bins:
            print(f"{e!r} {p!r}")
    return 0


def cmd_spectrum(args):
    return _run_and_write(args, args.mode)


def cmd_sample(args):
    return _run_and_write(args, "sample")


def cmd_compare(args):
    a, meta_a = read_spectrum(args.a)
    b, meta_b = read_spectrum(args.b)
    tol = args.tolerance
    if tol is None and a.bin_tolerance != b.bin_tolerance:
        raise ValidationError(
            f"bin tolerances differ ({a.bin_tolerance!r} vs {b.bin_tolerance!r}); "
            "pass --tolerance to override"
        )
    tol = a.bin_tolerance if tol is None else tol
    f = similarity(a, b, tol)
    print(f"similarity F = {f:.12g}")
    print(f"mass: {a.total_mass!r} vs {b.total_mass!r}")
    if args.bins:
        energies, pa, pb = align(a, b, tol)
        print(f"{'energy':>16} {'p_a':>14} {'p_b':>14} {'p_a - p_b':>14}")
        for e, x, y in zip(energies, pa, pb):
            print(f"{e:>16.6f} {x:>14.6e} {y:>14.6e} {x - y:>14.6e}")
    return 0


def _add_run_options(p, with_mode):
    p.add_argument("molecule", help="JSON molecule file")
    p.add_argument("--tier", choices=TIERS, default="auto")
    if with_mode:
        p.add_argument("--mode", choices=MODES, default="exact")
    p.add_argument("--shots", type=int, default=100_000, help="number of samples N_S")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (recorded in the output)")
    p.add_argument("--tail-bound", type=float, default=1e-6, help="exact mode: neglected mass")
    p.add_argument("--photon-budget", type=int, default=10, help="full tier: max total photons")
    p.add_argument("--mass-floor", type=float, default=0.99,
                   help="full tier: minimum probability captured by the photon budget")
    p.add_argument("--prune", type=float, default=0.0, help="drop bins below this after convolving")
    p.add_argument("--min-s", type=float, default=0.0,
                   help="keep only modes with Huang-Rhys factor above this")
    p.add_argument("--loss", type=float, nargs="+", default=None,
                   help="photon loss per mode (one value applies to all modes)")
    p.add_argument("--max-modes-per-run", type=int, default=None,
                   help="split independent modes into runs of this size and convolve")
    p.add_argument("--bin-tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--workers", type=int, default=1, help="threads for sampling blocks")
    p.add_argument("-o", "--output", help="two-column spectrum file")
    p.add_argument("--json", help="structured spectrum document")
    p.add_argument("--plot", help="plot file (.png, or text); display filter applied here only")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vibronic",
        description="Franck-Condon profiles at linear, parallel and full Duschinsky level.",
        epilog="exit codes: 0 ok, 2 usage, 3 parse, 4 validation, 5 numerical",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="print the Doktorov decomposition")
    p.add_argument("molecule")
    p.add_argument("--json", help="also write the decomposition as JSON")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("recommend", help="suggest the cheapest adequate tier")
    p.add_argument("molecule")
    p.add_argument("--eps-r", type=float, default=1e-2)
    p.add_argument("--eps-u", type=float, default=1e-2)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("spectrum", help="compute a Franck-Condon profile")
    _add_run_options(p, with_mode=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sample", help="sampled Franck-Condon profile")
    _add_run_options(p, with_mode=False)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("compare", help="similarity between two spectrum files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--tolerance", type=float, default=None,
                   help="override the bin tolerance from the file headers")
    p.add_argument("--bins", action="store_true", help="print per-bin differences")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VibronicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
