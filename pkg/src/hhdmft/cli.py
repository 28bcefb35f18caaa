"""Command-line workbench: one subcommand per pipeline stage.

Every run reads one config document (or the built-in minimal default),
applies command-line overrides, executes a single stage, and emits CSV
artifacts plus a JSON manifest into the output directory.  Identical
config and seed give identical numeric artifacts; the manifest differs
only in its wall-clock block.  Exit codes: 0 success, 2 bad config or
arguments, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from time import perf_counter

import numpy as np

from .config import DEFAULT_CONFIG, RunConfig, parse_config
from .dmft import impurity_spectrum, run_dmft, scan_hybridization
from .ed import impurity_ground, lehmann_greens
from .errors import ConfigError, NumericalError
from .evolution import greens_time, vha_evolve
from .kvqa import KrylovRun, KrylovSearchConfig, solve_impurity
from .model import mu_from_convention
from .output import ArtifactWriter
from .spectra import assemble_two_sided, greens_curve, poles_weights, spectral_function
from .statevector import NoiseSpec
from .vqe import AnsatzAngles, energy_landscape, find_ground_state

DEFAULT_SHOTS = 32000
CHAIN_DEPTH = 3

STAGE_HELP = {
    "ed": "exact ground energy and Lehmann pole table",
    "vqe": "two-angle energy landscape and its minimum",
    "kvqa": "variational Krylov chains and assembled poles",
    "spectrum": "broadened spectral function from exact chains",
    "dmft": "two-site self-consistency loop or hybridization scan",
    "trotter": "product-formula Green's function against exact",
    "vha": "variational-ansatz Green's function against exact",
    "compare": "chain, product-formula and exact time traces side by side",
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config document (built-in minimal default if omitted)")
    common.add_argument("--out", metavar="DIR", help="output directory, overrides config output_dir")
    common.add_argument("--seed", type=int, metavar="N", help="RNG seed override")
    common.add_argument("--mode", choices=("exact", "sampled"), default="exact", help="expectation values: exact or shot-sampled")
    common.add_argument("--shots", type=int, metavar="N", help=f"shots per sampled expectation (default {DEFAULT_SHOTS})")
    common.add_argument("--readout-flip", type=float, metavar="P", help="readout bit-flip probability (default 0)")
    common.add_argument("--mu", metavar="VALUE", help="chemical potential override: a number or a convention name")
    common.add_argument("--emit-plots", action="store_true", help="also write a quick-look matplotlib script")

    parser = argparse.ArgumentParser(prog="hhdmft", description="Workbench for the two-site electron-boson impurity pipeline.")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for name, blurb in STAGE_HELP.items():
        stage = sub.add_parser(name, parents=[common], help=blurb, description=blurb)
        if name == "dmft":
            group = stage.add_mutually_exclusive_group()
            group.add_argument("--iterate", action="store_true", help="run the damped fixed-point loop (default)")
            group.add_argument("--scan", action="store_true", help="tabulate Z against a hybridization grid instead")
        if name in ("trotter", "vha", "compare"):
            stage.add_argument("--nt", type=int, default=1, metavar="N", help="product-formula substeps or ansatz layers")
            stage.add_argument("--ordering", metavar="PERM", help="comma-separated permutation of Hamiltonian term indices")
    return parser


def _parse_ordering(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        perm = tuple(int(piece) for piece in text.split(","))
    except ValueError:
        raise ConfigError(f"--ordering must be comma-separated integers, got {text!r}") from None
    if sorted(perm) != list(range(len(perm))):
        raise ConfigError(f"--ordering must be a permutation of 0..{len(perm) - 1}")
    return perm


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load the document and fold in command-line overrides."""
    text = Path(args.config).read_text(encoding="utf-8") if args.config else DEFAULT_CONFIG
    cfg = parse_config(text)
    seed = args.seed if args.seed is not None else cfg.seed
    out_dir = args.out if args.out is not None else cfg.output_dir
    params, mu_spec = cfg.params, cfg.mu_spec
    if args.mu is not None:
        try:
            mu_value = float(args.mu)
            mu_spec = mu_value
        except ValueError:
            mu_spec = args.mu
            mu_value = mu_from_convention(args.mu, params.u, params.v, params.omega0, params.lam, params.n_boson_levels)
        params = replace(params, mu=mu_value)
    if args.mode == "sampled":
        shots = args.shots if args.shots is not None else (cfg.noise.shots if cfg.noise else DEFAULT_SHOTS)
        flip = args.readout_flip if args.readout_flip is not None else (cfg.noise.readout_flip if cfg.noise else 0.0)
        try:
            noise = NoiseSpec(shots=shots, readout_flip=flip, seed=seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        noise = None
    return replace(cfg, params=params, mu_spec=mu_spec, seed=seed, output_dir=out_dir, noise=noise)


def _config_echo(cfg: RunConfig, args: argparse.Namespace) -> dict:
    echo = cfg.as_dict()
    echo["subcommand"] = args.subcommand
    echo["mode"] = args.mode
    if args.subcommand in ("trotter", "vha", "compare"):
        ordering = _parse_ordering(args.ordering)
        echo["nt"] = args.nt
        echo["ordering"] = None if ordering is None else list(ordering)
    if args.subcommand == "dmft":
        echo["action"] = "scan" if args.scan else "iterate"
    return echo


def _search_config(mode: str) -> KrylovSearchConfig:
    return KrylovSearchConfig(mode="variational-sampled" if mode == "sampled" else "variational-exact")


def _chain_rows(run: KrylovRun):
    chain = run.chain
    # the three-term recursion has no b_0; pad the n=0 row with 0.0
    return [(n, chain.a[n], 0.0 if n == 0 else chain.b2[n - 1]) for n in range(len(chain.a))]


def _run_summary(run: KrylovRun) -> dict:
    chain = run.chain
    return {
        "mode": run.mode,
        "a": list(chain.a),
        "b2": list(chain.b2),
        "prefactor": chain.prefactor,
        "e0": chain.e0,
        "depth": chain.depth,
        "terminated_early": run.terminated_early,
        "b2_tail": run.b2_tail,
        "diagnostics": list(run.diagnostics),
        "angles": [None if s.angles is None else list(s.angles) for s in run.steps],
    }


def _stage_ed(cfg, args, writer):
    p = cfg.params
    e0, _ = impurity_ground(p)
    spec = lehmann_greens(p)
    writer.write_csv("lehmann.csv", ["omega", "weight"], spec.poles)
    gap = spec.innermost(1)[0] - spec.innermost(-1)[0]
    return {
        "e0": e0,
        "spectral_gap": gap,
        "total_weight": spec.total_weight,
        "poles": [list(pole) for pole in spec.poles],
    }


def _stage_vqe(cfg, args, writer):
    p, grid = cfg.params, cfg.landscape
    energies = energy_landscape(p, grid, args.mode, cfg.noise)
    rows = [
        (t0, t1, energies[i, j])
        for i, t0 in enumerate(grid.theta0_values)
        for j, t1 in enumerate(grid.theta1_values)
    ]
    writer.write_csv("landscape.csv", ["theta0", "theta1", "energy"], rows)
    if args.mode == "exact":
        res = find_ground_state(p, grid, "exact")
        angles, e_min = res.angles, res.energy
    else:
        i, j = np.unravel_index(int(np.argmin(energies)), energies.shape)
        angles = AnsatzAngles(float(grid.theta0_values[i]), float(grid.theta1_values[j]))
        e_min = float(energies[i, j])
    return {
        "e_min": e_min,
        "theta0": angles.theta0,
        "theta1": angles.theta1,
        "grid_min": float(energies.min()),
    }


def _stage_kvqa(cfg, args, writer):
    runs = solve_impurity(cfg.params, depth=CHAIN_DEPTH, cfg=_search_config(args.mode), noise=cfg.noise)
    for kind in ("hole", "particle"):
        writer.write_csv(f"chain_{kind}.csv", ["n", "a", "b2"], _chain_rows(runs[kind]))
    spec = assemble_two_sided(poles_weights(runs["hole"].chain), poles_weights(runs["particle"].chain))
    writer.write_csv("poles.csv", ["omega", "weight"], spec.poles)
    results = {kind: _run_summary(runs[kind]) for kind in ("hole", "particle")}
    results["poles"] = [list(pole) for pole in spec.poles]
    return results


def _stage_spectrum(cfg, args, writer):
    spec = impurity_spectrum(cfg.params, solver="exact-lanczos")
    grid = cfg.frequency
    curve = greens_curve(spec, grid)
    weight = spectral_function(spec, grid)
    rows = zip(grid.omegas, weight, curve.real, curve.imag)
    writer.write_csv("spectrum.csv", ["omega", "A", "ReG", "ImG"], rows)
    writer.write_csv("poles.csv", ["omega", "weight"], spec.poles)
    return {
        "poles": [list(pole) for pole in spec.poles],
        "total_weight": spec.total_weight,
        "spectral_gap": spec.innermost(1)[0] - spec.innermost(-1)[0],
    }


def _stage_dmft(cfg, args, writer):
    if args.scan:
        scan = scan_hybridization(cfg.params, cfg.dmft, noise=cfg.noise)
        writer.write_csv("dmft_scan.csv", ["V", "Z", "sqrtZM2"], scan.rows)
        return {
            "action": "scan",
            "solver": cfg.dmft.solver,
            "v_cross": scan.v_cross,
            "rows": [list(row) for row in scan.rows],
        }
    res = run_dmft(cfg.params, cfg.dmft, noise=cfg.noise)
    rows = [(k, v, z) for k, (v, z) in enumerate(res.history)]
    writer.write_csv("dmft_history.csv", ["iteration", "V", "Z"], rows)
    return {
        "action": "iterate",
        "solver": cfg.dmft.solver,
        "v_star": res.v_star,
        "z_star": res.z_star,
        "converged": res.converged,
        "n_iterations": len(res.history),
        "history": [list(pair) for pair in res.history],
    }


def _stage_trotter(cfg, args, writer):
    p, grid = cfg.params, cfg.time
    ordering = _parse_ordering(args.ordering)
    exact = greens_time(p, grid, "exact")
    approx = greens_time(p, grid, "trotter", n_t=args.nt, ordering=ordering)
    writer.write_csv("time_trace.csv", ["t", "ImG_trotter", "ImG_exact"], zip(grid.times, approx, exact))
    return {
        "n_trotter": args.nt,
        "ordering": None if ordering is None else list(ordering),
        "max_abs_error": float(np.max(np.abs(approx - exact))),
        "img_t0": float(approx[0]),
    }


def _stage_vha(cfg, args, writer):
    p, grid = cfg.params, cfg.time
    ordering = _parse_ordering(args.ordering)
    exact = greens_time(p, grid, "exact")
    traj, approx = vha_evolve(p, grid, n_t=args.nt, ordering=ordering)
    writer.write_csv("time_trace.csv", ["t", "ImG_vha", "ImG_exact"], zip(grid.times, approx, exact))
    header = ["t"] + [f"theta{k}" for k in range(traj.thetas.shape[1])]
    writer.write_csv("vha_trajectory.csv", header, np.column_stack([traj.times, traj.thetas]))
    return {
        "n_layers": args.nt,
        "ordering": list(traj.ordering),
        "max_abs_error": float(np.max(np.abs(approx - exact))),
        "max_residual": traj.max_residual,
    }


def _stage_compare(cfg, args, writer):
    p, grid = cfg.params, cfg.time
    ordering = _parse_ordering(args.ordering)
    timing = {}

    start = perf_counter()
    runs = solve_impurity(p, depth=CHAIN_DEPTH, cfg=_search_config(args.mode), noise=cfg.noise)
    spec = assemble_two_sided(poles_weights(runs["hole"].chain), poles_weights(runs["particle"].chain))
    # retarded-function samples reassembled from the chain's pole pairs
    img_chain = -np.cos(np.outer(grid.times, spec.omegas)) @ spec.weights
    timing["kvqa"] = perf_counter() - start

    start = perf_counter()
    img_trotter = greens_time(p, grid, "trotter", n_t=args.nt, ordering=ordering)
    timing["trotter"] = perf_counter() - start

    start = perf_counter()
    img_exact = greens_time(p, grid, "exact")
    timing["exact"] = perf_counter() - start

    writer.write_csv(
        "compare.csv",
        ["t", "ImG_kvqa", "ImG_trotter", "ImG_exact"],
        zip(grid.times, img_chain, img_trotter, img_exact),
    )
    results = {
        "n_trotter": args.nt,
        "ordering": None if ordering is None else list(ordering),
        "max_abs_error_kvqa": float(np.max(np.abs(img_chain - img_exact))),
        "max_abs_error_trotter": float(np.max(np.abs(img_trotter - img_exact))),
        "poles": [list(pole) for pole in spec.poles],
    }
    return results, timing


STAGES = {
    "ed": _stage_ed,
    "vqe": _stage_vqe,
    "kvqa": _stage_kvqa,
    "spectrum": _stage_spectrum,
    "dmft": _stage_dmft,
    "trotter": _stage_trotter,
    "vha": _stage_vha,
    "compare": _stage_compare,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        echo = _config_echo(cfg, args)
    except ConfigError as exc:
        print(f"hhdmft: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hhdmft: cannot read config: {exc}", file=sys.stderr)
        return 4

    try:
        writer = ArtifactWriter(cfg.output_dir)
    except OSError as exc:
        print(f"hhdmft: cannot create output directory: {exc}", file=sys.stderr)
        return 4

    stage = STAGES[args.subcommand]
    start = perf_counter()
    try:
        outcome = stage(cfg, args, writer)
        results, timing = outcome if isinstance(outcome, tuple) else (outcome, {})
        timing["total"] = perf_counter() - start
        writer.write_manifest(echo, results, timing)
        if args.emit_plots:
            writer.write_plot_script([p.name for p in writer.created if p.suffix == ".csv"])
    except ConfigError as exc:
        writer.discard()
        print(f"hhdmft {args.subcommand}: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        writer.discard()
        print(f"hhdmft {args.subcommand}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        writer.discard()
        print(f"hhdmft {args.subcommand}: invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        writer.discard()
        print(f"hhdmft {args.subcommand}: i/o failure: {exc}", file=sys.stderr)
        return 4
    print(f"hhdmft {args.subcommand}: wrote {len(writer.created)} artifacts to {writer.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
