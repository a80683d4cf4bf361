"""Command-line front end: subcommand dispatch and deterministic file output.

Exit codes: 0 success, 2 parameter/validation problems, 3 numerical
failures.  Messages go to stderr, data to stdout or files.  Every emitted
file starts with a header recording the package version, a hash of the
resolved run configuration, and the normalization convention.  All
computation happens before any file is opened, so invalid runs never leave
partial output behind.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .grid import Grid
from .profile import SolitonParams, default_box, default_grid, solve_profile
from . import conserved, dynamics, spectral

NORMALIZATION = ("full-functional normalization; half_normalized values, "
                 "where present, are value/2")


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _meta_lines(cfg: dict) -> list[str]:
    return [f"qgplab {__version__}",
            f"config_hash {_config_hash(cfg)}",
            f"normalization: {NORMALIZATION}"]


def _write_csv(path, columns: list[str], rows, meta: list[str]) -> None:
    lines = [f"# {m}" for m in meta]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(f"{x:.17g}" for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _emit_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _make_grid(params: SolitonParams, half_length, n) -> Grid:
    if half_length is None and n is None:
        return default_grid(params)
    L = float(half_length) if half_length is not None else default_box(params)
    if n is not None:
        return Grid(L, int(n))
    return default_grid(params, half_length=L)


# -- subcommands -----------------------------------------------------------------

def cmd_profile(args, cfg) -> int:
    params = SolitonParams(args.c, args.kappa)
    grid = _make_grid(params, args.half_length, args.n)
    prof = solve_profile(params, grid, substeps=args.substeps)
    rows = np.column_stack([grid.x, prof.eta.values, prof.v.values,
                            prof.eta_x.values, prof.theta.values])
    _write_csv(args.out, ["x", "eta", "v", "eta_x", "theta"], rows, _meta_lines(cfg))
    return 0


def cmd_diagram(args, cfg) -> int:
    curve = conserved.branch_curve(args.kappa, args.cmin, args.cmax, args.samples)
    conserved.emit_diagram(curve, args.out_csv, args.out_svg, meta=_meta_lines(cfg))
    return 0


def cmd_vk(args, cfg) -> int:
    verdict = conserved.vk_classify(args.c, args.kappa, args.tolerance)
    _emit_json(asdict(verdict))
    return 0


def cmd_critical(args, cfg) -> int:
    if args.kappa0:
        _emit_json({"kappa0": conserved.find_kappa0()})
    else:
        if args.kappa is None:
            raise ValidationError("critical needs --kappa <real> or --kappa0")
        _emit_json({"kappa": args.kappa,
                    "c_tilde": conserved.find_c_tilde(args.kappa)})
    return 0


def cmd_spectrum(args, cfg) -> int:
    params = SolitonParams(args.c, args.kappa)
    grid = _make_grid(params, args.half_length, args.n)
    prof = solve_profile(params, grid)
    report = spectral.spectrum_report(prof)
    payload = {
        "c": args.c, "kappa": args.kappa,
        "grid": {"half_length": grid.half_length, "n": grid.n},
        "negative_count": report.negative_count,
        "mu_minus": report.mu_minus,
        "mu_zero": report.mu_zero,
        "kernel_residual": report.kernel_residual,
        "essential_edge": report.essential_edge,
        "discrete_eigenvalues": report.discrete_eigenvalues,
    }
    if args.dump_eigvecs:
        op = spectral.assemble_lc(prof)
        pairs = spectral.eigenpairs_below(op)
        cols = ["x"] + [f"vec{i}" for i in range(len(pairs))]
        rows = np.column_stack([grid.x] + [p[1].values for p in pairs])
        meta = _meta_lines(cfg) + [
            "eigenvalues: " + " ".join(f"{lam:.17g}" for lam, _ in pairs)]
        _write_csv(args.dump_eigvecs, cols, rows, meta)
    _emit_json(payload)
    return 0


def _snapshot(path, state: dynamics.HydroState, meta: list[str]) -> None:
    rows = np.column_stack([state.grid.x, state.eta.values, state.v.values])
    _write_csv(path, ["x", "eta", "v"], rows, meta + [f"t {state.t:.17g}"])


def cmd_evolve(args, cfg) -> int:
    params = SolitonParams(args.c, args.kappa)
    grid = _make_grid(params, args.half_length, args.n)
    perturbation = {"mode": args.perturb, "amplitude": args.amplitude,
                    "seed": args.seed}
    report, verdict = dynamics.stability_experiment(
        args.c, args.kappa, perturbation, args.T, grid=grid, dt=args.dt,
        sample_every=args.sample_every, cutoff_fraction=args.cutoff_fraction)
    meta = _meta_lines(cfg)
    os.makedirs(args.out, exist_ok=True)
    os.makedirs(os.path.join(args.out, "snapshots"), exist_ok=True)
    payload = {
        "_meta": {"version": __version__, "config_hash": _config_hash(cfg),
                  "normalization": NORMALIZATION},
        "c": args.c, "kappa": args.kappa, "T": args.T,
        "perturbation": perturbation, "verdict": verdict,
        "times": report.times,
        "energy_drift": report.energy_drift,
        "momentum_drift": report.momentum_drift,
        "particles_drift": report.particles_drift,
        "twist_drift": report.twist_drift,
        "orbital_distance": report.orbital_distance,
        "shifts": report.shifts,
        "lyapunov": report.lyapunov,
        "validity": report.validity,
        "violation_time": report.violation_time,
    }
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for state in (report.initial_state, report.final_state):
        if state is not None:
            _snapshot(os.path.join(args.out, "snapshots", f"t_{state.t:.6f}.csv"),
                      state, meta)
    if args.svg:
        from ._svg import polyline_figure

        ds = [d for d in report.orbital_distance if d is not None]
        if ds:
            polyline_figure(
                os.path.join(args.out, "distance.svg"),
                report.times[:len(ds)], ds,
                xlabel="t", ylabel="orbital distance",
                title=f"c={args.c:g} kappa={args.kappa:g} {args.perturb}",
                meta=meta)
    print(verdict)
    return 0


def cmd_figures(args, cfg) -> int:
    os.makedirs(args.out, exist_ok=True)
    meta = _meta_lines(cfg)
    if args.recipe == "fig1":
        curve = conserved.branch_curve(-50.0, 0.03, 1.40, 64)
        conserved.emit_diagram(curve, os.path.join(args.out, "fig1_branch.csv"),
                               os.path.join(args.out, "fig1_branch.svg"),
                               meta=meta)
    elif args.recipe == "fig2":
        curve = conserved.branch_curve(-3.0, 0.03, 1.40, 64)
        conserved.emit_diagram(curve, os.path.join(args.out, "fig2_branch.csv"),
                               os.path.join(args.out, "fig2_branch.svg"),
                               meta=meta)
        _emit_ctilde_scan(os.path.join(args.out, "ctilde_vs_kappa.csv"), meta)
    elif args.recipe == "kappa_scan":
        _emit_ctilde_scan(os.path.join(args.out, "ctilde_vs_kappa.csv"), meta)
    return 0


def _emit_ctilde_scan(path, meta: list[str]) -> None:
    kappa0 = conserved.find_kappa0()
    coarse = np.linspace(-50.0, -6.0, 12)
    mid = np.linspace(-5.5, -4.0, 7)
    close = kappa0 + (-4.0 - kappa0) * np.geomspace(1.0, 0.02, 6)[1:]
    above = np.array([kappa0, -3.5, -3.0])  # convention: no sign change -> 0
    kappas = np.concatenate([coarse, mid, close, above])
    rows = []
    for kap in kappas:
        ct = conserved.find_c_tilde(float(kap))
        rows.append((float(kap), 0.0 if ct is None else ct))
    _write_csv(path, ["kappa", "c_tilde"], rows,
               meta + [f"kappa0 {kappa0:.17g}", "c_tilde 0 marks no sign change"])


# -- parsing and dispatch ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgplab",
        description="Dark-soliton laboratory for a quasilinear Gross-Pitaevskii model")
    parser.add_argument("--version", action="version", version=f"qgplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None,
                       help="JSON file whose entries override the flags")

    p = sub.add_parser("profile", help="solve a soliton profile, write x,eta,v CSV")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--half-length", "--L", dest="half_length", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--substeps", type=int, default=16)
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("diagram", help="tabulate the energy-momentum branch")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--cmin", type=float, default=0.05)
    p.add_argument("--cmax", type=float, default=1.40)
    p.add_argument("--samples", type=int, default=60)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg", default=None)
    add_common(p)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("vk", help="classify orbital stability by momentum slope")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--tolerance", type=float, default=conserved.VK_TOLERANCE)
    add_common(p)
    p.set_defaults(func=cmd_vk)

    p = sub.add_parser("critical", help="critical speed c~ or threshold kappa0")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--kappa0", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("spectrum", help="discrete spectrum of the linearized operator")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--half-length", "--L", dest="half_length", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--dump-eigvecs", default=None)
    add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("evolve", help="evolve a (perturbed) soliton and classify")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--perturb", choices=dynamics.PERTURBATION_MODES, default="none")
    p.add_argument("--amplitude", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--sample-every", type=float, default=None)
    p.add_argument("--cutoff-fraction", type=float, default=dynamics.DEFAULT_CUTOFF)
    p.add_argument("--half-length", "--L", dest="half_length", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("figures", help="reproduce the reference figure data")
    p.add_argument("--recipe", choices=("fig1", "fig2", "kappa_scan"), required=True)
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_figures)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        raise ValidationError("config file must hold a JSON object")
    allowed = {k for k in vars(args) if k not in ("func", "command", "config")}
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest not in allowed:
            raise ValidationError(f"unknown config key: {key!r}")
        setattr(args, dest, value)


def _resolved_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items())
            if k not in ("func", "config")}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args)
        cfg = _resolved_config(args)
        rc = args.func(args, cfg)
        return 0 if rc is None else int(rc)
    except ValidationError as err:
        print(f"qgplab: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"qgplab: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"qgplab: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
