"""Command-line front end: curve sweeps, scheme comparison, alignment
checks and Monte Carlo runs. Outputs are plotter-agnostic CSV/JSON and
every command writes a manifest that reproduces it byte-identically.

Exit codes: 0 success, 2 validation error, 3 runtime/convergence error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import channel_from_json, class_h1_membership, ChannelMatrix3
from .rates import (
    AllocationError,
    dof_symmetric,
    hk_sym_rate,
    nonsym_layered_allocation,
    dof_nonsym_numeric,
    sym_rate_lattice,
    very_strong_general,
)
from .simulate import ConfigError, SimConfig, run_simulation

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

_current_argv: list[str] = []


def _write_manifest(command: str, out: Path, params: dict, seed, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "params": params,
        "version": __version__,
        "master_seed": seed,
        "outputs": outputs,
        "argv": list(_current_argv),
    }
    path = Path(str(out) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def cmd_dof_curve(args) -> int:
    if not (0 < args.a2_min < args.a2_max):
        raise ConfigError("need 0 < a2-min < a2-max")
    if args.steps < 2:
        raise ConfigError("steps must be >= 2")
    if args.log_axis:
        grid = np.logspace(math.log10(args.a2_min), math.log10(args.a2_max), args.steps)
    else:
        grid = np.linspace(args.a2_min, args.a2_max, args.steps)
    rows = [(float(a2), dof_symmetric(float(a2))) for a2 in grid]
    out = Path(args.out)
    _write_csv(out, ["a2", "dof"], rows)
    _write_manifest(
        "dof-curve",
        out,
        {
            "a2_min": args.a2_min,
            "a2_max": args.a2_max,
            "steps": args.steps,
            "log_axis": bool(args.log_axis),
        },
        args.seed,
        [str(out)],
    )
    return EXIT_OK


def cmd_sym_rate_compare(args) -> int:
    if not (0 < args.p_min <= args.p_max) or args.steps < 1:
        raise ConfigError("need 0 < p-min <= p-max and steps >= 1")
    a2 = args.a**2
    in_band = 1.0 / 3.0 < a2 < 2.0
    if args.p_min == args.p_max or args.steps == 1:
        grid = np.array([args.p_min])
    else:
        grid = np.logspace(math.log10(args.p_min), math.log10(args.p_max), args.steps)
    oracle = lambda P, s2, g: hk_sym_rate(P, s2, g, grid_size=args.grid_size)
    rows = []
    for P in grid:
        r_hk = hk_sym_rate(float(P), 1.0, args.a, grid_size=args.grid_size)
        if in_band:
            r_lat = r_hk
        else:
            r_lat = sym_rate_lattice(a2, float(P), hk_oracle=oracle).per_user_rates[0]
        rows.append((float(P), r_lat, r_hk))
    out = Path(args.out)
    _write_csv(out, ["P", "R_lattice", "R_HK"], rows)
    warnings = (
        ["cross gain in the unsupported band 1/3 < a^2 < 2; lattice column equals the baseline"]
        if in_band
        else []
    )
    if warnings:
        print(warnings[0], file=sys.stderr)
    _write_manifest(
        "sym-rate-compare",
        out,
        {
            "a": args.a,
            "p_min": args.p_min,
            "p_max": args.p_max,
            "steps": args.steps,
            "grid_size": args.grid_size,
            "warnings": warnings,
        },
        args.seed,
        [str(out)],
    )
    return EXIT_OK


def cmd_align_check(args) -> int:
    text = Path(args.matrix_file).read_text()
    try:
        ch = channel_from_json(text)
    except (KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed matrix file: {exc}") from exc
    report: dict = {"member": ch.h1_witness is not None, "witness": None}
    if ch.h1_witness is not None:
        p, q = ch.h1_witness
        report["witness"] = [p, q]
        h = ch.h
        f2 = p * h[0, 2] / h[0, 1]
        f1 = q * h[1, 2] / h[1, 0]
        report["scale_factors"] = [f1, f2, 1.0]
        if args.powers is not None:
            powers = [float(x) for x in args.powers.split(",")]
            noises = [float(x) for x in (args.noises or "1,1,1").split(",")]
            res = very_strong_general(ch, powers, noises)
            if res is None:
                report["condition_set"] = None
            else:
                rr, idx = res
                report["condition_set"] = idx
                report["rates_bits_per_dim"] = list(rr.per_user_rates)
    out = Path(args.out)
    out.write_text(json.dumps(report, indent=2) + "\n")
    _write_manifest(
        "align-check",
        out,
        {"matrix_file": args.matrix_file, "powers": args.powers, "noises": args.noises},
        args.seed,
        [str(out)],
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    known = set(SimConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if args.seed is not None:
        doc.setdefault("master_seed", args.seed)
    cfg = SimConfig(**doc)
    cfg.validate()
    stats = run_simulation(cfg)
    out = Path(args.out)
    out.write_text(stats.to_json_line(cfg) + "\n")
    _write_manifest("simulate", out, {"config": cfg.to_json_dict()}, cfg.master_seed, [str(out)])
    return EXIT_OK


def cmd_dof_nonsym(args) -> int:
    g2 = [args.a1**2, args.a2**2, args.a3**2]
    if any(x < 2.0 for x in g2):
        raise ConfigError("all squared gains must be >= 2")
    if args.n_max < 1:
        raise ConfigError("n-max must be >= 1")
    rows = []
    failures = []
    for N in range(1, args.n_max + 1):
        try:
            alloc, _ = nonsym_layered_allocation(args.a1, args.a2, args.a3, N)
        except AllocationError as exc:
            failures.append({"N": N, "error": str(exc)})
            continue
        sum_rate = float(alloc.rates.sum())
        ptot = float(np.sum(alloc.total_power))
        rows.append((N, sum_rate, ptot, max(1.0, sum_rate / (0.5 * math.log2(ptot)))))
    if not rows:
        raise AllocationError("layered allocation failed for every N")
    max_ok = rows[-1][0]
    final = dof_nonsym_numeric(args.a1, args.a2, args.a3, max_ok)
    out = Path(args.out)
    _write_csv(out, ["N", "sum_rate", "total_power", "dof_estimate"], rows)
    _write_manifest(
        "dof-nonsym",
        out,
        {
            "a1": args.a1,
            "a2": args.a2,
            "a3": args.a3,
            "n_max": args.n_max,
            "dof": final,
            "failures": failures,
        },
        args.seed,
        [str(out)],
    )
    print(repr(final))
    return EXIT_OK


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    return main(manifest["argv"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="latticeic",
        description="Layered lattice coding calculators and simulators for the "
        "three-user Gaussian interference channel.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="master RNG seed")
        p.add_argument("--out", required=True, help="output path")
        p.add_argument("--format", choices=["csv", "json"], default=None)

    p = sub.add_parser("dof-curve", help="degrees-of-freedom curve over a^2")
    common(p)
    p.add_argument("--a2-min", type=float, required=True)
    p.add_argument("--a2-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--log-axis", action="store_true")
    p.set_defaults(func=cmd_dof_curve)

    p = sub.add_parser("sym-rate-compare", help="lattice vs baseline symmetric rate sweep")
    common(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--p-min", type=float, default=1.0)
    p.add_argument("--p-max", type=float, default=1e6)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--grid-size", type=int, default=201)
    p.set_defaults(func=cmd_sym_rate_compare)

    p = sub.add_parser("align-check", help="rational-ratio membership and alignment report")
    common(p)
    p.add_argument("--matrix-file", required=True)
    p.add_argument("--powers", default=None, help="comma-separated per-user powers")
    p.add_argument("--noises", default=None, help="comma-separated noise variances")
    p.set_defaults(func=cmd_align_check)

    p = sub.add_parser("simulate", help="Monte Carlo run from a JSON config")
    common(p)
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dof-nonsym", help="numeric DoF for a nonsymmetric gain triple")
    common(p)
    p.add_argument("--a1", type=float, required=True)
    p.add_argument("--a2", type=float, required=True)
    p.add_argument("--a3", type=float, required=True)
    p.add_argument("--n-max", type=int, default=40)
    p.set_defaults(func=cmd_dof_nonsym)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)

    return ap


def main(argv=None) -> int:
    global _current_argv
    _current_argv = list(argv) if argv is not None else sys.argv[1:]
    args = build_parser().parse_args(_current_argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, AllocationError) or isinstance(exc, RuntimeError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
