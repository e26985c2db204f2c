"""Command-line interface.

Subcommands: simulate | sojourn | levelset | dims | macro | verify |
experiment | selftest.  Exit codes: 0 all checks passed, 2 an estimate fell
outside tolerance, 1 execution error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .core import IntervalSet, PixelSet, pixelize
from .fractal import (
    box_dim_estimate,
    intermediate_dim_estimate,
    packing_predim_estimate,
    profile_dim_estimate,
)
from .harness import ExperimentConfig, run, run_oracle_selftest, write_bundle
from .macroscopic import dimh_estimate
from .occupation import LevelParams, SojournParams, default_level_band, level_set, sojourn_set
from .rosenblatt import RosenblattParams, simulate_path


def _write_path_csv(path, out: Path) -> None:
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "z"])
        for t, z in zip(path.times(), path.values):
            w.writerow([repr(float(t)), repr(float(z))])
    sidecar = {
        "H": path.H,
        "n": path.grid.n,
        "T": path.grid.horizon,
        "seed": path.seed,
        "method": "hermite2",
    }
    out.with_suffix(".json").write_text(json.dumps(sidecar, sort_keys=True, indent=2))


def _read_path_csv(path_file: str):
    p = Path(path_file)
    sidecar = json.loads(p.with_suffix(".json").read_text())
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    from .core import PathGrid, SamplePath

    t = data[:, 0]
    grid = PathGrid(t0=float(t[0]), dt=float(t[1] - t[0]), n=t.size - 1)
    return SamplePath(grid=grid, values=data[:, 1], H=sidecar["H"], seed=sidecar["seed"])


def _load_points(set_file: str) -> np.ndarray:
    """Point representation of a set CSV (intervals 'a,b', pixels 'cell' or
    raw points 'x')."""
    with open(set_file, newline="") as fh:
        header = fh.readline().strip()
    if header == "a,b":
        s = IntervalSet.from_csv(set_file)
        if s.is_empty:
            return np.empty(0)
        res = max(float(np.min(s.b - s.a)), 1e-9)
        pts = [np.arange(lo, hi + res / 2, res) for lo, hi in s]
        return np.unique(np.concatenate(pts))
    if header == "cell":
        return PixelSet.from_csv(set_file).cells.astype(float)
    if header == "x":
        data = np.loadtxt(set_file, delimiter=",", skiprows=1, ndmin=1)
        return np.asarray(data, dtype=float)
    raise ValueError(f"{set_file}: unrecognized set CSV header {header!r}")


def _parse_range(text: str, count: int = 2) -> list[float]:
    parts = [float(p) for p in text.split(":")]
    if len(parts) != count:
        raise ValueError(f"expected {count} colon-separated values, got {text!r}")
    return parts


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rosefract")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a path, write CSV t,z + JSON sidecar")
    p_sim.add_argument("--hurst", type=float, required=True)
    p_sim.add_argument("--steps", type=int, default=2**14)
    p_sim.add_argument("--horizon", type=float, default=1.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)

    p_soj = sub.add_parser("sojourn", help="extract a sojourn set from a path CSV")
    p_soj.add_argument("--path", required=True)
    p_soj.add_argument("--gamma", type=float, required=True)
    p_soj.add_argument("--out", required=True)

    p_lvl = sub.add_parser("levelset", help="extract a level set from a path CSV")
    p_lvl.add_argument("--path", required=True)
    p_lvl.add_argument("--x", type=float, required=True)
    p_lvl.add_argument("--lam", type=float, default=1.0)
    p_lvl.add_argument("--out", required=True)

    p_dims = sub.add_parser("dims", help="scale-local dimension estimate of a set CSV")
    p_dims.add_argument("input")
    p_dims.add_argument("--method", choices=["box", "intermediate", "profile", "packing"], default="box")
    p_dims.add_argument("--theta", type=float, default=1.0)
    p_dims.add_argument("--m", type=float, default=1.0)
    p_dims.add_argument("--scales", default="0.0001:0.1", help="lo:hi")
    p_dims.add_argument("--num-scales", type=int, default=8)

    p_macro = sub.add_parser("macro", help="macroscopic dimension of a set CSV")
    p_macro.add_argument("input")
    p_macro.add_argument("--rho-grid", default="0:1.2:0.05", help="lo:hi:step")
    p_macro.add_argument("--shells", default="2:20", help="lo:hi")

    p_verify = sub.add_parser("verify", help="process-law checks for one H")
    p_verify.add_argument("--hurst", type=float, required=True)
    p_verify.add_argument("--replicas", type=int, default=2000)
    p_verify.add_argument("--steps", type=int, default=2**14)
    p_verify.add_argument("--seed", type=int, default=20260810)
    p_verify.add_argument("--out")

    p_exp = sub.add_parser("experiment", help="run an experiment from a JSON config")
    p_exp.add_argument("--config", required=True)

    sub.add_parser("selftest", help="run the DP / capacity oracle batteries")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "simulate":
        params = RosenblattParams(H=args.hurst, n=args.steps, T=args.horizon)
        path = simulate_path(params, args.seed)
        _write_path_csv(path, Path(args.out))
        print(f"wrote {args.out}")
        return 0

    if args.command == "sojourn":
        path = _read_path_csv(args.path)
        s = sojourn_set(path, SojournParams(gamma=args.gamma))
        s.to_csv(args.out)
        print(f"wrote {args.out} ({len(s)} intervals, measure {s.measure:g})")
        return 0

    if args.command == "levelset":
        path = _read_path_csv(args.path)
        band = default_level_band(path, lam=args.lam)
        s = level_set(path, LevelParams(x=args.x, delta=band))
        s.to_csv(args.out)
        print(f"wrote {args.out} ({len(s)} intervals, band {band:g})")
        return 0

    if args.command == "dims":
        pts = _load_points(args.input)
        lo, hi = _parse_range(args.scales)
        r_grid = np.geomspace(hi, lo, args.num_scales)
        if args.method == "box":
            est = box_dim_estimate(pts, lo, hi)
        elif args.method == "packing":
            est = packing_predim_estimate(pts, lo, hi)
        elif args.method == "intermediate":
            est = intermediate_dim_estimate(pts, args.theta, r_grid)
        else:
            est = profile_dim_estimate(pts, args.theta, args.m, r_grid)
        print(json.dumps(est.to_dict(), sort_keys=True, indent=2))
        return 0

    if args.command == "macro":
        pts = _load_points(args.input)
        pixels = pixelize(IntervalSet(np.column_stack([pts, pts])))
        rho_lo, rho_hi, rho_step = _parse_range(args.rho_grid, 3)
        shell_lo, shell_hi = _parse_range(args.shells)
        est = dimh_estimate(
            pixels,
            rho_grid=np.arange(rho_lo, rho_hi + rho_step / 2, rho_step),
            n_lo=int(shell_lo),
            n_max=int(shell_hi),
        )
        print(json.dumps(est.to_dict(), sort_keys=True, indent=2))
        return 0

    if args.command == "verify":
        config = ExperimentConfig(
            kind="verify-process",
            H=args.hurst,
            replicas=args.replicas,
            n_steps=args.steps,
            master_seed=args.seed,
            output_dir=args.out,
        )
        bundle = run(config)
        print(bundle.summary_json())
        return 0 if bundle.passed else 2

    if args.command == "experiment":
        config = ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
        bundle = run(config)
        if config.output_dir:
            write_bundle(bundle, config.output_dir)
        print(bundle.summary_json())
        return 0 if bundle.passed else 2

    if args.command == "selftest":
        results = run_oracle_selftest()
        print(json.dumps(results, sort_keys=True, indent=2))
        return 0 if results["ok"] else 2

    raise ValueError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
