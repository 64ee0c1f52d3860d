#!/usr/bin/env python3
"""Reduced-size ground-state phase maps (fluctuation parameters over (g, U)).

Two geometries: one atom per cavity with two excitations per cell at six
cells, and alternating atoms with two excitations per cell at four cells.
Uses the checkpointed sweep engine; grids are logarithmic in both couplings.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from wqed.sweep import SweepConfig, run_sweep


def geometry(name):
    if name == "dense":
        return dict(L=6, atom_sites=tuple(range(6)), n_ex=12)
    if name == "dilute":
        return dict(L=8, atom_sites=(0, 2, 4, 6), n_ex=8)
    raise ValueError(name)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--geometry", choices=("dense", "dilute"), default="dense")
    ap.add_argument("--points", type=int, default=7, help="grid points per axis")
    ap.add_argument("--g-range", type=float, nargs=2, default=[0.3, 300.0])
    ap.add_argument("--u-range", type=float, nargs=2, default=[0.3, 3000.0])
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    geo = geometry(args.geometry)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = SweepConfig(
        L=geo["L"],
        atom_sites=geo["atom_sites"],
        n_ex_list=(geo["n_ex"],),
        g_values=tuple(np.geomspace(*args.g_range, args.points)),
        u_values=tuple(np.geomspace(*args.u_range, args.points)),
        observables=("energy", "densities", "g2", "fluctuations", "two_point"),
        tol=args.tol,
        out_path=str(out / f"phase_map_{args.geometry}.csv"),
        seed=0,
    )
    summary = run_sweep(config, threads=args.threads or None)
    print(summary.path, f"({summary.n_computed} computed, {summary.n_skipped} resumed)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
