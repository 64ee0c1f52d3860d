#!/usr/bin/env python3
"""Detachment curves: impurity occupation and wavepacket width versus repulsion.

Writes two CSVs per excitation number: full-lattice ED (L=13 by default) and
the one-body impurity-chain overlay (L=100), sharing the U/g grid.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from wqed.basis import ModelSpec, NonlinearitySpec, enumerate_sector
from wqed.effective import build_effective_chain, effective_ground_observables
from wqed.eigensolve import ground_state
from wqed.hamiltonian import apply_number_operators, build_hamiltonian
from wqed.sweep import params_hash, parse_float_list, write_table_csv


def ed_point(n_ex, u_over_g, g, L, tol):
    spec = ModelSpec(L=L, atom_sites=(0,), n_ex=n_ex, J=1.0, g=g,
                     nonlinearity=NonlinearitySpec.kerr(u_over_g * g))
    basis = enumerate_sector(spec)
    res = ground_state(build_hamiltonian(spec, basis), tol=tol, seed=0)
    dens, _ = apply_number_operators(basis, res.ground_vector)
    pos = np.where(np.arange(L) <= L // 2, np.arange(L), np.arange(L) - L)
    width = float(np.sqrt(np.sum(dens * pos.astype(float) ** 2)))
    return float(dens[0]), width


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=int, default=13)
    ap.add_argument("--n-ex", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--j-over-g", type=float, default=0.01)
    ap.add_argument("--u-over-g", default="0.02..1.6:60")
    ap.add_argument("--chain-length", type=int, default=100)
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    us = parse_float_list(args.u_over_g)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = 1.0 / args.j_over_g  # J = 1

    for n_ex in args.n_ex:
        rows_ed, rows_eff = [], []
        for u in us:
            occ, width = ed_point(n_ex, u, g, args.L, args.tol)
            rows_ed.append((u, occ, width))
            spec = ModelSpec(L=2, atom_sites=(0,), n_ex=n_ex, J=1.0, g=g,
                             nonlinearity=NonlinearitySpec.kerr(u * g))
            chain = build_effective_chain(n_ex, spec, length=args.chain_length)
            occ_e, width_e = effective_ground_observables(chain)
            rows_eff.append((u, occ_e, width_e))
        chash = params_hash({"script": "detachment", "L": args.L, "n_ex": n_ex,
                             "j_over_g": args.j_over_g, "u": us})
        for tag, rows in (("ed", rows_ed), ("effective", rows_eff)):
            path = out / f"detachment_{tag}_n{n_ex}.csv"
            write_table_csv(path, ["u_over_g", "occupation", "delta_x_ph"], rows, chash, 0)
            print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
