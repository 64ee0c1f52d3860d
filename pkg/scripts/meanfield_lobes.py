#!/usr/bin/env python3
"""Mean-field lobe structure: critical hopping versus chemical potential.

Defaults reproduce the three-cavity unit cell without Kerr interaction; the
summary JSON collects the largest critical hopping per lobe.
"""

import argparse
import sys
from pathlib import Path

from wqed.cli import _preprocess_argv, cli_dispatch


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--g", type=float, default=1.0)
    ap.add_argument("--u", type=float, default=0.0)
    ap.add_argument("--mu-values", default="-0.98..-0.1:60")
    ap.add_argument("--n-trunc-mf", type=int, default=7)
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args(_preprocess_argv(sys.argv[1:]))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"meanfield_d{args.d}.csv"
    code = cli_dispatch([
        "meanfield", "--d", str(args.d), "--g", str(args.g), "--u", str(args.u),
        "--mu-values", args.mu_values, "--n-trunc-mf", str(args.n_trunc_mf),
        "--threads", str(args.threads), "--out", str(path),
    ])
    if code == 0:
        print(path)
        print(Path(str(path) + ".summary.json"))
    return code


if __name__ == "__main__":
    sys.exit(main())
