"""Command-line interface: one subcommand per study, uniform I/O conventions.

Every subcommand honors ``--config`` (key-value or JSON file), ``--out``,
``--format csv|json``, ``--threads`` and ``--seed``; tables carry a single
header comment with the tool version, the full config hash and the seed.
Exit codes: 0 success, 2 usage errors, 3 invalid configuration, 1 runtime
failures (with a machine-readable JSON error line on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

from . import __version__
from .analytics import strong_binding_threshold
from .basis import ModelSpec, NonlinearitySpec, enumerate_sector
from .effective import build_effective_chain, effective_ground_observables
from .eigensolve import ground_state, low_spectrum
from .hamiltonian import apply_number_operators, build_hamiltonian
from .meanfield import MeanFieldCell, lobe_scan
from .observables import binding_energy_n2, density_correlation, two_point
from .polariton import compare_spectra
from .sweep import (
    ConfigError,
    build_sweep_config,
    coerce_config,
    params_hash as _hash_params,
    parse_float_list,
    parse_int_list,
    read_config_file,
    resolve_threads,
    run_sweep,
    table_text,
)

_NEG_VALUE = re.compile(r"^-\d|^-\.\d")


def _preprocess_argv(argv: list[str]) -> list[str]:
    """Join '--flag -2..3' into '--flag=-2..3' so negative ranges survive argparse."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEG_VALUE.match(
            argv[i + 1]
        ):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def emit_table(columns, rows, args, config_hash: str) -> None:
    if args.format == "json":
        payload = {
            "meta": {
                "tool": "wqed",
                "version": __version__,
                "config_hash": config_hash,
                "seed": args.seed,
            },
            "records": [
                {
                    c: (None if isinstance(v, float) and math.isnan(v) else v)
                    for c, v in zip(columns, row)
                }
                for row in rows
            ],
        }
        text = json.dumps(payload, indent=1, default=float) + "\n"
    else:
        text = table_text(columns, rows, config_hash, args.seed)
    if args.out:
        Path(args.out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)


def _merged_config(args, extra_flags: dict) -> dict:
    flat: dict = {}
    if args.config:
        flat.update(read_config_file(args.config))
    flat.update({k: v for k, v in extra_flags.items() if v is not None})
    return coerce_config(flat)


def _point_spec(cfg: dict, n_ex: int) -> ModelSpec:
    L = int(cfg.get("lattice.L", 4))
    if "lattice.d" in cfg:
        d = int(cfg["lattice.d"])
        if d < 1 or L % d != 0:
            raise ConfigError(f"lattice.d={d} must divide lattice.L={L}", keys=["lattice.d"])
        atom_sites = tuple(range(0, L, d))
    else:
        atom_sites = tuple(cfg.get("lattice.atom_sites", ()))
    try:
        return ModelSpec(
            L=L,
            atom_sites=atom_sites,
            n_ex=n_ex,
            boundary=str(cfg.get("lattice.boundary", "periodic")),
            J=1.0,
            g=float(cfg.get("model.g_over_j", 1.0)),
            delta=float(cfg.get("model.delta", 0.0)),
            nonlinearity=NonlinearitySpec.kerr(float(cfg.get("model.u_over_j", 0.0))),
            n_trunc=cfg.get("sector.n_trunc"),
        )
    except ValueError as err:
        raise ConfigError(f"invalid model: {err}") from err


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_spectrum(args) -> int:
    cfg = _merged_config(args, {
        "lattice.L": args.L, "lattice.d": args.d, "lattice.atom_sites": args.atom_sites,
        "lattice.boundary": args.boundary, "model.g_over_j": args.g, "model.u_over_j": args.u,
        "model.delta": args.delta, "sector.n_trunc": args.n_trunc,
    })
    n_ex = args.n_ex if args.n_ex is not None else int(cfg.get("sector.n_ex", [1])[0])
    spec = _point_spec(cfg, n_ex)
    basis = enumerate_sector(spec)
    op = build_hamiltonian(spec, basis)
    res = low_spectrum(op, min(args.k, basis.dim), tol=args.tol, seed=args.seed,
                       want_vectors=False)
    chash = _hash_params({**cfg, "sector.n_ex": n_ex, "k": args.k, "tol": args.tol})
    emit_table(["index", "energy"], list(enumerate(res.energies.tolist())), args, chash)
    return 0


def cmd_threshold(args) -> int:
    ns = parse_int_list(args.n)
    dous = parse_float_list(args.delta_over_u)
    rows = []
    for n in ns:
        for dou in dous:
            rows.append((n, dou, strong_binding_threshold(n, dou, 1.0)))
    chash = _hash_params({"n": ns, "delta_over_u": dous})
    emit_table(["n", "delta_over_u", "g_b_over_u"], rows, args, chash)
    return 0


def cmd_binding(args) -> int:
    cfg = _merged_config(args, {
        "lattice.L": args.L, "lattice.boundary": args.boundary,
        "sector.n_trunc": args.n_trunc,
        "sweep.u_values": args.u_values, "sweep.g_values": args.g_values,
    })
    L = int(cfg.get("lattice.L", 40))
    u_values = cfg.get("sweep.u_values", [1.0])
    g_values = cfg.get("sweep.g_values", [1.0])
    correction = not args.no_correction
    rows = []
    for u in u_values:
        for g in g_values:
            spec = ModelSpec(
                L=L, atom_sites=(0,), n_ex=2,
                boundary=str(cfg.get("lattice.boundary", "periodic")),
                J=1.0, g=g, nonlinearity=NonlinearitySpec.kerr(u),
                n_trunc=cfg.get("sector.n_trunc", 2),
            )
            e_b = binding_energy_n2(spec, tol=args.tol, seed=args.seed,
                                    finite_size_correction=correction)
            rows.append((u, g, e_b))
    chash = _hash_params({"L": L, "u": list(u_values), "g": list(g_values),
                          "correction": correction, "tol": args.tol})
    emit_table(["u_over_j", "g_over_j", "e_b"], rows, args, chash)
    return 0


def cmd_correlations(args) -> int:
    cfg = _merged_config(args, {
        "lattice.L": args.L, "lattice.atom_sites": args.atom_sites, "lattice.d": args.d,
        "lattice.boundary": args.boundary, "model.g_over_j": args.g, "model.u_over_j": args.u,
        "model.delta": args.delta, "sector.n_trunc": args.n_trunc,
    })
    n_ex = args.n_ex if args.n_ex is not None else int(cfg.get("sector.n_ex", [2])[0])
    spec = _point_spec(cfg, n_ex)
    x_ref = args.x_ref % spec.L
    basis = enumerate_sector(spec)
    op = build_hamiltonian(spec, basis)
    res = ground_state(op, tol=args.tol, seed=args.seed)
    vec = res.ground_vector
    c = density_correlation(vec, basis, x_ref)
    dens, _ = apply_number_operators(basis, vec)
    impurity = set(spec.atom_sites)
    rows = []
    for x in range(spec.L):
        rows.append((x, c[x], dens[x], two_point(vec, basis, x, x_ref), int(x in impurity)))
    chash = _hash_params({**cfg, "sector.n_ex": n_ex, "x_ref": x_ref, "tol": args.tol})
    emit_table(["x", "c_x", "density_x", "two_point_x_ref", "is_impurity"], rows, args, chash)
    return 0


def cmd_effective(args) -> int:
    u_over_g = parse_float_list(args.u_over_g_values)
    g = args.g
    rows = []
    for uog in u_over_g:
        spec = ModelSpec(
            L=2, atom_sites=(0,), n_ex=args.n, J=1.0, g=g, delta=args.delta,
            nonlinearity=NonlinearitySpec.kerr(uog * g), n_trunc=max(args.n, 1),
        )
        chain = build_effective_chain(args.n, spec, length=args.length,
                                      boundary=args.chain_boundary)
        occ, width = effective_ground_observables(chain)
        rows.append((uog, occ, width))
    chash = _hash_params({"n": args.n, "g": g, "u_over_g": u_over_g, "length": args.length,
                          "delta": args.delta})
    emit_table(["u_over_g", "occupation", "delta_x_ph"], rows, args, chash)
    return 0


def cmd_polariton_compare(args) -> int:
    cfg = _merged_config(args, {
        "lattice.L": args.L, "lattice.d": args.d, "lattice.boundary": args.boundary,
        "model.g_over_j": args.g, "model.u_over_j": args.u, "model.delta": args.delta,
        "sector.n_trunc": args.n_trunc,
    })
    n_ex = args.n_ex if args.n_ex is not None else int(cfg.get("sector.n_ex", [2])[0])
    spec = _point_spec(cfg, n_ex)
    cmp = compare_spectra(spec, args.k, tol=args.tol, seed=args.seed)
    rows = [
        (i, ef, ep, dv)
        for i, (ef, ep, dv) in enumerate(
            zip(cmp.energies_full.tolist(), cmp.energies_polariton.tolist(),
                cmp.deviations.tolist())
        )
    ]
    chash = _hash_params({**cfg, "sector.n_ex": n_ex, "k": args.k})
    emit_table(["index", "e_full", "e_pol", "deviation"], rows, args, chash)
    return 0


def cmd_meanfield(args) -> int:
    mu_grid = parse_float_list(args.mu_values)
    cell = MeanFieldCell(
        d=args.d, g=args.g, mu=0.0, delta=args.delta,
        u_spec=NonlinearitySpec.kerr(args.u), n_trunc=args.n_trunc_mf,
    )
    threads = resolve_threads(args.threads)
    result = lobe_scan(cell, mu_grid, target_n=args.target_n, workers=threads)
    # the zero-hopping filling doubles as the lobe label; -1 marks degenerate points
    rows = [
        (float(mu), float(jc), (float(lobe) if lobe >= 0 else math.nan), int(lobe))
        for (mu, jc, lobe) in result.mu_scan
    ]
    chash = _hash_params({"d": args.d, "g": args.g, "u": args.u, "delta": args.delta,
                          "mu": list(mu_grid), "n_trunc_mf": args.n_trunc_mf})
    if args.format == "json":
        payload = {
            "meta": {"tool": "wqed", "version": __version__, "config_hash": chash,
                     "seed": args.seed},
            "records": [
                {"mu": mu, "j_c": None if math.isnan(jc) else jc, "mean_n": mean_n,
                 "lobe_id": lobe}
                for (mu, jc, mean_n, lobe) in rows
            ],
            "lobe_tips": {str(k): v for k, v in sorted(result.lobe_tips.items())},
        }
        text = json.dumps(payload, indent=1) + "\n"
        if args.out:
            Path(args.out).write_text(text, newline="\n")
        else:
            sys.stdout.write(text)
    else:
        emit_table(["mu", "j_c", "mean_n", "lobe_id"], rows, args, chash)
        summary = {"config_hash": chash,
                   "lobe_tips": {str(k): v for k, v in sorted(result.lobe_tips.items())}}
        if args.out:
            Path(str(args.out) + ".summary.json").write_text(
                json.dumps(summary, indent=1) + "\n", newline="\n"
            )
        else:
            sys.stdout.write(json.dumps(summary, indent=1) + "\n")
    return 0


def cmd_phase_diagram(args) -> int:
    if not args.config:
        raise ConfigError("phase-diagram requires --config", keys=["--config"])
    flat = read_config_file(args.config)
    config = build_sweep_config(flat)
    if args.out:
        config.out_path = str(args.out)
    if args.format:
        config.out_format = args.format
    if args.seed is not None and args.seed != 0:
        config.seed = args.seed
    summary = run_sweep(config, threads=args.threads if args.threads else None)
    sys.stdout.write(
        f"{summary.path}: {summary.n_computed} computed, {summary.n_skipped} skipped\n"
    )
    return 0


# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key-value or JSON config file")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wqed",
        description="Ground-state studies of a cavity array with two-level impurities",
    )
    parser.add_argument("--version", action="version", version=f"wqed {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="low eigenvalues of one sector")
    _add_common(p)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--atom-sites", dest="atom_sites", default=None)
    p.add_argument("--boundary", choices=("periodic", "open"), default=None)
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n-ex", dest="n_ex", type=int, default=None)
    p.add_argument("--n-trunc", dest="n_trunc", type=int, default=None)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser("threshold", help="strong-coupling binding thresholds g_b(n)/U")
    _add_common(p)
    p.add_argument("--n", default="2..5", help="photon numbers, e.g. 2..5 or 2,3")
    p.add_argument("--delta-over-u", dest="delta_over_u", default="0",
                   help="detuning grid, e.g. -2..3:51")
    p.set_defaults(handler=cmd_threshold)

    p = sub.add_parser("binding", help="two-photon binding energy map")
    _add_common(p)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--boundary", choices=("periodic", "open"), default=None)
    p.add_argument("--n-trunc", dest="n_trunc", type=int, default=None)
    p.add_argument("--u-values", dest="u_values", default=None)
    p.add_argument("--g-values", dest="g_values", default=None)
    p.add_argument("--no-correction", dest="no_correction", action="store_true")
    p.set_defaults(handler=cmd_binding)

    p = sub.add_parser("correlations", help="density-density correlation profile")
    _add_common(p)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--atom-sites", dest="atom_sites", default=None)
    p.add_argument("--boundary", choices=("periodic", "open"), default=None)
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n-ex", dest="n_ex", type=int, default=None)
    p.add_argument("--n-trunc", dest="n_trunc", type=int, default=None)
    p.add_argument("--x-ref", dest="x_ref", type=int, default=0)
    p.set_defaults(handler=cmd_correlations)

    p = sub.add_parser("effective", help="impurity-chain detachment observables")
    _add_common(p)
    p.add_argument("--n", type=int, default=2, help="bound-photon number of the transition")
    p.add_argument("--g", type=float, default=100.0, help="coupling in units of J")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--u-over-g-values", dest="u_over_g_values", default="0.5..1.5:41")
    p.add_argument("--length", type=int, default=100)
    p.add_argument("--chain-boundary", dest="chain_boundary",
                   choices=("periodic", "open"), default="periodic")
    p.set_defaults(handler=cmd_effective)

    p = sub.add_parser("polariton-compare", help="full vs polariton-model spectra")
    _add_common(p)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--boundary", choices=("periodic", "open"), default=None)
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n-ex", dest="n_ex", type=int, default=None)
    p.add_argument("--n-trunc", dest="n_trunc", type=int, default=None)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(handler=cmd_polariton_compare)

    p = sub.add_parser("meanfield", help="unit-cell mean-field lobe scan")
    _add_common(p)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--u", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--mu-values", dest="mu_values", default="-0.95..-0.05:19")
    p.add_argument("--n-trunc-mf", dest="n_trunc_mf", type=int, default=6)
    p.add_argument("--target-n", dest="target_n", type=int, default=None)
    p.set_defaults(handler=cmd_meanfield)

    p = sub.add_parser("phase-diagram", help="checkpointed observable sweep from a config")
    _add_common(p)
    p.set_defaults(handler=cmd_phase_diagram)

    return parser


def cli_dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_preprocess_argv(list(argv)))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except ConfigError as err:
        sys.stderr.write(json.dumps({"error": "config", "detail": str(err),
                                     "keys": err.keys}) + "\n")
        return 3
    except Exception as err:  # runtime failure: machine-readable line, exit 1
        sys.stderr.write(json.dumps({"error": "runtime",
                                     "detail": f"{type(err).__name__}: {err}"}) + "\n")
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
