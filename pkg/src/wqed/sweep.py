"""Parameter-grid orchestration: config parsing, worker pool, checkpointed output.

Config files are plain ``section.key = value`` lines (``#`` comments, JSON
accepted as an alternative). A sweep runs one build-solve-measure pipeline per
grid point with a per-point seed derived from the base seed and the grid
index, so the output rows are byte-identical for any worker count. Completed
points are journaled one JSON line at a time; re-running a finished sweep
recomputes nothing and interrupted sweeps resume from the journal.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import ModelSpec, NonlinearitySpec, enumerate_sector
from .eigensolve import ground_state
from .hamiltonian import apply_number_operators, build_hamiltonian
from .observables import binding_energy_n2, far_pair, fluctuations, g2_impurity_average, two_point

ENV_THREADS = "WQED_THREADS"

CSV_COLUMNS = [
    "grid_index",
    "n_ex",
    "delta",
    "u_over_j",
    "g_over_j",
    "energy",
    "n_ph_total",
    "n_at_total",
    "g2_avg",
    "v_pol",
    "v_atom",
    "e_b",
    "two_point_far",
    "iterations",
    "residual",
    "seed",
    "error",
]

ALL_OBSERVABLES = ("energy", "densities", "g2", "fluctuations", "binding", "two_point")


class ConfigError(ValueError):
    def __init__(self, message: str, keys: list[str] | None = None):
        super().__init__(message)
        self.keys = keys or []


@dataclass
class SweepConfig:
    L: int = 4
    atom_sites: tuple[int, ...] = ()
    boundary: str = "periodic"
    delta: float = 0.0
    n_ex_list: tuple[int, ...] = (1,)
    n_trunc: int | None = None
    g_values: tuple[float, ...] = (1.0,)
    u_values: tuple[float, ...] = (0.0,)
    delta_over_u_values: tuple[float, ...] | None = None
    observables: tuple[str, ...] = ALL_OBSERVABLES
    tol: float = 1e-10
    seed: int = 0
    dense_limit: int = 4000
    out_path: str = "sweep.csv"
    out_format: str = "csv"
    threads: int = 1
    binding_correction: bool = True

    def grid(self) -> list[dict]:
        axes = [
            self.n_ex_list,
            self.delta_over_u_values if self.delta_over_u_values is not None else (None,),
            self.u_values,
            self.g_values,
        ]
        points = []
        for idx, (n_ex, dou, u, g) in enumerate(itertools.product(*axes)):
            delta = self.delta if dou is None else dou * u
            points.append(
                {"grid_index": idx, "n_ex": n_ex, "delta": delta, "u_over_j": u, "g_over_j": g}
            )
        return points

    def spec_for(self, point: dict) -> ModelSpec:
        return ModelSpec(
            L=self.L,
            atom_sites=self.atom_sites,
            n_ex=point["n_ex"],
            boundary=self.boundary,
            J=1.0,
            g=point["g_over_j"],
            delta=point["delta"],
            nonlinearity=NonlinearitySpec.kerr(point["u_over_j"]),
            n_trunc=self.n_trunc,
        )

    def canonical_dict(self) -> dict:
        return {
            "lattice.L": self.L,
            "lattice.atom_sites": list(self.atom_sites),
            "lattice.boundary": self.boundary,
            "model.delta": self.delta,
            "sector.n_ex": list(self.n_ex_list),
            "sector.n_trunc": self.n_trunc,
            "sweep.g_values": list(self.g_values),
            "sweep.u_values": list(self.u_values),
            "sweep.delta_over_u_values": (
                None if self.delta_over_u_values is None else list(self.delta_over_u_values)
            ),
            "observables.record": list(self.observables),
            "solver.tol": self.tol,
            "solver.seed": self.seed,
            "solver.dense_limit": self.dense_limit,
            "binding.correction": self.binding_correction,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# config file parsing

_INT_KEYS = {"lattice.L", "lattice.d", "sector.n_trunc", "solver.dense_limit", "run.threads",
             "solver.seed"}
_FLOAT_KEYS = {"model.delta", "solver.tol", "model.g_over_j", "model.u_over_j"}
_INT_LIST_KEYS = {"lattice.atom_sites", "sector.n_ex"}
_FLOAT_LIST_KEYS = {"sweep.g_values", "sweep.u_values", "sweep.delta_over_u_values"}
_STR_KEYS = {"lattice.boundary", "output.path", "output.format"}
_STR_LIST_KEYS = {"observables.record"}
_BOOL_KEYS = {"binding.correction"}
KNOWN_KEYS = (
    _INT_KEYS | _FLOAT_KEYS | _INT_LIST_KEYS | _FLOAT_LIST_KEYS | _STR_KEYS | _STR_LIST_KEYS
    | _BOOL_KEYS
)

DEFAULT_FLOAT_RANGE_POINTS = 21


def parse_int_list(text: str) -> list[int]:
    out: list[int] = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            lo, hi = token.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(token))
    return out


def parse_float_list(text: str) -> list[float]:
    out: list[float] = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            span, _, count = token.partition(":")
            lo, hi = span.split("..", 1)
            n = int(count) if count else DEFAULT_FLOAT_RANGE_POINTS
            out.extend(float(x) for x in np.linspace(float(lo), float(hi), n))
        else:
            out.append(float(token))
    return out


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_file(path: str | Path) -> dict[str, object]:
    """Flat dotted-key dictionary from a key-value or JSON config file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}", keys=[str(p)])
    text = p.read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON config {p}: {err}") from err
        flat: dict[str, object] = {}

        def walk(prefix: str, node) -> None:
            if isinstance(node, dict):
                for k, v in node.items():
                    walk(f"{prefix}.{k}" if prefix else str(k), v)
            else:
                flat[prefix] = node

        walk("", data)
        return flat

    flat = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{lineno}: expected 'key = value'", keys=[line])
        key, value = line.split("=", 1)
        flat[key.strip()] = value.strip()
    return flat


def coerce_config(flat: dict[str, object]) -> dict[str, object]:
    """Validate keys and coerce raw values; unknown or ill-typed keys are collected."""
    bad_keys = sorted(k for k in flat if k not in KNOWN_KEYS)
    if bad_keys:
        raise ConfigError(f"unknown config keys: {', '.join(bad_keys)}", keys=bad_keys)
    out: dict[str, object] = {}
    type_errors: list[str] = []
    for key, raw in flat.items():
        try:
            if key in _INT_KEYS:
                out[key] = int(raw)
            elif key in _FLOAT_KEYS:
                out[key] = float(raw)
            elif key in _INT_LIST_KEYS:
                out[key] = parse_int_list(raw) if not isinstance(raw, list) else [int(v) for v in raw]
            elif key in _FLOAT_LIST_KEYS:
                out[key] = (
                    parse_float_list(raw) if not isinstance(raw, list) else [float(v) for v in raw]
                )
            elif key in _STR_LIST_KEYS:
                out[key] = (
                    [s.strip() for s in str(raw).split(",") if s.strip()]
                    if not isinstance(raw, list)
                    else [str(v) for v in raw]
                )
            elif key in _BOOL_KEYS:
                out[key] = raw if isinstance(raw, bool) else _parse_bool(raw)
            else:
                out[key] = str(raw)
        except (TypeError, ValueError):
            type_errors.append(key)
    if type_errors:
        raise ConfigError(
            f"invalid values for config keys: {', '.join(sorted(type_errors))}",
            keys=sorted(type_errors),
        )
    return out


def build_sweep_config(flat: dict[str, object]) -> SweepConfig:
    cfg = coerce_config(flat)
    L = int(cfg.get("lattice.L", 4))
    if "lattice.atom_sites" in cfg and "lattice.d" in cfg:
        raise ConfigError("give either lattice.d or lattice.atom_sites, not both",
                          keys=["lattice.d", "lattice.atom_sites"])
    if "lattice.d" in cfg:
        d = int(cfg["lattice.d"])
        if d < 1 or L % d != 0:
            raise ConfigError(f"lattice.d={d} must divide lattice.L={L}", keys=["lattice.d"])
        atom_sites = tuple(range(0, L, d))
    else:
        atom_sites = tuple(cfg.get("lattice.atom_sites", ()))
    g_values = tuple(cfg.get("sweep.g_values", [cfg.get("model.g_over_j", 1.0)]))
    u_values = tuple(cfg.get("sweep.u_values", [cfg.get("model.u_over_j", 0.0)]))
    observables = tuple(cfg.get("observables.record", ALL_OBSERVABLES))
    bad_obs = sorted(set(observables) - set(ALL_OBSERVABLES))
    if bad_obs:
        raise ConfigError(f"unknown observables: {', '.join(bad_obs)}", keys=["observables.record"])
    config = SweepConfig(
        L=L,
        atom_sites=atom_sites,
        boundary=str(cfg.get("lattice.boundary", "periodic")),
        delta=float(cfg.get("model.delta", 0.0)),
        n_ex_list=tuple(cfg.get("sector.n_ex", [1])),
        n_trunc=cfg.get("sector.n_trunc"),
        g_values=g_values,
        u_values=u_values,
        delta_over_u_values=(
            tuple(cfg["sweep.delta_over_u_values"]) if "sweep.delta_over_u_values" in cfg else None
        ),
        observables=observables,
        tol=float(cfg.get("solver.tol", 1e-10)),
        seed=int(cfg.get("solver.seed", 0)),
        dense_limit=int(cfg.get("solver.dense_limit", 4000)),
        out_path=str(cfg.get("output.path", "sweep.csv")),
        out_format=str(cfg.get("output.format", "csv")),
        threads=int(cfg.get("run.threads", 0) or 0),
        binding_correction=bool(cfg.get("binding.correction", True)),
    )
    if config.out_format not in ("csv", "json"):
        raise ConfigError(f"output.format must be csv or json", keys=["output.format"])
    try:
        for point in config.grid()[:1]:
            config.spec_for(point)
    except ValueError as err:
        raise ConfigError(f"grid produces an invalid model: {err}") from err
    if not config.grid():
        raise ConfigError("empty sweep grid")
    return config


def resolve_threads(requested: int | None) -> int:
    """Thread count: explicit request, else the environment override, else 1."""
    if requested:
        return max(1, requested)
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {env!r}")
    return 1


# ---------------------------------------------------------------------------
# sweep execution

def point_seed(base_seed: int, grid_index: int) -> int:
    return (base_seed * 1_000_003 + grid_index) % (2**63 - 1)


def truncation_converged(spec: ModelSpec, tol: float = 1e-10, seed: int = 0,
                         energy_tol: float = 1e-8) -> tuple[bool, float, float]:
    """Doubling check on the per-site photon cap.

    Solves the ground energy at ``n_trunc`` and at ``2 n_trunc`` (capped at
    ``n_ex``, beyond which the cap is inactive) and reports whether the two
    agree within ``energy_tol``. Returns (converged, e_base, e_doubled).
    """
    from dataclasses import replace

    basis = enumerate_sector(spec)
    e_base = float(
        ground_state(build_hamiltonian(spec, basis), tol=tol, seed=seed).energies[0]
    )
    doubled = min(2 * spec.n_trunc, max(spec.n_ex, 1))
    if doubled <= spec.n_trunc:
        return True, e_base, e_base
    spec2 = replace(spec, n_trunc=doubled)
    basis2 = enumerate_sector(spec2)
    e_doubled = float(
        ground_state(build_hamiltonian(spec2, basis2), tol=tol, seed=seed).energies[0]
    )
    return abs(e_doubled - e_base) <= energy_tol * max(1.0, abs(e_base)), e_base, e_doubled


def compute_record(config: SweepConfig, point: dict) -> dict:
    """One build-solve-measure pipeline; failures land in the error column."""
    row = {c: math.nan for c in CSV_COLUMNS}
    row.update(point)
    seed = point_seed(config.seed, point["grid_index"])
    row["seed"] = seed
    row["error"] = ""
    want = set(config.observables)
    try:
        spec = config.spec_for(point)
        basis = enumerate_sector(spec)
        op = build_hamiltonian(spec, basis)
        res = ground_state(op, tol=config.tol, seed=seed, dense_cutoff=min(64, config.dense_limit))
        vec = res.ground_vector
        row["energy"] = float(res.energies[0])
        row["iterations"] = res.iterations
        row["residual"] = res.residual
        if "densities" in want:
            dens, probs = apply_number_operators(basis, vec)
            row["n_ph_total"] = float(dens.sum())
            row["n_at_total"] = float(probs.sum())
        if "g2" in want and spec.n_atoms:
            try:
                row["g2_avg"] = g2_impurity_average(vec, basis)
            except ValueError:
                pass
        if "fluctuations" in want and spec.n_atoms:
            row["v_pol"], row["v_atom"] = fluctuations(vec, basis)
        if "binding" in want and spec.n_atoms == 1 and spec.n_ex == 2:
            row["e_b"] = binding_energy_n2(
                spec, tol=config.tol, seed=seed,
                finite_size_correction=config.binding_correction,
            )
        if "two_point" in want:
            pair = far_pair(spec)
            if pair is not None:
                row["two_point_far"] = two_point(vec, basis, *pair)
    except Exception as err:  # failed points are recorded, never dropped
        row["error"] = f"{type(err).__name__}: {err}"
    return row


@dataclass
class SweepSummary:
    path: Path
    n_computed: int
    n_skipped: int
    records: list[dict] = field(default_factory=list)


def _journal_path(out_path: Path) -> Path:
    return out_path.with_name(out_path.name + ".journal")


def _load_journal(journal: Path, config_hash: str) -> dict[int, dict]:
    if not journal.exists():
        return {}
    done: dict[int, dict] = {}
    with journal.open() as fh:
        header = fh.readline()
        try:
            meta = json.loads(header)
        except json.JSONDecodeError:
            return {}
        if meta.get("config_hash") != config_hash:
            return {}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                continue  # torn write from an interrupted run
            row = entry["row"]
            row["error"] = row.get("error") or ""
            done[int(entry["index"])] = row
    return done


def params_hash(params: dict) -> str:
    """Full configuration hash for the CSV provenance header."""
    blob = json.dumps(params, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _fmt(value) -> str:
    if isinstance(value, str):
        return value.replace(",", ";")
    if value is None:
        return "nan"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    return f"{v:.17g}"


def table_text(columns, rows, config_hash: str, seed: int) -> str:
    """CSV text with the uniform provenance comment, 17-digit floats, LF lines."""
    lines = [f"# wqed {__version__} config_hash={config_hash} seed={seed}"]
    lines.append(",".join(columns))
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_table_csv(path, columns, rows, config_hash: str, seed: int) -> None:
    with Path(path).open("w", newline="\n") as fh:
        fh.write(table_text(columns, rows, config_hash, seed))


def write_records_csv(path: Path, records: list[dict], config_hash: str, seed: int) -> None:
    lines = [f"# wqed {__version__} config_hash={config_hash} seed={seed}"]
    lines.append(",".join(CSV_COLUMNS))
    for row in sorted(records, key=lambda r: r["grid_index"]):
        lines.append(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
    with path.open("w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_records_json(path: Path, records: list[dict], config_hash: str, seed: int) -> None:
    def clean(v):
        if isinstance(v, float) and math.isnan(v):
            return None
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, (np.floating,)):
            return float(v)
        return v

    payload = {
        "meta": {"tool": "wqed", "version": __version__, "config_hash": config_hash, "seed": seed},
        "records": [
            {c: clean(row[c]) for c in CSV_COLUMNS}
            for row in sorted(records, key=lambda r: r["grid_index"])
        ],
    }
    with path.open("w", newline="\n") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def run_sweep(config: SweepConfig, threads: int | None = None) -> SweepSummary:
    """Execute the grid with checkpointing; deterministic output for fixed seeds."""
    points = config.grid()
    out_path = Path(config.out_path)
    if out_path.parent and not out_path.parent.exists():
        raise ConfigError(f"output directory does not exist: {out_path.parent}")
    chash = config.config_hash()
    journal = _journal_path(out_path)
    done = _load_journal(journal, chash)
    todo = [p for p in points if p["grid_index"] not in done]

    n_workers = resolve_threads(threads if threads is not None else config.threads)
    mode = "a" if done else "w"
    with journal.open(mode, newline="\n") as jh:
        if not done:
            jh.write(json.dumps({"config_hash": chash, "version": __version__}) + "\n")
            jh.flush()

        def checkpoint(idx: int, row: dict) -> None:
            jh.write(json.dumps({"index": idx, "row": row}) + "\n")
            jh.flush()
            done[idx] = row

        if todo:
            if n_workers > 1:
                with ThreadPoolExecutor(max_workers=n_workers) as pool:
                    futures = {
                        pool.submit(compute_record, config, p): p["grid_index"] for p in todo
                    }
                    for fut in as_completed(futures):
                        checkpoint(futures[fut], fut.result())
            else:
                for p in todo:
                    checkpoint(p["grid_index"], compute_record(config, p))

    records = [done[p["grid_index"]] for p in points]
    if config.out_format == "json":
        write_records_json(out_path, records, chash, config.seed)
    else:
        write_records_csv(out_path, records, chash, config.seed)
    return SweepSummary(path=out_path, n_computed=len(todo), n_skipped=len(points) - len(todo),
                        records=records)
