import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from wqed.basis import ModelSpec, NonlinearitySpec, enumerate_sector
from wqed.cli import cli_dispatch
from wqed.eigensolve import ground_state
from wqed.hamiltonian import build_hamiltonian
from wqed.sweep import (
    ConfigError,
    SweepConfig,
    build_sweep_config,
    coerce_config,
    compute_record,
    parse_float_list,
    parse_int_list,
    point_seed,
    read_config_file,
    resolve_threads,
    run_sweep,
)


CFG_TEXT = """
# reduced phase-map recipe
lattice.L = 4
lattice.d = 2
lattice.boundary = periodic
sector.n_ex = 2
sweep.g_values = 0.5, 2.0
sweep.u_values = 0.0, 1.0
solver.seed = 7
output.format = csv
"""


def write_cfg(tmp_path, text=CFG_TEXT, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_lists():
    assert parse_int_list("2..5") == [2, 3, 4, 5]
    assert parse_int_list("1, 4,6") == [1, 4, 6]
    assert parse_float_list("0.5, 1.5") == [0.5, 1.5]
    vals = parse_float_list("-2..3:11")
    assert len(vals) == 11 and vals[0] == -2.0 and vals[-1] == 3.0


def test_text_and_json_configs_agree(tmp_path):
    text_cfg = build_sweep_config(read_config_file(write_cfg(tmp_path)))
    js = {
        "lattice": {"L": 4, "d": 2, "boundary": "periodic"},
        "sector": {"n_ex": [2]},
        "sweep": {"g_values": [0.5, 2.0], "u_values": [0.0, 1.0]},
        "solver": {"seed": 7},
        "output": {"format": "csv"},
    }
    jpath = tmp_path / "run.json"
    jpath.write_text(json.dumps(js))
    json_cfg = build_sweep_config(read_config_file(jpath))
    assert text_cfg.config_hash() == json_cfg.config_hash()


def test_unknown_keys_listed():
    with pytest.raises(ConfigError) as err:
        coerce_config({"lattice.L": 4, "lattice.sizes": 3, "model.zeta": 1})
    assert err.value.keys == ["lattice.sizes", "model.zeta"]


def test_bad_types_listed():
    with pytest.raises(ConfigError) as err:
        coerce_config({"lattice.L": "four", "solver.tol": "tiny"})
    assert err.value.keys == ["lattice.L", "solver.tol"]


def test_missing_config_file_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.cfg"
    code = cli_dispatch(["phase-diagram", "--config", str(missing)])
    assert code == 3
    err = capsys.readouterr().err
    payload = json.loads(err)
    assert payload["error"] == "config"
    assert str(missing) in payload["detail"]


def test_single_point_sweep_matches_direct_call(tmp_path):
    cfg = SweepConfig(
        L=3, atom_sites=(0,), n_ex_list=(2,), g_values=(1.3,), u_values=(0.7,),
        out_path=str(tmp_path / "one.csv"), seed=11,
    )
    summary = run_sweep(cfg)
    assert summary.n_computed == 1
    row = summary.records[0]
    spec = ModelSpec(L=3, atom_sites=(0,), n_ex=2, J=1.0, g=1.3,
                     nonlinearity=NonlinearitySpec.kerr(0.7))
    basis = enumerate_sector(spec)
    res = ground_state(build_hamiltonian(spec, basis), tol=cfg.tol,
                       seed=point_seed(11, 0))
    assert row["energy"] == pytest.approx(res.energies[0], abs=1e-12)
    assert row["n_ph_total"] + row["n_at_total"] == pytest.approx(2.0, abs=1e-10)
    assert row["error"] == ""


def test_scheduling_independence(tmp_path):
    outputs = {}
    for threads in (1, 2, 8):
        out = tmp_path / f"t{threads}.csv"
        cfg = build_sweep_config(read_config_file(write_cfg(tmp_path)))
        cfg.out_path = str(out)
        run_sweep(cfg, threads=threads)
        outputs[threads] = out.read_bytes()
    assert outputs[1] == outputs[2] == outputs[8]


def test_checkpoint_resume_matches_fresh_run(tmp_path):
    cfg_fresh = build_sweep_config(read_config_file(write_cfg(tmp_path)))
    cfg_fresh.out_path = str(tmp_path / "fresh.csv")
    run_sweep(cfg_fresh)
    fresh_bytes = Path(cfg_fresh.out_path).read_bytes()

    # simulate an interrupted run: journal holding only the first two points
    cfg_part = build_sweep_config(read_config_file(write_cfg(tmp_path)))
    cfg_part.out_path = str(tmp_path / "resumed.csv")
    journal = Path(cfg_part.out_path + ".journal")
    rows = [compute_record(cfg_part, p) for p in cfg_part.grid()[:2]]
    with journal.open("w") as fh:
        fh.write(json.dumps({"config_hash": cfg_part.config_hash(), "version": "x"}) + "\n")
        for i, row in enumerate(rows):
            fh.write(json.dumps({"index": i, "row": row}) + "\n")
    summary = run_sweep(cfg_part)
    assert summary.n_skipped == 2 and summary.n_computed == 2
    resumed = Path(cfg_part.out_path).read_bytes()
    assert resumed.replace(b"resumed", b"fresh") == fresh_bytes or resumed == fresh_bytes


def test_rerun_is_noop(tmp_path):
    cfg = build_sweep_config(read_config_file(write_cfg(tmp_path)))
    cfg.out_path = str(tmp_path / "again.csv")
    first = run_sweep(cfg)
    assert first.n_computed == 4
    before = Path(cfg.out_path).read_bytes()
    second = run_sweep(cfg)
    assert second.n_computed == 0 and second.n_skipped == 4
    assert Path(cfg.out_path).read_bytes() == before


def test_stale_journal_discarded(tmp_path):
    cfg = build_sweep_config(read_config_file(write_cfg(tmp_path)))
    cfg.out_path = str(tmp_path / "stale.csv")
    journal = Path(cfg.out_path + ".journal")
    journal.write_text(json.dumps({"config_hash": "deadbeef", "version": "x"}) + "\n")
    summary = run_sweep(cfg)
    assert summary.n_computed == 4


def test_failed_point_recorded(tmp_path, monkeypatch):
    import wqed.sweep as sweep_mod

    original = sweep_mod.ground_state
    calls = {"n": 0}

    def flaky(op, **kw):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("injected solver failure")
        return original(op, **kw)

    monkeypatch.setattr(sweep_mod, "ground_state", flaky)
    cfg = build_sweep_config(read_config_file(write_cfg(tmp_path)))
    cfg.out_path = str(tmp_path / "flaky.csv")
    summary = run_sweep(cfg)
    errors = [r["error"] for r in summary.records]
    assert sum(1 for e in errors if e) == 1
    assert "injected solver failure" in "".join(errors)
    text = Path(cfg.out_path).read_text()
    assert "RuntimeError" in text  # in-row, not dropped


def test_csv_format_contract(tmp_path):
    cfg = build_sweep_config(read_config_file(write_cfg(tmp_path)))
    cfg.out_path = str(tmp_path / "fmt.csv")
    run_sweep(cfg)
    raw = Path(cfg.out_path).read_bytes()
    assert b"\r" not in raw  # LF endings
    lines = raw.decode().splitlines()
    assert lines[0].startswith("# wqed ")
    assert f"config_hash={cfg.config_hash()}" in lines[0]
    assert "seed=7" in lines[0]
    header = lines[1].split(",")
    assert header[0] == "grid_index" and "energy" in header
    # 17 significant digits round-trip
    first = dict(zip(header, lines[2].split(",")))
    direct = compute_record(cfg, cfg.grid()[0])
    assert float(first["energy"]) == direct["energy"]
    idx = [int(l.split(",")[0]) for l in lines[2:]]
    assert idx == sorted(idx)


def test_truncation_convergence_check():
    from wqed.basis import ModelSpec, NonlinearitySpec
    from wqed.sweep import truncation_converged

    tight = ModelSpec(L=3, atom_sites=(), n_ex=5, n_trunc=2, J=1.0, g=0.0,
                      nonlinearity=NonlinearitySpec.kerr(0.5))
    ok, e_base, e_doubled = truncation_converged(tight)
    assert not ok and e_doubled < e_base
    full = ModelSpec(L=3, atom_sites=(), n_ex=5, n_trunc=5, J=1.0, g=0.0,
                     nonlinearity=NonlinearitySpec.kerr(0.5))
    ok, e_base, e_doubled = truncation_converged(full)
    assert ok and e_base == e_doubled  # cap beyond n_ex is inactive


def test_env_thread_override(monkeypatch):
    monkeypatch.setenv("WQED_THREADS", "5")
    assert resolve_threads(0) == 5
    assert resolve_threads(2) == 2
    monkeypatch.setenv("WQED_THREADS", "junk")
    with pytest.raises(ConfigError):
        resolve_threads(0)
    monkeypatch.delenv("WQED_THREADS")
    assert resolve_threads(0) == 1


# ---------------------------------------------------------------------------
# CLI surface

def test_cli_threshold_matches_closed_form(tmp_path):
    out = tmp_path / "thr.csv"
    code = cli_dispatch([
        "threshold", "--n", "2..5", "--delta-over-u", "-2..3:11", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# wqed ")
    rows = [l.split(",") for l in lines[2:]]
    assert len(rows) == 4 * 11
    at_zero = {int(r[0]): float(r[2]) for r in rows if abs(float(r[1])) < 1e-12}
    for n, expect in [(2, 1.0), (3, math.sqrt(21)), (4, math.sqrt(85)), (5, math.sqrt(217))]:
        assert at_zero[n] == pytest.approx(expect, rel=1e-9)


def test_cli_config_file_with_flag_precedence(tmp_path):
    cfg = tmp_path / "point.cfg"
    cfg.write_text(
        "lattice.L = 1\nlattice.atom_sites = 0\nmodel.g_over_j = 1.0\n"
        "sector.n_ex = 1\n"
    )
    out_base = tmp_path / "base.json"
    code = cli_dispatch(["spectrum", "--config", str(cfg), "--k", "2",
                         "--format", "json", "--out", str(out_base)])
    assert code == 0
    base = json.loads(out_base.read_text())["records"]
    assert base[0]["energy"] == pytest.approx(-1.0, abs=1e-10)  # JC pair at g=1

    out_flag = tmp_path / "flag.json"
    code = cli_dispatch(["spectrum", "--config", str(cfg), "--g", "2.0", "--k", "2",
                         "--format", "json", "--out", str(out_flag)])
    assert code == 0
    flagged = json.loads(out_flag.read_text())["records"]
    assert flagged[0]["energy"] == pytest.approx(-2.0, abs=1e-10)  # flag wins


def test_cli_unknown_subcommand_exits_2(capsys):
    assert cli_dispatch(["made-up"]) == 2
    assert cli_dispatch(["spectrum", "--bogus-flag", "1"]) == 2


def test_cli_invalid_config_exits_3(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("lattice.L = 4\nmodel.unknown_knob = 1\n")
    code = cli_dispatch(["phase-diagram", "--config", str(bad)])
    assert code == 3
    payload = json.loads(capsys.readouterr().err)
    assert "model.unknown_knob" in payload["keys"]


def test_cli_spectrum_json(tmp_path):
    out = tmp_path / "spec.json"
    code = cli_dispatch([
        "spectrum", "--L", "4", "--atom-sites", "0", "--n-ex", "1", "--g", "1.0",
        "--k", "3", "--format", "json", "--out", str(out),
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["meta"]["tool"] == "wqed"
    assert len(payload["records"]) == 3
    energies = [r["energy"] for r in payload["records"]]
    assert energies == sorted(energies)


def test_cli_binding_smoke(tmp_path):
    out = tmp_path / "bind.csv"
    code = cli_dispatch([
        "binding", "--L", "10", "--u-values", "0.5", "--g-values", "0.4,1.5",
        "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "u_over_j,g_over_j,e_b"
    vals = [float(l.split(",")[2]) for l in lines[2:]]
    assert vals[0] > vals[1]  # stronger coupling binds deeper
    assert all(v <= 0 for v in vals)


def test_cli_correlations_smoke(tmp_path):
    out = tmp_path / "corr.csv"
    code = cli_dispatch([
        "correlations", "--L", "8", "--atom-sites", "2,6", "--n-ex", "2",
        "--g", "1.0", "--u", "0.5", "--x-ref", "0", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "x,c_x,density_x,two_point_x_ref,is_impurity"
    rows = [l.split(",") for l in lines[2:]]
    assert len(rows) == 8
    assert float(rows[0][1]) == pytest.approx(1.0)  # reference normalization
    flags = [int(r[4]) for r in rows]
    assert flags[2] == 1 and flags[6] == 1 and sum(flags) == 2


def test_cli_effective_smoke(tmp_path):
    out = tmp_path / "eff.csv"
    code = cli_dispatch([
        "effective", "--n", "2", "--g", "100", "--u-over-g-values", "0.8,1.4",
        "--length", "60", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    occ = [float(l.split(",")[1]) for l in lines[2:]]
    assert occ[0] > occ[1]  # photon detaches with stronger repulsion


def test_cli_polariton_compare_smoke(tmp_path):
    out = tmp_path / "pol.csv"
    code = cli_dispatch([
        "polariton-compare", "--L", "4", "--d", "2", "--n-ex", "4", "--g", "5",
        "--u", "0", "--k", "10", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    devs = [float(l.split(",")[3]) for l in lines[2:]]
    assert max(devs) <= 0.05


def test_cli_meanfield_smoke(tmp_path):
    out = tmp_path / "mf.csv"
    code = cli_dispatch([
        "meanfield", "--d", "1", "--g", "1.0", "--u", "0",
        "--mu-values", "-0.9..-0.5:5", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "mu,j_c,mean_n,lobe_id"
    summary = json.loads(Path(str(out) + ".summary.json").read_text())
    assert "lobe_tips" in summary and "1" in summary["lobe_tips"]


def test_cli_phase_diagram_runs(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "map.csv"
    code = cli_dispatch(["phase-diagram", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert out.exists()
    lines = out.read_text().splitlines()
    assert len(lines) == 2 + 4
