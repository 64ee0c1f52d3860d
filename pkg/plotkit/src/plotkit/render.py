"""Figure builders, one per family, and the deterministic file writer.

Rendering never touches the inputs, goes through a temporary file (no partial
images on failure) and pins every byte-level source of nondeterminism in the
SVG backend: fixed id hash salt, no date stamp, provenance hash embedded in
the image metadata.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import FigureRecipe, SchemaError, Table, read_table


def _grid_field(table: Table, xcol: str, ycol: str, zcol: str):
    """Reshape scattered (x, y, z) rows onto the product grid if they form one."""
    x = np.asarray(table.column(xcol))
    y = np.asarray(table.column(ycol))
    z = np.asarray(table.column(zcol))
    xu, yu = np.unique(x), np.unique(y)
    if len(xu) * len(yu) == len(z):
        field = np.full((len(yu), len(xu)), np.nan)
        xi = np.searchsorted(xu, x)
        yi = np.searchsorted(yu, y)
        field[yi, xi] = z
        return xu, yu, field
    return None


def _edges(vals: np.ndarray) -> np.ndarray:
    if len(vals) == 1:
        return np.array([vals[0] * 0.9, vals[0] * 1.1])
    mids = 0.5 * (vals[1:] + vals[:-1])
    return np.concatenate([[2 * vals[0] - mids[0]], mids, [2 * vals[-1] - mids[-1]]])


def _draw_threshold(ax, tables: list[Table]) -> None:
    t = tables[0]
    n = np.asarray(t.column("n"))
    dou = np.asarray(t.column("delta_over_u"))
    gb = np.asarray(t.column("g_b_over_u"))
    for nval in np.unique(n):
        sel = n == nval
        order = np.argsort(dou[sel])
        ax.plot(dou[sel][order], gb[sel][order], marker="o", ms=3,
                label=f"{int(nval)} bound photons")
    ax.set_xlabel("detuning / U")
    ax.set_ylabel("binding threshold g_b / U")
    ax.legend(fontsize=8)


def _draw_detachment(ax, tables: list[Table]) -> None:
    styles = ["-", "--", ":", "-."]
    for i, t in enumerate(tables):
        u = np.asarray(t.column("u_over_g"))
        occ = np.asarray(t.column("occupation"))
        width = np.asarray(t.column("delta_x_ph"))
        order = np.argsort(u)
        ax.plot(u[order], occ[order], styles[i % 4], color="C0",
                label=f"occupation [{t.path.name}]")
        ax.plot(u[order], width[order], styles[i % 4], color="C3",
                label=f"width [{t.path.name}]")
    ax.set_xlabel("U / g")
    ax.set_ylabel("impurity photons / wavepacket width")
    ax.legend(fontsize=7)


def _draw_binding(ax, tables: list[Table]) -> None:
    t = tables[0]
    grid = _grid_field(t, "u_over_j", "g_over_j", "e_b")
    if grid is not None:
        xu, yu, field = grid
        pm = ax.pcolormesh(_edges(xu), _edges(yu), field, cmap="viridis")
    else:
        pm = ax.scatter(t.column("u_over_j"), t.column("g_over_j"),
                        c=t.column("e_b"), cmap="viridis")
    ax.figure.colorbar(pm, ax=ax, label="pair binding energy / J")
    ax.set_xlabel("U / J")
    ax.set_ylabel("g / J")


def _draw_correlations(ax, tables: list[Table]) -> None:
    t = tables[0]
    x = np.asarray(t.column("x"))
    c = np.asarray(t.column("c_x"))
    imp = np.asarray(t.column("is_impurity")) > 0.5
    order = np.argsort(x)
    x, c, imp = x[order], c[order], imp[order]
    # impurity sites flagged, not erased: excluded from the line, marked below
    ax.plot(x[~imp], c[~imp], "o-", ms=3, color="C0", label="C_x")
    for xi in x[imp]:
        ax.axvline(xi, color="0.75", lw=1.0, zorder=0)
    ax.plot(x[imp], c[imp], "s", ms=4, color="0.55", label="impurity sites")
    ax.set_xlabel("site")
    ax.set_ylabel("density correlation C_x")
    ax.legend(fontsize=8)


def _draw_spectrum(ax, tables: list[Table]) -> None:
    t = tables[0]
    idx = np.asarray(t.column("index"))
    ax.plot(idx, t.column("e_full"), "o", ms=5, color="C0", label="full model")
    ax.plot(idx, t.column("e_pol"), "x", ms=6, color="C3", label="polariton model")
    ax.set_xlabel("level")
    ax.set_ylabel("energy / J")
    ax2 = ax.twinx()
    ax2.bar(idx, t.column("deviation"), width=0.5, color="0.8", zorder=0)
    ax2.set_ylabel("normalized deviation", color="0.5")
    ax.legend(fontsize=8)


def _draw_phase(ax, tables: list[Table]) -> None:
    t = tables[0]
    if t.has("g_over_j", "u_over_j", "v_pol", "v_atom"):
        fig = ax.figure
        ax.remove()
        axes = fig.subplots(1, 2)
        for sub, col, cmap in ((axes[0], "v_pol", "Blues"), (axes[1], "v_atom", "Reds")):
            grid = _grid_field(t, "g_over_j", "u_over_j", col)
            if grid is not None:
                xu, yu, field = grid
                pm = sub.pcolormesh(_edges(xu), _edges(yu), field, cmap=cmap)
            else:
                pm = sub.scatter(t.column("g_over_j"), t.column("u_over_j"),
                                 c=t.column(col), cmap=cmap)
            fig.colorbar(pm, ax=sub, label=col)
            sub.set_xscale("log")
            sub.set_yscale("log")
            sub.set_xlabel("g / J")
            sub.set_ylabel("U / J")
        return
    if t.has("mu", "j_c", "mean_n"):
        mu = np.asarray(t.column("mu"))
        jc = np.asarray(t.column("j_c"))
        mean_n = np.asarray(t.column("mean_n"))
        order = np.argsort(mu)
        sc = ax.scatter(mu[order], jc[order], c=mean_n[order], cmap="viridis", s=18)
        ax.plot(mu[order], jc[order], color="0.6", lw=0.8, zorder=0)
        ax.figure.colorbar(sc, ax=ax, label="excitations per cell")
        ax.set_xlabel("chemical potential / g")
        ax.set_ylabel("critical hopping J_c / g")
        return
    missing = [c for c in ("g_over_j", "u_over_j", "v_pol", "v_atom") if c not in t.columns]
    raise SchemaError(
        f"missing column '{missing[0]}' in {t.path} (phase figures need either "
        f"g_over_j/u_over_j/v_pol/v_atom or mu/j_c/mean_n)",
        columns=missing,
    )


FIGURE_KINDS = {
    "threshold": _draw_threshold,
    "detachment": _draw_detachment,
    "binding": _draw_binding,
    "correlations": _draw_correlations,
    "spectrum": _draw_spectrum,
    "phase": _draw_phase,
}


def render(recipe: FigureRecipe) -> Path:
    """Render one recipe into exactly one image file; returns the output path."""
    tables = [read_table(p) for p in recipe.inputs]
    hashes = ",".join(t.config_hash for t in tables)

    with plt.rc_context({"svg.hashsalt": hashes, "figure.dpi": 100}):
        fig = plt.figure(figsize=(6.0, 4.0))
        try:
            ax = fig.add_subplot(111)
            FIGURE_KINDS[recipe.kind](ax, tables)
            for a in fig.axes:
                if recipe.title:
                    fig.suptitle(recipe.title)
                if recipe.xlabel:
                    a.set_xlabel(recipe.xlabel)
                if recipe.ylabel:
                    a.set_ylabel(recipe.ylabel)
                if recipe.logx:
                    a.set_xscale("log")
                if recipe.logy:
                    a.set_yscale("log")
            fig.tight_layout()

            metadata = {"Description": f"wqed config_hash={hashes}"}
            if recipe.format == "svg":
                metadata["Date"] = None  # drop the timestamp for byte-stable output
            recipe.output.parent.mkdir(parents=True, exist_ok=True)
            tmp_fd, tmp_name = tempfile.mkstemp(
                dir=recipe.output.parent or Path("."), suffix=f".{recipe.format}"
            )
            os.close(tmp_fd)
            try:
                fig.savefig(tmp_name, format=recipe.format, metadata=metadata)
                os.replace(tmp_name, recipe.output)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        finally:
            plt.close(fig)
    return recipe.output
