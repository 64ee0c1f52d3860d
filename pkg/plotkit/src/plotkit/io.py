"""Input handling: provenance-stamped CSV tables and key-value recipe files.

Tables are the wqed sweep outputs: one `# wqed <version> config_hash=<hex>
seed=<n>` comment, a header row, comma-separated data rows. Recipes use the
same `section.key = value` format as the sweep configs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path


class RecipeError(ValueError):
    """Malformed or incomplete recipe."""


class SchemaError(ValueError):
    """Input table violates the schema a figure kind requires."""

    def __init__(self, message: str, columns: list[str] | None = None):
        super().__init__(message)
        self.columns = columns or []


class CorruptInputError(ValueError):
    """Structurally broken CSV (torn row, missing provenance header)."""


class EmptyDataError(ValueError):
    """Table parsed fine but carries no data rows."""


_HEADER_RE = re.compile(r"^# wqed (\S+) config_hash=([0-9a-f]+) seed=(\S+)\s*$")


@dataclass
class Table:
    path: Path
    columns: list[str]
    rows: list[list[str]]
    config_hash: str
    tool_version: str

    def column(self, name: str) -> list[float]:
        if name not in self.columns:
            raise SchemaError(f"missing column '{name}' in {self.path}", columns=[name])
        i = self.columns.index(name)
        out = []
        for row in self.rows:
            cell = row[i]
            try:
                out.append(float(cell))
            except ValueError:
                out.append(float("nan"))
        return out

    def has(self, *names: str) -> bool:
        return all(n in self.columns for n in names)


def read_table(path: str | Path) -> Table:
    p = Path(path)
    if not p.exists():
        raise RecipeError(f"input file not found: {p}")
    lines = p.read_text().splitlines()
    if not lines:
        raise CorruptInputError(f"{p}: empty file")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise CorruptInputError(
            f"{p}: first line is not a wqed provenance header ('# wqed <version> "
            f"config_hash=<hex> seed=<n>')"
        )
    tool_version, config_hash = m.group(1), m.group(2)
    if len(lines) < 2:
        raise CorruptInputError(f"{p}: missing column header row")
    columns = lines[1].split(",")
    rows: list[list[str]] = []
    for lineno, raw in enumerate(lines[2:], start=3):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != len(columns):
            raise CorruptInputError(
                f"{p}:{lineno}: row has {len(cells)} fields, header has {len(columns)}"
            )
        rows.append(cells)
    if not rows:
        raise EmptyDataError(f"{p}: no data rows")
    return Table(path=p, columns=columns, rows=rows, config_hash=config_hash,
                 tool_version=tool_version)


_KNOWN_RECIPE_KEYS = {
    "figure.kind", "input.csv", "output.path", "output.format",
    "labels.title", "labels.x", "labels.y", "axes.logx", "axes.logy",
}


@dataclass
class FigureRecipe:
    kind: str
    inputs: list[Path]
    output: Path
    format: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    logx: bool = False
    logy: bool = False


def _parse_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise RecipeError(f"not a boolean: {raw!r}")


def load_recipe(path: str | Path) -> FigureRecipe:
    p = Path(path)
    if not p.exists():
        raise RecipeError(f"recipe file not found: {p}")
    flat: dict[str, str] = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise RecipeError(f"{p}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        flat[key.strip()] = value.strip()

    unknown = sorted(set(flat) - _KNOWN_RECIPE_KEYS)
    if unknown:
        raise RecipeError(f"unknown recipe keys: {', '.join(unknown)}")
    from .render import FIGURE_KINDS  # late import: render depends on io

    missing = [k for k in ("figure.kind", "input.csv", "output.path") if k not in flat]
    if missing:
        raise RecipeError(f"recipe lacks required keys: {', '.join(missing)}")
    kind = flat["figure.kind"]
    if kind not in FIGURE_KINDS:
        raise RecipeError(
            f"unknown figure kind {kind!r}; known: {', '.join(sorted(FIGURE_KINDS))}"
        )
    inputs = [Path(s.strip()) for s in flat["input.csv"].split(",") if s.strip()]
    if not inputs:
        raise RecipeError("input.csv names no files")
    output = Path(flat["output.path"])
    fmt = flat.get("output.format", "").strip().lower()
    if not fmt:
        fmt = output.suffix.lstrip(".").lower() or "svg"
    if fmt not in ("svg", "png"):
        raise RecipeError(f"output.format must be svg or png, got {fmt!r}")
    return FigureRecipe(
        kind=kind,
        inputs=inputs,
        output=output,
        format=fmt,
        title=flat.get("labels.title"),
        xlabel=flat.get("labels.x"),
        ylabel=flat.get("labels.y"),
        logx=_parse_bool(flat["axes.logx"]) if "axes.logx" in flat else False,
        logy=_parse_bool(flat["axes.logy"]) if "axes.logy" in flat else False,
    )
