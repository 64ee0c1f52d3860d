"""The ``plotkit`` command: ``plotkit render <recipe-file>``.

Exit codes: 0 success, 2 usage, 3 recipe or schema problems (with the
offending detail on stderr as a JSON line), 1 other failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from .io import CorruptInputError, EmptyDataError, RecipeError, SchemaError, load_recipe
from .render import render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit", description="render wqed CSVs into figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one recipe file into one image")
    p.add_argument("recipe", help="recipe file (same key-value format as sweep configs)")
    return parser


def cli_dispatch(argv: list[str]) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        recipe = load_recipe(args.recipe)
        out = render(recipe)
    except SchemaError as err:
        sys.stderr.write(json.dumps({"error": "schema", "detail": str(err),
                                     "columns": err.columns}) + "\n")
        return 3
    except (RecipeError, CorruptInputError, EmptyDataError) as err:
        sys.stderr.write(json.dumps({"error": type(err).__name__, "detail": str(err)}) + "\n")
        return 3
    except Exception as err:
        sys.stderr.write(json.dumps({"error": "runtime",
                                     "detail": f"{type(err).__name__}: {err}"}) + "\n")
        return 1
    sys.stdout.write(f"{out}\n")
    return 0


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
