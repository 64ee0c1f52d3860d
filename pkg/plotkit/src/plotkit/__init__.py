"""Turn wqed sweep CSVs into figures, one recipe file per image."""

__version__ = "0.1.0"

from .io import CorruptInputError, EmptyDataError, RecipeError, SchemaError, load_recipe, read_table
from .render import FIGURE_KINDS, render

__all__ = [
    "CorruptInputError",
    "EmptyDataError",
    "FIGURE_KINDS",
    "RecipeError",
    "SchemaError",
    "load_recipe",
    "read_table",
    "render",
    "__version__",
]
