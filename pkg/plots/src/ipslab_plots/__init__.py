"""Static figures from ipslab artifact files."""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, FigureSpec, render
from .readers import SchemaMismatch

__all__ = ["FIGURE_KINDS", "FigureSpec", "render", "SchemaMismatch", "__version__"]
