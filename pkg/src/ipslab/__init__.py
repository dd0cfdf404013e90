"""Interacting-particle-system laboratory on finite tori.

Exact master-equation dynamics, kinetic Monte Carlo, and certified
relative-entropy diagnostics for single-site-flip lattice spin systems.
"""

__version__ = "0.1.0"

from .lattice import (
    Distribution,
    ProductMeasure,
    SpinConfig,
    Volume,
    decode,
    encode,
    flip,
    marginalize,
)

__all__ = [
    "Distribution",
    "ProductMeasure",
    "SpinConfig",
    "Volume",
    "decode",
    "encode",
    "flip",
    "marginalize",
    "__version__",
]
