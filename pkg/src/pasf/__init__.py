"""Phase-aligned spectral filtering of spatiotemporal grid data."""

from .baseline import PcaModel, pca_decompose
from .fieldio import Field, read_field, write_field
from .pipeline import EmptyAtlasError, RunConfig, run_decompose
from .simkit import simulate_propagation, simulate_rotating

__version__ = "0.1.0"

__all__ = [
    "Field",
    "read_field",
    "write_field",
    "RunConfig",
    "run_decompose",
    "EmptyAtlasError",
    "simulate_rotating",
    "simulate_propagation",
    "pca_decompose",
    "PcaModel",
]
