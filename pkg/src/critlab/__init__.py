"""Littlewood-Paley and Besov tools with pseudo-spectral solvers for a
compressible nematic liquid-crystal flow and its low Mach number limit."""

__version__ = "0.1.0"

from .spectral import Grid, SpectralField, grid_make  # noqa: E402
from .besov import BesovIndex, Trajectory, besov_norm  # noqa: E402
from .models import FlowState, ModelParams  # noqa: E402

__all__ = [
    "__version__",
    "Grid",
    "SpectralField",
    "grid_make",
    "BesovIndex",
    "Trajectory",
    "besov_norm",
    "FlowState",
    "ModelParams",
]
