"""Assemble networks of linear coherent scatterers and solve their
steady-state output scattering amplitudes."""

from .graph_model import (
    EdgeIncidence,
    Hazard,
    LocalScatterer,
    NetworkGraph,
    build_incidence,
    detect_simultaneity_hazard,
    normalize_loops,
    parse_network,
    serialize_network,
)
from .assembly import (
    ActivationSequence,
    AssembledSystem,
    GlobalScatteringMatrix,
    apply_open_boundary,
    assemble,
    embed_local,
    propagate_activations,
)
from .solver import (
    BlockDecomposition,
    ModeSpectrum,
    ScatteringSolution,
    block_decompose,
    full_scattering_matrix,
    internal_modes,
    solve_by_iteration,
    solve_steady_state,
)
from .redheffer import TwoPortScatterer, chain, star
from . import devices, errors

__all__ = [
    "ActivationSequence",
    "AssembledSystem",
    "BlockDecomposition",
    "EdgeIncidence",
    "GlobalScatteringMatrix",
    "Hazard",
    "LocalScatterer",
    "ModeSpectrum",
    "NetworkGraph",
    "ScatteringSolution",
    "TwoPortScatterer",
    "apply_open_boundary",
    "assemble",
    "block_decompose",
    "build_incidence",
    "chain",
    "detect_simultaneity_hazard",
    "devices",
    "embed_local",
    "errors",
    "full_scattering_matrix",
    "internal_modes",
    "normalize_loops",
    "parse_network",
    "propagate_activations",
    "serialize_network",
    "solve_by_iteration",
    "solve_steady_state",
    "star",
]

__version__ = "0.1.0"
