"""Multidimensional OAM multiplexing over quasi-fractal uniform circular arrays."""
from .channel import ChannelMatrix, assemble_channel, circulant_residual, distance_matrix, pair_gain
from .demodulation import DemodPipeline, DemodReport, calibrate, effective_mode_gains, recursive_demodulate
from .errors import ConfigError, NumericalError
from .geometry import ArrayConfig, ElementLayout, build_layout, positions
from .metrics import PowerAllocation, SeResult, dimension_comparison, link_se, spectrum_efficiency
from .modulation import ModulationSet, build_modulation_set, modulate, nested_modulation
from .presets import PRESETS, get_preset, list_presets

__all__ = [
    "ArrayConfig",
    "ChannelMatrix",
    "ConfigError",
    "DemodPipeline",
    "DemodReport",
    "ElementLayout",
    "ModulationSet",
    "NumericalError",
    "PRESETS",
    "PowerAllocation",
    "SeResult",
    "assemble_channel",
    "build_layout",
    "build_modulation_set",
    "calibrate",
    "circulant_residual",
    "dimension_comparison",
    "distance_matrix",
    "effective_mode_gains",
    "get_preset",
    "link_se",
    "list_presets",
    "modulate",
    "nested_modulation",
    "pair_gain",
    "positions",
    "recursive_demodulate",
    "spectrum_efficiency",
]
