"""Sequential generalized measurements with normal, commuting operators."""

__version__ = "0.1.0"

from .errors import SeqPovmError
from .povm import (
    CanonicalDecomposition,
    EigenStructure,
    MeasurementSet,
    apply_unitary_mixing,
    canonical_decomposition,
    decompose,
    density_matrix,
    outcome_probability,
    selective_update,
    simultaneous_eigenbasis,
    validate,
)
from .asymptotics import (
    asymptotic_channel,
    channel_matrix,
    channel_power,
    classify_hs_points,
    spectral_gap,
)
from .ancilla import DephasingScheme, bosonic_modular_scheme, build_measurement_pair

__all__ = [
    "SeqPovmError",
    "MeasurementSet",
    "EigenStructure",
    "CanonicalDecomposition",
    "validate",
    "simultaneous_eigenbasis",
    "canonical_decomposition",
    "decompose",
    "apply_unitary_mixing",
    "outcome_probability",
    "selective_update",
    "density_matrix",
    "channel_matrix",
    "channel_power",
    "asymptotic_channel",
    "classify_hs_points",
    "spectral_gap",
    "DephasingScheme",
    "build_measurement_pair",
    "bosonic_modular_scheme",
]
