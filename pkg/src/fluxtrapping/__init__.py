"""Simulation and analysis tools for flux-trapping fluxonium qubits."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DataError,
    FluxTrapError,
    InvalidParameterError,
    ProtocolError,
    UnidentifiableError,
)
from .qubit import (  # noqa: E402
    EnergySpectrum,
    FluxConfig,
    FluxoniumParams,
    SolverConfig,
    TransmonParams,
    charge_matrix_element,
    find_sweet_spot,
    flux_dispersion,
    fluxonium_spectrum,
    transition_frequency,
    transmon_freq_approx,
    transmon_spectrum,
)
from .trap import (  # noqa: E402
    CoilCalibration,
    ProtocolTimeline,
    RingParams,
    TrapResult,
    TrapStats,
    current_to_prebias,
    deviation,
    deviation_stats,
    ring_state,
    select_trapped_n,
    simulate_protocol,
    trap_phase,
)

__all__ = [
    "__version__",
    "ConvergenceError",
    "DataError",
    "FluxTrapError",
    "InvalidParameterError",
    "ProtocolError",
    "UnidentifiableError",
    "EnergySpectrum",
    "FluxConfig",
    "FluxoniumParams",
    "SolverConfig",
    "TransmonParams",
    "charge_matrix_element",
    "find_sweet_spot",
    "flux_dispersion",
    "fluxonium_spectrum",
    "transition_frequency",
    "transmon_freq_approx",
    "transmon_spectrum",
    "CoilCalibration",
    "ProtocolTimeline",
    "RingParams",
    "TrapResult",
    "TrapStats",
    "current_to_prebias",
    "deviation",
    "deviation_stats",
    "ring_state",
    "select_trapped_n",
    "simulate_protocol",
    "trap_phase",
]
