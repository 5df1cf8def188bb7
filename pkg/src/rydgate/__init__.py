"""rydgate: shaped-pulse design and full-level simulation of Rydberg-blockade
entangling gates."""

from .blockade import LeakModel, flatness_window, leak_model, leak_probability, optimal_blockade
from .dynamics import CollapseSet, QuantumState, basis_state, build_collapse_set, propagate_lindblad, propagate_schrodinger
from .errors import BlockadeError, ConfigError, NumericalError, PhaseExtractionError, PropagationError, RydgateError, SpectrumError
from .atom import AtomBasis, AtomLevel, CompositeHamiltonian, build_basis, build_composite, hamiltonian_at
from .gate import (
    GateMetrics,
    OptimizeGateResult,
    SequenceSpec,
    bell_fidelity,
    build_sequence,
    cnot_wrap,
    extract_phases,
    gate_metrics,
    optimize_gate,
    population_error,
    run_sequence,
    state_fidelity,
    trace_distance,
)
from .params import PhysicalSetting, angular_to_ghz, ghz_to_angular, load_setting, load_setting_file, scale_lifetimes, with_b0
from .pulses import PulseShape, calibrate_area, drag_coefficients, drag_envelope, drag_shape, envelope, gaussian_envelope, gaussian_shape, spectrum, square_shape

__version__ = "0.1.0"
