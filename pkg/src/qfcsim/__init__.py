"""Simulation and analysis toolkit for a frequency-conversion quantum interface.

The package models a pulsed photon-pair source whose one arm is converted
between visible and telecom bands by pump-driven three-wave mixing, and
the measurements built around it: pump-power efficiency sweeps, heralded
intensity correlations, time-bin encode/decode interferometry, and
two-qubit state tomography with entanglement metrics.
"""

from .config import ConfigError, ExperimentConfig, PRESETS
from .conversion import (ConversionParams, EfficiencyFit, EfficiencyModel,
                         NoiseModel, TwoModeUnitary, apply_conversion,
                         build_conversion_unitary, conversion_efficiency,
                         fit_efficiency_curve, noise_mean_photons,
                         pump_dephasing_factor)
from .counting import (CoincidenceWindow, CountSummary, DelayHistogram,
                       InsufficientEventsError, count_summary, delay_histogram,
                       g2_at_offset, g2_zero_from_counts, select_window)
from .metrics import (ChshResult, chsh_assessment, concurrence,
                      entanglement_of_formation, fidelity)
from .qubits import (MziConfig, PHI_PLUS, check_density_matrix,
                     convert_timebin_qubit, end_to_end_state, pol_to_timebin,
                     timebin_to_pol, waveplate_unitary)
from .sources import (DetectionEvent, Detector, EventStream, SpdcSource,
                      detect, detect_fock, entangled_pair_state,
                      expected_hbt_rates, generate_hbt_stream,
                      generate_mzi_stream, herald_single_photon)
from .tomography import (CountRecord, MeasurementSetting, MleResult,
                         load_records, mle_reconstruct, save_records,
                         simulate_counts, standard_settings,
                         subtract_background)

__version__ = "0.1.0"

__all__ = [
    "ChshResult", "CoincidenceWindow", "ConfigError", "ConversionParams",
    "CountRecord", "CountSummary", "DelayHistogram", "DetectionEvent",
    "Detector", "EfficiencyFit", "EfficiencyModel", "EventStream",
    "ExperimentConfig", "InsufficientEventsError", "MeasurementSetting",
    "MleResult", "MziConfig", "NoiseModel", "PHI_PLUS", "PRESETS",
    "SpdcSource", "TwoModeUnitary", "apply_conversion",
    "build_conversion_unitary", "check_density_matrix", "chsh_assessment",
    "concurrence", "conversion_efficiency", "convert_timebin_qubit",
    "count_summary", "delay_histogram", "detect", "detect_fock",
    "end_to_end_state", "entangled_pair_state", "entanglement_of_formation",
    "expected_hbt_rates", "fidelity", "fit_efficiency_curve",
    "g2_at_offset", "g2_zero_from_counts", "generate_hbt_stream",
    "generate_mzi_stream", "herald_single_photon", "load_records",
    "mle_reconstruct", "noise_mean_photons", "pol_to_timebin",
    "pump_dephasing_factor", "save_records", "select_window",
    "simulate_counts", "standard_settings", "subtract_background",
    "timebin_to_pol", "waveplate_unitary",
]
