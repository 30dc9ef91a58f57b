"""Space-time coded continuous phase modulation with L2-orthogonal parallel codes."""

__version__ = "0.1.0"

from .cpm import (CpmParams, ConfigurationError, InputError, PhaseState, Waveform,
                  phase_pulse_q, phase_state_set, synthesize_cpm)
from .encoder import (StcCodeSpec, correction_phase, encode_batch, encode_blockwise,
                      encode_continuous, map_symbol, offset_alphabet)
from .channel import sample_fading, snr_to_n0, transmit
from .receiver import build_trellis, gray_map, mlsd_detect
from .analysis import (block_gram, coding_gain_metric, correction_correlation, pwep,
                       signal_matrix, welch_psd)

__all__ = [
    "CpmParams", "ConfigurationError", "InputError", "PhaseState", "Waveform",
    "phase_pulse_q", "phase_state_set", "synthesize_cpm",
    "StcCodeSpec", "correction_phase", "encode_batch", "encode_blockwise", "encode_continuous",
    "map_symbol", "offset_alphabet",
    "sample_fading", "snr_to_n0", "transmit",
    "build_trellis", "gray_map", "mlsd_detect",
    "block_gram", "coding_gain_metric", "correction_correlation", "pwep", "signal_matrix",
    "welch_psd",
]
