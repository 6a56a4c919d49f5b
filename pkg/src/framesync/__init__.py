"""One-shot frame synchronization over discrete memoryless channels."""

from .channel import (
    Channel,
    bsc,
    bsc_threshold,
    kl_divergence,
    load_channel,
    sample_output,
    sync_threshold,
    validate,
)
from .decoders import (
    DecoderId,
    Verdict,
    block_ml_decode,
    make_target,
    sliding_ml_decode,
    typicality_decode,
)
from .pattern import SyncPattern, build_pattern, generate_msequence, min_shift_distance
from .sim import NuMode, TrialConfig, run_sweep, run_trial

__all__ = [
    "Channel", "bsc", "bsc_threshold", "kl_divergence", "load_channel", "sample_output",
    "sync_threshold", "validate", "DecoderId", "Verdict", "block_ml_decode", "make_target",
    "sliding_ml_decode", "typicality_decode", "SyncPattern", "build_pattern",
    "generate_msequence", "min_shift_distance", "NuMode", "TrialConfig", "run_sweep", "run_trial",
]
