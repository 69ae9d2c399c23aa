"""Simulator and attack suite for the UMA-RFID mutual-authentication protocol."""

from .adversary import (
    AdvantageEstimate,
    GameConfig,
    GameEnvironment,
    GameOutcome,
    estimate_advantage,
    random_guess_strategy,
    run_untraceability_game,
)
from .attacks import (
    AttackReport,
    Bench,
    attack_clone,
    attack_desync_bitflip,
    attack_desync_mitm,
    attack_full_disclosure,
    attack_traceability,
    distinguish_strategy,
    recover_key,
)
from .harness import SummaryStats, TrialConfig, run_trials, summarize
from .protocol import (
    Channel,
    ChannelEvent,
    DatabaseEntry,
    Outcome,
    PairState,
    ReaderState,
    SessionTranscript,
    TagState,
    compute_a,
    compute_b,
    compute_c,
    fresh_system,
    next_pair,
    run_honest_session,
    synchronized,
)
from .word import ProtocolParams, Word, WordStream, bitwise, derive_seed, hamming_weight, rot, rotate_left

__version__ = "0.1.0"
