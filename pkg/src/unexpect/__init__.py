"""Streaming surprise detection over discrete event streams.

Unexpectedness of an event is the drop between how costly the world
finds it to generate (bits, from an occurrence-rate model or a causal
graph) and how costly the observer finds it to describe (bits, from
recency of last sighting). Sustained positive drops signal that the
stream's generator changed.
"""

from .causal import CausalGraph, Explanation, from_probabilities
from .core import (
    BitLength,
    CodeLengthTable,
    DiscreteDistribution,
    SymbolId,
    Unexpectedness,
    UnexpectError,
    bits_from_probability,
    distribution_from_code,
)
from .divergence import (
    DivergenceReport,
    MachinePair,
    cross_entropy,
    divergences,
    entropy,
    kl,
    memory_cost_ordered,
    memory_cost_unordered,
    soundness_completeness,
    variety,
    variety_hat,
    variety_star,
)
from .engine import (
    ChangeDetector,
    Engine,
    EngineConfig,
    TraceRecord,
    detect,
    run_stream,
)
from .estimators import (
    FirEstimator,
    FreqEstimate,
    IirEstimator,
    expected_position,
    is_stable,
    ltm_complexity,
)
from .memory import Observation, StmStack, matches, read_events, stm_complexity
from .simgen import SourceSpec, SplitMix64, generate, zipf_distribution

__version__ = "0.1.0"

__all__ = [
    "BitLength",
    "CausalGraph",
    "ChangeDetector",
    "CodeLengthTable",
    "DiscreteDistribution",
    "DivergenceReport",
    "Engine",
    "EngineConfig",
    "Explanation",
    "FirEstimator",
    "FreqEstimate",
    "IirEstimator",
    "MachinePair",
    "Observation",
    "SourceSpec",
    "SplitMix64",
    "StmStack",
    "SymbolId",
    "TraceRecord",
    "Unexpectedness",
    "UnexpectError",
    "bits_from_probability",
    "cross_entropy",
    "detect",
    "distribution_from_code",
    "divergences",
    "entropy",
    "expected_position",
    "from_probabilities",
    "generate",
    "is_stable",
    "kl",
    "ltm_complexity",
    "matches",
    "memory_cost_ordered",
    "memory_cost_unordered",
    "read_events",
    "run_stream",
    "soundness_completeness",
    "stm_complexity",
    "variety",
    "variety_hat",
    "variety_star",
    "zipf_distribution",
]
