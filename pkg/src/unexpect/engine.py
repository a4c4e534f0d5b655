"""Per-event unexpectedness and ergodicity-break detection.

Each event is scored before anything learns from it. The fixed order
(measure, then update stack, estimator, detector) is part of the
replay contract:

    u_raw = c_ltm - c_stm

where c_ltm = log2(1/w) from the occurrence-rate estimator and c_stm =
log2(stack position before the move). On a stationary stream the two
costs track each other and u_raw hovers near zero; a sustained positive
u means the learned rates no longer describe what is being observed.
The detector raises change_flag when an EWMA of u_clamped stays above a
threshold for m consecutive events.

A first-ever symbol has no stack position; it is flagged as a novelty
event and carries no u value instead of poisoning the averages with
infinities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from . import estimators
from .core import (
    NonMonotonicTimeError,
    SymbolId,
    ValidationError,
    VersionMismatchError,
)
from .estimators import (
    EPSILON_AUTO,
    EpsilonSpec,
    Estimator,
    FirEstimator,
    IirEstimator,
    ltm_complexity,
    resolve_epsilon,
)
from .memory import Observation, StmStack, stm_complexity

SNAPSHOT_VERSION = 1


@dataclass(frozen=True, slots=True)
class TraceRecord:
    t: int
    symbol: SymbolId
    c_stm: float
    c_ltm: float
    u_raw: Optional[float]
    u_clamped: Optional[float]
    novelty: bool
    change_flag: bool


@dataclass
class ChangeDetector:
    """EWMA of u_clamped with an m-consecutive-hits threshold rule."""

    beta: float = 0.95
    theta: float = 1.0
    min_hits: int = 20
    ewma: float = 0.0
    hits: int = 0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValidationError(f"beta must be in (0, 1), got {self.beta}")
        if self.theta <= 0.0:
            raise ValidationError(f"theta must be > 0, got {self.theta}")
        if self.min_hits < 1:
            raise ValidationError(f"min hits must be >= 1, got {self.min_hits}")

    @property
    def flag(self) -> bool:
        return self.hits >= self.min_hits

    def update(self, u_clamped: float) -> bool:
        if u_clamped < 0.0:
            raise ValidationError(f"u_clamped must be >= 0, got {u_clamped}")
        self.ewma = (1.0 - self.beta) * u_clamped + self.beta * self.ewma
        self.hits = self.hits + 1 if self.ewma > self.theta else 0
        return self.flag

    def state_dict(self) -> dict:
        return {"beta": self.beta, "theta": self.theta,
                "min_hits": self.min_hits, "ewma": self.ewma, "hits": self.hits}

    @classmethod
    def from_state_dict(cls, state: dict) -> "ChangeDetector":
        return cls(**state)


def detect(detector: ChangeDetector, u_clamped: float) -> tuple[bool, ChangeDetector]:
    """Functional wrapper around ChangeDetector.update."""
    flag = detector.update(u_clamped)
    return flag, detector


@dataclass(frozen=True)
class EngineConfig:
    estimator: str = "iir"          # "iir" | "fir"
    alpha: float = 0.999            # IIR decay
    window: int = 10000             # FIR window
    epsilon: EpsilonSpec = EPSILON_AUTO
    beta: float = 0.95
    theta: float = 1.0
    min_hits: int = 20
    warmup: Union[int, str] = "auto"  # events before the detector arms
    capacity: Optional[int] = None  # STM stack bound; None = unbounded
    prune: bool = False

    def __post_init__(self):
        if self.estimator not in ("iir", "fir"):
            raise ValidationError(
                f"estimator must be 'iir' or 'fir', got {self.estimator!r}"
            )
        if self.estimator == "iir" and not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.estimator == "fir" and self.window < 1:
            raise ValidationError(f"window must be >= 1, got {self.window}")
        if self.epsilon not in (EPSILON_AUTO, estimators.EPSILON_OFF):
            resolve_epsilon(self.epsilon, 0, 0)  # validates the float form
        if self.warmup != "auto" and (not isinstance(self.warmup, int) or self.warmup < 0):
            raise ValidationError(f"warmup must be 'auto' or >= 0, got {self.warmup}")
        if self.capacity is not None and self.capacity < 1:
            raise ValidationError(f"capacity must be >= 1, got {self.capacity}")
        ChangeDetector(self.beta, self.theta, self.min_hits)  # validates

    def build_estimator(self) -> Estimator:
        if self.estimator == "fir":
            return FirEstimator(self.window)
        return IirEstimator(self.alpha, prune=self.prune, epsilon=self.epsilon)

    def resolved_warmup(self) -> int:
        """Events the detector waits out while the estimator converges.

        Until the occurrence rates have had one settling time, every
        symbol's rate is underestimated and u is inflated for a benign
        reason; flagging during that stretch would be noise.
        """
        if self.warmup != "auto":
            return self.warmup
        if self.estimator == "fir":
            return self.window
        return math.ceil(3.0 / (1.0 - self.alpha) - 1e-9)

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator, "alpha": self.alpha,
            "window": self.window, "epsilon": self.epsilon,
            "beta": self.beta, "theta": self.theta, "min_hits": self.min_hits,
            "warmup": self.warmup, "capacity": self.capacity, "prune": self.prune,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EngineConfig":
        known = {f: obj[f] for f in cls.__dataclass_fields__ if f in obj}
        return cls(**known)


class Engine:
    """Single-stream scorer: one stack, one estimator, one detector."""

    def __init__(self, config: Optional[EngineConfig] = None):
        self.config = config or EngineConfig()
        self.stack = StmStack(capacity=self.config.capacity)
        self.estimator = self.config.build_estimator()
        self.detector = ChangeDetector(
            self.config.beta, self.config.theta, self.config.min_hits
        )
        self.warmup = self.config.resolved_warmup()
        self.last_t: Optional[int] = None

    def step(self, obs: Observation) -> TraceRecord:
        """Score one event, then let the memory and estimator learn it."""
        if self.last_t is not None and obs.t <= self.last_t:
            raise NonMonotonicTimeError(
                f"time {obs.t} does not increase past {self.last_t}"
            )
        # Measure against the state *before* this event.
        w = self.estimator.w(obs.symbol)
        floor = resolve_epsilon(
            self.config.epsilon,
            self.estimator.events_seen,
            self.estimator.alphabet_size,
        )
        c_ltm = ltm_complexity(w, floor)
        pre_position = self.stack.observe(obs.symbol)
        c_stm = stm_complexity(pre_position)

        novelty = pre_position is None
        if novelty:
            u_raw: Optional[float] = None
            u_clamped: Optional[float] = None
            flag = self.detector.flag  # detector not updated by novelties
        else:
            u_raw = c_ltm - c_stm
            u_clamped = max(u_raw, 0.0)
            if math.isfinite(u_clamped) and self.estimator.events_seen >= self.warmup:
                flag = self.detector.update(u_clamped)
            else:
                # Detector is still arming, or ltm cost is infinite with
                # smoothing disabled; keep the EWMA clean either way.
                flag = self.detector.flag

        self.estimator.update(obs)
        self.last_t = obs.t
        return TraceRecord(obs.t, obs.symbol, c_stm, c_ltm,
                           u_raw, u_clamped, novelty, flag)

    # -- snapshots ---------------------------------------------------

    def snapshot(self) -> dict:
        """JSON-serializable state; restoring replays bit-identically."""
        return {
            "format_version": SNAPSHOT_VERSION,
            "config": self.config.to_dict(),
            "last_t": self.last_t,
            "stack": self.stack.items(),
            "estimator": self.estimator.state_dict(),
            "detector": self.detector.state_dict(),
        }

    @classmethod
    def restore(cls, snapshot: dict) -> "Engine":
        if not isinstance(snapshot, dict) or "format_version" not in snapshot:
            raise VersionMismatchError("not an engine snapshot")
        if snapshot["format_version"] != SNAPSHOT_VERSION:
            raise VersionMismatchError(
                f"snapshot version {snapshot['format_version']!r}, "
                f"expected {SNAPSHOT_VERSION}"
            )
        try:
            config = EngineConfig.from_dict(snapshot["config"])
            engine = cls(config)
            engine.stack = StmStack(capacity=config.capacity,
                                    items=snapshot["stack"])
            engine.estimator = estimators.estimator_from_state(snapshot["estimator"])
            engine.detector = ChangeDetector.from_state_dict(snapshot["detector"])
            engine.last_t = snapshot["last_t"]
        except (KeyError, TypeError) as exc:
            raise VersionMismatchError(f"malformed snapshot: {exc}") from None
        return engine

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)

    @classmethod
    def restore_json(cls, text: str) -> "Engine":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise VersionMismatchError(f"unreadable snapshot: {exc}") from None
        return cls.restore(obj)


def run_stream(
    events: Iterable[Observation], config: Optional[EngineConfig] = None
) -> Iterator[TraceRecord]:
    """Fold an engine over time-ordered events; deterministic."""
    engine = Engine(config)
    for i, obs in enumerate(events):
        try:
            yield engine.step(obs)
        except NonMonotonicTimeError as exc:
            raise NonMonotonicTimeError(f"event {i + 1}: {exc}") from None


# -- trace serialization ----------------------------------------------

TRACE_CSV_HEADER = "t,symbol,c_stm,c_ltm,u_raw,u_clamped,novelty,change_flag"


def _num(value: Optional[float]) -> Optional[str]:
    """Fixed 6-decimal rendering; None for absent or non-finite values."""
    if value is None or not math.isfinite(value):
        return None
    return f"{value:.6f}"


def trace_to_jsonl(record: TraceRecord) -> str:
    parts = [f'"t": {record.t}', f'"symbol": {json.dumps(record.symbol)}']
    for name in ("c_stm", "c_ltm", "u_raw", "u_clamped"):
        rendered = _num(getattr(record, name))
        parts.append(f'"{name}": {rendered if rendered is not None else "null"}')
    parts.append(f'"novelty": {"true" if record.novelty else "false"}')
    parts.append(f'"change_flag": {"true" if record.change_flag else "false"}')
    return "{" + ", ".join(parts) + "}"


def trace_to_csv(record: TraceRecord) -> str:
    cells = [str(record.t), record.symbol]
    for name in ("c_stm", "c_ltm", "u_raw", "u_clamped"):
        cells.append(_num(getattr(record, name)) or "")
    cells.append("true" if record.novelty else "false")
    cells.append("true" if record.change_flag else "false")
    return ",".join(cells)
