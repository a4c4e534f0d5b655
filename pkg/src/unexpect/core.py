"""Shared value types and bit-length arithmetic.

Conventions used across the package:

* All costs are measured in bits (base-2 logarithms).
* A cost is a nonnegative float; ``math.inf`` is a legal value meaning
  "impossible / never seen", never an error. NaN is never produced.
* Symbols are plain strings compared by exact identity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

SymbolId = str
BitLength = float

MASS_TOLERANCE = 1e-9


class UnexpectError(Exception):
    """Base error; ``code`` is the stable machine-readable name."""

    code = "error"


class ValidationError(UnexpectError):
    code = "validation"


class KraftViolationError(UnexpectError):
    code = "kraft-violation"


class ImproperDistributionError(UnexpectError):
    code = "improper-distribution"


class SupportMismatchError(UnexpectError):
    code = "support-mismatch"


class NonMonotonicTimeError(UnexpectError):
    code = "non-monotonic-time"


class InsufficientHistoryError(UnexpectError):
    code = "insufficient-history"


class UnknownNodeError(UnexpectError):
    code = "unknown-node"


class UnreachableError(UnexpectError):
    code = "unreachable"


class VersionMismatchError(UnexpectError):
    code = "version-mismatch"


class InvalidSpecError(UnexpectError):
    code = "invalid-spec"


class IdentityMismatchError(UnexpectError):
    code = "identity-mismatch"


def bits_from_probability(p: float) -> BitLength:
    """Information content log2(1/p) of an outcome with probability p.

    p = 1 carries no information (0 bits); p = 0 is infinitely costly.
    """
    if math.isnan(p) or p < 0.0 or p > 1.0:
        raise ValidationError(f"probability must be in [0, 1], got {p}")
    if p == 0.0:
        return math.inf
    return math.log2(1.0 / p)


@dataclass(frozen=True)
class Unexpectedness:
    """Signed complexity drop and its cognitive-economy clamp."""

    raw: float
    clamped: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "clamped", max(self.raw, 0.0))


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability masses over an ordered, duplicate-free support."""

    support: tuple[SymbolId, ...]
    mass: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "mass", tuple(float(m) for m in self.mass))
        if len(self.support) != len(self.mass):
            raise ValidationError("support and mass must be parallel arrays")
        if len(set(self.support)) != len(self.support):
            raise ValidationError("support contains duplicate symbols")
        for sym, m in zip(self.support, self.mass):
            if math.isnan(m) or m < 0.0:
                raise ValidationError(f"mass of {sym!r} must be >= 0, got {m}")
        total = math.fsum(self.mass)
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ImproperDistributionError(
                f"masses sum to {total!r}, expected 1 within {MASS_TOLERANCE}"
            )

    def __len__(self) -> int:
        return len(self.support)

    def probability(self, symbol: SymbolId) -> float:
        try:
            return self.mass[self.support.index(symbol)]
        except ValueError:
            raise SupportMismatchError(f"symbol {symbol!r} not in support") from None

    def as_dict(self) -> dict[SymbolId, float]:
        return dict(zip(self.support, self.mass))

    def to_json(self) -> str:
        return json.dumps({"symbols": list(self.support), "mass": list(self.mass)})

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDistribution":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "symbols" not in obj or "mass" not in obj:
            raise ValidationError('expected JSON object {"symbols": [...], "mass": [...]}')
        return cls(tuple(obj["symbols"]), tuple(obj["mass"]))


@dataclass(frozen=True)
class CodeLengthTable:
    """Per-symbol code lengths in bits; finite and nonnegative.

    A table is a proper (prefix-realizable) code when its Kraft sum
    sum_i 2^-L_i does not exceed 1; it is complete when the sum equals 1.
    """

    support: tuple[SymbolId, ...]
    length: tuple[BitLength, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "length", tuple(float(v) for v in self.length))
        if len(self.support) != len(self.length):
            raise ValidationError("support and length must be parallel arrays")
        if len(set(self.support)) != len(self.support):
            raise ValidationError("support contains duplicate symbols")
        for sym, bits in zip(self.support, self.length):
            if math.isnan(bits) or math.isinf(bits) or bits < 0.0:
                raise ValidationError(
                    f"length of {sym!r} must be finite and >= 0, got {bits}"
                )

    def __len__(self) -> int:
        return len(self.support)

    def kraft_sum(self) -> float:
        return math.fsum(2.0 ** -bits for bits in self.length)

    def is_proper_code(self) -> bool:
        return self.kraft_sum() <= 1.0 + MASS_TOLERANCE

    def bits(self, symbol: SymbolId) -> BitLength:
        try:
            return self.length[self.support.index(symbol)]
        except ValueError:
            raise SupportMismatchError(f"symbol {symbol!r} not in support") from None

    def to_json(self) -> str:
        return json.dumps({"symbols": list(self.support), "bits": list(self.length)})

    @classmethod
    def from_json(cls, text: str) -> "CodeLengthTable":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "symbols" not in obj or "bits" not in obj:
            raise ValidationError('expected JSON object {"symbols": [...], "bits": [...]}')
        return cls(tuple(obj["symbols"]), tuple(obj["bits"]))


def distribution_from_code(
    table: CodeLengthTable, normalize: bool = False
) -> DiscreteDistribution:
    """Turn code lengths into masses d_i = 2^-L_i.

    Without ``normalize`` the table must already be a complete code
    (Kraft sum 1); Kraft sums above 1 are rejected outright because no
    prefix code realizes them.
    """
    raw = [2.0 ** -bits for bits in table.length]
    total = math.fsum(raw)
    if normalize:
        return DiscreteDistribution(table.support, tuple(d / total for d in raw))
    if total > 1.0 + MASS_TOLERANCE:
        raise KraftViolationError(
            f"Kraft sum {total!r} exceeds 1; not a proper code"
        )
    if abs(total - 1.0) > MASS_TOLERANCE:
        raise ImproperDistributionError(
            f"masses sum to {total!r}; pass normalize=True to rescale"
        )
    return DiscreteDistribution(table.support, tuple(raw))


def load_distribution(path: str) -> DiscreteDistribution:
    with open(path, "r", encoding="utf-8") as fh:
        return DiscreteDistribution.from_json(fh.read())


def load_code_table(path: str) -> CodeLengthTable:
    with open(path, "r", encoding="utf-8") as fh:
        return CodeLengthTable.from_json(fh.read())
