"""Short-term memory as a move-to-front stack.

Retrieval cost is the base-2 log of a symbol's 1-based stack position
*before* it is moved to the top, so a symbol observed twice in a row
costs 0 bits the second time, and a symbol never seen costs infinity.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .core import SymbolId, ValidationError


@dataclass(frozen=True)
class Observation:
    """One stream event: symbol seen at integer time t."""

    t: int
    symbol: SymbolId

    def __post_init__(self):
        if self.t < 0:
            raise ValidationError(f"time index must be >= 0, got {self.t}")


def matches(observation: Observation, reference: SymbolId) -> bool:
    """Determination test: exact identity, independent of time."""
    return observation.symbol == reference


def stm_complexity(pre_position: Optional[int]) -> float:
    """log2 of the pre-move position; None (never seen) costs infinity."""
    if pre_position is None:
        return math.inf
    if pre_position < 1:
        raise ValidationError(f"position must be >= 1, got {pre_position}")
    return math.log2(pre_position)


class StmStack:
    """Move-to-front stack of distinct symbols, position 1 = top.

    Backed by an OrderedDict so a hit at depth d costs O(d) and inserts,
    moves and bottom evictions are O(1).
    """

    def __init__(self, capacity: Optional[int] = None,
                 items: Iterable[SymbolId] = ()):
        if capacity is not None and capacity < 1:
            raise ValidationError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: OrderedDict[SymbolId, None] = OrderedDict()
        for sym in items:  # top-first, as produced by items()
            self._items[sym] = None
        if capacity is not None and len(self._items) > capacity:
            raise ValidationError("initial items exceed capacity")

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, symbol: SymbolId) -> bool:
        return symbol in self._items

    def items(self) -> list[SymbolId]:
        """Stack contents, top first."""
        return list(self._items)

    def position(self, symbol: SymbolId) -> Optional[int]:
        """Current 1-based position, or None if absent. Does not move."""
        if symbol not in self._items:
            return None
        pos = 1
        for key in self._items:
            if key == symbol:
                return pos
            pos += 1
        raise AssertionError("unreachable")

    def observe(self, symbol: SymbolId) -> Optional[int]:
        """Move symbol to the top; return its pre-move position (None if new).

        When a capacity is set, inserting a new symbol into a full stack
        evicts the bottom element.
        """
        pre = self.position(symbol)
        if pre is None:
            self._items[symbol] = None
            self._items.move_to_end(symbol, last=False)
            if self.capacity is not None and len(self._items) > self.capacity:
                self._items.popitem(last=True)
        elif pre > 1:
            self._items.move_to_end(symbol, last=False)
        return pre


def parse_event(line: str, lineno: int) -> Observation:
    """Parse one event line: {"t": int, "s": str} or a bare token.

    Bare tokens get t = lineno (0-based physical line index).
    """
    stripped = line.strip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON event: {exc}") from None
        if "t" not in obj or "s" not in obj:
            raise ValidationError('event object must have "t" and "s" fields')
        t, s = obj["t"], obj["s"]
        if not isinstance(t, int) or isinstance(t, bool):
            raise ValidationError(f'"t" must be an integer, got {t!r}')
        if not isinstance(s, str):
            raise ValidationError(f'"s" must be a string, got {s!r}')
        return Observation(t, s)
    return Observation(lineno, stripped)


def read_events(lines: Iterable[str]) -> Iterator[tuple[int, Observation]]:
    """Yield (1-based line number, Observation) pairs; blank lines skipped."""
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            yield i + 1, parse_event(line, i)
        except ValidationError as exc:
            raise ValidationError(f"line {i + 1}: {exc}") from None
