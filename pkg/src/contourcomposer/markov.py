"""Off-beat-parametric Markov models of order 1..m.

A :class:`TransitionModel` is a rank-3 tensor in sparse form: for every
off-beat (position inside the beat) and every context of up to ``order``
preceding symbols it stores successor counts over a :class:`StateAlphabet`.
Sequences are padded with ``order`` :data:`BLANK` symbols so phrase starts
have well-defined contexts.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .timebase import format_time, offbeat, parse_time

__all__ = [
    "BLANK",
    "DURATION",
    "PITCH",
    "REST",
    "StateAlphabet",
    "TransitionModel",
    "model_size",
    "offbeat",
    "train",
]

PITCH = "pitch"
DURATION = "duration"
REST = None


class _Blank:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BLANK"

    def __reduce__(self):
        return (_Blank, ())


#: padding symbol placed before every training sequence
BLANK = _Blank()


def _state_key(symbol):
    # REST sorts before every pitch
    return (0, 0) if symbol is None else (1, symbol)


@dataclass(frozen=True)
class StateAlphabet:
    feature: str
    states: tuple

    def __post_init__(self):
        states = tuple(self.states)
        object.__setattr__(self, "states", states)
        if any(s is BLANK for s in states):
            raise ValueError("the blank symbol cannot be a state")
        if len(set(states)) != len(states):
            raise ValueError("alphabet states must be unique")
        if list(states) != sorted(states, key=_state_key):
            raise ValueError("alphabet states must be sorted")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(states)})

    @classmethod
    def from_symbols(cls, feature: str, symbols: Iterable[Hashable]) -> StateAlphabet:
        return cls(feature, tuple(sorted(set(symbols), key=_state_key)))

    def __len__(self):
        return len(self.states)

    def __contains__(self, symbol):
        return symbol in self._index

    def index(self, symbol) -> int:
        try:
            return self._index[symbol]
        except (KeyError, TypeError):
            raise ValueError(f"symbol {symbol!r} is not in the {self.feature} alphabet") from None

    def numeric(self) -> np.ndarray:
        """State values as floats; rests map to NaN."""
        return np.array([np.nan if s is None else float(s) for s in self.states])

    def encode(self, symbol) -> Any:
        if symbol is BLANK:
            return "_"
        if self.feature == DURATION:
            return format_time(symbol)
        if symbol is None:
            return "rest"
        return symbol

    def decode(self, value) -> Any:
        if value == "_":
            return BLANK
        if self.feature == DURATION:
            return parse_time(value)
        if value == "rest":
            return None
        return value


class TransitionModel:
    """Successor counts keyed by ``(offbeat, context)``.

    Rows are materialized for every context length 1..order. Queries never
    back off: an unseen key yields the zero vector.
    """

    def __init__(self, alphabet: StateAlphabet, order: int, counts: dict | None = None):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.alphabet = alphabet
        self.order = order
        # (offbeat, context) -> {state index: count}
        self._counts: dict[tuple[Fraction, tuple], dict[int, int]] = {}
        for key, row in (counts or {}).items():
            self._counts[key] = {i: c for i, c in sorted(row.items()) if c}
        self._dense: dict = {}

    def __eq__(self, other):
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.order == other.order
            and self._counts == other._counts
        )

    def __len__(self):
        return len(self._counts)

    def keys(self):
        return sorted(self._counts, key=self._key_order)

    def _key_order(self, key):
        ob, ctx = key
        return (ob, len(ctx), tuple((0, 0) if s is BLANK else (1, self.alphabet.index(s)) for s in ctx))

    @property
    def offbeats(self) -> list[Fraction]:
        return sorted({ob for ob, _ in self._counts})

    def _check_context(self, context: Sequence) -> tuple:
        context = tuple(context)
        if not 1 <= len(context) <= self.order:
            raise ValueError(f"context length must be in 1..{self.order}, got {len(context)}")
        seen_symbol = False
        for s in context:
            if s is BLANK:
                if seen_symbol:
                    raise ValueError("blanks may only form a prefix of the context")
            else:
                self.alphabet.index(s)
                seen_symbol = True
        return context

    def counts(self, offbeat_value, context: Sequence) -> np.ndarray:
        key = (Fraction(offbeat_value), self._check_context(context))
        out = np.zeros(len(self.alphabet), dtype=np.int64)
        for i, c in self._counts.get(key, {}).items():
            out[i] = c
        return out

    def transition_vector(self, offbeat_value, context: Sequence) -> np.ndarray:
        """L1-normalized successor distribution, or zeros for unseen keys."""
        key = (Fraction(offbeat_value), tuple(context))
        cached = self._dense.get(key)
        if cached is not None:
            return cached.copy()
        row = self.counts(*key).astype(float)
        total = row.sum()
        if total > 0:
            row /= total
        self._dense[key] = row
        return row.copy()

    def probabilities_exact(self, offbeat_value, context: Sequence) -> list[Fraction]:
        row = self.counts(offbeat_value, context)
        total = int(row.sum())
        if total == 0:
            return [Fraction(0)] * len(row)
        return [Fraction(int(c), total) for c in row]

    def collapsed(self) -> TransitionModel:
        """Merge all off-beat bins into bin 0 (a plain higher-order model)."""
        merged: dict = defaultdict(lambda: defaultdict(int))
        for (_, ctx), row in self._counts.items():
            for i, c in row.items():
                merged[(Fraction(0), ctx)][i] += c
        return TransitionModel(self.alphabet, self.order, {k: dict(v) for k, v in merged.items()})

    def to_json(self) -> dict:
        enc = self.alphabet.encode
        rows = []
        for key in self.keys():
            ob, ctx = key
            row = self._counts[key]
            total = sum(row.values())
            idx = sorted(row)
            rows.append(
                {
                    "offbeat": format_time(ob),
                    "context": [enc(s) for s in ctx],
                    "successors": idx,
                    "counts": [row[i] for i in idx],
                    "probs": [row[i] / total for i in idx],
                }
            )
        return {
            "feature": self.alphabet.feature,
            "order": self.order,
            "states": [enc(s) for s in self.alphabet.states],
            "rows": rows,
        }

    @classmethod
    def from_json(cls, obj: dict) -> TransitionModel:
        probe = StateAlphabet(obj["feature"], ())
        alphabet = StateAlphabet(obj["feature"], tuple(probe.decode(s) for s in obj["states"]))
        counts = {}
        for row in obj["rows"]:
            ctx = tuple(alphabet.decode(s) for s in row["context"])
            counts[(parse_time(row["offbeat"]), ctx)] = dict(zip(row["successors"], row["counts"]))
        model = cls(alphabet, obj["order"], counts)
        for key in counts:
            model._check_context(key[1])
        return model


def train(
    sequences: Sequence[Sequence[tuple[Hashable, Fraction]]],
    order: int,
    alphabet: StateAlphabet,
) -> TransitionModel:
    """Count transitions in ``(symbol, onset)`` sequences.

    Each successor is counted under the off-beat of its own onset, once for
    every context length 1..order taken from the blank-padded history.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    counts: dict = defaultdict(lambda: defaultdict(int))
    for seq in sequences:
        padded = [BLANK] * order + [s for s, _ in seq]
        for i, (symbol, onset) in enumerate(seq):
            target = alphabet.index(symbol)
            ob = offbeat(Fraction(onset))
            pos = order + i
            for k in range(1, order + 1):
                counts[(ob, tuple(padded[pos - k:pos]))][target] += 1
    return TransitionModel(alphabet, order, {k: dict(v) for k, v in counts.items()})


_ROW_LIMIT = 2**63 - 1


def model_size(alphabet_size: int, order: int) -> int:
    """Maximum number of distinct non-blank contexts per off-beat: sum n**i, i=1..m."""
    if alphabet_size < 1 or order < 1:
        raise ValueError("alphabet size and order must be >= 1")
    total = sum(alphabet_size**i for i in range(1, order + 1))
    if total > _ROW_LIMIT:
        raise OverflowError(f"{total} rows exceed a 64-bit row index")
    return total
