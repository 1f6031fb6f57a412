"""Phrase generation: interleaved duration/pitch sampling with ending
constraints, contour-following Gaussian filters and backtracking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .contour import ContourModel, contour_at
from .corpus.score import Phrase
from .errors import SearchExhausted
from .markov import BLANK, TransitionModel, offbeat

TONIC_TRIAD = frozenset({0, 4, 7})

#: returned by :func:`backtrack_step` when a node has no alternatives left
CLIMB_UP = None


@dataclass(frozen=True)
class GeneratorConfig:
    order: int = 4
    bars: int = 4
    sigma2_pitch: float = 4.0
    sigma2_rhythm: float = 0.33
    gamma: float = 3.0
    lowpass_k: int = 6
    max_clusters: int = 17
    seed: int = 0

    def __post_init__(self):
        for name in ("order", "bars", "lowpass_k", "max_clusters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("sigma2_pitch", "sigma2_rhythm", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def total_counts(self) -> Fraction:
        return Fraction(4 * self.bars)


def ending_mask_duration(duration_states: Sequence[Fraction], remaining: Fraction) -> np.ndarray:
    """1 where a duration still fits into the remaining counts."""
    remaining = Fraction(remaining)
    return np.array([1.0 if Fraction(d) <= remaining else 0.0 for d in duration_states])


def ending_mask_pitch(pitch_states: Sequence[Optional[int]], is_last_note: bool) -> np.ndarray:
    """On the last note allow only sounding C, E or G; otherwise allow all."""
    if not is_last_note:
        return np.ones(len(pitch_states))
    return np.array([1.0 if p is not None and p % 12 in TONIC_TRIAD else 0.0 for p in pitch_states])


def gaussian_filter(states: np.ndarray, mu: float, sigma2: float) -> np.ndarray:
    """Normal density at each state; NaN states (rests) get weight 1."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    states = np.asarray(states, dtype=float)
    sigma = math.sqrt(sigma2)
    out = np.exp(-((states - mu) ** 2) / (2 * sigma2)) / (sigma * math.sqrt(2 * math.pi))
    out[np.isnan(states)] = 1.0
    return out


def filtered_transition(t: np.ndarray, mask: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``t * mask * f`` normalized to sum 1, or all zeros if nothing survives."""
    product = np.asarray(t, dtype=float) * np.asarray(mask, dtype=float) * np.asarray(f, dtype=float)
    total = product.sum()
    if total <= 0:
        return np.zeros_like(product)
    return product / total


def draw_state(t_prime: np.ndarray, r: float) -> int:
    """Smallest index ``i`` with ``r <= accsum(t_prime)[i]`` and ``t_prime[i] > 0``."""
    t_prime = np.asarray(t_prime, dtype=float)
    positive = np.flatnonzero(t_prime > 0)
    if len(positive) == 0:
        raise ValueError("cannot draw from a zero vector")
    acc = np.cumsum(t_prime)
    i = int(np.searchsorted(acc, r, side="left"))
    # skip zero-probability entries; clamp float round-off at the top end
    later = positive[positive >= i]
    return int(later[0]) if len(later) else int(positive[-1])


@dataclass
class SearchNode:
    """One position in the phrase: the note starting at ``onset``.

    ``duration_probs`` is the masked and filtered duration distribution,
    ``pitch_weights`` the contour-filtered pitch row before the last-note
    mask (which depends on the chosen duration).
    """

    depth: int
    onset: Fraction
    duration_probs: np.ndarray
    pitch_weights: np.ndarray
    is_last: np.ndarray  # per duration state: does it end the phrase
    last_mask: np.ndarray
    committed: Optional[tuple[int, int]] = None
    current_pitch_under_trial: Optional[int] = None
    tried: dict[int, set[int]] = field(default_factory=dict)
    dead_durations: set[int] = field(default_factory=set)
    _pitch_cache: dict = field(default_factory=dict, repr=False)

    @property
    def is_dead(self) -> bool:
        return not self.duration_probs.any()

    def pitch_probs(self, d: int) -> np.ndarray:
        probs = self._pitch_cache.get(d)
        if probs is None:
            mask = self.last_mask if self.is_last[d] else np.ones_like(self.pitch_weights)
            probs = filtered_transition(self.pitch_weights, mask, np.ones_like(mask))
            self._pitch_cache[d] = probs
        return probs

    def _admissible_durations(self, p: int) -> list[int]:
        done = self.tried.get(p, set())
        return [
            d
            for d in np.flatnonzero(self.duration_probs > 0)
            if d not in done and d not in self.dead_durations and self.pitch_probs(d)[p] > 0
        ]

    def next_candidate(self, rng: np.random.Generator) -> Optional[tuple[int, int]]:
        if self.current_pitch_under_trial is None and not self.tried:
            return self._fresh_candidate(rng)
        p = self.current_pitch_under_trial
        while True:
            if p is not None:
                durations = self._admissible_durations(p)
                if durations:
                    return _draw_among(self.duration_probs, durations, rng), p
            pool = [
                q
                for q in np.flatnonzero(self.pitch_weights > 0)
                if q not in self.tried and self._admissible_durations(q)
            ]
            if not pool:
                return CLIMB_UP
            p = _draw_among(self.pitch_weights, pool, rng)
            self.tried[p] = set()
            self.current_pitch_under_trial = p

    def _fresh_candidate(self, rng):
        while True:
            available = [d for d in np.flatnonzero(self.duration_probs > 0) if d not in self.dead_durations]
            if not available:
                return CLIMB_UP
            d = _draw_among(self.duration_probs, available, rng)
            probs = self.pitch_probs(d)
            if not probs.any():
                self.dead_durations.add(d)
                continue
            return d, draw_state(probs, rng.random())

    def record_failure(self, candidate: tuple[int, int]) -> None:
        d, p = candidate
        self.tried.setdefault(p, set()).add(d)
        if self.current_pitch_under_trial is None:
            self.current_pitch_under_trial = p


def _draw_among(weights: np.ndarray, allowed: Sequence[int], rng: np.random.Generator) -> int:
    masked = np.zeros_like(weights)
    allowed = list(allowed)
    masked[allowed] = weights[allowed]
    total = masked.sum()
    if total <= 0:
        raise ValueError("no positive weight among allowed states")
    return draw_state(masked / total, rng.random())


def backtrack_step(node: SearchNode, failed: tuple[int, int], rng: np.random.Generator):
    """Record that ``failed`` led to a dead end and propose the next candidate.

    The pitch that failed is kept while untried durations remain for it; then
    a new untried pitch is drawn. Returns :data:`CLIMB_UP` once every
    admissible (duration, pitch) pair of this node has failed.
    """
    node.record_failure(failed)
    return node.next_candidate(rng)


def _context(history: list, order: int) -> tuple:
    tail = history[-order:] if history else []
    return (BLANK,) * (order - len(tail)) + tuple(tail)


class PhraseComposer:
    """Composes phrases from trained models and selected contours.

    ``use_contour=False`` bypasses both Gaussian filters; ``parametric=False``
    merges all off-beat bins into one before composing.
    """

    def __init__(
        self,
        pitch_model: TransitionModel,
        duration_model: TransitionModel,
        pitch_contour: Optional[ContourModel],
        rhythm_contour: Optional[ContourModel],
        config: GeneratorConfig,
        use_contour: bool = True,
        parametric: bool = True,
    ):
        if use_contour and (pitch_contour is None or rhythm_contour is None):
            raise ValueError("contour following needs both contour models")
        if not parametric:
            pitch_model = pitch_model.collapsed()
            duration_model = duration_model.collapsed()
        self.pitch_model = pitch_model
        self.duration_model = duration_model
        self.pitch_contour = pitch_contour
        self.rhythm_contour = rhythm_contour
        self.config = config
        self.use_contour = use_contour
        self.parametric = parametric
        self.order = min(pitch_model.order, duration_model.order)
        self.duration_states = list(duration_model.alphabet.states)
        self.pitch_states = list(pitch_model.alphabet.states)
        self._duration_values = duration_model.alphabet.numeric()
        self._pitch_values = pitch_model.alphabet.numeric()
        self._last_mask = ending_mask_pitch(self.pitch_states, True)

    def _offbeat(self, onset: Fraction) -> Fraction:
        return offbeat(onset) if self.parametric else Fraction(0)

    def make_node(self, depth: int, onset: Fraction, durations: list, pitches: list) -> SearchNode:
        total = self.config.total_counts
        ob = self._offbeat(onset)
        t_d = self.duration_model.transition_vector(ob, _context(durations, self.duration_model.order))
        t_p = self.pitch_model.transition_vector(ob, _context(pitches, self.pitch_model.order))
        mask_d = ending_mask_duration(self.duration_states, total - onset)
        if self.use_contour:
            position = float(onset / total)
            f_d = gaussian_filter(
                self._duration_values, contour_at(self.rhythm_contour, position), self.config.sigma2_rhythm
            )
            f_p = gaussian_filter(
                self._pitch_values, contour_at(self.pitch_contour, position), self.config.sigma2_pitch
            )
        else:
            f_d = np.ones(len(self.duration_states))
            f_p = np.ones(len(self.pitch_states))
        is_last = np.array([onset + d == total for d in self.duration_states])
        return SearchNode(
            depth=depth,
            onset=onset,
            duration_probs=filtered_transition(t_d, mask_d, f_d),
            pitch_weights=t_p * f_p,
            is_last=is_last,
            last_mask=self._last_mask,
        )

    def compose(self, rng: np.random.Generator, max_steps: Optional[int] = None) -> Phrase:
        total = self.config.total_counts
        root = self.make_node(0, Fraction(0), [], [])
        if root.is_dead:
            raise SearchExhausted("no transition available at the start of a phrase")
        stack = [root]
        durations: list[Fraction] = []
        pitches: list = []
        steps = 0
        candidate = root.next_candidate(rng)
        while True:
            steps += 1
            if max_steps is not None and steps > max_steps:
                raise SearchExhausted(f"search gave up after {max_steps} steps")
            node = stack[-1]
            if candidate is CLIMB_UP:
                stack.pop()
                if not stack:
                    raise SearchExhausted(f"no phrase of {total} counts can be generated")
                durations.pop()
                pitches.pop()
                parent = stack[-1]
                candidate = backtrack_step(parent, parent.committed, rng)
                continue
            node.committed = candidate
            d, p = candidate
            duration = self.duration_states[d]
            end = node.onset + duration
            if end == total:
                durations.append(duration)
                pitches.append(self.pitch_states[p])
                return Phrase.from_pairs(list(zip(pitches, durations)), source_id="composed")
            child = self.make_node(node.depth + 1, end, durations + [duration], pitches + [self.pitch_states[p]])
            if child.is_dead:
                candidate = backtrack_step(node, candidate, rng)
                continue
            durations.append(duration)
            pitches.append(self.pitch_states[p])
            stack.append(child)
            candidate = child.next_candidate(rng)


def compose_phrase(
    pitch_model: TransitionModel,
    duration_model: TransitionModel,
    pitch_contour: Optional[ContourModel],
    rhythm_contour: Optional[ContourModel],
    config: GeneratorConfig,
    rng: Optional[np.random.Generator] = None,
    use_contour: bool = True,
    parametric: bool = True,
) -> Phrase:
    if rng is None:
        rng = np.random.default_rng(config.seed)
    composer = PhraseComposer(
        pitch_model, duration_model, pitch_contour, rhythm_contour, config, use_contour, parametric
    )
    return composer.compose(rng)


def validate_phrase(
    phrase: Phrase,
    pitch_model: TransitionModel,
    duration_model: TransitionModel,
    parametric: bool = True,
) -> list[str]:
    """Replay a phrase against the models; return one message per transition
    that has zero probability."""
    if not parametric:
        pitch_model = pitch_model.collapsed()
        duration_model = duration_model.collapsed()
    problems = []
    durations: list = []
    pitches: list = []
    for i, note in enumerate(phrase.notes):
        onset = phrase.offset + note.onset
        ob = offbeat(onset) if parametric else Fraction(0)
        if note.duration not in duration_model.alphabet or note.pitch not in pitch_model.alphabet:
            problems.append(f"note {i}: state outside the alphabet")
        else:
            t_d = duration_model.transition_vector(ob, _context(durations, duration_model.order))
            t_p = pitch_model.transition_vector(ob, _context(pitches, pitch_model.order))
            if t_d[duration_model.alphabet.index(note.duration)] <= 0:
                problems.append(f"note {i}: duration {note.duration} unseen at off-beat {ob}")
            if t_p[pitch_model.alphabet.index(note.pitch)] <= 0:
                problems.append(f"note {i}: pitch {note.pitch} unseen at off-beat {ob}")
        durations.append(note.duration)
        pitches.append(note.pitch)
    return problems
