"""Synthetic corpora shared by the test modules."""

from fractions import Fraction as F

import numpy as np

from contourcomposer.corpus import Melody, Phrase

C_MAJOR = [55, 57, 59, 60, 62, 64, 65, 67, 69, 71, 72, 74, 76]


def random_walk_phrase(rng, bars=4, name="walk", index=0):
    """A C major phrase of exactly ``4 * bars`` counts ending on C."""
    total = F(4 * bars)
    figures = [[F(1)], [F(1)], [F(2)], [F(1, 2), F(1, 2)], [F(1, 3)] * 3, [F(3, 2), F(1, 2)]]
    durations = []
    t = F(0)
    while t < total:
        fig = figures[rng.integers(len(figures))]
        if t + sum(fig) > total:
            fig = [total - t]
        durations.extend(fig)
        t += sum(fig)
    idx = 5
    pairs = []
    for i, d in enumerate(durations):
        idx = int(np.clip(idx + rng.integers(-2, 3), 0, len(C_MAJOR) - 1))
        pitch = C_MAJOR[idx]
        if 0 < i < len(durations) - 1 and rng.random() < 0.05:
            pitch = None
        pairs.append((pitch, d))
    pairs[-1] = (60 if rng.random() < 0.5 else 64, pairs[-1][1])
    return Phrase.from_pairs(pairs, name, index)


def synthetic_corpus(n_phrases=20, seed=0, bars=4):
    rng = np.random.default_rng(seed)
    phrases = [random_walk_phrase(rng, bars, f"song{i // 4}", i % 4) for i in range(n_phrases)]
    return [Melody((p,), source_id=p.source_id) for p in phrases]


def chain_phrase():
    """Six bars in which every (off-beat, context) has a single successor.

    The note ending at count 16 is an E, so a four-bar composition can stop
    there.
    """
    durations = [1, F(1, 2), F(1, 2), 2, 1, 1, F(3, 2), F(1, 2), F(1, 2), 1, F(1, 2), 2, 2, 1, 1, 2, 1, 1, 4]
    pitches = [60, 62, 64, 65, 67, 69, 71, 72, 74, 72, 71, 69, 67, 65, 64, 62, 59, 57, 60]
    return Phrase.from_pairs(list(zip(pitches, map(F, durations))), "chain", 0)


def curve_phrase(values, step=F(1, 2), name="curve", index=0):
    return Phrase.from_pairs([(int(round(v)), step) for v in values], name, index)


def contour_families(n_each=30, seed=0, notes=32):
    """Offset sinusoid phrases and rising-ramp phrases, ``n_each`` of each."""
    rng = np.random.default_rng(seed)
    t = np.arange(notes) / notes
    sines, ramps = [], []
    for i in range(n_each):
        offset = rng.integers(-5, 6)
        wiggle = rng.normal(0, 0.4, notes)
        sines.append(curve_phrase(64 + offset + 6 * np.sin(2 * np.pi * t) + wiggle, name="sine", index=i))
        offset = rng.integers(-5, 6)
        wiggle = rng.normal(0, 0.4, notes)
        ramps.append(curve_phrase(58 + offset + 14 * t + wiggle, name="ramp", index=i))
    return sines, ramps
