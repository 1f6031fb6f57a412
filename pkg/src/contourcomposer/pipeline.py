"""Training pipeline: phrases in, Markov models and contours out."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .composer import GeneratorConfig
from .contour import N_SAMPLES, ContourModel, learn_contour
from .corpus.score import Melody, Phrase
from .errors import ComposerError
from .markov import DURATION, PITCH, StateAlphabet, TransitionModel, model_size, train

log = logging.getLogger(__name__)


@dataclass
class TrainedModels:
    config: GeneratorConfig
    pitch_model: TransitionModel
    duration_model: TransitionModel
    pitch_contour: ContourModel
    rhythm_contour: ContourModel
    fingerprint: dict

    @property
    def max_context_rows(self) -> int:
        return model_size(len(self.pitch_model.alphabet), self.config.order)


def phrase_sequences(phrases: Sequence[Phrase]):
    """Pitch and duration ``(symbol, onset)`` sequences, onsets in song counts."""
    pitch_seqs, dur_seqs = [], []
    for phrase in phrases:
        onsets = phrase.absolute_onsets()
        pitch_seqs.append(list(zip(phrase.pitches, onsets)))
        dur_seqs.append(list(zip(phrase.durations, onsets)))
    return pitch_seqs, dur_seqs


def train_markov(phrases: Sequence[Phrase], order: int) -> tuple[TransitionModel, TransitionModel]:
    pitch_seqs, dur_seqs = phrase_sequences(phrases)
    pitch_alphabet = StateAlphabet.from_symbols(PITCH, (s for seq in pitch_seqs for s, _ in seq))
    dur_alphabet = StateAlphabet.from_symbols(DURATION, (s for seq in dur_seqs for s, _ in seq))
    return train(pitch_seqs, order, pitch_alphabet), train(dur_seqs, order, dur_alphabet)


def train_all(
    melodies: Sequence[Melody],
    config: GeneratorConfig,
    fingerprint: Optional[dict] = None,
    n_samples: int = N_SAMPLES,
) -> TrainedModels:
    phrases = [p for m in melodies for p in m.phrases if p.notes]
    if not phrases:
        raise ComposerError("corpus contains no phrases")
    pitch_model, duration_model = train_markov(phrases, config.order)
    kwargs = dict(k=config.lowpass_k, max_clusters=config.max_clusters, gamma=config.gamma, n_samples=n_samples)
    pitch_contour = learn_contour(phrases, PITCH, **kwargs)
    rhythm_contour = learn_contour(phrases, DURATION, **kwargs)
    log.info(
        "trained on %d phrases: %d pitch states, %d duration states",
        len(phrases),
        len(pitch_model.alphabet),
        len(duration_model.alphabet),
    )
    return TrainedModels(config, pitch_model, duration_model, pitch_contour, rhythm_contour, fingerprint or {})
