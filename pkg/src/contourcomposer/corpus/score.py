"""Monophonic score model."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence


@dataclass(frozen=True)
class Note:
    """A pitch (or rest, ``pitch=None``) with a duration, placed at ``onset``.

    ``onset`` is measured in counts (quarter notes) from the start of the
    enclosing phrase.
    """

    pitch: Optional[int]
    duration: Fraction
    onset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "duration", Fraction(self.duration))
        object.__setattr__(self, "onset", Fraction(self.onset))
        if self.duration <= 0:
            raise ValueError(f"note duration must be positive, got {self.duration}")
        if self.onset < 0:
            raise ValueError(f"note onset must be non-negative, got {self.onset}")
        if self.pitch is not None and not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch out of MIDI range: {self.pitch}")

    @property
    def is_rest(self) -> bool:
        return self.pitch is None

    @property
    def end(self) -> Fraction:
        return self.onset + self.duration


def notes_from_pairs(pairs: Sequence[tuple[Optional[int], Fraction]], start=Fraction(0)) -> tuple[Note, ...]:
    """Build gap-free notes from ``(pitch, duration)`` pairs."""
    notes = []
    onset = Fraction(start)
    for pitch, duration in pairs:
        note = Note(pitch, Fraction(duration), onset)
        notes.append(note)
        onset = note.end
    return tuple(notes)


@dataclass(frozen=True)
class Phrase:
    """A contiguous, gap-free run of notes.

    ``offset`` is the phrase's position inside its song in counts; adding it
    to a note onset gives the note's metric position, which is what off-beats
    are computed from.
    """

    notes: tuple[Note, ...]
    source_id: str = ""
    index_in_song: int = 0
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(self.notes))
        object.__setattr__(self, "offset", Fraction(self.offset))
        expected = Fraction(0)
        for note in self.notes:
            if note.onset != expected:
                raise ValueError(
                    f"phrase {self.source_id}#{self.index_in_song} is not gap-free: "
                    f"note at {note.onset}, expected {expected}"
                )
            expected = note.end

    @property
    def total_duration(self) -> Fraction:
        return sum((n.duration for n in self.notes), Fraction(0))

    @property
    def pitches(self) -> list[Optional[int]]:
        return [n.pitch for n in self.notes]

    @property
    def durations(self) -> list[Fraction]:
        return [n.duration for n in self.notes]

    def absolute_onsets(self) -> list[Fraction]:
        return [self.offset + n.onset for n in self.notes]

    def has_pitch(self) -> bool:
        return any(n.pitch is not None for n in self.notes)

    @classmethod
    def from_pairs(cls, pairs, source_id="", index_in_song=0, offset=Fraction(0)) -> Phrase:
        return cls(notes_from_pairs(pairs), source_id, index_in_song, Fraction(offset))


@dataclass(frozen=True)
class Melody:
    phrases: tuple[Phrase, ...]
    transpose_applied: int = 0
    time_signature: tuple[int, int] = (4, 4)
    source_id: str = ""
    markers: tuple[Fraction, ...] = field(default=())
    minor: bool = False  # key signature says minor mode

    def __post_init__(self):
        object.__setattr__(self, "phrases", tuple(self.phrases))
        object.__setattr__(self, "markers", tuple(Fraction(m) for m in self.markers))

    def notes(self) -> list[Note]:
        """All notes with onsets relative to the start of the melody."""
        out = []
        for phrase in self.phrases:
            for n in phrase.notes:
                out.append(Note(n.pitch, n.duration, phrase.offset + n.onset))
        return out

    @property
    def total_duration(self) -> Fraction:
        return sum((p.total_duration for p in self.phrases), Fraction(0))
