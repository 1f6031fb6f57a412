"""Corpus preprocessing: transposition infix, phrase splitting, statistics
and the canonical corpus archive written by ``contourcomposer ingest``."""

from __future__ import annotations

import bisect
import csv
import hashlib
import json
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import ComposerError, MidiParseError, PolyphonicInput, SchemaError
from ..timebase import format_time, parse_time
from .midi import DEFAULT_MARKER_TYPES, parse_midi
from .score import Melody, Note, Phrase

log = logging.getLogger(__name__)

ARCHIVE_FORMAT = "contourcomposer-corpus"
ARCHIVE_VERSION = 1
REPORT_COLUMNS = ("file", "status", "phrases", "total_counts")

_INFIX = re.compile(r"_([mp])(\d*)\.midi?$", re.IGNORECASE)
_EXTENSION = re.compile(r"\.midi?$", re.IGNORECASE)


def parse_transpose_infix(filename: str) -> int:
    """Semitone shift encoded in a file name, e.g. ``song_m2.mid`` -> -2.

    ``_mK`` means minus K semitones, ``_pK`` plus K; no infix means 0. The
    result is added to every pitch to bring the melody to C major.
    """
    name = Path(filename).name
    if not _EXTENSION.search(name):
        raise ValueError(f"not a MIDI file name: {filename}")
    match = _INFIX.search(name)
    if match is None:
        return 0
    sign, digits = match.groups()
    if not digits:
        raise MidiParseError(f"malformed transpose infix in {filename!r}")
    k = int(digits)
    return -k if sign.lower() == "m" else k


def split_phrases(melody: Melody, marker_ticks: Sequence[Fraction]) -> list[Phrase]:
    """Cut a melody into phrases at the given marker times.

    A marker strictly inside a note is moved back to that note's onset.
    Markers at or outside the melody's ends are ignored, so no phrase is
    ever empty.
    """
    notes = melody.notes()
    if not notes:
        return []
    onsets = [n.onset for n in notes]
    end = notes[-1].end
    cuts = set()
    for marker in marker_ticks:
        marker = Fraction(marker)
        if marker <= onsets[0] or marker >= end:
            continue
        i = bisect.bisect_right(onsets, marker) - 1
        if i > 0:
            cuts.add(onsets[i])
    bounds = sorted(cuts)

    phrases = []
    current: list[Note] = []
    start = onsets[0]
    b = 0
    for note in notes:
        if b < len(bounds) and note.onset == bounds[b]:
            phrases.append(_rebase(current, start, melody.source_id, len(phrases)))
            current = []
            start = note.onset
            b += 1
        current.append(note)
    phrases.append(_rebase(current, start, melody.source_id, len(phrases)))
    return phrases


def _rebase(notes: list[Note], start: Fraction, source_id: str, index: int) -> Phrase:
    rebased = tuple(Note(n.pitch, n.duration, n.onset - start) for n in notes)
    return Phrase(rebased, source_id, index, start)


def load_melody(path, marker_types: Iterable[int] = DEFAULT_MARKER_TYPES) -> Melody:
    """Read a MIDI file, apply its transpose infix and split it into phrases."""
    path = Path(path)
    transpose = parse_transpose_infix(path.name)
    raw = parse_midi(path.read_bytes(), transpose, marker_types, source_id=path.name)
    phrases = split_phrases(raw, raw.markers)
    return Melody(tuple(phrases), transpose, raw.time_signature, path.name, raw.markers, raw.minor)


@dataclass(frozen=True)
class CorpusStats:
    songs: int
    phrases: int
    mean_phrases_per_song: float
    mean_phrase_len_bars: float


def corpus_stats(melodies: Sequence[Melody]) -> CorpusStats:
    songs = len(melodies)
    lengths = [p.total_duration for m in melodies for p in m.phrases]
    if not songs:
        return CorpusStats(0, 0, 0.0, 0.0)
    phrases = len(lengths)
    mean_len = float(sum(lengths, Fraction(0)) / phrases / 4) if phrases else 0.0
    return CorpusStats(songs, phrases, phrases / songs, mean_len)


@dataclass(frozen=True)
class ReportRow:
    file: str
    status: str  # ok | skipped_polyphonic | error
    phrases: int = 0
    total_counts: Fraction = Fraction(0)


def ingest_directory(
    directory, marker_types: Iterable[int] = DEFAULT_MARKER_TYPES
) -> tuple[list[Melody], list[ReportRow], dict[str, str]]:
    """Parse every ``.mid``/``.midi`` file in ``directory``, sorted by name.

    Returns the usable melodies, one report row per file and a map of file
    name to SHA-256 of its contents (for the usable files).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    marker_types = tuple(marker_types)
    files = sorted(p for p in directory.iterdir() if p.is_file() and _EXTENSION.search(p.name))
    melodies, rows, hashes = [], [], {}
    for path in files:
        try:
            melody = load_melody(path, marker_types)
        except PolyphonicInput as exc:
            log.info("skipping %s: %s", path.name, exc)
            rows.append(ReportRow(path.name, "skipped_polyphonic"))
            continue
        except (ComposerError, ValueError, OSError) as exc:
            log.warning("cannot read %s: %s", path.name, exc)
            rows.append(ReportRow(path.name, "error"))
            continue
        if melody.time_signature != (4, 4):
            log.warning("skipping %s: time signature %s/%s", path.name, *melody.time_signature)
            rows.append(ReportRow(path.name, "error"))
            continue
        if melody.minor:
            log.info("skipping %s: minor key", path.name)
            rows.append(ReportRow(path.name, "skipped_minor"))
            continue
        melodies.append(melody)
        hashes[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        rows.append(ReportRow(path.name, "ok", len(melody.phrases), melody.total_duration))
    return melodies, rows, hashes


def write_report(rows: Sequence[ReportRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([row.file, row.status, row.phrases, str(row.total_counts)])


def melody_to_json(melody: Melody) -> dict:
    return {
        "source": melody.source_id,
        "transpose": melody.transpose_applied,
        "time_signature": list(melody.time_signature),
        "phrases": [
            {
                "index": p.index_in_song,
                "offset": format_time(p.offset),
                "notes": [[n.pitch, format_time(n.duration)] for n in p.notes],
            }
            for p in melody.phrases
        ],
    }


def melody_from_json(obj: dict) -> Melody:
    phrases = tuple(
        Phrase.from_pairs(
            [(pitch, parse_time(dur)) for pitch, dur in p["notes"]],
            source_id=obj["source"],
            index_in_song=p["index"],
            offset=parse_time(p["offset"]),
        )
        for p in obj["phrases"]
    )
    return Melody(phrases, obj["transpose"], tuple(obj["time_signature"]), obj["source"])


def dump_archive(melodies: Sequence[Melody], hashes: dict[str, str]) -> str:
    doc = {
        "format": ARCHIVE_FORMAT,
        "version": ARCHIVE_VERSION,
        "files": [{"file": name, "sha256": hashes[name]} for name in sorted(hashes)],
        "melodies": [melody_to_json(m) for m in melodies],
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def load_archive(text: str) -> tuple[list[Melody], dict[str, str]]:
    try:
        doc = json.loads(text)
        if doc.get("format") != ARCHIVE_FORMAT or doc.get("version") != ARCHIVE_VERSION:
            raise SchemaError("not a corpus archive (format/version mismatch)")
        melodies = [melody_from_json(m) for m in doc["melodies"]]
        hashes = {f["file"]: f["sha256"] for f in doc["files"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"corrupt corpus archive: {exc}") from exc
    return melodies, hashes
