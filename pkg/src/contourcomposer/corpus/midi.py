"""Reading and writing Standard MIDI Files (format 0 and 1).

Only what a monophonic symbolic melody needs is decoded: note on/off, the
first time signature and text-like meta events used as phrase markers. Tempo
is ignored; all times are converted to quarter notes on the 1/24 grid.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from ..errors import MidiParseError, PolyphonicInput
from ..timebase import GRID, quantize
from .score import Melody, Note, Phrase

META_TEXT = 0x01
META_MARKER = 0x06
META_END_OF_TRACK = 0x2F
META_TEMPO = 0x51
META_TIME_SIGNATURE = 0x58
META_KEY_SIGNATURE = 0x59

DEFAULT_MARKER_TYPES = (META_TEXT, META_MARKER)

# data bytes following each channel status nibble
_DATA_LENGTH = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


@dataclass
class _NoteEvent:
    tick: int
    on: bool
    pitch: int
    order: int  # position in file, keeps sorting stable across tracks


@dataclass
class MidiContents:
    ppq: int
    notes: list[_NoteEvent] = field(default_factory=list)
    markers: list[tuple[int, int, bytes]] = field(default_factory=list)  # (tick, type, payload)
    time_signature: Optional[tuple[int, int]] = None
    key_signature: Optional[tuple[int, bool]] = None  # (sharps, minor)
    end_tick: int = 0


def _read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    for _ in range(4):
        if pos >= len(data):
            raise MidiParseError("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MidiParseError("variable-length quantity longer than 4 bytes")


def _write_vlq(value: int) -> bytes:
    if value < 0:
        raise ValueError("negative delta time")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def _read_track(chunk: bytes, contents: MidiContents, counter: list[int]) -> None:
    pos = 0
    tick = 0
    status = None
    while pos < len(chunk):
        delta, pos = _read_vlq(chunk, pos)
        tick += delta
        if pos >= len(chunk):
            raise MidiParseError("truncated event")
        byte = chunk[pos]
        if byte == 0xFF:
            if pos + 1 >= len(chunk):
                raise MidiParseError("truncated meta event")
            kind = chunk[pos + 1]
            length, pos = _read_vlq(chunk, pos + 2)
            payload = chunk[pos:pos + length]
            pos += length
            status = None
            if kind == META_TIME_SIGNATURE and contents.time_signature is None and len(payload) >= 2:
                contents.time_signature = (payload[0], 2 ** payload[1])
            elif kind == META_KEY_SIGNATURE and contents.key_signature is None and len(payload) >= 2:
                sharps = payload[0] - 256 if payload[0] > 127 else payload[0]
                contents.key_signature = (sharps, payload[1] == 1)
            elif kind not in (META_END_OF_TRACK, META_TEMPO, META_KEY_SIGNATURE):
                contents.markers.append((tick, kind, bytes(payload)))
            if kind == META_END_OF_TRACK:
                break
            continue
        if byte in (0xF0, 0xF7):
            length, pos = _read_vlq(chunk, pos + 1)
            pos += length
            status = None
            continue
        if byte & 0x80:
            status = byte
            pos += 1
        elif status is None:
            raise MidiParseError("running status without a previous status byte")
        kind = status & 0xF0
        n = _DATA_LENGTH.get(kind)
        if n is None:
            raise MidiParseError(f"unsupported status byte 0x{status:02X}")
        args = chunk[pos:pos + n]
        if len(args) < n:
            raise MidiParseError("truncated channel event")
        pos += n
        if kind == 0x90 and args[1] > 0:
            contents.notes.append(_NoteEvent(tick, True, args[0], counter[0]))
        elif kind == 0x80 or kind == 0x90:
            contents.notes.append(_NoteEvent(tick, False, args[0], counter[0]))
        counter[0] += 1
    contents.end_tick = max(contents.end_tick, tick)


def read_smf(data: bytes) -> MidiContents:
    """Decode the chunks of a Standard MIDI File."""
    if data[:4] != b"MThd" or len(data) < 14:
        raise MidiParseError("missing MThd header")
    (length,) = struct.unpack(">I", data[4:8])
    fmt, ntracks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF format {fmt}")
    if division & 0x8000:
        raise MidiParseError("SMPTE time division is not supported")
    if division == 0:
        raise MidiParseError("zero ticks per quarter note")
    contents = MidiContents(ppq=division)
    counter = [0]
    pos = 8 + length
    tracks = 0
    while pos < len(data):
        if pos + 8 > len(data):
            raise MidiParseError("truncated chunk header")
        kind = data[pos:pos + 4]
        (size,) = struct.unpack(">I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise MidiParseError("truncated chunk body")
        if kind != b"MTrk":
            raise MidiParseError(f"unknown chunk type {kind!r}")
        _read_track(body, contents, counter)
        tracks += 1
        pos += 8 + size
    if tracks != ntracks:
        raise MidiParseError(f"header announces {ntracks} tracks, found {tracks}")
    return contents


def _pair_notes(events: list[_NoteEvent], end_tick: int) -> list[tuple[int, int, int]]:
    """Return ``(on_tick, off_tick, pitch)`` triples, rejecting overlaps."""
    # note-offs sort before note-ons on the same tick
    events = sorted(events, key=lambda e: (e.tick, e.on, e.order))
    out = []
    sounding = None  # (pitch, on_tick)
    for e in events:
        if e.on:
            if sounding is not None:
                raise PolyphonicInput(
                    f"note {e.pitch} starts at tick {e.tick} while {sounding[0]} is sounding"
                )
            sounding = (e.pitch, e.tick)
        elif sounding is not None and e.pitch == sounding[0]:
            if e.tick > sounding[1]:
                out.append((sounding[1], e.tick, sounding[0]))
            sounding = None
    if sounding is not None and end_tick > sounding[1]:
        out.append((sounding[1], end_tick, sounding[0]))
    return out


def parse_midi(
    data: bytes,
    transpose: int = 0,
    marker_types: Iterable[int] = DEFAULT_MARKER_TYPES,
    source_id: str = "",
) -> Melody:
    """Parse a monophonic SMF into a single-phrase :class:`Melody`.

    Pitches are shifted by ``transpose`` semitones and times are quantized to
    the 1/24 quarter grid; gaps become explicit rests. Phrase markers (meta
    events whose type is in ``marker_types``) are returned in
    ``Melody.markers`` for :func:`split_phrases`.
    """
    contents = read_smf(data)
    triples = _pair_notes(contents.notes, contents.end_tick)

    notes: list[Note] = []
    cursor = Fraction(0)
    for on_tick, off_tick, pitch in triples:
        onset = quantize(on_tick, contents.ppq)
        end = quantize(off_tick, contents.ppq)
        if notes and onset < cursor:
            # rounding pushed this onset into the previous note: shorten it
            prev = notes[-1]
            if onset <= prev.onset:
                raise PolyphonicInput(f"notes collide on the quantization grid at {onset}")
            notes[-1] = Note(prev.pitch, onset - prev.onset, prev.onset)
            cursor = onset
        if end <= onset:
            end = onset + GRID
        if onset > cursor:
            notes.append(Note(None, onset - cursor, cursor))
        shifted = pitch + transpose
        if not 0 <= shifted <= 127:
            raise MidiParseError(f"pitch {pitch} transposed by {transpose} leaves the MIDI range")
        notes.append(Note(shifted, end - onset, onset))
        cursor = end

    wanted = set(marker_types)
    markers = sorted({quantize(tick, contents.ppq) for tick, kind, _ in contents.markers if kind in wanted})
    phrase = Phrase(tuple(notes), source_id, 0, Fraction(0))
    return Melody(
        phrases=(phrase,),
        transpose_applied=transpose,
        time_signature=contents.time_signature or (4, 4),
        minor=bool(contents.key_signature and contents.key_signature[1]),
        source_id=source_id,
        markers=tuple(markers),
    )


def _meta(kind: int, payload: bytes) -> bytes:
    return bytes([0xFF, kind]) + _write_vlq(len(payload)) + payload


def write_midi(
    phrases: Sequence[Phrase],
    ppq: int = 480,
    bpm: int = 120,
    velocity: int = 80,
    channel: int = 0,
    phrase_markers: bool = True,
) -> bytes:
    """Encode phrases as a format-0 SMF with 4/4 meter and C major key.

    Phrases are laid out back to back. Rests are written as silence; a
    ``Marker`` meta event is placed at the start of every phrase when
    ``phrase_markers`` is set.
    """
    events: list[tuple[int, int, bytes]] = []  # (tick, priority, bytes)
    mpqn = round(60_000_000 / bpm)
    events.append((0, 0, _meta(META_TEMPO, mpqn.to_bytes(3, "big"))))
    events.append((0, 0, _meta(META_TIME_SIGNATURE, bytes([4, 2, 24, 8]))))
    events.append((0, 0, _meta(META_KEY_SIGNATURE, bytes([0, 0]))))

    start = Fraction(0)
    for phrase in phrases:
        if phrase_markers:
            events.append((_to_ticks(start, ppq), 2, _meta(META_MARKER, b"phrase")))
        for note in phrase.notes:
            if note.pitch is None:
                continue
            on = _to_ticks(start + note.onset, ppq)
            off = _to_ticks(start + note.end, ppq)
            events.append((on, 3, bytes([0x90 | channel, note.pitch, velocity])))
            events.append((off, 1, bytes([0x80 | channel, note.pitch, 0])))
        start += phrase.total_duration
    end_tick = _to_ticks(start, ppq)

    events.sort(key=lambda e: (e[0], e[1]))
    track = bytearray()
    last = 0
    for tick, _, payload in events:
        track += _write_vlq(tick - last) + payload
        last = tick
    track += _write_vlq(end_tick - last) + _meta(META_END_OF_TRACK, b"")

    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, ppq)
    return header + b"MTrk" + struct.pack(">I", len(track)) + bytes(track)


def _to_ticks(t: Fraction, ppq: int) -> int:
    ticks = Fraction(t) * ppq
    if ticks.denominator != 1:
        raise ValueError(f"time {t} is not representable at {ppq} ticks per quarter")
    return int(ticks)
