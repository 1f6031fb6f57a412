import io
from fractions import Fraction as F

import mido
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contourcomposer.corpus import Phrase, parse_midi, read_smf, write_midi
from contourcomposer.errors import MidiParseError, PolyphonicInput

# format 0, 96 ppq: C4 quarter, D4 quarter
TWO_NOTES = (
    b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x00\x60"
    b"MTrk\x00\x00\x00\x14"
    b"\x00\x90\x3c\x40" b"\x60\x80\x3c\x00"
    b"\x00\x90\x3e\x40" b"\x60\x80\x3e\x00"
    b"\x00\xff\x2f\x00"
)


def mido_notes(data):
    """(pitch, onset, duration) in quarters, decoded by mido."""
    mid = mido.MidiFile(file=io.BytesIO(data))
    out, now, start = [], 0, {}
    for msg in mido.merge_tracks(mid.tracks):
        now += msg.time
        if msg.type == "note_on" and msg.velocity > 0:
            start[msg.note] = now
        elif msg.type in ("note_off", "note_on"):
            on = start.pop(msg.note)
            out.append((msg.note, F(on, mid.ticks_per_beat), F(now - on, mid.ticks_per_beat)))
    return out


def build(messages, ticks_per_beat=480, tracks=None):
    mid = mido.MidiFile(type=1 if tracks else 0, ticks_per_beat=ticks_per_beat)
    for msgs in tracks or [messages]:
        track = mido.MidiTrack()
        track.extend(msgs)
        mid.tracks.append(track)
    buf = io.BytesIO()
    mid.save(file=buf)
    return buf.getvalue()


def test_two_note_fixture_matches_reference_decoder():
    reference = mido_notes(TWO_NOTES)
    assert reference == [(60, F(0), F(1)), (62, F(1), F(1))]
    melody = parse_midi(TWO_NOTES, transpose=-2)
    notes = melody.phrases[0].notes
    assert [n.pitch for n in notes] == [58, 60]
    assert [n.duration for n in notes] == [1, 1]
    assert [(p - 2, n.onset, n.duration) for (p, _, _), n in zip(reference, notes)] == [
        (n.pitch, n.onset, n.duration) for n in notes
    ]


def test_gap_becomes_rest():
    data = build(
        [
            mido.Message("note_on", note=60, velocity=64, time=0),
            mido.Message("note_off", note=60, time=480),
            mido.Message("note_on", note=64, velocity=64, time=480),
            mido.Message("note_on", note=64, velocity=0, time=480),
        ]
    )
    notes = parse_midi(data).phrases[0].notes
    assert [n.pitch for n in notes] == [60, None, 64]
    assert [n.duration for n in notes] == [1, 1, 1]


def test_leading_silence_is_a_rest():
    data = build(
        [
            mido.Message("note_on", note=67, velocity=64, time=240),
            mido.Message("note_off", note=67, time=960),
        ]
    )
    notes = parse_midi(data).phrases[0].notes
    assert [(n.pitch, n.duration) for n in notes] == [(None, F(1, 2)), (67, F(2))]


def test_simultaneous_notes_are_polyphonic():
    data = build(
        [
            mido.Message("note_on", note=60, velocity=64, time=0),
            mido.Message("note_on", note=64, velocity=64, time=0),
            mido.Message("note_off", note=60, time=480),
            mido.Message("note_off", note=64, time=0),
        ]
    )
    with pytest.raises(PolyphonicInput):
        parse_midi(data)


def test_overlap_across_tracks_is_polyphonic():
    data = build(
        None,
        tracks=[
            [mido.Message("note_on", note=60, velocity=64, time=0), mido.Message("note_off", note=60, time=960)],
            [mido.Message("note_on", note=62, velocity=64, time=480), mido.Message("note_off", note=62, time=480)],
        ],
    )
    with pytest.raises(PolyphonicInput):
        parse_midi(data)


def test_unknown_chunk_is_an_error():
    data = TWO_NOTES + b"XFIH\x00\x00\x00\x00"
    with pytest.raises(MidiParseError):
        parse_midi(data)


def test_running_status_and_format_1_markers():
    notes = [
        mido.Message("note_on", note=60, velocity=64, time=0),
        mido.Message("note_on", note=60, velocity=0, time=480),
        mido.Message("note_on", note=62, velocity=64, time=0),
        mido.Message("note_on", note=62, velocity=0, time=480),
    ]
    marks = [
        mido.MetaMessage("time_signature", numerator=4, denominator=4, time=0),
        mido.MetaMessage("text", text="phrase", time=480),
        mido.MetaMessage("marker", text="x", time=120),
    ]
    data = build(None, tracks=[marks, notes])
    contents = read_smf(data)
    assert contents.ppq == 480
    melody = parse_midi(data)
    assert melody.markers == (F(1), F(5, 4))
    assert melody.time_signature == (4, 4)
    assert parse_midi(data, marker_types=[0x06]).markers == (F(5, 4),)


def test_quantization_snaps_to_grid():
    data = build(
        [
            mido.Message("note_on", note=60, velocity=64, time=0),
            mido.Message("note_off", note=60, time=161),  # ~1/3 quarter
            mido.Message("note_on", note=62, velocity=64, time=0),
            mido.Message("note_off", note=62, time=319),
        ]
    )
    notes = parse_midi(data).phrases[0].notes
    assert [n.duration for n in notes] == [F(1, 3), F(2, 3)]


def test_written_file_decodes_with_reference_reader():
    phrase = Phrase.from_pairs([(60, F(1)), (None, F(1, 2)), (64, F(1, 2)), (67, F(2))])
    data = write_midi([phrase])
    mid = mido.MidiFile(file=io.BytesIO(data))
    assert mid.type == 0 and mid.ticks_per_beat == 480
    metas = {m.type: m for m in mid.tracks[0] if m.is_meta}
    assert metas["set_tempo"].tempo == 500_000
    assert (metas["time_signature"].numerator, metas["time_signature"].denominator) == (4, 4)
    assert metas["key_signature"].key == "C"
    assert mido_notes(data) == [(60, F(0), F(1)), (64, F(3, 2), F(1, 2)), (67, F(2), F(2))]


grid_duration = st.integers(1, 96).map(lambda k: F(k, 24))
note_pairs = st.lists(
    st.tuples(st.one_of(st.none(), st.integers(0, 127)), grid_duration), min_size=1, max_size=30
).filter(lambda pairs: pairs[-1][0] is not None)


def _merge_rests(pairs):
    out = []
    for pitch, dur in pairs:
        if pitch is None and out and out[-1][0] is None:
            out[-1] = (None, out[-1][1] + dur)
        else:
            out.append((pitch, dur))
    return out


@settings(max_examples=80, deadline=None)
@given(note_pairs)
def test_write_parse_round_trip(pairs):
    phrase = Phrase.from_pairs(pairs)
    parsed = parse_midi(write_midi([phrase])).phrases[0]
    assert [(n.pitch, n.duration, n.onset) for n in parsed.notes] == [
        (n.pitch, n.duration, n.onset) for n in Phrase.from_pairs(_merge_rests(pairs)).notes
    ]


@settings(max_examples=40, deadline=None)
@given(note_pairs.filter(lambda ps: all(p is None or 12 <= p <= 115 for p, _ in ps)), st.integers(-12, 12))
def test_transposition_preserves_intervals(pairs, shift):
    data = write_midi([Phrase.from_pairs(pairs)])
    base = [n.pitch for n in parse_midi(data).phrases[0].notes if n.pitch is not None]
    moved = [n.pitch for n in parse_midi(data, shift).phrases[0].notes if n.pitch is not None]
    assert [b - a for a, b in zip(base, base[1:])] == [b - a for a, b in zip(moved, moved[1:])]
    assert [m - b for b, m in zip(base, moved)] == [shift] * len(base)
