from fractions import Fraction as F

import pytest

from contourcomposer.corpus import (
    Melody,
    Phrase,
    corpus_stats,
    dump_archive,
    ingest_directory,
    load_archive,
    load_melody,
    parse_transpose_infix,
    split_phrases,
    write_midi,
)
from contourcomposer.errors import MidiParseError, SchemaError


@pytest.mark.parametrize(
    "name, shift",
    [("song_m2.mid", -2), ("song.mid", 0), ("song_p3.mid", 3), ("a/b/tune_m11.midi", -11), ("song_map.mid", 0)],
)
def test_transpose_infix(name, shift):
    assert parse_transpose_infix(name) == shift


def test_malformed_infix_names_the_file():
    with pytest.raises(MidiParseError, match="bad_m.mid"):
        parse_transpose_infix("bad_m.mid")


def test_infix_requires_midi_extension():
    with pytest.raises(ValueError):
        parse_transpose_infix("song_m2.txt")


D_MAJOR = [62, 64, 66, 67, 69, 71, 73, 74]


@pytest.mark.parametrize("infix, tonic", [("_m2", 62), ("_p3", 57)])
def test_scale_round_trip_through_infix(tmp_path, infix, tonic):
    scale = [p - 62 + tonic for p in D_MAJOR]
    path = tmp_path / f"scale{infix}.mid"
    path.write_bytes(write_midi([Phrase.from_pairs([(p, F(1)) for p in scale])]))
    melody = load_melody(path)
    assert [n.pitch for n in melody.notes()] == [60, 62, 64, 65, 67, 69, 71, 72]
    assert melody.transpose_applied == 60 - tonic


def eight_quarters():
    return Melody((Phrase.from_pairs([(60 + i, F(1)) for i in range(8)], "s"),), source_id="s")


def test_split_even():
    phrases = split_phrases(eight_quarters(), [F(4)])
    assert [len(p.notes) for p in phrases] == [4, 4]
    assert phrases[1].offset == 4
    assert phrases[1].notes[0].onset == 0


def test_split_without_markers():
    phrases = split_phrases(eight_quarters(), [])
    assert len(phrases) == 1 and len(phrases[0].notes) == 8


def test_marker_inside_note_snaps_to_onset():
    melody = Melody((Phrase.from_pairs([(60, F(1))] * 3 + [(62, F(2)), (64, F(1))]),))
    phrases = split_phrases(melody, [F(7, 2)])
    assert phrases[1].offset == 3
    assert [p.total_duration for p in phrases] == [3, 3]


def test_markers_at_edges_are_ignored():
    phrases = split_phrases(eight_quarters(), [F(0), F(8), F(4), F(4)])
    assert [len(p.notes) for p in phrases] == [4, 4]


def test_split_covers_the_melody():
    melody = Melody(
        (Phrase.from_pairs([(60, F(1, 2)), (None, F(3, 2)), (62, F(1, 3)), (64, F(2, 3)), (65, F(3))]),)
    )
    for markers in ([F(1)], [F(1, 4), F(2), F(5)], [F(13, 3)]):
        phrases = split_phrases(melody, markers)
        rejoined = [(p.offset + n.onset, n.pitch, n.duration) for p in phrases for n in p.notes]
        assert rejoined == [(n.onset, n.pitch, n.duration) for n in melody.notes()]
        assert all(p.notes for p in phrases)


def test_corpus_stats_examples():
    four_bars = Phrase.from_pairs([(60, F(4))] * 4)
    stats = corpus_stats([Melody((four_bars, four_bars))])
    assert (stats.songs, stats.phrases, stats.mean_phrases_per_song, stats.mean_phrase_len_bars) == (1, 2, 2.0, 4.0)
    one = Phrase.from_pairs([(60, F(4))])
    stats = corpus_stats([Melody((one,) * 3), Melody((one,) * 5)])
    assert stats.mean_phrases_per_song == 4.0
    empty = corpus_stats([])
    assert (empty.songs, empty.phrases, empty.mean_phrases_per_song, empty.mean_phrase_len_bars) == (0, 0, 0, 0)


def _write(path, phrases):
    path.write_bytes(write_midi(phrases))


def test_ingest_directory(tmp_path):
    a = Phrase.from_pairs([(62, F(1))] * 4)
    _write(tmp_path / "tune_m2.mid", [a, a])
    _write(tmp_path / "b.mid", [a])
    (tmp_path / "poly.mid").write_bytes(
        b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x00\x60MTrk\x00\x00\x00\x14"
        b"\x00\x90\x3c\x40\x00\x90\x40\x40\x60\x80\x3c\x00\x00\x80\x40\x00\x00\xff\x2f\x00"
    )
    (tmp_path / "broken.mid").write_bytes(b"junk")
    (tmp_path / "notes.txt").write_text("ignored")
    melodies, rows, hashes = ingest_directory(tmp_path)
    assert [(r.file, r.status) for r in rows] == [
        ("b.mid", "ok"),
        ("broken.mid", "error"),
        ("poly.mid", "skipped_polyphonic"),
        ("tune_m2.mid", "ok"),
    ]
    tune = melodies[1]
    assert [n.pitch for n in tune.notes()] == [60] * 8
    assert len(tune.phrases) == 2
    assert set(hashes) == {"b.mid", "tune_m2.mid"}


def test_archive_round_trip(tmp_path):
    phrase = Phrase.from_pairs([(60, F(1, 3)), (None, F(2, 3)), (67, F(3))], "x.mid", 0)
    later = Phrase.from_pairs([(64, F(4))], "x.mid", 1, offset=F(4))
    melody = Melody((phrase, later), -2, (4, 4), "x.mid")
    text = dump_archive([melody], {"x.mid": "00"})
    melodies, hashes = load_archive(text)
    assert melodies == [melody]
    assert dump_archive(melodies, hashes) == text


def test_archive_rejects_garbage():
    with pytest.raises(SchemaError):
        load_archive('{"format": "other"}')
