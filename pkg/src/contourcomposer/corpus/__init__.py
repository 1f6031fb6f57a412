from .ingest import (
    CorpusStats,
    ReportRow,
    corpus_stats,
    dump_archive,
    ingest_directory,
    load_archive,
    load_melody,
    parse_transpose_infix,
    split_phrases,
    write_report,
)
from .midi import DEFAULT_MARKER_TYPES, parse_midi, read_smf, write_midi
from .score import Melody, Note, Phrase, notes_from_pairs

__all__ = [
    "CorpusStats",
    "DEFAULT_MARKER_TYPES",
    "Melody",
    "Note",
    "Phrase",
    "ReportRow",
    "corpus_stats",
    "dump_archive",
    "ingest_directory",
    "load_archive",
    "load_melody",
    "notes_from_pairs",
    "parse_midi",
    "parse_transpose_infix",
    "read_smf",
    "split_phrases",
    "write_midi",
    "write_report",
]
