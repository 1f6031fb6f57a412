"""Command line interface: ``ingest``, ``train``, ``compose``, ``inspect``.

Exit codes: 0 success, 2 input error, 3 search exhausted, 4 schema error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import modelfile
from .composer import GeneratorConfig, PhraseComposer
from .contour import spectrum_to_curve
from .corpus import dump_archive, ingest_directory, load_archive, write_midi, write_report
from .corpus.ingest import corpus_stats
from .errors import ComposerError, SchemaError, SearchExhausted
from .pipeline import TrainedModels, train_all

log = logging.getLogger("contourcomposer")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EXHAUSTED = 3
EXIT_SCHEMA = 4


class InputError(ComposerError):
    pass


def _marker_types(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t, 0) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid marker types {text!r}; expected e.g. '1,6'")


def cmd_ingest(args) -> int:
    try:
        melodies, rows, hashes = ingest_directory(args.directory, args.marker_types)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report(rows, out / "report.csv")
    if not melodies:
        print(f"no usable MIDI files in {args.directory}", file=sys.stderr)
        return EXIT_INPUT
    (out / "corpus.json").write_text(dump_archive(melodies, hashes), encoding="utf-8")
    stats = corpus_stats(melodies)
    skipped = sum(r.status == "skipped_polyphonic" for r in rows)
    errors = sum(r.status == "error" for r in rows)
    print(
        f"songs={stats.songs} phrases={stats.phrases} "
        f"phrases/song={stats.mean_phrases_per_song:.2f} bars/phrase={stats.mean_phrase_len_bars:.2f} "
        f"skipped_polyphonic={skipped} errors={errors}"
    )
    return EXIT_OK


def _config_from_args(args, base: GeneratorConfig = GeneratorConfig()) -> GeneratorConfig:
    changes = {}
    for name in GeneratorConfig.__dataclass_fields__:
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    try:
        return replace(base, **changes)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _diagnostics_table(models: TrainedModels) -> str:
    lines = ["feature   cluster  size     width   quality  selected"]
    for contour in (models.pitch_contour, models.rhythm_contour):
        for c in contour.clusters:
            flag = "*" if c.cluster_id == contour.selected_cluster else ""
            lines.append(f"{contour.feature:<9} {c.cluster_id:>7} {c.size:>5} {c.width:>9.4f} {c.quality:>9.4f}  {flag}")
    return "\n".join(lines)


def cmd_train(args) -> int:
    try:
        text = Path(args.corpus).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(str(exc)) from exc
    melodies, hashes = load_archive(text)
    config = _config_from_args(args)
    fingerprint = {"files": [{"file": f, "sha256": h} for f, h in sorted(hashes.items())]}
    models = train_all(melodies, config, fingerprint)
    Path(args.out).write_text(modelfile.dumps(models), encoding="utf-8")
    print(_diagnostics_table(models))
    print(
        f"pitch states={len(models.pitch_model.alphabet)} duration states={len(models.duration_model.alphabet)} "
        f"order={config.order} max context rows={models.max_context_rows:,}"
    )
    return EXIT_OK


def _load_model(path) -> TrainedModels:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(str(exc)) from exc
    return modelfile.loads(text)


_worker_state: dict = {}


def _init_worker(model_path, config, use_contour, parametric):
    models = _load_model(model_path)
    _worker_state["composer"] = PhraseComposer(
        models.pitch_model,
        models.duration_model,
        models.pitch_contour,
        models.rhythm_contour,
        config,
        use_contour,
        parametric,
    )


def _compose_seed(seed: int):
    try:
        return seed, _worker_state["composer"].compose(np.random.default_rng(seed)), None
    except SearchExhausted as exc:
        return seed, None, str(exc)


def cmd_compose(args) -> int:
    models = _load_model(args.model)
    config = _config_from_args(args, models.config)
    seeds = [config.seed + i for i in range(args.count)]
    init = (args.model, config, not args.no_contour, not args.no_parametric)
    if args.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(args.jobs, initializer=_init_worker, initargs=init) as pool:
            results = list(pool.map(_compose_seed, seeds))
    else:
        _init_worker(*init)
        results = [_compose_seed(s) for s in seeds]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for seed, phrase, error in results:
        if phrase is None:
            print(f"seed {seed}: search exhausted ({error})", file=sys.stderr)
            status = EXIT_EXHAUSTED
            continue
        stem = out / f"melody_{seed}"
        stem.with_suffix(".mid").write_bytes(write_midi([phrase], phrase_markers=False))
        with open(stem.with_suffix(".csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "onset", "duration", "pitch"])
            for i, note in enumerate(phrase.notes):
                writer.writerow([i, str(note.onset), str(note.duration), "rest" if note.pitch is None else note.pitch])
        print(f"seed {seed}: {len(phrase.notes)} notes, {phrase.total_duration} counts -> {stem}.mid")
    return status


def cmd_inspect(args) -> int:
    models = _load_model(args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for contour in (models.pitch_contour, models.rhythm_contour):
        n = contour.n_samples
        with open(out / f"clusters_{contour.feature}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cluster_id", "size", "width", "quality", "selected"])
            for c in contour.clusters:
                selected = "true" if c.cluster_id == contour.selected_cluster else "false"
                writer.writerow([c.cluster_id, c.size, repr(float(c.width)), repr(float(c.quality)), selected])
        for c in contour.clusters:
            curve = spectrum_to_curve(c.mean_spectrum, 2 * n)[n:]
            with open(out / f"contour_{contour.feature}_{c.cluster_id}.csv", "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["t", "value"])
                for j, v in enumerate(curve):
                    writer.writerow([repr(j / n), repr(float(v))])
        print(
            f"{contour.feature}: {len(contour.clusters)} clusters, selected {contour.selected_cluster} "
            f"(argmax q), lowest q {contour.argmin_cluster}"
        )
    for model in (models.pitch_model, models.duration_model):
        print(
            f"{model.alphabet.feature} model: order {model.order}, {len(model.alphabet)} states, "
            f"{len(model)} rows over {len(model.offbeats)} off-beats"
        )
    return EXIT_OK


def _add_config_flags(parser, training: bool):
    parser.add_argument("--bars", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--sigma2-pitch", dest="sigma2_pitch", type=float)
    parser.add_argument("--sigma2-rhythm", dest="sigma2_rhythm", type=float)
    if training:
        parser.add_argument("--order", type=int)
        parser.add_argument("--gamma", type=float)
        parser.add_argument("--lowpass-k", dest="lowpass_k", type=int)
        parser.add_argument("--max-clusters", dest="max_clusters", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contourcomposer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a directory of MIDI files into a corpus archive")
    p.add_argument("directory")
    p.add_argument("-o", "--out", default=".", help="output directory for corpus.json and report.csv")
    p.add_argument(
        "--marker-types",
        type=_marker_types,
        default=(0x01, 0x06),
        help="comma-separated meta event types treated as phrase markers (default: 1,6)",
    )
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train Markov models and contours")
    p.add_argument("corpus")
    p.add_argument("-o", "--out", default="model.json")
    _add_config_flags(p, training=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compose", help="compose phrases from a model file")
    p.add_argument("model")
    p.add_argument("-o", "--out", default="composed")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-contour", action="store_true", help="disable contour filters")
    p.add_argument("--no-parametric", action="store_true", help="merge all off-beat bins")
    _add_config_flags(p, training=False)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("inspect", help="dump cluster diagnostics and contour samples")
    p.add_argument("model")
    p.add_argument("-o", "--out", default="inspect")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SearchExhausted as exc:
        print(f"search exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except (ComposerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
