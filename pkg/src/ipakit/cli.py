"""Command-line front end: reproducible batch workflows over the library.

Every output artifact gets a sidecar ``<path>.manifest.json`` recording the
command, resolved flags, input digests, seed, and tool version; identical
manifests imply bit-identical outputs. Exit codes: 0 success, 1 usage
error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .inventory import AttributeTable, default_table, load_attribute_table, parse_ipa
from .lexicon import (
    CorpusPair,
    build_corpus,
    load_dictionary,
    load_frequency_table,
    load_wordlist,
    split_validation,
    zipf_filter,
)
from .metrics import METRIC_ROWS, PhonemeSpace, pca_export, space_metrics
from .model import Mode, StudentConfig, StudentModel, load_checkpoint, save_checkpoint
from .distill import train
from .nonwords import (
    SubstitutionTable,
    generate_nonwords,
    read_nonwords_tsv,
    starts_with_sole_consonant,
    write_nonwords_tsv,
)
from .retrieval import (
    RetrievalTarget,
    assemble_classes,
    human_similarity_detailed,
    load_human_trial,
    nonword_retrieval,
)
from .teacher import read_teb, synthetic_teacher, write_teb

ATTR_TABLE_ENV = "IPAKIT_ATTR_TABLE"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for data errors.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_path: str, command: str, args: argparse.Namespace,
                    inputs: Sequence[str]) -> None:
    flags = {k: v for k, v in vars(args).items()
             if k not in ("func", "command") and v is not None}
    manifest = {
        "command": command,
        "flags": {k: (v.value if hasattr(v, "value") else v)
                  for k, v in flags.items()},
        "inputs": {path: _sha256(path) for path in inputs if path},
        "seed": getattr(args, "seed", None),
        "version": __version__,
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _table(args: argparse.Namespace) -> AttributeTable:
    path = getattr(args, "attr_table", None) or os.environ.get(ATTR_TABLE_ENV)
    if path:
        with open(path, encoding="utf-8") as fh:
            return load_attribute_table(fh)
    return default_table()


def _load_pairs(path: str, table: AttributeTable) -> list[CorpusPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            text, sep, ipa = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{line_no}: expected text<TAB>ipa")
            pairs.append(CorpusPair(text=text, pronunciation=parse_ipa(ipa, table)))
    return pairs


def _write_pairs(pairs: Sequence[CorpusPair], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(f"{pair.text}\t{pair.pronunciation.render()}\n")


# ----------------------------------------------------------------------
# subcommands


def _cmd_convert(args: argparse.Namespace) -> int:
    table = _table(args)
    with open(args.dict, encoding="utf-8") as fh:
        dictionary = load_dictionary(fh, table)
    with open(args.infile, encoding="utf-8") as fh:
        sentences = [line.rstrip("\n") for line in fh]
    pairs, report = build_corpus(sentences, dictionary, table=table,
                                 jobs=args.jobs)
    _write_pairs(pairs, args.out)
    _write_manifest(args.out, "convert", args, [args.dict, args.infile])
    print(f"kept {report.kept}, dropped {report.dropped}", file=sys.stderr)
    for text, failure in report.failures[:20]:
        print(f"  dropped ({failure.kind} {failure.item!r}): {text[:60]}",
              file=sys.stderr)
    return 0


def _cmd_corpus(args: argparse.Namespace) -> int:
    table = _table(args)
    with open(args.dict, encoding="utf-8") as fh:
        dictionary = load_dictionary(fh, table)
    with open(args.infile, encoding="utf-8") as fh:
        sentences = [line.rstrip("\n") for line in fh]
    words = None
    if args.wordlist:
        with open(args.wordlist, encoding="utf-8") as fh:
            words = load_wordlist(fh)
    pairs, report = build_corpus(sentences, dictionary, words, table=table,
                                 jobs=args.jobs)
    inputs = [args.dict, args.infile] + ([args.wordlist] if args.wordlist else [])
    if args.val_size:
        train_pairs, val_pairs = split_validation(pairs, args.val_size, args.seed)
        _write_pairs(train_pairs, args.out)
        val_path = args.out + ".val.tsv"
        _write_pairs(val_pairs, val_path)
        _write_manifest(val_path, "corpus", args, inputs)
    else:
        _write_pairs(pairs, args.out)
    _write_manifest(args.out, "corpus", args, inputs)
    print(f"kept {report.kept}, dropped {report.dropped}", file=sys.stderr)
    return 0


def _cmd_nonwords(args: argparse.Namespace) -> int:
    table = _table(args)
    with open(args.dict, encoding="utf-8") as fh:
        dictionary = load_dictionary(fh, table)
    with open(args.labels, encoding="utf-8") as fh:
        labels = load_wordlist(fh)
    vocab: set[str] = set()
    if args.wordlist:
        with open(args.wordlist, encoding="utf-8") as fh:
            vocab = {w.lower() for w in load_wordlist(fh)}
    if args.freq:
        with open(args.freq, encoding="utf-8") as fh:
            freq = load_frequency_table(fh)
        labels = zipf_filter(labels, freq, args.zipf_min)
    known = dictionary.transcription_set()
    sub_table = SubstitutionTable.default()
    results = []
    skipped = 0
    for label in labels:
        key = label.lower()
        if key not in dictionary or not starts_with_sole_consonant(
                dictionary.sequence(key), table):
            skipped += 1
            continue
        results.extend(generate_nonwords(label, dictionary, sub_table,
                                         vocab, known, table))
    with open(args.out, "w", encoding="utf-8") as fh:
        write_nonwords_tsv(results, fh)
    inputs = [args.dict, args.labels]
    inputs += [p for p in (args.wordlist, args.freq) if p]
    _write_manifest(args.out, "nonwords", args, inputs)
    print(f"{len(results)} nonwords from {len(labels) - skipped} labels "
          f"({skipped} labels skipped)", file=sys.stderr)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    table = _table(args)
    pairs = _load_pairs(args.corpus, table)
    with open(args.teacher, "rb") as fh:
        teacher = read_teb(fh)
    config = StudentConfig(
        mode=Mode(args.mode), d_model=args.d_model, layers=args.layers,
        heads=args.heads, teacher_dim=teacher.dim, max_len=args.max_len,
        seed=args.seed, learning_rate=args.lr, batch_size=args.batch,
        epochs=args.epochs)
    val_pairs: list[CorpusPair] = []
    train_pairs = pairs
    if args.val_size:
        train_pairs, val_pairs = split_validation(pairs, args.val_size, args.seed)
    model = StudentModel.build(config, table)
    log = train(model, train_pairs, teacher, val_pairs=val_pairs)
    with open(args.checkpoint, "wb") as fh:
        save_checkpoint(model, fh)
    _write_manifest(args.checkpoint, "train", args, [args.corpus, args.teacher])
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write("epoch\ttrain_mse\tval_mse\n")
            for stats in log:
                val = "" if stats.val_mse is None else repr(stats.val_mse)
                fh.write(f"{stats.epoch}\t{stats.train_mse!r}\t{val}\n")
        _write_manifest(args.report, "train", args, [args.corpus, args.teacher])
    print(f"final train MSE {log[-1].train_mse:.6g}" if log else "no epochs",
          file=sys.stderr)
    return 0


def _cmd_eval_space(args: argparse.Namespace) -> int:
    table = _table(args)
    with open(args.checkpoint, "rb") as fh:
        model = load_checkpoint(fh, table)
    space = PhonemeSpace.from_layer(model.token_layer, table)
    metrics = space_metrics(space, table)
    with open(args.report, "w", encoding="utf-8") as fh:
        for name in METRIC_ROWS:
            fh.write(f"{name}\t{metrics[name]!r}\n")
    _write_manifest(args.report, "eval-space", args, [args.checkpoint])
    for name in METRIC_ROWS:
        print(f"{name}\t{metrics[name]:.4f}", file=sys.stderr)
    return 0


def _cmd_eval_retrieval(args: argparse.Namespace) -> int:
    table = _table(args)
    with open(args.checkpoint, "rb") as fh:
        model = load_checkpoint(fh, table)
    with open(args.nonwords, encoding="utf-8") as fh:
        nonwords = read_nonwords_tsv(fh, table)
    with open(args.teacher, "rb") as fh:
        prompts = read_teb(fh)
    images = None
    if args.images:
        with open(args.images, "rb") as fh:
            images = read_teb(fh)
    classes = assemble_classes(prompts, images)
    reports = [nonword_retrieval(nonwords, classes, RetrievalTarget.TEXTS,
                                 model.encode, k=args.k)]
    if images is not None:
        reports.append(nonword_retrieval(nonwords, classes,
                                         RetrievalTarget.IMAGES,
                                         model.encode, k=args.k))
    with open(args.report, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(f"# pool: {report.pool}\n")
            for group, metric in report.groups.items():
                fh.write(f"{report.target.value}\t{group}\t{metric.value!r}"
                         f"\t{metric.count}\n")
    inputs = [args.checkpoint, args.nonwords, args.teacher]
    if args.images:
        inputs.append(args.images)
    _write_manifest(args.report, "eval-retrieval", args, inputs)
    return 0


def _cmd_eval_human(args: argparse.Namespace) -> int:
    table = _table(args)
    with open(args.checkpoint, "rb") as fh:
        model = load_checkpoint(fh, table)
    with open(args.dict, encoding="utf-8") as fh:
        dictionary = load_dictionary(fh, table)
    with open(args.infile, encoding="utf-8") as fh:
        trial = load_human_trial(fh)
    result = human_similarity_detailed(trial, model.encode, dictionary, table)
    with open(args.report, "w", encoding="utf-8") as fh:
        fh.write("target\tcorrelation\tused\texcluded\n")
        fh.write(f"{trial.target}\t{result.correlation!r}\t{result.used}\t"
                 f"{','.join(result.excluded)}\n")
    _write_manifest(args.report, "eval-human", args,
                    [args.checkpoint, args.dict, args.infile])
    print(f"{trial.target}\t{result.correlation:.4f}", file=sys.stderr)
    return 0


def _cmd_pca(args: argparse.Namespace) -> int:
    table = _table(args)
    with open(args.checkpoint, "rb") as fh:
        model = load_checkpoint(fh, table)
    space = PhonemeSpace.from_layer(model.token_layer, table)
    result = pca_export(space, table, k=args.k)
    with open(args.report, "w", encoding="utf-8") as fh:
        eigs = "\t".join(repr(float(e)) for e in result.eigenvalues)
        fh.write(f"# eigenvalues\t{eigs}\n")
        if result.rank_deficient:
            fh.write(f"# rank_deficient\teffective_rank={result.effective_rank}\n")
        for symbol, cls, coords in result.rows:
            vals = "\t".join(repr(c) for c in coords)
            fh.write(f"{symbol}\t{cls}\t{vals}\n")
    _write_manifest(args.report, "pca", args, [args.checkpoint])
    return 0


def _cmd_teacher_synth(args: argparse.Namespace) -> int:
    with open(args.infile, encoding="utf-8") as fh:
        texts = [line.rstrip("\n") for line in fh if line.strip()]
    teacher = synthetic_teacher(texts, dim=args.dim, seed=args.seed)
    with open(args.out, "wb") as fh:
        write_teb(teacher, fh)
    _write_manifest(args.out, "teacher-synth", args, [args.infile])
    print(f"{len(teacher)} records, dim {teacher.dim}", file=sys.stderr)
    return 0


# ----------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--attr-table", default=None,
                     help=f"attribute table TSV (default: ${ATTR_TABLE_ENV} "
                          "or builtin)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ipakit",
                     description="Phoneme embedding toolkit workflows")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("convert", parents=[], help="sentences -> IPA pairs")
    p.add_argument("--dict", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_convert)

    p = subs.add_parser("corpus", help="build the distillation corpus")
    p.add_argument("--dict", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--wordlist", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--val-size", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_corpus)

    p = subs.add_parser("nonwords", help="initial-consonant nonword generation")
    p.add_argument("--dict", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--wordlist", default=None)
    p.add_argument("--freq", default=None)
    p.add_argument("--zipf-min", type=float, default=3.0)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_nonwords)

    p = subs.add_parser("train", help="distill a teacher table into a student")
    p.add_argument("--mode", required=True,
                   choices=[m.value for m in Mode])
    p.add_argument("--teacher", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--max-len", type=int, default=77)
    p.add_argument("--val-size", type=int, default=0)
    p.add_argument("--report", default=None, help="training log TSV")
    _add_common(p)
    p.set_defaults(func=_cmd_train)

    p = subs.add_parser("eval-space", help="phoneme-space metric report")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--report", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_eval_space)

    p = subs.add_parser("eval-retrieval", help="nonword retrieval metrics")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--nonwords", required=True)
    p.add_argument("--teacher", required=True, help="class prompt TEB1")
    p.add_argument("--images", default=None, help="image TEB1 keyed label/index")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--report", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_eval_retrieval)

    p = subs.add_parser("eval-human", help="human-similarity correlation")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--in", dest="infile", required=True, help="trial TSV")
    p.add_argument("--report", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_eval_human)

    p = subs.add_parser("pca", help="PCA projection of the phoneme space")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--k", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=_cmd_pca)

    p = subs.add_parser("teacher-synth", help="deterministic synthetic teacher")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_teacher_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"ipakit {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
