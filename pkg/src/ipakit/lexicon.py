"""Pronunciation dictionaries, sentence-to-IPA conversion, corpus building,
validation splits, and Zipf-frequency filtering.
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .inventory import (
    AttributeTable,
    PronunciationSequence,
    UnknownSymbolError,
    default_table,
    parse_ipa,
)

# Words are maximal runs of Latin letters and apostrophes; a run with no
# letter (a bare quote) is punctuation, not a word.
_RUN_RE = re.compile(r"[A-Za-z']+")
_LETTER_RE = re.compile(r"[A-Za-z]")


@dataclass(frozen=True)
class CorpusPair:
    text: str
    pronunciation: PronunciationSequence


@dataclass(frozen=True)
class ConversionFailure:
    """Why a sentence could not be converted.

    kind is ``missing-word`` (item = the first word absent from the
    dictionary) or ``unknown-symbol`` (item = the offending character).
    """

    kind: str
    item: str


@dataclass
class DictionaryReport:
    kept: int = 0
    rejected: list[tuple[int, str, str]] = field(default_factory=list)
    # (line number, line prefix, reason)


class PronunciationDictionary:
    """word -> canonical IPA transcription (first variant of each entry)."""

    def __init__(self, entries: dict[str, PronunciationSequence],
                 report: DictionaryReport | None = None):
        self._sequences = dict(entries)
        self._entries = {w: seq.render() for w, seq in self._sequences.items()}
        self.report = report or DictionaryReport(kept=len(self._entries))

    @property
    def entries(self) -> dict[str, str]:
        return dict(self._entries)

    def __contains__(self, word: str) -> bool:
        return word in self._sequences

    def __len__(self) -> int:
        return len(self._sequences)

    def sequence(self, word: str) -> PronunciationSequence:
        return self._sequences[word]

    def transcription_set(self) -> frozenset[str]:
        """All canonical transcription strings (nonword existence checks)."""
        return frozenset(self._entries.values())


def load_dictionary(stream: TextIO | Iterable[str],
                    table: AttributeTable | None = None) -> PronunciationDictionary:
    """Parse ``word<TAB>ipa[, ipa2...]`` lines; the first variant is kept
    and words are lowercased. Lines whose transcription does not parse are
    rejected and listed in the returned dictionary's ``report``.
    """
    if table is None:
        table = default_table()
    entries: dict[str, PronunciationSequence] = {}
    report = DictionaryReport()
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        word, sep, rest = line.partition("\t")
        word = word.strip().lower()
        if not sep or not word:
            report.rejected.append((line_no, line[:40], "malformed line"))
            continue
        first_variant = rest.split(",")[0].strip()
        if not first_variant:
            report.rejected.append((line_no, line[:40], "empty transcription"))
            continue
        if word in entries:
            report.rejected.append((line_no, line[:40], "duplicate word"))
            continue
        try:
            seq = parse_ipa(first_variant, table)
        except UnknownSymbolError as exc:
            report.rejected.append((line_no, line[:40], str(exc)))
            continue
        entries[word] = seq
        report.kept += 1
    return PronunciationDictionary(entries, report)


def convert_sentence(text: str, dictionary: PronunciationDictionary,
                     table: AttributeTable | None = None,
                     ) -> PronunciationSequence | ConversionFailure:
    """Replace each word with its transcription; pass everything else
    through as tokens. Words are lowercased before lookup. Returns a
    ConversionFailure carrying the first missing word (or the first
    character outside the table) instead of raising.
    """
    if table is None:
        table = default_table()
    tokens: list[str] = []
    pos = 0
    for match in _RUN_RE.finditer(text):
        for ch in text[pos:match.start()]:
            if ch not in table:
                return ConversionFailure("unknown-symbol", ch)
            tokens.append(ch)
        run = match.group()
        if _LETTER_RE.search(run):
            word = run.lower()
            if word not in dictionary:
                return ConversionFailure("missing-word", word)
            tokens.extend(dictionary.sequence(word).tokens)
        else:
            for ch in run:
                if ch not in table:
                    return ConversionFailure("unknown-symbol", ch)
                tokens.append(ch)
        pos = match.end()
    for ch in text[pos:]:
        if ch not in table:
            return ConversionFailure("unknown-symbol", ch)
        tokens.append(ch)
    return PronunciationSequence(tuple(tokens))


@dataclass
class CorpusReport:
    kept: int = 0
    dropped: int = 0
    failures: list[tuple[str, ConversionFailure]] = field(default_factory=list)


_WORKER_STATE: dict = {}


def _pool_init(dictionary: PronunciationDictionary, table: AttributeTable) -> None:
    _WORKER_STATE["dictionary"] = dictionary
    _WORKER_STATE["table"] = table


def _pool_convert(chunk: list[str]):
    dictionary = _WORKER_STATE["dictionary"]
    table = _WORKER_STATE["table"]
    return [convert_sentence(s, dictionary, table) for s in chunk]


def build_corpus(sentences: Iterable[str], dictionary: PronunciationDictionary,
                 single_word_list: Sequence[str] | None = None,
                 table: AttributeTable | None = None,
                 jobs: int = 1) -> tuple[list[CorpusPair], CorpusReport]:
    """Convert sentences (dropping failures with a report) and append
    one-word sentences from the wordlist. Output order is deterministic:
    input order, then wordlist order, regardless of ``jobs``.
    """
    if table is None:
        table = default_table()
    texts = [s.rstrip("\n").rstrip("\r") for s in sentences]
    words = list(single_word_list) if single_word_list else []
    all_texts = texts + words
    if jobs > 1 and len(all_texts) > 1:
        chunk_size = max(1, (len(all_texts) + jobs - 1) // jobs)
        chunks = [all_texts[i:i + chunk_size]
                  for i in range(0, len(all_texts), chunk_size)]
        with ProcessPoolExecutor(max_workers=jobs, initializer=_pool_init,
                                 initargs=(dictionary, table)) as pool:
            results = [seq for part in pool.map(_pool_convert, chunks)
                       for seq in part]
    else:
        results = [convert_sentence(s, dictionary, table) for s in all_texts]
    pairs: list[CorpusPair] = []
    report = CorpusReport()
    for text, converted in zip(all_texts, results):
        if isinstance(converted, ConversionFailure):
            report.dropped += 1
            report.failures.append((text, converted))
        else:
            pairs.append(CorpusPair(text=text, pronunciation=converted))
            report.kept += 1
    return pairs, report


def split_validation(pairs: Sequence[CorpusPair], val_size: int,
                     seed: int) -> tuple[list[CorpusPair], list[CorpusPair]]:
    """Seeded shuffle, then the first val_size items become the validation
    split; disjoint and jointly exhaustive."""
    if not 0 <= val_size <= len(pairs):
        raise ValueError(
            f"val_size {val_size} out of range for {len(pairs)} pairs")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(pairs))
    val = [pairs[i] for i in perm[:val_size]]
    train = [pairs[i] for i in perm[val_size:]]
    return train, val


class FrequencyTable:
    """word -> Zipf-scale frequency; absent words count as 0."""

    def __init__(self, entries: dict[str, float]):
        for word, value in entries.items():
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"bad Zipf value {value!r} for {word!r}")
        self._entries = {w.lower(): float(v) for w, v in entries.items()}

    @property
    def entries(self) -> dict[str, float]:
        return dict(self._entries)

    def zipf(self, word: str) -> float:
        return self._entries.get(word.lower(), 0.0)


def load_frequency_table(stream: TextIO | Iterable[str]) -> FrequencyTable:
    entries: dict[str, float] = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word, sep, value = line.partition("\t")
        if not sep:
            raise ValueError(f"line {line_no}: expected word<TAB>zipf")
        try:
            entries[word.strip().lower()] = float(value)
        except ValueError:
            raise ValueError(f"line {line_no}: bad Zipf value {value!r}") from None
    return FrequencyTable(entries)


def load_wordlist(stream: TextIO | Iterable[str]) -> list[str]:
    return [line.strip() for line in stream if line.strip()]


def label_zipf(label: str, freq: FrequencyTable) -> float:
    """Zipf value of a label: minimum over its words (a label is rare if
    any of its words is); labels with no words score 0."""
    words = [run.lower() for run in _RUN_RE.findall(label)
             if _LETTER_RE.search(run)]
    if not words:
        return 0.0
    return min(freq.zipf(w) for w in words)


def zipf_filter(labels: Sequence[str], freq: FrequencyTable,
                threshold: float) -> list[str]:
    """Keep labels whose per-label Zipf value is >= threshold."""
    return [label for label in labels if label_zipf(label, freq) >= threshold]
