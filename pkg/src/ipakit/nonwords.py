"""Nonword generation by initial-consonant substitution, with spelling
equivalents, plus the shared-attribute count between consonants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

from .inventory import (
    AttributeTable,
    Phoneme,
    PronunciationSequence,
    default_table,
)
from .lexicon import PronunciationDictionary

# Candidate initial consonants and their spellings: every consonant that
# opens English words except the one whose spelling collapses onto "th".
_DEFAULT_ENTRIES: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("s", ("s",)),
    ("n", ("n",)),
    ("f", ("f",)),
    ("l", ("l",)),
    ("z", ("z",)),
    ("b", ("b",)),
    ("ɹ", ("r",)),      # ɹ
    ("p", ("p",)),
    ("g", ("g",)),
    ("k", ("k", "c")),
    ("d", ("d",)),
    ("m", ("m",)),
    ("θ", ("th",)),     # θ
    ("t", ("t",)),
    ("ʤ", ("j",)),      # ʤ
    ("j", ("y",)),
    ("h", ("h",)),
    ("v", ("v",)),
    ("ʃ", ("sh",)),     # ʃ
    ("ʧ", ("ch",)),     # ʧ
    ("w", ("w",)),
)


@dataclass(frozen=True)
class SubstitutionTable:
    """Ordered (consonant, spellings) candidates for initial substitution."""

    entries: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def default(cls) -> "SubstitutionTable":
        table = cls(entries=_DEFAULT_ENTRIES)
        assert len(table.entries) == 21
        assert all(sym != "ð" for sym, _ in table.entries)  # no ð
        return table

    def spellings(self) -> list[str]:
        """Every spelling the table knows, longest first (grapheme stripping)."""
        out = {s for _, spellings in self.entries for s in spellings}
        return sorted(out, key=lambda s: (-len(s), s))


@dataclass(frozen=True)
class Nonword:
    pronunciation: PronunciationSequence
    spelling: str
    source_label: str
    source_consonant: str
    new_consonant: str
    shared_attribute_count: int


def starts_with_sole_consonant(seq: PronunciationSequence,
                               table: AttributeTable | None = None) -> bool:
    """True iff token 0 is a consonant and token 1 exists and is not one."""
    if table is None:
        table = default_table()
    if not seq:
        raise ValueError("empty sequence")
    if not table.is_consonant(seq[0]):
        return False
    return len(seq) >= 2 and not table.is_consonant(seq[1])


def shared_attributes(a: str | Phoneme, b: str | Phoneme,
                      table: AttributeTable | None = None) -> int:
    """How many of {voicing equal, places intersect, manners intersect}
    hold between two consonants (0..3)."""
    if table is None:
        table = default_table()
    pa = table.get(a) if isinstance(a, str) else a
    pb = table.get(b) if isinstance(b, str) else b
    if pa is None or pb is None or not pa.is_consonant or not pb.is_consonant:
        raise ValueError("shared_attributes needs two consonants")
    count = 0
    if pa.voiced == pb.voiced:
        count += 1
    if pa.places & pb.places:
        count += 1
    if pa.manners & pb.manners:
        count += 1
    return count


def _strip_leading_grapheme(label: str, table: SubstitutionTable) -> str:
    # Longest table spelling that prefixes the label; single leading letter
    # as a fallback for spellings outside the table.
    for spelling in table.spellings():
        if label.startswith(spelling):
            return label[len(spelling):]
    return label[1:]


def generate_nonwords(label: str, dictionary: PronunciationDictionary,
                      table: SubstitutionTable | None = None,
                      vocab: Iterable[str] = (),
                      known_prons: Iterable[str] = (),
                      attr_table: AttributeTable | None = None) -> list[Nonword]:
    """All substitutions of the label's initial consonant that yield
    nonwords.

    A candidate is dropped when its substituted pronunciation is already a
    known transcription or when its spelling equivalent exists in the
    vocabulary; the two-spelling candidate keeps the first of its spellings
    that is a nonword. The label's pronunciation must start with a sole
    consonant.
    """
    if table is None:
        table = SubstitutionTable.default()
    if attr_table is None:
        attr_table = default_table()
    label_key = label.lower()
    if label_key not in dictionary:
        raise ValueError(f"label {label!r} not in dictionary")
    pron = dictionary.sequence(label_key)
    if not starts_with_sole_consonant(pron, attr_table):
        raise ValueError(
            f"label {label!r} ({pron.render()}) does not start with a sole consonant")
    vocab_set = {w.lower() for w in vocab}
    known = set(known_prons)
    original = pron[0]
    rest_tokens = pron.tokens[1:]
    remainder = _strip_leading_grapheme(label_key, table)
    out: list[Nonword] = []
    for symbol, spellings in table.entries:
        if symbol == original:
            continue
        new_pron = PronunciationSequence((symbol,) + rest_tokens)
        if new_pron.render() in known:
            continue
        spelling = next((s + remainder for s in spellings
                         if s + remainder not in vocab_set), None)
        if spelling is None:
            continue
        out.append(Nonword(
            pronunciation=new_pron,
            spelling=spelling,
            source_label=label,
            source_consonant=original,
            new_consonant=symbol,
            shared_attribute_count=shared_attributes(original, symbol, attr_table),
        ))
    return out


def write_nonwords_tsv(nonwords: Iterable[Nonword], stream: TextIO) -> int:
    """Rows of ``spelling<TAB>ipa<TAB>source_label<TAB>shared_count``."""
    count = 0
    for nw in nonwords:
        stream.write(f"{nw.spelling}\t{nw.pronunciation.render()}\t"
                     f"{nw.source_label}\t{nw.shared_attribute_count}\n")
        count += 1
    return count


def read_nonwords_tsv(stream: TextIO | Iterable[str],
                      attr_table: AttributeTable | None = None) -> list[Nonword]:
    """Inverse of write_nonwords_tsv; source/new consonants are recovered
    from the transcription where possible."""
    from .inventory import parse_ipa

    if attr_table is None:
        attr_table = default_table()
    out = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise ValueError(f"line {line_no}: expected 4 columns")
        spelling, ipa, source_label, shared = cols
        seq = parse_ipa(ipa, attr_table)
        out.append(Nonword(
            pronunciation=seq, spelling=spelling, source_label=source_label,
            source_consonant="", new_consonant=seq[0] if seq else "",
            shared_attribute_count=int(shared)))
    return out
