"""Phoneme attribute inventory and IPA transcription tokenization.

The attribute table assigns each phoneme its chart attributes (voicing,
manner, place for consonants; height, backness, roundedness for vowels)
and enumerates the non-phoneme tokens (stress marks, space, punctuation,
digits) that transcriptions may contain. Parsing is greedy longest-match
over the table's symbols after a small normalization pass, so equivalent
spellings of the same phoneme (affricate digraphs, tie bars, ASCII r)
collapse onto one canonical token.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Iterator, TextIO


class PhonemeClass(enum.Enum):
    CONSONANT = "consonant"
    VOWEL = "vowel"


class Manner(enum.Enum):
    NASAL = "nasal"
    PLOSIVE = "plosive"
    FRICATIVE = "fricative"
    APPROXIMANT = "approximant"
    TRILL = "trill"
    TAP_FLAP = "tap_flap"
    LATERAL_FRICATIVE = "lateral_fricative"
    LATERAL_APPROXIMANT = "lateral_approximant"


class Place(enum.Enum):
    BILABIAL = "bilabial"
    LABIODENTAL = "labiodental"
    DENTAL = "dental"
    ALVEOLAR = "alveolar"
    POSTALVEOLAR = "postalveolar"
    RETROFLEX = "retroflex"
    PALATAL = "palatal"
    VELAR = "velar"
    UVULAR = "uvular"
    PHARYNGEAL = "pharyngeal"
    GLOTTAL = "glottal"


MAX_HEIGHT_LEVEL = 6  # 0 = close .. 6 = open
MAX_BACKNESS_LEVEL = 4  # 0 = front .. 4 = back

PRIMARY_STRESS = "ˈ"  # ˈ
SECONDARY_STRESS = "ˌ"  # ˌ


class TableFormatError(ValueError):
    """Raised when an attribute table source violates the TSV schema."""


class UnknownSymbolError(ValueError):
    """A character in a transcription matches no table symbol."""

    def __init__(self, position: int, character: str):
        self.position = position
        self.character = character
        super().__init__(
            f"unknown symbol {character!r} at position {position}"
        )


@dataclass(frozen=True)
class Phoneme:
    """One phoneme with its chart attributes.

    Consonants carry (voiced, manners, places) and leave the vowel fields
    None; vowels carry (height_level, backness_level, rounded) and leave the
    consonant fields None. ``chart`` marks whether a vowel occupies its own
    cell on the Cartesian vowel chart used for ranking ground truths.
    """

    symbol: str
    phoneme_class: PhonemeClass
    voiced: bool | None = None
    manners: frozenset[Manner] | None = None
    places: frozenset[Place] | None = None
    height_level: int | None = None
    backness_level: int | None = None
    rounded: bool | None = None
    chart: bool = True

    def __post_init__(self) -> None:
        if not self.symbol:
            raise ValueError("phoneme symbol must be non-empty")
        if self.phoneme_class is PhonemeClass.CONSONANT:
            if self.voiced is None or not self.manners or not self.places:
                raise ValueError(
                    f"consonant {self.symbol!r} needs voicing, manners, places"
                )
            if self.height_level is not None or self.backness_level is not None \
                    or self.rounded is not None:
                raise ValueError(
                    f"consonant {self.symbol!r} must not set vowel fields"
                )
            if len(self.manners) != 1:
                raise ValueError(
                    f"consonant {self.symbol!r} must have exactly 1 manner"
                )
            if not 1 <= len(self.places) <= 2:
                raise ValueError(
                    f"consonant {self.symbol!r} must have 1 or 2 places"
                )
        else:
            if self.voiced is not None or self.manners or self.places:
                raise ValueError(
                    f"vowel {self.symbol!r} must not set consonant fields"
                )
            if self.height_level is None or self.backness_level is None \
                    or self.rounded is None:
                raise ValueError(
                    f"vowel {self.symbol!r} needs height, backness, rounded"
                )
            if not 0 <= self.height_level <= MAX_HEIGHT_LEVEL:
                raise ValueError(
                    f"vowel {self.symbol!r}: height_level out of range "
                    f"0..{MAX_HEIGHT_LEVEL}"
                )
            if not 0 <= self.backness_level <= MAX_BACKNESS_LEVEL:
                raise ValueError(
                    f"vowel {self.symbol!r}: backness_level out of range "
                    f"0..{MAX_BACKNESS_LEVEL}"
                )

    @property
    def is_consonant(self) -> bool:
        return self.phoneme_class is PhonemeClass.CONSONANT

    @property
    def is_vowel(self) -> bool:
        return self.phoneme_class is PhonemeClass.VOWEL


@dataclass(frozen=True)
class PronunciationSequence:
    """An ordered run of table tokens (phonemes, stress marks, punctuation)."""

    tokens: tuple[str, ...]

    def render(self) -> str:
        return "".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def __bool__(self) -> bool:
        return bool(self.tokens)


class AttributeTable:
    """Validated, immutable inventory of phonemes and non-phoneme tokens.

    Safe to share across threads/processes once constructed: all lookup
    structures are built in ``__init__`` and never mutated.
    """

    def __init__(self, phonemes: Iterable[Phoneme], other_tokens: Iterable[str]):
        self._phonemes: dict[str, Phoneme] = {}
        for ph in phonemes:
            if ph.symbol in self._phonemes:
                raise TableFormatError(f"duplicate symbol {ph.symbol!r}")
            self._phonemes[ph.symbol] = ph
        self._other_tokens = tuple(other_tokens)
        seen = set(self._phonemes)
        for tok in self._other_tokens:
            if not tok:
                raise TableFormatError("empty other-token symbol")
            if tok in seen:
                raise TableFormatError(f"duplicate symbol {tok!r}")
            seen.add(tok)
        self._all_symbols = tuple(self._phonemes) + self._other_tokens
        self._index = {s: i for i, s in enumerate(self._all_symbols)}
        self._lookup = self._build_lookup()
        self._max_key_len = max(len(k) for k in self._lookup)

    def _build_lookup(self) -> dict[str, tuple[str, ...]]:
        # Canonical symbols map to themselves; normalization aliases map
        # spelling variants onto canonical tokens. An alias is only active
        # when every token it produces exists in this table.
        lookup: dict[str, tuple[str, ...]] = {s: (s,) for s in self._all_symbols}
        aliases: dict[str, tuple[str, ...]] = {
            "t͡ʃ": ("ʧ",),  # t͡ʃ -> ʧ
            "tʃ": ("ʧ",),        # tʃ -> ʧ
            "d͡ʒ": ("ʤ",),  # d͡ʒ -> ʤ
            "dʒ": ("ʤ",),        # dʒ -> ʤ
            "ɡ": ("g",),              # ɡ (script g) -> g
            "r": ("ɹ",),              # ASCII r -> ɹ
            "ɚ": ("ə", "ɹ"),  # ɚ -> ə ɹ
            "ɝ": ("ɜ", "ɹ"),  # ɝ -> ɜ ɹ
        }
        for key, toks in aliases.items():
            if key in lookup:
                continue
            if all(t in self._index for t in toks):
                lookup[key] = toks
        return lookup

    @property
    def phonemes(self) -> dict[str, Phoneme]:
        return dict(self._phonemes)

    @property
    def other_tokens(self) -> tuple[str, ...]:
        return self._other_tokens

    @property
    def all_symbols(self) -> tuple[str, ...]:
        return self._all_symbols

    def consonants(self) -> tuple[Phoneme, ...]:
        return tuple(p for p in self._phonemes.values() if p.is_consonant)

    def vowels(self) -> tuple[Phoneme, ...]:
        return tuple(p for p in self._phonemes.values() if p.is_vowel)

    def chart_vowels(self) -> tuple[Phoneme, ...]:
        return tuple(p for p in self._phonemes.values() if p.is_vowel and p.chart)

    def get(self, symbol: str) -> Phoneme | None:
        return self._phonemes.get(symbol)

    def index(self, symbol: str) -> int:
        """Stable position of a symbol in the table order (tie-break key)."""
        return self._index[symbol]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index

    def is_consonant(self, symbol: str) -> bool:
        ph = self._phonemes.get(symbol)
        return ph is not None and ph.is_consonant

    def is_vowel(self, symbol: str) -> bool:
        ph = self._phonemes.get(symbol)
        return ph is not None and ph.is_vowel


def _empty(field: str) -> bool:
    return field in ("", "-")


def _parse_bool(field: str, line_no: int, what: str) -> bool:
    if field == "yes":
        return True
    if field == "no":
        return False
    raise TableFormatError(f"line {line_no}: {what} must be yes|no, got {field!r}")


_MANNER_NAMES = {m.value: m for m in Manner}
_MANNER_NAMES["tap"] = Manner.TAP_FLAP
_MANNER_NAMES["flap"] = Manner.TAP_FLAP
_PLACE_NAMES = {p.value: p for p in Place}


def _parse_enum_list(field: str, names: dict, line_no: int, what: str) -> frozenset:
    out = []
    for raw in field.split(","):
        key = raw.strip().lower().replace(" ", "_").replace("-", "_")
        if key not in names:
            raise TableFormatError(f"line {line_no}: unknown {what} {raw!r}")
        out.append(names[key])
    return frozenset(out)


def _parse_level(field: str, limit: int, line_no: int, what: str) -> int:
    try:
        value = int(field)
    except ValueError:
        raise TableFormatError(
            f"line {line_no}: {what} must be an integer, got {field!r}"
        ) from None
    if not 0 <= value <= limit:
        raise TableFormatError(
            f"line {line_no}: {what} {value} out of range 0..{limit}"
        )
    return value


def load_attribute_table(source: TextIO | Iterable[str] | None = None) -> AttributeTable:
    """Load an attribute table from a TSV stream, or the builtin default.

    Rows are ``symbol<TAB>class<TAB>voicing<TAB>manners<TAB>places<TAB>
    height_level<TAB>backness_level<TAB>rounded[<TAB>chart]``; empty fields
    are written ``-`` (or left blank). Lines starting with ``#`` are
    comments. The symbol column is always literal, so ``-`` in column one is
    the hyphen token, never a placeholder.
    """
    if source is None:
        return default_table()
    phonemes: list[Phoneme] = []
    others: list[str] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) not in (8, 9):
            raise TableFormatError(
                f"line {line_no}: expected 8 or 9 columns, got {len(cols)}"
            )
        symbol = cols[0]
        if not symbol:
            raise TableFormatError(f"line {line_no}: empty symbol")
        if symbol in seen:
            raise TableFormatError(f"line {line_no}: duplicate symbol {symbol!r}")
        seen.add(symbol)
        cls = cols[1].strip().lower()
        rest = cols[2:8]
        chart_col = cols[8] if len(cols) == 9 else "-"
        if cls == "other":
            if any(not _empty(f) for f in rest):
                raise TableFormatError(
                    f"line {line_no}: 'other' rows must leave attribute fields empty"
                )
            others.append(symbol)
            continue
        if cls == "consonant":
            if not all(_empty(f) for f in rest[3:]):
                raise TableFormatError(
                    f"line {line_no}: consonant row sets vowel fields"
                )
            if any(_empty(f) for f in rest[:3]):
                raise TableFormatError(
                    f"line {line_no}: consonant row missing voicing/manners/places"
                )
            voicing = rest[0].strip().lower()
            if voicing not in ("voiced", "voiceless"):
                raise TableFormatError(
                    f"line {line_no}: voicing must be voiced|voiceless"
                )
            phonemes.append(Phoneme(
                symbol=symbol,
                phoneme_class=PhonemeClass.CONSONANT,
                voiced=voicing == "voiced",
                manners=_parse_enum_list(rest[1], _MANNER_NAMES, line_no, "manner"),
                places=_parse_enum_list(rest[2], _PLACE_NAMES, line_no, "place"),
            ))
        elif cls == "vowel":
            if not all(_empty(f) for f in rest[:3]):
                raise TableFormatError(
                    f"line {line_no}: vowel row sets consonant fields"
                )
            if any(_empty(f) for f in rest[3:]):
                raise TableFormatError(
                    f"line {line_no}: vowel row missing height/backness/rounded"
                )
            chart = True if _empty(chart_col) else _parse_bool(
                chart_col.strip().lower(), line_no, "chart")
            phonemes.append(Phoneme(
                symbol=symbol,
                phoneme_class=PhonemeClass.VOWEL,
                height_level=_parse_level(
                    rest[3], MAX_HEIGHT_LEVEL, line_no, "height_level"),
                backness_level=_parse_level(
                    rest[4], MAX_BACKNESS_LEVEL, line_no, "backness_level"),
                rounded=_parse_bool(rest[5].strip().lower(), line_no, "rounded"),
                chart=chart,
            ))
        else:
            raise TableFormatError(
                f"line {line_no}: class must be consonant|vowel|other, got {cls!r}"
            )
    return AttributeTable(phonemes, others)


@lru_cache(maxsize=1)
def default_table() -> AttributeTable:
    """The builtin English inventory (24 consonants, 14 vowels)."""
    text = resources.files("ipakit.data").joinpath("english_attributes.tsv") \
        .read_text(encoding="utf-8")
    return load_attribute_table(text.splitlines())


def parse_ipa(text: str, table: AttributeTable | None = None) -> PronunciationSequence:
    """Tokenize an IPA transcription into a PronunciationSequence.

    Latin letters are lowercased first, then tokens are consumed by greedy
    longest match over the table's symbols and normalization aliases
    (t͡ʃ/tʃ -> ʧ, d͡ʒ/dʒ -> ʤ, ɡ -> g, r -> ɹ, ɚ -> əɹ, ɝ -> ɜɹ).

    Raises UnknownSymbolError for any character outside the table; nothing
    is dropped silently.
    """
    if table is None:
        table = default_table()
    normalized = text.lower()
    lookup = table._lookup
    max_len = table._max_key_len
    tokens: list[str] = []
    i = 0
    n = len(normalized)
    while i < n:
        for length in range(min(max_len, n - i), 0, -1):
            hit = lookup.get(normalized[i:i + length])
            if hit is not None:
                tokens.extend(hit)
                i += length
                break
        else:
            raise UnknownSymbolError(i, normalized[i])
    return PronunciationSequence(tuple(tokens))


def render(seq: PronunciationSequence) -> str:
    """Concatenate canonical symbols; parse_ipa(render(s)) == s."""
    return seq.render()
