"""Attribute-based phoneme embedding: a sparse magnitude vector per token
times a feature matrix, so each token's vector is a linear combination of
per-attribute feature rows (no bias, no scaling).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .inventory import (
    AttributeTable,
    Manner,
    MAX_BACKNESS_LEVEL,
    MAX_HEIGHT_LEVEL,
    Place,
    PRIMARY_STRESS,
    PronunciationSequence,
    SECONDARY_STRESS,
)

INIT_STD = 0.02  # shared by feature matrices and baseline embedding rows

_MANNER_ORDER = (
    Manner.NASAL,
    Manner.PLOSIVE,
    Manner.FRICATIVE,
    Manner.APPROXIMANT,
    Manner.TRILL,
    Manner.TAP_FLAP,
    Manner.LATERAL_FRICATIVE,
    Manner.LATERAL_APPROXIMANT,
)
_PLACE_ORDER = (
    Place.BILABIAL,
    Place.LABIODENTAL,
    Place.DENTAL,
    Place.ALVEOLAR,
    Place.POSTALVEOLAR,
    Place.RETROFLEX,
    Place.PALATAL,
    Place.VELAR,
    Place.UVULAR,
    Place.PHARYNGEAL,
    Place.GLOTTAL,
)

_CHAR_NAMES = {
    " ": "Space",
    ".": "Period",
    ",": "Comma",
    "!": "Exclamation",
    "?": "Question",
    "'": "Apostrophe",
    "-": "Hyphen",
    **{str(d): f"Digit{d}" for d in range(10)},
}


def _other_token_label(symbol: str) -> str:
    if symbol == PRIMARY_STRESS:
        return "PrimaryStress"
    if symbol == SECONDARY_STRESS:
        return "SecondaryStress"
    return f"Char:{_CHAR_NAMES.get(symbol, symbol)}"


class AttributeIndex:
    """Stable ordering of magnitude-vector dimensions for a table.

    Layout: ConsonantFlag, Voicing, one dim per manner, one dim per place,
    VowelFlag, Height, Backness, Roundedness, then one dim per non-phoneme
    token in table order.
    """

    CONSONANT_FLAG = 0
    VOICING = 1
    _MANNER_BASE = 2
    _PLACE_BASE = 2 + len(_MANNER_ORDER)
    VOWEL_FLAG = _PLACE_BASE + len(_PLACE_ORDER)
    HEIGHT = VOWEL_FLAG + 1
    BACKNESS = VOWEL_FLAG + 2
    ROUNDEDNESS = VOWEL_FLAG + 3
    _OTHER_BASE = VOWEL_FLAG + 4

    def __init__(self, table: AttributeTable):
        labels = ["ConsonantFlag", "Voicing"]
        labels += [f"Manner:{m.name.title().replace('_', '')}" for m in _MANNER_ORDER]
        labels += [f"Place:{p.name.title()}" for p in _PLACE_ORDER]
        labels += ["VowelFlag", "Height", "Backness", "Roundedness"]
        self._other_dims: dict[str, int] = {}
        for offset, symbol in enumerate(table.other_tokens):
            labels.append(_other_token_label(symbol))
            self._other_dims[symbol] = self._OTHER_BASE + offset
        self.labels: tuple[str, ...] = tuple(labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def manner_dim(self, manner: Manner) -> int:
        return self._MANNER_BASE + _MANNER_ORDER.index(manner)

    def place_dim(self, place: Place) -> int:
        return self._PLACE_BASE + _PLACE_ORDER.index(place)

    def other_dim(self, symbol: str) -> int:
        return self._other_dims[symbol]


@lru_cache(maxsize=8)
def attribute_index(table: AttributeTable) -> AttributeIndex:
    """Cached AttributeIndex for a table (tables hash by identity)."""
    return AttributeIndex(table)


def attribute_vector(token: str, table: AttributeTable) -> np.ndarray:
    """The sparse magnitude vector for one token.

    Consonants set the consonant flag, voicing, their manner dims and place
    dims to 1; vowels set the vowel flag, height_level/6, backness_level/4,
    and roundedness; every other token sets exactly its own flag.
    """
    idx = attribute_index(table)
    x = np.zeros(idx.n, dtype=np.float64)
    ph = table.get(token)
    if ph is not None:
        if ph.is_consonant:
            x[idx.CONSONANT_FLAG] = 1.0
            if ph.voiced:
                x[idx.VOICING] = 1.0
            for manner in ph.manners:
                x[idx.manner_dim(manner)] = 1.0
            for place in ph.places:
                x[idx.place_dim(place)] = 1.0
        else:
            x[idx.VOWEL_FLAG] = 1.0
            x[idx.HEIGHT] = ph.height_level / MAX_HEIGHT_LEVEL
            x[idx.BACKNESS] = ph.backness_level / MAX_BACKNESS_LEVEL
            if ph.rounded:
                x[idx.ROUNDEDNESS] = 1.0
        return x
    if token in table:
        x[idx.other_dim(token)] = 1.0
        return x
    raise KeyError(f"unknown token {token!r}")


@lru_cache(maxsize=8)
def token_magnitudes(table: AttributeTable) -> np.ndarray:
    """(V, N) matrix of magnitude vectors, rows in table symbol order."""
    rows = [attribute_vector(sym, table) for sym in table.all_symbols]
    out = np.stack(rows)
    out.setflags(write=False)
    return out


class EmbeddingMode(enum.Enum):
    FROZEN = "frozen"
    TRAINABLE = "trainable"


@dataclass
class FeatureMatrix:
    """The (N, D) per-attribute feature rows; frozen or trainable."""

    weights: np.ndarray  # float32, shape (N, D)
    mode: EmbeddingMode
    seed: int

    @classmethod
    def initialize(cls, n: int, dim: int, seed: int,
                   mode: EmbeddingMode = EmbeddingMode.FROZEN) -> "FeatureMatrix":
        rng = np.random.default_rng(seed)
        weights = rng.normal(0.0, INIT_STD, size=(n, dim)).astype(np.float32)
        return cls(weights=weights, mode=mode, seed=seed)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class BaselineTable:
    """Plain per-token embedding rows (V, D); no attribute structure."""

    weights: np.ndarray  # float32, shape (V, D)
    seed: int

    @classmethod
    def initialize(cls, vocab: int, dim: int, seed: int) -> "BaselineTable":
        rng = np.random.default_rng(seed)
        weights = rng.normal(0.0, INIT_STD, size=(vocab, dim)).astype(np.float32)
        return cls(weights=weights, seed=seed)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def embed_token(token: str, matrix: FeatureMatrix, table: AttributeTable) -> np.ndarray:
    """x^T W for one token, computed in float64."""
    x = attribute_vector(token, table)
    return x @ matrix.weights.astype(np.float64)


def embed_sequence(seq: PronunciationSequence,
                   layer: FeatureMatrix | BaselineTable,
                   table: AttributeTable) -> np.ndarray:
    """Per-token embeddings, shape (len(seq), D), float64.

    Rows are computed with the same vector-matrix product as embed_token,
    so the two paths agree bit-for-bit.
    """
    if not seq:
        return np.zeros((0, layer.dim), dtype=np.float64)
    if isinstance(layer, FeatureMatrix):
        mags = token_magnitudes(table)
        w64 = layer.weights.astype(np.float64)
        return np.stack([mags[table.index(t)] @ w64 for t in seq.tokens])
    weights = layer.weights.astype(np.float64)
    return np.stack([weights[table.index(t)] for t in seq.tokens])
