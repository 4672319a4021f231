"""Prompted retrieval evaluations: classification from pronunciation,
nonword-to-image / nonword-to-text retrieval grouped by shared attributes,
embedding fusion, and the human-similarity harness.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .inventory import AttributeTable, PronunciationSequence, default_table
from .lexicon import ConversionFailure, PronunciationDictionary, convert_sentence
from .metrics import Ranking, spearman_detailed
from .nonwords import Nonword
from .teacher import TeacherTable

# The fixed "a photo of " prompt prefix, as tokens.
PROMPT_PREFIX = ("ə", " ", "ˈ", "f", "o", "ʊ", "ˌ",
                 "t", "o", "ʊ", " ", "ə", "v", " ")

Encoder = Callable[[Sequence[PronunciationSequence]], np.ndarray]


def prompt(label_pronunciation: PronunciationSequence) -> PronunciationSequence:
    """Prepend the prompt tokens to a label pronunciation."""
    return PronunciationSequence(PROMPT_PREFIX + tuple(label_pronunciation.tokens))


@dataclass
class EmbeddedClass:
    label: str
    prompt_embedding: np.ndarray
    image_embeddings: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.prompt_embedding = np.asarray(self.prompt_embedding, dtype=np.float64)
        self.image_embeddings = [np.asarray(v, dtype=np.float64)
                                 for v in self.image_embeddings]
        dim = self.prompt_embedding.shape
        for v in self.image_embeddings:
            if v.shape != dim:
                raise ValueError(
                    f"class {self.label!r}: image dim {v.shape} != prompt {dim}")


@dataclass(frozen=True)
class HumanSimilarityTrial:
    target: str
    rows: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        if len(self.rows) < 2:
            raise ValueError("a trial needs at least 2 comparison rows")


def _cosine_scores(query: np.ndarray, matrix: np.ndarray
                   ) -> tuple[np.ndarray, list[int]]:
    """Cosine of query against matrix rows; zero-norm rows (or a zero-norm
    query) score -inf and their indices are returned as flagged."""
    query = np.asarray(query, dtype=np.float64)
    q_norm = float(np.linalg.norm(query))
    norms = np.linalg.norm(matrix, axis=1)
    flagged = [int(i) for i in np.nonzero(norms == 0.0)[0]]
    scores = np.full(matrix.shape[0], -np.inf)
    if q_norm == 0.0:
        return scores, list(range(matrix.shape[0]))
    ok = norms > 0.0
    scores[ok] = (matrix[ok] @ query) / (norms[ok] * q_norm)
    return scores, flagged


def classify(image_vec: np.ndarray, class_prompts: Sequence[EmbeddedClass]) -> str:
    """Label of the prompt most cosine-similar to the image vector; ties
    break by class order, zero-norm candidates score -inf and are flagged."""
    if not class_prompts:
        raise ValueError("classify needs at least one class")
    matrix = np.stack([c.prompt_embedding for c in class_prompts])
    scores, flagged = _cosine_scores(np.asarray(image_vec, np.float64), matrix)
    if flagged:
        warnings.warn(f"zero-norm embedding for {len(flagged)} candidate(s)",
                      stacklevel=2)
    return class_prompts[int(np.argmax(scores))].label


def fuse(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise mean of two raw (unnormalized) embeddings."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dim mismatch: {a.shape} vs {b.shape}")
    return (a + b) / 2.0


class RetrievalTarget(enum.Enum):
    IMAGES = "images"
    TEXTS = "texts"


@dataclass
class GroupMetric:
    value: float
    count: int


@dataclass
class RetrievalReport:
    target: RetrievalTarget
    groups: dict[int, GroupMetric]
    pool: str  # what the ranking pooled over, stated explicitly


def nonword_retrieval(nonwords: Sequence[Nonword],
                      classes: Sequence[EmbeddedClass],
                      target: RetrievalTarget,
                      encoder: Encoder,
                      k: int = 50) -> RetrievalReport:
    """Retrieve each nonword's source class, grouped by shared-attribute
    count.

    Images: the prompt embedding of the nonword ranks the pooled image set
    of all classes by cosine; the group metric is mean Recall@k with
    denominator k. Texts: the class prompt embeddings are ranked; the group
    metric is top-1 accuracy.
    """
    by_label = {c.label: i for i, c in enumerate(classes)}
    for nw in nonwords:
        if nw.source_label not in by_label:
            raise ValueError(f"source class {nw.source_label!r} missing")
    queries = encoder([prompt(nw.pronunciation) for nw in nonwords])
    if target is RetrievalTarget.IMAGES:
        owners = []
        vectors = []
        for ci, cls in enumerate(classes):
            for vec in cls.image_embeddings:
                owners.append(ci)
                vectors.append(vec)
        if not vectors:
            raise ValueError("no image embeddings to rank")
        pool_mat = np.stack(vectors)
        owners_arr = np.array(owners)
        pool_desc = (f"images of all {len(classes)} classes "
                     f"({pool_mat.shape[0]} vectors), recall cutoff {k}")
    else:
        pool_mat = np.stack([c.prompt_embedding for c in classes])
        owners_arr = np.arange(len(classes))
        pool_desc = f"prompt embeddings of all {len(classes)} classes"
    per_group: dict[int, list[float]] = {}
    for row, nw in enumerate(nonwords):
        scores, _ = _cosine_scores(queries[row], pool_mat)
        source = by_label[nw.source_label]
        if target is RetrievalTarget.IMAGES:
            # Stable sort on (-score, pool index): deterministic ties.
            top = np.argsort(-scores, kind="stable")[:k]
            value = float(np.sum(owners_arr[top] == source)) / k
        else:
            best = int(np.argmax(scores))
            value = 1.0 if owners_arr[best] == source else 0.0
        per_group.setdefault(nw.shared_attribute_count, []).append(value)
    groups = {g: GroupMetric(value=float(np.mean(vals)), count=len(vals))
              for g, vals in sorted(per_group.items())}
    return RetrievalReport(target=target, groups=groups, pool=pool_desc)


@dataclass
class HumanSimilarityResult:
    correlation: float
    used: int
    excluded: list[str]
    degenerate: bool


def _score_ranking(items: Sequence[str], scores: Sequence[float]) -> Ranking:
    by_score: dict[float, list[str]] = {}
    for item, score in zip(items, scores):
        by_score.setdefault(float(score), []).append(item)
    return tuple(tuple(by_score[s]) for s in sorted(by_score, reverse=True))


def human_similarity_detailed(trial: HumanSimilarityTrial, encoder: Encoder,
                              dictionary: PronunciationDictionary,
                              table: AttributeTable | None = None
                              ) -> HumanSimilarityResult:
    """Spearman correlation between the encoder's cosine-similarity ranking
    of the comparison words and their human-score ranking. Unconvertible
    comparison words are excluded (reported); fewer than 2 left is an error.
    """
    if table is None:
        table = default_table()
    target_seq = convert_sentence(trial.target, dictionary, table)
    if isinstance(target_seq, ConversionFailure):
        raise ValueError(
            f"target {trial.target!r} unconvertible ({target_seq.kind}: "
            f"{target_seq.item!r})")
    words: list[str] = []
    scores: list[float] = []
    seqs: list[PronunciationSequence] = []
    excluded: list[str] = []
    for word, score in trial.rows:
        seq = convert_sentence(word, dictionary, table)
        if isinstance(seq, ConversionFailure):
            excluded.append(word)
            continue
        words.append(word)
        scores.append(score)
        seqs.append(seq)
    if len(words) < 2:
        raise ValueError(
            f"fewer than 2 convertible comparison words "
            f"(excluded: {excluded})")
    if len(set(words)) != len(words):
        raise ValueError("duplicate comparison words in trial")
    vectors = encoder([target_seq] + seqs)
    sims, _ = _cosine_scores(vectors[0], vectors[1:])
    model_ranking = _score_ranking(words, [float(s) for s in sims])
    human_ranking = _score_ranking(words, scores)
    value, degenerate = spearman_detailed(human_ranking, model_ranking)
    return HumanSimilarityResult(correlation=value, used=len(words),
                                 excluded=excluded, degenerate=degenerate)


def human_similarity_correlation(trial: HumanSimilarityTrial, encoder: Encoder,
                                 dictionary: PronunciationDictionary,
                                 table: AttributeTable | None = None) -> float:
    return human_similarity_detailed(trial, encoder, dictionary, table).correlation


def load_human_trial(stream: TextIO | Iterable[str]) -> HumanSimilarityTrial:
    """One trial per file: rows of ``target<TAB>comparison<TAB>score``."""
    target: str | None = None
    rows: list[tuple[str, float]] = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ValueError(f"line {line_no}: expected 3 columns")
        t, comparison, score = cols
        if target is None:
            target = t
        elif t != target:
            raise ValueError(
                f"line {line_no}: second target {t!r} (one trial per file)")
        rows.append((comparison, float(score)))
    if target is None:
        raise ValueError("empty trial file")
    return HumanSimilarityTrial(target=target, rows=tuple(rows))


def assemble_classes(prompts: TeacherTable,
                     images: TeacherTable | None = None) -> list[EmbeddedClass]:
    """Build EmbeddedClass records from TEB tables: prompt records are keyed
    by label, image records by ``label/index``."""
    classes: dict[str, EmbeddedClass] = {}
    for label, vec in prompts.records:
        classes[label] = EmbeddedClass(label=label, prompt_embedding=vec)
    if images is not None:
        for key, vec in images.records:
            label = key.split("/", 1)[0]
            if label not in classes:
                raise ValueError(f"image key {key!r} has no prompt record")
            classes[label].image_embeddings.append(np.asarray(vec, np.float64))
    return list(classes.values())
