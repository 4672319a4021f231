"""Phoneme-space evaluation: consonant/vowel silhouette, per-attribute mean
average precision, vowel rank correlation against the Cartesian chart,
Spearman's correlation with ties, and a deterministic PCA export.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .embedding import (
    BaselineTable,
    FeatureMatrix,
    attribute_vector,
    embed_token,
)
from .inventory import (
    AttributeTable,
    MAX_BACKNESS_LEVEL,
    MAX_HEIGHT_LEVEL,
    Phoneme,
    default_table,
)

# A ranking is an ordered run of tie groups, best first.
Ranking = tuple[tuple[str, ...], ...]


class ConsonantAttribute(enum.Enum):
    VOICING = "voicing"
    PLACE = "place"
    MANNER = "manner"


class VowelAxis(enum.Enum):
    HEIGHT = "height"
    BACKNESS = "backness"
    ROUNDEDNESS = "roundedness"


class PhonemeSpace:
    """symbol -> embedding vector, one point per phoneme of a table."""

    def __init__(self, points: Mapping[str, np.ndarray]):
        self.points = {s: np.asarray(v, dtype=np.float64) for s, v in points.items()}
        dims = {v.shape for v in self.points.values()}
        if len(dims) > 1:
            raise ValueError(f"inconsistent point dimensions: {dims}")

    @classmethod
    def from_layer(cls, layer: FeatureMatrix | BaselineTable,
                   table: AttributeTable) -> "PhonemeSpace":
        points = {}
        for symbol in table.phonemes:
            if isinstance(layer, FeatureMatrix):
                points[symbol] = embed_token(symbol, layer, table)
            else:
                points[symbol] = layer.weights[table.index(symbol)] \
                    .astype(np.float64)
        return cls(points)

    @classmethod
    def from_attributes(cls, table: AttributeTable) -> "PhonemeSpace":
        """The raw attribute-vector space (feature matrix = identity)."""
        return cls({s: attribute_vector(s, table) for s in table.phonemes})

    def vector(self, symbol: str) -> np.ndarray:
        return self.points[symbol]


def _class_symbols(space: PhonemeSpace, table: AttributeTable
                   ) -> tuple[list[str], list[str]]:
    cons = [p.symbol for p in table.consonants() if p.symbol in space.points]
    vows = [p.symbol for p in table.vowels() if p.symbol in space.points]
    return cons, vows


def silhouette(space: PhonemeSpace, table: AttributeTable | None = None
               ) -> tuple[float, float]:
    """Silhouette coefficients (consonant cluster, vowel cluster).

    Per element: a = mean distance to same-cluster others, b = mean distance
    to the other cluster, s = (b-a)/max(a,b) with s = 0 when max(a,b) = 0;
    each cluster score is the mean over its members.
    """
    if table is None:
        table = default_table()
    cons, vows = _class_symbols(space, table)
    if len(cons) < 2 or len(vows) < 2:
        raise ValueError("silhouette needs >= 2 consonants and >= 2 vowels")
    c_mat = np.stack([space.vector(s) for s in cons])
    v_mat = np.stack([space.vector(s) for s in vows])

    def cluster_score(own: np.ndarray, other: np.ndarray) -> float:
        scores = []
        for i in range(own.shape[0]):
            d_own = np.linalg.norm(own - own[i], axis=1)
            a = (d_own.sum() - 0.0) / (own.shape[0] - 1)  # self distance is 0
            b = np.linalg.norm(other - own[i], axis=1).mean()
            top = max(a, b)
            scores.append(0.0 if top == 0.0 else (b - a) / top)
        return float(np.mean(scores))

    return cluster_score(c_mat, v_mat), cluster_score(v_mat, c_mat)


def _relevant(query: Phoneme, candidate: Phoneme,
              attribute: ConsonantAttribute) -> bool:
    if attribute is ConsonantAttribute.VOICING:
        return query.voiced == candidate.voiced
    if attribute is ConsonantAttribute.PLACE:
        return bool(query.places & candidate.places)
    return bool(query.manners & candidate.manners)


def average_precision(space: PhonemeSpace, query: str,
                      attribute: ConsonantAttribute,
                      table: AttributeTable | None = None) -> float:
    """AP of retrieving the query's attribute-sharers among all other
    consonants, ranked by ascending distance (ties broken by table order);
    the query itself is excluded from the ranking and from the relevant set.
    """
    if table is None:
        table = default_table()
    query_ph = table.get(query)
    if query_ph is None or not query_ph.is_consonant:
        raise ValueError(f"{query!r} is not a consonant")
    others = [p for p in table.consonants()
              if p.symbol != query and p.symbol in space.points]
    relevant = {p.symbol for p in others if _relevant(query_ph, p, attribute)}
    if not relevant:
        raise ValueError(f"no relevant consonants for {query!r} / {attribute}")
    q_vec = space.vector(query)
    ranked = sorted(
        others,
        key=lambda p: (float(np.linalg.norm(space.vector(p.symbol) - q_vec)),
                       table.index(p.symbol)))
    hits = 0
    ap = 0.0
    for k, ph in enumerate(ranked, start=1):
        if ph.symbol in relevant:
            hits += 1
            ap += hits / k
    return ap / len(relevant)


def attribute_map(space: PhonemeSpace, attribute: ConsonantAttribute,
                  table: AttributeTable | None = None) -> float:
    """Mean AP over all consonant queries; queries with an empty relevant
    set are skipped."""
    if table is None:
        table = default_table()
    cons, _ = _class_symbols(space, table)
    if len(cons) < 2:
        raise ValueError("attribute_map needs >= 2 consonants")
    scores = []
    for symbol in cons:
        query_ph = table.get(symbol)
        others = [p for p in table.consonants()
                  if p.symbol != symbol and p.symbol in space.points]
        if not any(_relevant(query_ph, p, attribute) for p in others):
            continue
        scores.append(average_precision(space, symbol, attribute, table))
    if not scores:
        raise ValueError("every query had an empty relevant set")
    return float(np.mean(scores))


# ----------------------------------------------------------------------
# vowel chart ground truths


def chart_point(ph: Phoneme) -> tuple[float, float, float]:
    """(height, backness, roundedness) in [0,1]^3."""
    return (ph.height_level / MAX_HEIGHT_LEVEL,
            ph.backness_level / MAX_BACKNESS_LEVEL,
            1.0 if ph.rounded else 0.0)


def _axis_level(ph: Phoneme, axis: VowelAxis) -> int:
    if axis is VowelAxis.HEIGHT:
        return ph.height_level
    if axis is VowelAxis.BACKNESS:
        return ph.backness_level
    return 1 if ph.rounded else 0


def vowel_ground_truth_rankings(target: str, axis: VowelAxis,
                                table: AttributeTable | None = None
                                ) -> list[Ranking]:
    """Up to two rankings for a target vowel along one chart axis.

    For each of the other two attributes, the chart vowels sharing that
    attribute's value with the target are ordered by ascending distance to
    the target along the axis (equal distances tie). Slices with fewer than
    two vowels are skipped. Only chart vowels participate.
    """
    if table is None:
        table = default_table()
    target_ph = table.get(target)
    if target_ph is None or not target_ph.is_vowel:
        raise ValueError(f"{target!r} is not a vowel")
    if not target_ph.chart:
        raise ValueError(f"{target!r} has no chart position")
    chart = list(table.chart_vowels())
    others = [a for a in (VowelAxis.HEIGHT, VowelAxis.BACKNESS,
                          VowelAxis.ROUNDEDNESS) if a is not axis]
    rankings: list[Ranking] = []
    for shared in others:
        members = [v for v in chart
                   if _axis_level(v, shared) == _axis_level(target_ph, shared)]
        if len(members) < 2:
            continue
        # Integer level distances keep ties exact.
        by_dist: dict[int, list[str]] = {}
        for v in members:
            d = abs(_axis_level(v, axis) - _axis_level(target_ph, axis))
            by_dist.setdefault(d, []).append(v.symbol)
        ranking = tuple(tuple(by_dist[d]) for d in sorted(by_dist))
        rankings.append(ranking)
    return rankings


def _average_ranks(ranking: Ranking) -> dict[str, float]:
    ranks: dict[str, float] = {}
    position = 0
    for group in ranking:
        size = len(group)
        avg = position + (size + 1) / 2.0
        for item in group:
            ranks[item] = avg
        position += size
    return ranks


def spearman_detailed(r1: Ranking, r2: Ranking) -> tuple[float, bool]:
    """Spearman's rank correlation with average-rank tie handling.

    Returns (value, degenerate); a ranking whose ranks have zero variance
    yields (0.0, True).
    """
    ranks1 = _average_ranks(r1)
    ranks2 = _average_ranks(r2)
    if set(ranks1) != set(ranks2):
        raise ValueError("rankings must cover the same items")
    if len(ranks1) < 2:
        raise ValueError("need at least 2 items")
    items = sorted(ranks1)
    x = np.array([ranks1[i] for i in items])
    y = np.array([ranks2[i] for i in items])
    xc = x - x.mean()
    yc = y - y.mean()
    var_x = float(xc @ xc)
    var_y = float(yc @ yc)
    if var_x == 0.0 or var_y == 0.0:
        return 0.0, True
    return float((xc @ yc) / np.sqrt(var_x * var_y)), False


def spearman(r1: Ranking, r2: Ranking) -> float:
    return spearman_detailed(r1, r2)[0]


def _distance_ranking(symbols: Sequence[str], target_vec: np.ndarray,
                      space: PhonemeSpace) -> Ranking:
    by_dist: dict[float, list[str]] = {}
    for s in symbols:
        d = float(np.linalg.norm(space.vector(s) - target_vec))
        by_dist.setdefault(d, []).append(s)
    return tuple(tuple(by_dist[d]) for d in sorted(by_dist))


def vowel_rank_correlation(space: PhonemeSpace, axis: VowelAxis,
                           table: AttributeTable | None = None) -> float:
    """Mean Spearman correlation between chart ground-truth rankings and
    the space's distance rankings, over every chart vowel and each of its
    (up to two) ground truths."""
    if table is None:
        table = default_table()
    chart = [v.symbol for v in table.chart_vowels() if v.symbol in space.points]
    if len(chart) < 2:
        raise ValueError("vowel_rank_correlation needs >= 2 chart vowels")
    scores = []
    for target in chart:
        for gt in vowel_ground_truth_rankings(target, axis, table):
            members = [s for group in gt for s in group]
            retrieved = _distance_ranking(members, space.vector(target), space)
            scores.append(spearman_detailed(gt, retrieved)[0])
    if not scores:
        raise ValueError("no usable ground-truth rankings")
    return float(np.mean(scores))


# ----------------------------------------------------------------------
# PCA export

_PCA_TOLERANCE = 1e-10
_PCA_MAX_ITER = 10_000


@dataclass
class PcaResult:
    rows: list[tuple[str, str, tuple[float, ...]]]  # symbol, class, coords
    components: np.ndarray        # (k, dim)
    eigenvalues: np.ndarray       # (k,)
    rank_deficient: bool
    effective_rank: int


def _power_iteration(cov: np.ndarray, rng: np.random.Generator
                     ) -> tuple[np.ndarray, float, bool]:
    dim = cov.shape[0]
    v = rng.normal(size=dim)
    v /= np.linalg.norm(v)
    for _ in range(_PCA_MAX_ITER):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            return v, 0.0, True  # residual covariance is numerically zero
        w /= norm
        if np.linalg.norm(w - v) < _PCA_TOLERANCE:
            v = w
            break
        v = w
    value = float(v @ cov @ v)
    return v, value, False


def _fix_sign(v: np.ndarray) -> np.ndarray:
    lead = np.argmax(np.abs(v))
    return -v if v[lead] < 0 else v


def pca_export(space: PhonemeSpace, table: AttributeTable | None = None,
               k: int = 3) -> PcaResult:
    """Project mean-centered points onto the top-k covariance eigenvectors.

    Power iteration with deflation (fixed cap, tolerance 1e-10), signs fixed
    so each component's largest-magnitude entry is positive, components in
    descending eigenvalue order. Exactly rank-deficient inputs are flagged;
    missing directions are filled from the orthogonal complement with
    eigenvalue 0 so the export always carries k coordinates.
    """
    if table is None:
        table = default_table()
    symbols = [s for s in table.phonemes if s in space.points]
    if len(symbols) < k + 1:
        raise ValueError(f"pca_export needs >= {k + 1} points")
    x = np.stack([space.vector(s) for s in symbols])
    x = x - x.mean(axis=0)
    dim = x.shape[1]
    if dim < k:
        raise ValueError(f"point dimension {dim} < k={k}")
    cov = (x.T @ x) / (x.shape[0] - 1)
    rng = np.random.default_rng(0x9CA)  # fixed: the method must be deterministic
    components = []
    eigenvalues = []
    deficient = False
    residual = cov.copy()
    for _ in range(k):
        v, value, degenerate = _power_iteration(residual, rng)
        if degenerate:
            deficient = True
            v = _complement_direction(components, dim)
            value = 0.0
        else:
            # Re-orthogonalize against found components (numerical hygiene).
            for u in components:
                v = v - (v @ u) * u
            norm = np.linalg.norm(v)
            if norm < 1e-300:
                deficient = True
                v = _complement_direction(components, dim)
                value = 0.0
            else:
                v = v / norm
        v = _fix_sign(v)
        components.append(v)
        eigenvalues.append(max(value, 0.0))
        residual = residual - value * np.outer(v, v)
    comp = np.stack(components)
    eig = np.array(eigenvalues)
    order = np.argsort(-eig, kind="stable")
    comp = comp[order]
    eig = eig[order]
    coords = x @ comp.T
    rows = [
        (s, table.get(s).phoneme_class.value, tuple(float(c) for c in coords[i]))
        for i, s in enumerate(symbols)
    ]
    effective = int(np.sum(eig > 0.0))
    return PcaResult(rows=rows, components=comp, eigenvalues=eig,
                     rank_deficient=deficient or effective < k,
                     effective_rank=effective)


def _complement_direction(components: list[np.ndarray], dim: int) -> np.ndarray:
    # First canonical basis vector with a nonzero residual after projecting
    # out the found components; deterministic.
    for i in range(dim):
        v = np.zeros(dim)
        v[i] = 1.0
        for u in components:
            v = v - (v @ u) * u
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise ValueError("no orthogonal direction left")


# ----------------------------------------------------------------------
# report assembly

METRIC_ROWS = (
    "silhouette_consonant",
    "silhouette_vowel",
    "map_voicing",
    "map_place",
    "map_manner",
    "rc_height",
    "rc_backness",
    "rc_roundedness",
)


def space_metrics(space: PhonemeSpace, table: AttributeTable | None = None
                  ) -> dict[str, float]:
    """All eight named metrics of a phoneme space."""
    if table is None:
        table = default_table()
    s_cc, s_cv = silhouette(space, table)
    return {
        "silhouette_consonant": s_cc,
        "silhouette_vowel": s_cv,
        "map_voicing": attribute_map(space, ConsonantAttribute.VOICING, table),
        "map_place": attribute_map(space, ConsonantAttribute.PLACE, table),
        "map_manner": attribute_map(space, ConsonantAttribute.MANNER, table),
        "rc_height": vowel_rank_correlation(space, VowelAxis.HEIGHT, table),
        "rc_backness": vowel_rank_correlation(space, VowelAxis.BACKNESS, table),
        "rc_roundedness": vowel_rank_correlation(space, VowelAxis.ROUNDEDNESS, table),
    }
