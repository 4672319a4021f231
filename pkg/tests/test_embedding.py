import numpy as np
import pytest

from ipakit import (
    BaselineTable,
    EmbeddingMode,
    FeatureMatrix,
    PronunciationSequence,
    attribute_index,
    attribute_vector,
    embed_sequence,
    embed_token,
    parse_ipa,
)


def golden_vector(idx, entries):
    x = np.zeros(idx.n)
    for label, value in entries.items():
        x[idx.labels.index(label)] = value
    return x


def test_attribute_index_layout(table):
    idx = attribute_index(table)
    assert idx.n == 44
    assert idx.labels[0] == "ConsonantFlag"
    assert idx.labels[idx.VOWEL_FLAG] == "VowelFlag"
    assert idx.labels[-10:] == tuple(f"Char:Digit{d}" for d in range(10))


@pytest.mark.parametrize("token,entries", [
    ("p", {"ConsonantFlag": 1, "Manner:Plosive": 1, "Place:Bilabial": 1}),
    ("v", {"ConsonantFlag": 1, "Voicing": 1, "Manner:Fricative": 1,
           "Place:Labiodental": 1}),
    ("e", {"VowelFlag": 1, "Height": 2 / 6}),
    ("ʊ", {"VowelFlag": 1, "Height": 1 / 6, "Backness": 3 / 4,
           "Roundedness": 1}),
    (",", {"Char:Comma": 1}),
    ("w", {"ConsonantFlag": 1, "Voicing": 1, "Manner:Approximant": 1,
           "Place:Bilabial": 1, "Place:Velar": 1}),
    ("ˈ", {"PrimaryStress": 1}),
    (" ", {"Char:Space": 1}),
])
def test_attribute_vectors(table, token, entries):
    idx = attribute_index(table)
    assert np.array_equal(attribute_vector(token, table),
                          golden_vector(idx, entries))


def test_attribute_vector_unknown_token(table):
    with pytest.raises(KeyError):
        attribute_vector("q", table)


def test_sparsity_bound(table):
    for symbol in table.all_symbols:
        assert np.count_nonzero(attribute_vector(symbol, table)) <= 6


def test_categorical_and_continuous_ranges(table):
    idx = attribute_index(table)
    continuous = {idx.HEIGHT, idx.BACKNESS}
    for symbol in table.all_symbols:
        x = attribute_vector(symbol, table)
        for i, value in enumerate(x):
            if i in continuous:
                assert 0.0 <= value <= 1.0
            else:
                assert value in (0.0, 1.0)


def test_embed_token_identity_matrix(table):
    idx = attribute_index(table)
    w = FeatureMatrix(weights=np.eye(idx.n, dtype=np.float32),
                      mode=EmbeddingMode.FROZEN, seed=0)
    assert np.array_equal(embed_token("p", w, table),
                          attribute_vector("p", table))


def test_embed_token_is_row_combination(table):
    idx = attribute_index(table)
    w = FeatureMatrix.initialize(idx.n, 16, seed=5)
    rows = w.weights.astype(np.float64)
    expected_p = (rows[idx.labels.index("ConsonantFlag")]
                  + rows[idx.labels.index("Manner:Plosive")]
                  + rows[idx.labels.index("Place:Bilabial")])
    assert np.allclose(embed_token("p", w, table), expected_p, atol=0, rtol=0)
    expected_u = (rows[idx.labels.index("VowelFlag")]
                  + (1 / 6) * rows[idx.labels.index("Height")]
                  + (3 / 4) * rows[idx.labels.index("Backness")]
                  + rows[idx.labels.index("Roundedness")])
    assert np.allclose(embed_token("ʊ", w, table), expected_u,
                       atol=1e-18, rtol=0)


def test_embed_token_linearity_no_bias(table):
    # x^T W exactly: doubling W doubles the embedding; zero W gives zero.
    idx = attribute_index(table)
    w1 = FeatureMatrix.initialize(idx.n, 8, seed=1)
    w2 = FeatureMatrix(weights=w1.weights * 2, mode=w1.mode, seed=1)
    for token in ("p", "ʊ", ",", "ˈ"):
        assert np.array_equal(embed_token(token, w2, table),
                              2 * embed_token(token, w1, table))
    zero = FeatureMatrix(weights=np.zeros_like(w1.weights),
                         mode=EmbeddingMode.FROZEN, seed=0)
    assert np.array_equal(embed_token("p", zero, table), np.zeros(8))


def test_embed_sequence_matches_tokens(table):
    idx = attribute_index(table)
    w = FeatureMatrix.initialize(idx.n, 12, seed=2)
    seq = parse_ipa("pʊ", table)
    out = embed_sequence(seq, w, table)
    assert out.shape == (2, 12)
    assert np.array_equal(out[0], embed_token("p", w, table))
    assert np.array_equal(out[1], embed_token("ʊ", w, table))


def test_embed_sequence_empty(table):
    w = FeatureMatrix.initialize(attribute_index(table).n, 12, seed=2)
    assert embed_sequence(PronunciationSequence(()), w, table).shape == (0, 12)


def test_baseline_rows_independent_at_init(table):
    layer = BaselineTable.initialize(len(table.all_symbols), 16, seed=7)
    p_row = layer.weights[table.index("p")]
    b_row = layer.weights[table.index("b")]
    assert not np.array_equal(p_row, b_row)
    seq = parse_ipa("pb", table)
    out = embed_sequence(seq, layer, table)
    assert np.array_equal(out[0], p_row.astype(np.float64))


def test_seeded_initialization_reproducible(table):
    n = attribute_index(table).n
    a = FeatureMatrix.initialize(n, 32, seed=11)
    b = FeatureMatrix.initialize(n, 32, seed=11)
    c = FeatureMatrix.initialize(n, 32, seed=12)
    assert np.array_equal(a.weights, b.weights)
    assert not np.array_equal(a.weights, c.weights)
