import io

import pytest

from ipakit import (
    SubstitutionTable,
    generate_nonwords,
    load_dictionary,
    parse_ipa,
    shared_attributes,
    starts_with_sole_consonant,
)
from ipakit.nonwords import read_nonwords_tsv, write_nonwords_tsv


def test_substitution_table_shape():
    table = SubstitutionTable.default()
    assert len(table.entries) == 21
    symbols = [s for s, _ in table.entries]
    assert "ð" not in symbols
    spelling_map = dict(table.entries)
    assert spelling_map["k"] == ("k", "c")
    assert spelling_map["ʤ"] == ("j",)
    assert spelling_map["j"] == ("y",)
    assert spelling_map["θ"] == ("th",)


def test_starts_with_sole_consonant(table, toy_dictionary):
    assert starts_with_sole_consonant(parse_ipa("dɛsk", table), table)
    assert not starts_with_sole_consonant(parse_ipa("sneɪl", table), table)
    assert not starts_with_sole_consonant(parse_ipa("ɛg", table), table)
    assert not starts_with_sole_consonant(parse_ipa("d", table), table)
    with pytest.raises(ValueError):
        starts_with_sole_consonant(parse_ipa("", table), table)


def test_shared_attributes_pairs(table):
    assert shared_attributes("d", "z", table) == 2  # voiced + alveolar
    assert shared_attributes("m", "k", table) == 0
    assert shared_attributes("m", "t", table) == 0
    assert shared_attributes("b", "b", table) == 3
    assert shared_attributes("p", "b", table) == 2  # bilabial + plosive
    assert shared_attributes("w", "g", table) == 2  # voiced + velar


def test_shared_attributes_rejects_vowels(table):
    with pytest.raises(ValueError):
        shared_attributes("a", "b", table)


def test_no_distinct_pair_shares_all_three(table):
    consonants = [p.symbol for p in table.consonants()]
    for i, a in enumerate(consonants):
        for b in consonants[i + 1:]:
            assert shared_attributes(a, b, table) <= 2


def test_generate_nonwords_desk(toy_dictionary, table):
    results = generate_nonwords("desk", toy_dictionary, vocab={"desk"},
                                attr_table=table)
    by_spelling = {nw.spelling: nw for nw in results}
    assert "zesk" in by_spelling and "nesk" in by_spelling
    assert by_spelling["zesk"].pronunciation.render() == "zɛsk"
    assert by_spelling["nesk"].pronunciation.render() == "nɛsk"
    assert len(results) <= 21
    for nw in results:
        assert nw.shared_attribute_count in (0, 1, 2)
        assert nw.pronunciation.tokens[1:] == parse_ipa("ɛsk", table).tokens
        assert nw.source_consonant == "d"


def test_generate_nonwords_filters_vocab_and_prons(toy_dictionary, table):
    all_results = generate_nonwords("desk", toy_dictionary, attr_table=table)
    spellings = {nw.spelling for nw in all_results}
    prons = {nw.pronunciation.render() for nw in all_results}
    filtered = generate_nonwords("desk", toy_dictionary, vocab=spellings,
                                 known_prons=prons, attr_table=table)
    assert filtered == []


def test_generate_nonwords_k_spelling_fallback(toy_dictionary, table):
    with_k = generate_nonwords("desk", toy_dictionary, vocab={"kesk"},
                               attr_table=table)
    k_words = [nw for nw in with_k if nw.new_consonant == "k"]
    assert len(k_words) == 1 and k_words[0].spelling == "cesk"
    without = generate_nonwords("desk", toy_dictionary,
                                vocab={"kesk", "cesk"}, attr_table=table)
    assert all(nw.new_consonant != "k" for nw in without)


def test_generate_nonwords_digraph_strip(toy_dictionary, table):
    results = generate_nonwords("chair", toy_dictionary, attr_table=table)
    by_consonant = {nw.new_consonant: nw for nw in results}
    # "ch" is stripped before prefixing, not just one letter
    assert by_consonant["b"].spelling == "bair"
    assert by_consonant["ʃ"].spelling == "shair"
    assert by_consonant["b"].pronunciation.render() == "bɛɹ"


def test_generate_nonwords_precondition(toy_dictionary, table):
    with pytest.raises(ValueError):
        generate_nonwords("snail", toy_dictionary, attr_table=table)
    with pytest.raises(ValueError):
        generate_nonwords("egg", toy_dictionary, attr_table=table)


def test_nonword_pronunciations_never_known(toy_dictionary, table):
    known = toy_dictionary.transcription_set()
    results = generate_nonwords("desk", toy_dictionary,
                                known_prons=known, attr_table=table)
    for nw in results:
        assert nw.pronunciation.render() not in known


def test_nonwords_tsv_round_trip(toy_dictionary, table):
    results = generate_nonwords("desk", toy_dictionary, vocab={"desk"},
                                attr_table=table)
    buf = io.StringIO()
    write_nonwords_tsv(results, buf)
    buf.seek(0)
    loaded = read_nonwords_tsv(buf, table)
    assert [(nw.spelling, nw.pronunciation, nw.source_label,
             nw.shared_attribute_count) for nw in loaded] == \
           [(nw.spelling, nw.pronunciation, nw.source_label,
             nw.shared_attribute_count) for nw in results]
