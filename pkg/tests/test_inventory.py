import io

import pytest
from hypothesis import given, settings, strategies as st

from ipakit import (
    Manner,
    Place,
    PronunciationSequence,
    UnknownSymbolError,
    default_table,
    load_attribute_table,
    parse_ipa,
    render,
)
from ipakit.inventory import TableFormatError


def test_default_inventory_counts(table):
    assert len(table.consonants()) == 24
    assert len(table.vowels()) == 14
    consonant_symbols = {p.symbol for p in table.consonants()}
    assert consonant_symbols == set("pbtdkgmnŋfvθðszʃʒhʧʤlɹjw")
    vowel_symbols = {p.symbol for p in table.vowels()}
    assert vowel_symbols == set("iɪeɛæəʌɜɑɔoʊua")


def test_default_other_tokens(table):
    assert table.other_tokens == ("ˈ", "ˌ", " ", ".", ",", "!", "?", "'", "-",
                                  "0", "1", "2", "3", "4", "5", "6", "7", "8", "9")


def test_vowel_chart_levels(table):
    e = table.get("e")
    assert (e.height_level, e.backness_level, e.rounded) == (2, 0, False)
    hook_u = table.get("ʊ")
    assert (hook_u.height_level, hook_u.backness_level, hook_u.rounded) == (1, 3, True)


def test_doubly_articulated_w(table):
    w = table.get("w")
    assert w.places == {Place.BILABIAL, Place.VELAR}
    for p in table.consonants():
        if p.symbol != "w":
            assert len(p.places) == 1
        assert len(p.manners) == 1


def test_chart_vowel_marking(table):
    off_chart = {p.symbol for p in table.vowels() if not p.chart}
    assert off_chart == {"ʌ", "ɜ"}
    assert len(table.chart_vowels()) == 12


def test_load_single_consonant_row():
    table = load_attribute_table(io.StringIO(
        "p\tconsonant\tvoiceless\tplosive\tbilabial\t\t\t\n"))
    p = table.get("p")
    assert p.is_consonant and not p.voiced
    assert p.manners == {Manner.PLOSIVE}
    assert p.places == {Place.BILABIAL}


@pytest.mark.parametrize("row,match", [
    ("i\tvowel\t-\t-\t-\t7\t0\tno", "out of range"),
    ("i\tvowel\t-\t-\t-\t0\t5\tno", "out of range"),
    ("p\tconsonant\tvoiceless\tplosive\tbilabial\t1\t\t", "vowel fields"),
    ("i\tvowel\tvoiced\t-\t-\t0\t0\tno", "consonant fields"),
    ("p\tconsonant\tvoiceless\tplosive\tbilabial\t\t", "columns"),
    ("q\tglide\t-\t-\t-\t-\t-\t-", "class"),
])
def test_load_rejects_bad_rows(row, match):
    with pytest.raises(TableFormatError, match=match):
        load_attribute_table(io.StringIO(row + "\n"))


def test_load_rejects_duplicate_symbol():
    rows = ("p\tconsonant\tvoiceless\tplosive\tbilabial\t-\t-\t-\n"
            "p\tconsonant\tvoiced\tplosive\tbilabial\t-\t-\t-\n")
    with pytest.raises(TableFormatError, match="duplicate"):
        load_attribute_table(io.StringIO(rows))


def test_parse_prompt_sentence(table):
    seq = parse_ipa("ə ˈfoʊˌtoʊ əv ə kæt.", table)
    assert seq.tokens == ("ə", " ", "ˈ", "f", "o", "ʊ", "ˌ", "t", "o", "ʊ",
                          " ", "ə", "v", " ", "ə", " ", "k", "æ", "t", ".")


def test_parse_empty(table):
    assert parse_ipa("", table).tokens == ()


def test_affricate_normalization(table):
    expected = ("ʧ", "ɪ", "p")
    assert parse_ipa("tʃɪp", table).tokens == expected
    assert parse_ipa("ʧɪp", table).tokens == expected
    assert parse_ipa("t͡ʃɪp", table).tokens == expected
    assert parse_ipa("dʒɑb", table).tokens == ("ʤ", "ɑ", "b")


def test_ascii_and_rhotic_normalization(table):
    assert parse_ipa("r", table).tokens == ("ɹ",)
    assert parse_ipa("ɚ", table).tokens == ("ə", "ɹ")
    assert parse_ipa("ɝd", table).tokens == ("ɜ", "ɹ", "d")
    assert parse_ipa("ɡoʊ", table).tokens == ("g", "o", "ʊ")


def test_latin_case_folding(table):
    assert parse_ipa("KæT", table).tokens == ("k", "æ", "t")


def test_unknown_symbol_reported(table):
    with pytest.raises(UnknownSymbolError) as exc_info:
        parse_ipa("kæq", table)
    assert exc_info.value.position == 2
    assert exc_info.value.character == "q"


def test_render_round_trip(table):
    seq = parse_ipa("ə ˈfoʊˌtoʊ əv ə kæt.", table)
    assert parse_ipa(render(seq), table) == seq
    assert render(PronunciationSequence(("k", "æ", "t"))) == "kæt"
    assert render(PronunciationSequence(())) == ""


_PIECES = list("pbtdkgmnŋfvθðszʃʒhʧʤlɹjw"
               "iɪeɛæəʌɜɑɔoʊua"
               "ˈˌ .,!?'-0123456789"
               "rɡɚɝ") + ["tʃ", "dʒ", "t͡ʃ", "d͡ʒ"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(_PIECES), max_size=30).map("".join))
def test_parse_render_fixed_point(text):
    # parse is total over strings built from known symbols and aliases, and
    # parse(render(s)) == s for every producible sequence.
    table = default_table()
    seq = parse_ipa(text, table)
    assert parse_ipa(render(seq), table) == seq


def test_all_canonical_symbols_single_code_point(table):
    for symbol in table.all_symbols:
        assert len(symbol) == 1
