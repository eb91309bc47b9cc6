import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexfusion.sememes import (
    LexiconError,
    lexicon_from_dict,
    load_lexicon,
    match_words,
)


def tiny_lexicon(words):
    """Single shared sememe, no edges; enough for matcher tests."""
    return lexicon_from_dict({
        "sememes": ["Thing"],
        "words": {w: [{"sense": f"{w}#1", "sememes": [0], "edges": []}] for w in words},
    })


# -- loading -------------------------------------------------------------------


def test_load_mini_lexicon(mini_lexicon):
    assert len(mini_lexicon) == 26
    assert "下调" in mini_lexicon.words


def test_ten_word_file_round_trip(tmp_path):
    words = [f"w{i}" for i in range(10)]
    obj = {"sememes": ["A", "B"],
           "words": {w: [{"sense": w, "sememes": [0, 1], "edges": [[0, 1]]}] for w in words}}
    path = tmp_path / "lex.json"
    path.write_text(json.dumps(obj), encoding="utf-8")
    lex = load_lexicon(path)
    assert len(lex) == 10


def test_undefined_sememe_is_named_in_error():
    obj = {"sememes": ["A"],
           "words": {"x": [{"sense": "x#1", "sememes": [0, 7], "edges": []}]}}
    with pytest.raises(LexiconError, match="undefined sememe index 7"):
        lexicon_from_dict(obj)


def test_empty_sense_rejected_with_word_context():
    obj = {"sememes": ["A"], "words": {"xy": [{"sense": "xy#1", "sememes": []}]}}
    with pytest.raises(LexiconError, match="xy"):
        lexicon_from_dict(obj)


def test_edge_outside_local_nodes_rejected():
    obj = {"sememes": ["A", "B"],
           "words": {"x": [{"sense": "x#1", "sememes": [0, 1], "edges": [[0, 2]]}]}}
    with pytest.raises(LexiconError, match="edge"):
        lexicon_from_dict(obj)


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(LexiconError, match="JSON"):
        load_lexicon(path)


def test_lowering_word_has_subtract_sememe(mini_lexicon):
    names = mini_lexicon.word_sememes("下调")
    assert "Subtract" in names


def test_graphs_normalized_symmetric_with_self_loops(mini_lexicon):
    for senses in mini_lexicon.words.values():
        for sense in senses:
            adj = sense.graph.adjacency()
            np.testing.assert_array_equal(adj, adj.T)
            np.testing.assert_array_equal(np.diag(adj), np.ones(len(sense.graph.nodes)))


def test_fully_connected_pseudo_graph(mini_lexicon):
    sense = mini_lexicon.senses("下调")[0]
    pseudo = sense.graph.fully_connected()
    assert pseudo.nodes == sense.graph.nodes
    np.testing.assert_array_equal(pseudo.adjacency(), np.ones((3, 3)))


# -- matching ------------------------------------------------------------------


def test_covering_word_offsets():
    lex = tiny_lexicon(["ab"])
    matches = match_words("ab", lex, max_word_len=4)
    assert [(m.word, m.start, m.end) for m in matches[0]] == [("ab", 0, 1)]
    assert [(m.word, m.start, m.end) for m in matches[1]] == [("ab", -1, 0)]


def test_single_char_and_long_word_both_match():
    lex = tiny_lexicon(["a", "abc"])
    matches = match_words("abc", lex, max_word_len=4)
    assert [(m.word, m.start, m.end) for m in matches[0]] == [("a", 0, 0), ("abc", 0, 2)]


def test_single_characters_match_themselves():
    lex = tiny_lexicon(["x", "y"])
    for pos, m in enumerate(match_words("xyx", lex)):
        assert any(wm.start == 0 and wm.end == 0 and len(wm.word) == 1 for wm in m)


def test_max_word_len_caps_matches():
    lex = tiny_lexicon(["abcd"])
    assert all(not m for m in match_words("abcd", lex, max_word_len=3))
    assert all(m for m in match_words("abcd", lex, max_word_len=4))


def test_no_match_positions_are_empty():
    lex = tiny_lexicon(["q"])
    assert match_words("ab", lex) == [[], []]


def brute_force_matches(paragraph, lexicon, max_word_len):
    chars = list(paragraph)
    out = [[] for _ in chars]
    for word in lexicon.words:
        if len(word) > max_word_len:
            continue
        for start in range(len(chars) - len(word) + 1):
            if "".join(chars[start:start + len(word)]) == word:
                for pos in range(start, start + len(word)):
                    out[pos].append((word, start - pos, start + len(word) - 1 - pos))
    return [sorted(m) for m in out]


@settings(max_examples=200, deadline=None)
@given(
    paragraph=st.text(alphabet="abc水火", min_size=0, max_size=12),
    words=st.sets(st.text(alphabet="abc水火", min_size=1, max_size=4), min_size=1, max_size=8),
    max_word_len=st.integers(min_value=1, max_value=5),
)
def test_matcher_equals_brute_force_oracle(paragraph, words, max_word_len):
    lex = tiny_lexicon(sorted(words))
    got = match_words(paragraph, lex, max_word_len=max_word_len)
    got_sets = [sorted((m.word, m.start, m.end) for m in row) for row in got]
    assert got_sets == brute_force_matches(paragraph, lex, max_word_len)


@settings(max_examples=100, deadline=None)
@given(
    paragraph=st.text(alphabet="abcd", min_size=1, max_size=10),
    words=st.sets(st.text(alphabet="abcd", min_size=1, max_size=4), min_size=1, max_size=6),
)
def test_offsets_cover_current_character(paragraph, words):
    lex = tiny_lexicon(sorted(words))
    for row in match_words(paragraph, lex):
        for m in row:
            assert m.start <= 0 <= m.end
            assert m.end - m.start + 1 == len(m.word)
