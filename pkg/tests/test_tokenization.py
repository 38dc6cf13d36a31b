import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from phiscrub.tokenization import (DEFAULT_ABBREVIATIONS, Sentence, SentenceSegmenter, Token,
                                   analyze, load_abbreviations, pos_tag, split_sentences,
                                   tokenize, word_shape)

DATA = Path(__file__).parent / "data"


def _sents(text, **kw):
    return [s.text(text) for s in split_sentences(text, **kw)]


def _words(text):
    (s,) = split_sentences(text)
    return [t.text for t in tokenize(text, s)]


# -- sentences -------------------------------------------------------------

def test_salutation_does_not_end_sentence():
    assert _sents("Mr. Smith came. He left.", abbreviations={"Mr."}) == [
        "Mr. Smith came.", "He left."]


def test_without_the_abbreviation_the_salutation_breaks():
    assert _sents("Mr. Smith came. He left.", abbreviations=set()) == [
        "Mr.", "Smith came.", "He left."]


def test_empty_and_unterminated():
    assert split_sentences("") == []
    assert split_sentences("   \n ") == []
    assert _sents("No terminator") == ["No terminator"]


def test_break_rules():
    assert _sents("It was 5 p.m. and late. Then 3 more came.") == [
        "It was 5 p.m. and late.", "Then 3 more came."]
    # lowercase continuation is not a boundary
    assert _sents("Take 2 tabs. daily with food.") == ["Take 2 tabs. daily with food."]
    # a newline after the terminator is
    assert _sents("Take 2 tabs.\ndaily with food.") == ["Take 2 tabs.", "daily with food."]
    assert _sents("Really? Yes! (Done.) Ok") == ["Really?", "Yes!", "(Done.)", "Ok"]
    # initials
    assert _sents("Seen by J. Smith today. Fine.") == ["Seen by J. Smith today.", "Fine."]


def test_blank_line_always_breaks():
    assert _sents("Header line\n\nBody text here") == ["Header line", "Body text here"]
    assert _sents("See Dr.\n\nNext") == ["See Dr.", "Next"]


def test_max_chars_cap():
    text = " ".join(["word"] * 100)
    parts = split_sentences(text, max_chars=50)
    assert all(s.end - s.start <= 50 for s in parts)
    assert " ".join(s.text(text) for s in parts) == text


def _check_cover(text, sents):
    prev = 0
    for s in sents:
        assert prev <= s.start < s.end <= len(text)
        assert not text[s.start].isspace() and not text[s.end - 1].isspace()
        assert text[prev:s.start].strip() == ""
        prev = s.end
    assert text[prev:].strip() == ""


_alphabet = st.sampled_from(list("ab Mr.Dr?!\n\n  XY12()\"'") + ["Mr. ", "Dr. ", ". ", ".\n"])


@settings(max_examples=300, deadline=None)
@given(st.lists(_alphabet, max_size=60).map("".join))
def test_sentences_cover_all_non_whitespace(text):
    _check_cover(text, split_sentences(text))


@settings(max_examples=200, deadline=None)
@given(st.lists(_alphabet, max_size=80).map("".join), st.lists(st.integers(1, 9), max_size=20),
       st.sampled_from([None, 7, 25]))
def test_segmenter_matches_batch(text, cuts, cap):
    seg = SentenceSegmenter(max_chars=cap)
    got, pos = [], 0
    for c in cuts:
        got += seg.feed(text[pos:pos + c])
        pos += c
    got += seg.feed(text[pos:])
    got += seg.close()
    assert got == split_sentences(text, max_chars=cap)


def test_segmenter_buffer_stays_bounded():
    seg = SentenceSegmenter()
    sentence = "The patient was seen today and is doing well. "
    peak = 0
    for _ in range(2000):
        seg.feed(sentence)
        peak = max(peak, seg.buffered)
    assert peak < 4 * len(sentence) + 200


def test_load_abbreviations(tmp_path):
    p = tmp_path / "abbr.txt"
    p.write_text("# salutations\nMr.\nMrs.  # married\n\nCapt.\n")
    assert load_abbreviations(p) == {"Mr.", "Mrs.", "Capt."}
    assert "Dr." in DEFAULT_ABBREVIATIONS


# -- tokens ----------------------------------------------------------------

@pytest.mark.parametrize("text,words", [
    ("He left.", ["He", "left", "."]),
    ("call 555-1234.", ["call", "555-1234", "."]),
    ("(Boston)", ["(", "Boston", ")"]),
    ("server 10.0.0.1 down", ["server", "10.0.0.1", "down"]),
    ("mail a@b.org, now", ["mail", "a@b.org", ",", "now"]),
    ("see http://x.org/a-b", ["see", "http://x.org/a-b"]),
    ("Mr. Jones", ["Mr.", "Jones"]),
    ("J. Smith", ["J.", "Smith"]),
    ("well-known and/or", ["well", "-", "known", "and", "/", "or"]),
    ("on 03/14/2067.", ["on", "03/14/2067", "."]),
    ('"quoted"', ['"', "quoted", '"']),
])
def test_tokenize_examples(text, words):
    assert _words(text) == words


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("aZ9 .,-/()@:'\"\n")), max_size=60))
def test_token_offsets_exact(text):
    for s in split_sentences(text):
        toks = tokenize(text, s)
        prev = s.start
        for t in toks:
            assert text[t.start:t.end] == t.text
            assert prev <= t.start < t.end <= s.end
            prev = t.end
        assert "".join(text[s.start:s.end].split()) == "".join(t.text for t in toks)


@pytest.mark.parametrize("word,shape", [
    # runs longer than 4 are cut to 4: X + xxxxx -> X + xxxx
    ("Boston", "Xxxxx"),
    ("2067", "dddd"),
    ("A1-b", "Xdsx"),
    ("1234567", "dddd"),
    ("McDonald", "XxXxxxx"),
    ("", ""),
])
def test_word_shape(word, shape):
    assert word_shape(word) == shape


def _tags(sentence):
    (s,) = analyze(sentence)
    return [(t.text, t.pos) for t in s.tokens]


def test_pos_examples():
    assert dict(_tags("the patient went to Boston in 2067 ."))["the"] == "DET"
    tags = dict(_tags("He moved to Boston in 2067."))
    assert tags["Boston"] == "PROPN" and tags["2067"] == "NUM" and tags["."] == "PUNCT"
    assert tags["He"] == "PRON" and tags["to"] == "ADP"


def test_pos_fixture_mid_sentence_proper_nouns():
    lines = [ln for ln in (DATA / "pos_fixture.txt").read_text().splitlines()
             if ln and not ln.startswith("#")]
    assert len(lines) == 50
    for line in lines:
        target = line[line.index("[") + 1:line.index("]")]
        text = line.replace("[", "").replace("]", "")
        tags = [p for w, p in _tags(text) if w == target]
        assert tags == ["PROPN"], line


def test_pos_tag_deterministic_and_total():
    rng = random.Random(0)
    words = ["the", "Boston", "quickly", "ran", "2067", "!", "@", "walking", "blue"]
    toks = [Token(w, 0, len(w)) for w in rng.choices(words, k=200)]
    a, b = pos_tag(toks), pos_tag(toks)
    assert a == b and len(a) == 200 and None not in a


def test_analyze_attaches_shape_and_pos():
    (s,) = analyze("Seen on 03/14/2067.")
    assert isinstance(s, Sentence)
    assert all(t.shape and t.pos for t in s.tokens)
