import itertools
import random
import warnings
from collections import Counter

import pytest

from phiscrub.corpus import (AnnotatedRecord, BioSequence, GoldSpan, bio_to_spans, load_corpus,
                             parse_record, read_manifest, serialize_record, split_corpus, to_bio,
                             write_manifest, write_record)
from phiscrub.exceptions import (EmptyCorpus, InvalidConfig, MalformedXml, OffsetMismatch,
                                 OverlappingAnnotation, SmallSplitWarning, SpanCrossesSentence,
                                 UnknownCategory)
from phiscrub.labels import (PHI_LABELS, SUBTYPES, Category, NormalizedLabel as NL, PhiCategory,
                             PhiSpan, Source, normalize_label)
from phiscrub.synthetic import GeneratorConfig, generate_synthetic
from phiscrub.tokenization import Token, analyze

BODY = "Patient seen on 2067-01-01 by Dr. Lee."


def _xml(tags, body=BODY):
    return f"<deIdi2b2><TEXT>{body}</TEXT><TAGS>{tags}</TAGS></deIdi2b2>"


# -- labels ----------------------------------------------------------------

@pytest.mark.parametrize("cat,sub,expected", [
    ("NAME", "DOCTOR", NL.NAME),
    ("NAME", "PATIENT", NL.NAME),
    ("NAME", "USERNAME", NL.NAME),
    ("LOCATION", "HOSPITAL", NL.ORG),
    ("LOCATION", "ORGANIZATION", NL.ORG),
    ("LOCATION", "CITY", NL.CITY),
    ("LOCATION", "ZIP", NL.ZIP),
    ("LOCATION", "OTHER", NL.LOC_OTHER),
    ("CONTACT", "EMAIL", NL.EMAIL),
    ("CONTACT", "FAX", NL.FAX),
    ("ID", "SSN", NL.IDNUM),
    ("ID", "MRN", NL.IDNUM),
    ("AGE", None, NL.AGE),
    ("DATE", None, NL.DATE),
    ("PROFESSION", None, NL.PROFESSION),
])
def test_normalize_label_examples(cat, sub, expected):
    assert normalize_label(PhiCategory(cat, sub)) is expected


def test_normalize_label_is_total_and_never_o():
    for cat, subs in SUBTYPES.items():
        for sub in (None,) + subs:
            assert normalize_label(PhiCategory(cat, sub)) is not NL.O


def test_phi_category_rejects_bad_subtype():
    with pytest.raises(UnknownCategory):
        PhiCategory("NAME", "CITY")
    with pytest.raises(UnknownCategory):
        PhiCategory("WEATHER")


def test_phi_category_parse_tolerates_i2b2_spellings():
    assert PhiCategory.parse("date", "DATE") == PhiCategory(Category.DATE)
    assert PhiCategory.parse("LOCATION", "location-other").subtype == "OTHER"
    assert PhiCategory.parse("CONTACT", "IPADDR").subtype == "IPADDRESS"
    assert PhiCategory.parse("IDS", "MEDICALRECORD") == PhiCategory(Category.ID, "MRN")


def test_phi_span_invariants():
    with pytest.raises(ValueError):
        PhiSpan(3, 3, NL.NAME)
    with pytest.raises(ValueError):
        PhiSpan(0, 2, NL.O)
    sp = PhiSpan(0, 4, "name", Source.REGEX)
    assert sp.label is NL.NAME and len(sp) == 4
    assert sp.shifted(10) == PhiSpan(10, 14, NL.NAME, Source.REGEX)


# -- parsing ---------------------------------------------------------------

def test_parse_record_date_span():
    rec = parse_record(_xml('<DATE id="P0" start="16" end="26" text="2067-01-01" TYPE="DATE"/>'))
    assert rec.text[16:26] == "2067-01-01"
    assert [(s.start, s.end, s.normalized) for s in rec.spans] == [(16, 26, NL.DATE)]


def test_parse_record_without_tags():
    assert parse_record(_xml("")).spans == ()
    assert parse_record("<r><TEXT>hello</TEXT></r>").spans == ()


def test_parse_record_surface_mismatch():
    with pytest.raises(OffsetMismatch):
        parse_record(_xml('<DATE id="P0" start="16" end="26" text="2067-01-02" TYPE="DATE"/>'))


def test_parse_record_offsets_out_of_range():
    with pytest.raises(OffsetMismatch):
        parse_record(_xml('<DATE id="P0" start="30" end="99" TYPE="DATE"/>'))


@pytest.mark.parametrize("xml", ["<r><TEXT>x</TEXT>", "<r><BODY>x</BODY></r>", "plain",
                                 _xml('<DATE id="P0" start="a" end="2" TYPE="DATE"/>')])
def test_parse_record_malformed(xml):
    with pytest.raises(MalformedXml):
        parse_record(xml)


def test_parse_record_unknown_category():
    with pytest.raises(UnknownCategory):
        parse_record(_xml('<WEATHER id="P0" start="0" end="7" TYPE="SUNNY"/>'))


def test_overlapping_annotations_rejected():
    with pytest.raises(OverlappingAnnotation):
        parse_record(_xml('<DATE id="P0" start="16" end="26" TYPE="DATE"/>'
                          '<DATE id="P1" start="20" end="30" TYPE="DATE"/>'))


def test_serialize_round_trip_with_special_characters(tmp_path):
    text = 'A & B <tag> "q"\r\nline2\ttab'
    rec = AnnotatedRecord("r&1", text, [GoldSpan(0, 1, "A", PhiCategory("NAME", "PATIENT")),
                                       GoldSpan(12, 15, '"q"', PhiCategory("PROFESSION"))])
    back = parse_record(serialize_record(rec))
    assert back.text == text and back.spans == rec.spans and back.id == "r&1"
    write_record(rec, tmp_path / "x.xml")
    write_manifest([tmp_path / "x.xml"], tmp_path / "m.txt")
    assert (tmp_path / "m.txt").read_text() == "x.xml\n"
    assert read_manifest(tmp_path / "m.txt") == [tmp_path / "x.xml"]
    assert load_corpus(tmp_path / "m.txt")[0].spans == rec.spans


# -- split -----------------------------------------------------------------

def test_split_1304_gives_1173_131():
    sp = split_corpus(list(range(1304)), 0.9, seed=1)
    assert (len(sp.train), len(sp.test)) == (1173, 131)


def test_split_is_a_deterministic_partition():
    recs = list(range(10))
    a, b = split_corpus(recs, 0.9, 5), split_corpus(recs, 0.9, 5)
    assert a.train == b.train and a.test == b.test
    assert sorted(a.train + a.test) == recs and not set(a.train) & set(a.test)
    assert a.train == sorted(a.train)


def test_split_single_record_warns():
    with pytest.warns(SmallSplitWarning):
        sp = split_corpus(["only"], 0.9)
    assert sp.train == ["only"] and sp.test == [] and sp.warnings


def test_split_empty_rejected():
    with pytest.raises(EmptyCorpus):
        split_corpus([], 0.9)


# -- BIO -------------------------------------------------------------------

def _record(text, spans):
    return AnnotatedRecord("t", text, [GoldSpan(s, e, text[s:e], PhiCategory(*c))
                                       for s, e, c in spans])


def test_to_bio_multi_token_name():
    text = "We saw the patient John Q Smith today."
    s = text.index("John")
    rec = _record(text, [(s, s + len("John Q Smith"), ("NAME", "PATIENT"))])
    (seq,) = to_bio(rec, analyze(text))
    assert list(seq.tags) == ["O"] * 4 + ["B-NAME", "I-NAME", "I-NAME", "O", "O"]


def test_to_bio_no_spans_all_o():
    text = "Nothing to see here."
    (seq,) = to_bio(_record(text, []), analyze(text))
    assert set(seq.tags) == {"O"}


def test_to_bio_snaps_mid_token_span_outward():
    text = "Seen at Bostonian clinic."
    rec = _record(text, [(8, 14, ("LOCATION", "CITY"))])   # "Boston" inside "Bostonian"
    (seq,) = to_bio(rec, analyze(text))
    assert seq.tags[2] == "B-CITY"
    (span,) = bio_to_spans(seq)
    assert span.start <= 8 and span.end >= 14 and text[span.start:span.end] == "Bostonian"


def test_to_bio_span_crossing_sentences_is_split():
    text = "He met Ann. Lee came later."
    rec = _record(text, [(7, 15, ("NAME", "PATIENT"))])
    with pytest.warns(SpanCrossesSentence):
        seqs = to_bio(rec, analyze(text))
    assert seqs[0].tags[2] == "B-NAME" and seqs[1].tags[0] == "B-NAME"


def test_to_bio_respects_enabled_labels():
    text = "The nurse John arrived."
    rec = _record(text, [(4, 9, ("PROFESSION",)), (10, 14, ("NAME", "DOCTOR"))])
    (seq,) = to_bio(rec, analyze(text), enabled_labels={NL.NAME})
    assert list(seq.tags) == ["O", "O", "B-NAME", "O", "O"]


def _toks(n):
    return tuple(Token(f"w{i}", 3 * i, 3 * i + 2) for i in range(n))


def test_bio_to_spans_examples():
    toks = _toks(4)
    (sp,) = bio_to_spans(BioSequence(toks, ["O", "B-DATE", "I-DATE", "O"]))
    assert (sp.start, sp.end, sp.label) == (3, 8, NL.DATE)
    (sp,) = bio_to_spans(BioSequence(toks[:3], ["O", "I-DATE", "O"]))
    assert (sp.start, sp.end) == (3, 5)
    assert bio_to_spans(BioSequence(toks, ["O"] * 4)) == []


def _reference_decode(tags):
    """Spans as (first, last) token indices: a new span opens on B-, on an
    I- after O, or on an I- whose label differs from the open span."""
    out, cur = [], None
    for i, tag in enumerate(tags):
        if tag == "O":
            cur = None
            continue
        p, lab = tag.split("-", 1)
        if cur is not None and p == "I" and out[-1][2] == lab:
            out[-1][1] = i
        else:
            out.append([i, i, lab])
            cur = lab
    return [tuple(x) for x in out]


def test_bio_to_spans_exhaustive_three_tokens():
    alphabet = ["O", "B-DATE", "I-DATE", "B-NAME", "I-NAME"]
    toks = _toks(3)
    for tags in itertools.product(alphabet, repeat=3):
        got = [(s.start, s.end, s.label.value) for s in bio_to_spans(BioSequence(toks, tags))]
        want = [(toks[a].start, toks[b].end, lab) for a, b, lab in _reference_decode(tags)]
        assert got == want, tags


def test_bio_round_trip_contains_gold_on_synthetic():
    for rec in generate_synthetic(GeneratorConfig(count=30), seed=11):
        sents = analyze(rec.text)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            seqs = to_bio(rec, sents)
        decoded = [sp for seq in seqs for sp in bio_to_spans(seq)]
        for g in rec.phi_spans():
            assert any(d.start <= g.start and g.end <= d.end and d.label is g.label
                       for d in decoded), (rec.id, g)


# -- synthetic -------------------------------------------------------------

def test_generate_count_zero():
    assert generate_synthetic(GeneratorConfig(count=0), seed=1) == []


def test_generate_deterministic():
    a = generate_synthetic(GeneratorConfig(count=20), seed=3)
    b = generate_synthetic(GeneratorConfig(count=20), seed=3)
    assert [serialize_record(r) for r in a] == [serialize_record(r) for r in b]
    c = generate_synthetic(GeneratorConfig(count=20), seed=4)
    assert [r.text for r in a] != [r.text for r in c]


def test_generate_covers_every_label(synthetic_split):
    counts = Counter(sp.label for r in synthetic_split.train + synthetic_split.test
                     for sp in r.phi_spans())
    for lab in PHI_LABELS:
        assert counts[lab] >= 10, lab


def test_generator_config_validation(tmp_path):
    with pytest.raises(InvalidConfig):
        GeneratorConfig(count=-1).validate()
    with pytest.raises(InvalidConfig):
        GeneratorConfig(weights={"BOGUS": 1}).validate()
    p = tmp_path / "gen.cfg"
    p.write_text("count = 5\nseed = 2\nweight.NAME = 3\n")
    cfg = GeneratorConfig.from_file(p)
    assert (cfg.count, cfg.seed, cfg.weights) == (5, 2, {"NAME": 3.0})
    p.write_text("colour = blue\n")
    with pytest.raises(InvalidConfig):
        GeneratorConfig.from_file(p)


def test_generated_records_satisfy_invariants():
    rng = random.Random(0)
    for rec in generate_synthetic(GeneratorConfig(count=40), seed=rng.randrange(10**6)):
        prev = 0
        for sp in rec.spans:
            assert prev <= sp.start < sp.end <= len(rec.text)
            assert rec.text[sp.start:sp.end] == sp.surface
            prev = sp.end
