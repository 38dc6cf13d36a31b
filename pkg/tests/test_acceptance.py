"""Acceptance gates. Run with ``pytest tests/test_acceptance.py`` or
``python tests/test_acceptance.py``; one PASS/FAIL line per criterion is
printed at the end of the session."""

import io
import random
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import brute_log_partition, brute_scores, extended_objective
from phiscrub._validation import check_sentence
from phiscrub.crf import (CRFTagger, FeatureTemplateSet, TrainConfig, TrainingData, log_partition,
                          objective_and_gradient, viterbi)
from phiscrub.crf.training import harvest_features, label_set, position_features
from phiscrub.evaluation import EvalMode, collate_benchmark_file, evaluate_records, run_benchmark
from phiscrub.regex_phi import recognize
from phiscrub.scrub import RESERVED_WORDS, apply_replacements, scrub_document, scrub_stream
from phiscrub.labels import PhiSpan

DATA = Path(__file__).parent / "data"


@pytest.mark.criterion(1, "CRF inference matches brute force")
def test_inference_oracle(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        T, L = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        u, a = rng.normal(size=(T, L)) * 3, rng.normal(size=(L, L)) * 3
        # quantized potentials make exact ties common
        if rng.random() < 0.3:
            u, a = np.round(u), np.round(a)
        scores = brute_scores(u.tolist(), a.tolist())
        path, score = viterbi(u, a)
        best = max(scores.values())
        assert score == best and scores[tuple(path)] == best
        # lowest final label, then lowest back-pointer: the reverse-lexicographic minimum
        assert tuple(path) == min((p for p, s in scores.items() if s == best), key=lambda p: p[::-1])
        err = abs(log_partition(u, a) - brute_log_partition(u.tolist(), a.tolist()))
        worst = max(worst, err)
        assert err <= 1e-8
    elapsed = time.perf_counter() - t0
    record_property("detail", f"100 models, max |logZ err| {worst:.1e}, {elapsed:.2f} s")
    assert elapsed < 10


def _gradient_data():
    sents = [["Mr.", "Jerry", "Jones", "was", "seen", "on", "03/14/2067", "."],
             ["Call", "(617)", "555-0123", "or", "email", "jdoe@example.org", "today"],
             ["Discharged", "to", "Boston", "General", "Hospital", "with", "Dr.", "Smith"]]
    tags = [["O", "B-NAME", "I-NAME", "O", "O", "O", "B-DATE", "O"],
            ["O", "B-PHONE", "I-PHONE", "O", "O", "B-EMAIL", "O"],
            ["O", "O", "B-ORG", "I-ORG", "I-ORG", "O", "O", "B-NAME"]]
    sents = [check_sentence(s) for s in sents]
    T = FeatureTemplateSet()
    feats = position_features(sents, T)
    data = TrainingData(sents, tags, label_set(tags), harvest_features(feats), T, feats)
    return data, sents, tags


@pytest.mark.criterion(2, "gradient matches central finite differences")
def test_gradient_check(record_property):
    t0 = time.perf_counter()
    data, sents, tags = _gradient_data()
    assert data.n_features >= 200
    rng = np.random.default_rng(11)
    w = rng.normal(size=data.n_weights) * 0.5
    c2 = 1e-3
    value, g = objective_and_gradient(w, data, c2)
    # differences are taken on an extended-precision evaluation of the same
    # objective, so float64 round-off in f does not swamp small coordinates
    f = extended_objective(sents, tags, data.labels, data.feature_index, data.templates, c2)
    wl = w.astype(np.longdouble)
    F = data.n_features * data.n_labels
    assert abs(float(f(*_split(wl, data))) - value) <= 1e-12 * abs(value)
    h = np.longdouble(1e-5)
    worst, worst_abs = 0.0, 0.0
    for i in range(data.n_weights):
        wp, wm = wl.copy(), wl.copy()
        wp[i] += h
        wm[i] -= h
        num = float((f(*_split(wp, data)) - f(*_split(wm, data))) / (2 * h))
        diff = abs(num - g[i])
        rel = diff / max(abs(num), abs(g[i])) if diff else 0.0
        worst, worst_abs = max(worst, rel), max(worst_abs, diff)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{data.n_features} features, {data.n_weights} coords "
                              f"({F} unary), max rel err {worst:.1e}, max abs err {worst_abs:.1e}, "
                              f"{elapsed:.1f} s")
    assert worst <= 1e-4 and elapsed < 30


def _split(w, data):
    F, L = data.n_features, data.n_labels
    return w[:F * L].reshape(F, L), w[F * L:].reshape(L, L)


def _toy_set():
    first = ["John", "Mary", "Alice", "Peter", "Laura", "David", "Susan", "Mark", "Emma", "Paul"]
    last = ["Smith", "Jones", "Brown", "Clark", "Lewis", "Young", "Hall", "Allen", "King", "Scott"]
    verbs = ["visited", "called", "met", "saw", "helped"]
    months = ["January", "March", "June", "August", "October"]
    X, y = [], []
    for i in range(20):
        X.append([first[i % 10], last[(i * 3) % 10], verbs[i % 5], "us", "in",
                  months[i % 5], str(2000 + i)])
        y.append(["B-NAME", "I-NAME", "O", "O", "O", "B-DATE", "I-DATE"])
    return X, y


@pytest.mark.criterion(3, "training reaches >=99% on a separable toy set")
def test_training_sanity(record_property):
    X, y = _toy_set()
    cfg = TrainConfig()
    assert (cfg.c1, cfg.c2, cfg.max_iterations) == (0.1, 1e-3, 100)
    est = CRFTagger(c1=cfg.c1, c2=cfg.c2, max_iterations=cfg.max_iterations).fit(X, y)
    acc = est.score(X, y)
    hist = est.objective_history_
    monotone = all(b <= a for a, b in zip(hist, hist[1:]))
    record_property("detail", f"token accuracy {acc:.4f}, {est.n_iter_} iterations, "
                              f"objective {hist[0]:.2f} -> {hist[-1]:.2f}")
    assert acc >= 0.99 and est.n_iter_ <= 100 and monotone


@pytest.mark.criterion(4, "held-out synthetic EXACT micro F1 >= 0.85")
def test_synthetic_f1(trained, synthetic_split, record_property):
    est, seconds = trained
    assert len(synthetic_split.train) == 900 and len(synthetic_split.test) == 100
    exact = evaluate_records(est, synthetic_split.test, EvalMode.EXACT)
    overlap = evaluate_records(est, synthetic_split.test, EvalMode.OVERLAP)
    record_property("detail", f"EXACT F1 {exact.micro_f1:.4f} (P {exact.micro_precision:.4f} "
                              f"R {exact.micro_recall:.4f}), OVERLAP F1 {overlap.micro_f1:.4f}, "
                              f"train {seconds:.0f} s")
    assert exact.micro_f1 >= 0.85 and seconds < 600


@pytest.mark.criterion(5, "regex vector table passes 100%")
def test_regex_vectors(record_property):
    pos = neg = bad = 0
    kinds = set()
    for line in (DATA / "regex_vectors.tsv").read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        expected, text = line.split("\t", 1)
        want = [] if expected == "-" else [tuple(x.split("=", 1)) for x in expected.split(" | ")]
        got = [(sp.kind, text[sp.start:sp.end]) for sp in recognize(text)]
        if want:
            pos += 1
            kinds.update(k for k, _ in want)
        else:
            neg += 1
        bad += got != want
    record_property("detail", f"{pos} positive, {neg} negative, {bad} failing")
    assert pos >= 60 and neg >= 40 and bad == 0
    assert {"EMAIL", "URL", "IPADDRESS", "SSN", "PHONE", "ZIP", "IDNUM"} <= kinds


@pytest.mark.criterion(6, "2 MB scrub in <= 60 s; 10 MB completes")
def test_scalability(pipeline, synthetic_split, tmp_path, record_property):
    two = collate_benchmark_file(synthetic_split.test, 2_000_000, tmp_path / "2mb.txt")
    ten = collate_benchmark_file(synthetic_split.test, 10_000_000, tmp_path / "10mb.txt")
    (r2,) = run_benchmark(pipeline, two)
    (r10,) = run_benchmark(pipeline, ten)
    record_property("detail", f"2 MB {r2.outcome_text()} {r2.wall_ms} ms; "
                              f"10 MB {r10.outcome_text()} {r10.wall_ms} ms, peak spans {r10.peak_spans}")
    assert r2.ok and r2.wall_ms <= 60_000 and r2.file_bytes >= 2_000_000
    assert r10.ok and r10.file_bytes >= 10_000_000


@pytest.mark.criterion(7, "wall(2N) <= 2.5 x wall(N) at N = 1 MB")
def test_linear_scaling(pipeline, synthetic_split, tmp_path, record_property):
    one = collate_benchmark_file(synthetic_split.test, 1_000_000, tmp_path / "1mb.txt")
    two = collate_benchmark_file(synthetic_split.test, 2_000_000, tmp_path / "2mb.txt")
    # best of three damps scheduler noise on a shared machine
    t1 = min(r.wall_ms for r in run_benchmark(pipeline, one, repetitions=3))
    t2 = min(r.wall_ms for r in run_benchmark(pipeline, two, repetitions=3))
    record_property("detail", f"1 MB {t1} ms, 2 MB {t2} ms, ratio {t2 / t1:.2f}")
    assert t2 <= 2.5 * t1


@pytest.mark.criterion(8, "idempotence, preservation, stream == document on 50 docs")
def test_scrub_properties(scrubber, synthetic_split, record_property):
    model = scrubber.model_
    pool = list(synthetic_split.test) + list(synthetic_split.train)
    docs = random.Random(8).sample(pool, 50)
    n_reps = 0
    for rec in docs:
        res = scrub_document(rec.text, model)
        n_reps += len(res.replacements)
        assert scrub_document(res.scrubbed_text, model).scrubbed_text == res.scrubbed_text
        spans = [PhiSpan(r.input_start, r.input_end, r.label) for r in res.replacements]
        # rebuilding from the audit trail reproduces the output, so every byte
        # outside a replaced interval was copied unchanged
        assert apply_replacements(rec.text, spans).scrubbed_text == res.scrubbed_text
        assert all(r.placeholder in RESERVED_WORDS for r in res.replacements)
        out = io.BytesIO()
        scrub_stream(io.BytesIO(rec.text.encode("utf-8")), out, model, block_size=257)
        assert out.getvalue() == res.scrubbed_text.encode("utf-8")
    record_property("detail", f"50 documents, {n_reps} replacements")


@pytest.mark.criterion(9, "clinical note fixture: EMAIL/NUMBERS placement reproduced")
def test_fixture(scrubber, record_property):
    text = (DATA / "clinical_note.txt").read_text(encoding="utf-8")
    want = (DATA / "clinical_note.scrubbed.txt").read_text(encoding="utf-8")
    got = scrub_document(text, scrubber.model_).scrubbed_text
    gated = ("EMAIL", "NUMBERS")
    got_tokens = [w for w in got.split() if w.strip(".,") in gated]
    want_tokens = [w for w in want.split() if w.strip(".,") in gated]
    # the gated placeholders must sit in the same place relative to the rest
    context = [got.split()[i - 1] for i, w in enumerate(got.split()) if w in gated]
    want_context = [want.split()[i - 1] for i, w in enumerate(want.split()) if w in gated]
    names = got.count("PERSON"), want.count("PERSON")
    dates = got.count("DATE"), want.count("DATE")
    record_property("detail", f"exact match {got == want}; PERSON {names[0]}/{names[1]}, "
                              f"DATE {dates[0]}/{dates[1]} (reported, not gated)")
    assert got_tokens == want_tokens and context == want_context
    assert "jdoe@example.org" not in got and "555-0123" not in got and "4412785519" not in got


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
