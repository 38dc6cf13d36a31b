import time
import warnings

import pytest

from phiscrub.corpus import split_corpus
from phiscrub.scrub import PhiScrubber, ScrubPipeline
from phiscrub.synthetic import GeneratorConfig, generate_synthetic

CORPUS_SEED = 7

# criterion number -> (passed, title, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        ACCEPTANCE[n] = (rep.passed, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synthetic_split():
    """The fixed-seed 1,000-record corpus, split 9:1."""
    records = generate_synthetic(GeneratorConfig(count=1000), seed=CORPUS_SEED)
    return split_corpus(records, 0.9, seed=CORPUS_SEED)


@pytest.fixture(scope="session")
def trained(synthetic_split):
    """(PhiScrubber, training seconds) fitted with default hyperparameters."""
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = PhiScrubber().fit(synthetic_split.train)
    return est, time.perf_counter() - t0


@pytest.fixture(scope="session")
def scrubber(trained):
    return trained[0]


@pytest.fixture(scope="session")
def pipeline(scrubber):
    return ScrubPipeline(scrubber.model_)


@pytest.fixture(scope="session")
def model_file(scrubber, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.crf"
    scrubber.model_.save(path)
    return path
