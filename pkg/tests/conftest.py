import numpy as np
import pytest

from estdetect.fusion import fuse
from estdetect.synth import SynthConfig, generate_corpus

GATE_SEED = 20240601


@pytest.fixture(scope="session")
def default_corpus():
    return generate_corpus(SynthConfig(seed=GATE_SEED))


@pytest.fixture(scope="session")
def null_corpus():
    return generate_corpus(SynthConfig(separation=0.0, seed=GATE_SEED))


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(SynthConfig(n_clips_per_class=12, frames_min=40, frames_max=200,
                                       aux_blocks=(("me", 8),), seed=11))


@pytest.fixture(scope="session")
def est_records(default_corpus):
    return fuse([default_corpus.est_block()], default_corpus.manifest)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
