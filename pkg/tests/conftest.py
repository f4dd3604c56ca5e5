from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relcom import synth


@pytest.fixture(scope="session")
def std_cfg():
    """Standard deterministic synthetic scenario used across test files."""
    cfg = synth.SynthConfig(seed=11, background=6, bulk_posters=320)
    cfg.pairs[0].k = 15
    cfg.pairs[1].k = 15
    cfg.validate()
    return cfg


@pytest.fixture(scope="session")
def std_corpus(std_cfg):
    return synth.generate(std_cfg)


@pytest.fixture(scope="session")
def std_index(std_corpus):
    return synth.index_from_events(std_corpus[0])
