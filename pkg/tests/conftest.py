import numpy as np
import pytest

from ahcbench import DESK_CORPUS
from ahcbench.chem import parse_smiles
from ahcbench.chem.smiles import read_smiles_lines
from ahcbench.policy import GruLM, Vocabulary, pretrain
from ahcbench.refstats import stats_from_molecules


@pytest.fixture(scope="session")
def corpus_smiles():
    return list(read_smiles_lines(DESK_CORPUS))


@pytest.fixture(scope="session")
def corpus_mols(corpus_smiles):
    return [parse_smiles(s) for s in corpus_smiles[:300]]


@pytest.fixture(scope="session")
def small_stats(corpus_smiles):
    mols = [parse_smiles(s) for s in corpus_smiles[:1000]]
    return stats_from_molecules(mols, source_digest="test")


@pytest.fixture(scope="session")
def tiny_prior(corpus_smiles):
    model = GruLM(Vocabulary.build(corpus_smiles), embed_dim=16, hidden_dim=32, n_layers=1, seed=0)
    pretrain(model, corpus_smiles[:1000], epochs=4, batch_size=64, lr=1e-2, seed=0)
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
