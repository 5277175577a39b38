import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from ahcbench.descriptors import DescriptorTransformer
from ahcbench.fingerprint import ECFPTransformer
from ahcbench.optimize import AugmentedHillClimb
from ahcbench.policy import SmilesRNN
from ahcbench.refstats import PropertyFilter
from ahcbench.validation import check_smiles

ESTIMATORS = [DescriptorTransformer(), ECFPTransformer(width=256), PropertyFilter(), SmilesRNN(),
              AugmentedHillClimb()]


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_params_round_trip(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(**params)
    assert type(twin) is type(est)


def test_transformers_in_pipeline(corpus_smiles):
    X = np.array(corpus_smiles[:20])
    fp = ECFPTransformer(width=256).fit_transform(X)
    assert fp.shape == (20, 256) and set(np.unique(fp)) <= {0, 1}
    desc = DescriptorTransformer().fit_transform(X.reshape(-1, 1))
    assert desc.shape[0] == 20
    pipe = make_pipeline(ECFPTransformer(width=128))
    assert pipe.fit_transform(X).shape == (20, 128)


def test_check_smiles_rejects_non_strings():
    assert check_smiles("CCO") == ["CCO"]
    with pytest.raises(TypeError):
        check_smiles([1, 2])
    with pytest.raises(ValueError):
        check_smiles(np.array([["C", "O"], ["N", "S"]]))


def test_unfitted_errors():
    with pytest.raises(AttributeError):
        SmilesRNN().sample(1)
    with pytest.raises(AttributeError):
        AugmentedHillClimb().best()
