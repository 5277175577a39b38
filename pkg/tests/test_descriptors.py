import numpy as np
import pytest
from sklearn.base import clone

from ahcbench.chem import parse_smiles, render_random_smiles
from ahcbench.descriptors import (
    DescriptorTransformer, atom_types, compute_descriptors, crippen_logp, element_counts, mol_weight,
)
from ahcbench.exceptions import UnknownElementMass


@pytest.mark.parametrize("smiles,mw", [("C", 16.043), ("O", 18.015), ("c1ccccc1", 78.114)])
def test_mol_weight_hand_sums(smiles, mw):
    assert mol_weight(parse_smiles(smiles)) == pytest.approx(mw, abs=1e-3)


def test_isotope_uses_mass_number():
    assert mol_weight(parse_smiles("[13CH4]")) == pytest.approx(13 + 4 * 1.008, abs=1e-9)


@pytest.mark.parametrize("smiles,logp", [("C", 0.6361), ("CC", 1.0262)])
def test_logp_hand_values(smiles, logp):
    assert crippen_logp(parse_smiles(smiles)) == pytest.approx(logp, abs=1e-4)


def test_noble_gas_gets_wildcard():
    assert crippen_logp(parse_smiles("[Ar]")) == 0.0


def test_element_counts_examples():
    assert element_counts(parse_smiles("CCO")) == {"C": 2, "O": 1, "H": 6}
    assert element_counts(parse_smiles("c1ccccc1")) == {"C": 6, "H": 6}
    assert element_counts(parse_smiles("[NH4+]")) == {"N": 1, "H": 4}


def test_counts_sum_to_total_atoms(corpus_mols):
    for m in corpus_mols[:50]:
        assert sum(element_counts(m).values()) == m.total_atom_count


def test_every_atom_typed(corpus_mols):
    for m in corpus_mols:
        types, h_types = atom_types(m)
        assert len(types) + sum(len(h) for h in h_types) == m.total_atom_count
        assert all(types) and all(all(h) for h in h_types)


def test_fragment_additivity():
    a, b = parse_smiles("CCO"), parse_smiles("c1ccncc1")
    ab = parse_smiles("CCO.c1ccncc1")
    assert mol_weight(ab) == pytest.approx(mol_weight(a) + mol_weight(b), abs=1e-9)
    assert crippen_logp(ab) == pytest.approx(crippen_logp(a) + crippen_logp(b), abs=1e-9)


def test_rendering_invariance(corpus_mols):
    for m in corpus_mols[:30]:
        ref = compute_descriptors(m)
        for seed in range(20):
            assert compute_descriptors(parse_smiles(render_random_smiles(m, seed))) == ref


def test_unknown_mass(monkeypatch):
    from ahcbench.chem import elements
    monkeypatch.delitem(elements.ATOMIC_WEIGHT, "Rn")
    with pytest.raises(UnknownElementMass):
        mol_weight(parse_smiles("[Rn]"))


def test_transformer_api():
    t = DescriptorTransformer()
    X = np.array(["C", "CC", "c1ccccc1"])
    out = t.fit_transform(X)
    assert out.shape == (3, 2)
    assert out[0, 1] == pytest.approx(0.6361, abs=1e-4)
    assert list(t.get_feature_names_out()) == ["mol_weight", "logp"]
    assert clone(t).get_params() == {}
