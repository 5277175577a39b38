import numpy as np
import pytest
from hypothesis import given, strategies as st

from ahcbench.chem import parse_smiles, render_random_smiles
from ahcbench.exceptions import WidthMismatch
from ahcbench.fingerprint import ECFPTransformer, Fingerprint, atom_identifiers, ecfp, fnv1a_64, tanimoto


def test_fnv_reference_vectors():
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_methane_single_bit():
    assert len(ecfp(parse_smiles("C"))) == 1


def test_benzene_symmetric_environments():
    fp = ecfp(parse_smiles("c1ccccc1"))
    assert len(fp) == 3  # one environment per radius, all carbons equivalent


def test_rendering_invariance(corpus_mols):
    for m in corpus_mols[:50]:
        ref = ecfp(m)
        for seed in range(20):
            assert ecfp(parse_smiles(render_random_smiles(m, seed))) == ref
    assert ecfp(parse_smiles("OCC")) == ecfp(parse_smiles("CCO"))


def test_environment_bound(corpus_mols):
    for m in corpus_mols[:100]:
        heavy = sum(1 for a in m.atoms if a.element != "H")
        assert len(atom_identifiers(m, 2)) <= heavy * 3


def test_bits_within_width(corpus_mols):
    for m in corpus_mols[:50]:
        fp = ecfp(m, 2, 1024)
        assert all(0 <= b < 1024 for b in fp.on_bits)


def test_width_must_be_power_of_two():
    with pytest.raises(ValueError):
        ecfp(parse_smiles("C"), 2, 1000)


def test_tanimoto_examples():
    a = Fingerprint(8, frozenset({1, 2, 3}))
    b = Fingerprint(8, frozenset({2, 3, 4}))
    assert tanimoto(a, b) == 0.5
    assert tanimoto(a, a) == 1.0
    assert tanimoto(a, Fingerprint(8, frozenset({5, 6}))) == 0.0
    assert tanimoto(Fingerprint(8, frozenset()), Fingerprint(8, frozenset())) == 0.0
    with pytest.raises(WidthMismatch):
        tanimoto(a, Fingerprint(16, frozenset({1})))


@given(st.frozensets(st.integers(0, 63)), st.frozensets(st.integers(0, 63)))
def test_tanimoto_symmetric_and_bounded(x, y):
    a, b = Fingerprint(64, x), Fingerprint(64, y)
    assert tanimoto(a, b) == tanimoto(b, a)
    assert 0.0 <= tanimoto(a, b) <= 1.0


def test_transformer():
    t = ECFPTransformer(width=256).fit(["CCO"])
    X = t.transform(["CCO", "c1ccccc1"])
    assert X.shape == (2, 256) and X.dtype == np.uint8
    assert X[1].sum() == 3
