import pytest
from hypothesis import given, settings, strategies as st

from ahcbench.chem import parse_smiles, render_random_smiles, tokenize
from ahcbench.chem.smiles import read_smiles_file, read_smiles_lines
from ahcbench.exceptions import (
    AromaticityError, SmilesSyntaxError, UnbalancedBranch, UnknownCharacter, UnmatchedRingClosure,
    UnsupportedFeature, UnterminatedBracket, UnterminatedBranch, ValenceViolation,
)

MALFORMED = [
    ("C1CC", UnmatchedRingClosure),
    ("C=1CC=1C2", UnmatchedRingClosure),
    ("C(=O", UnterminatedBranch),
    ("C((C)", UnterminatedBranch),
    ("C1CCCC(C1", UnterminatedBranch),
    ("CC)C", UnbalancedBranch),
    ("[CH4", UnterminatedBracket),
    ("C&C", UnknownCharacter),
    ("*C", UnknownCharacter),
    ("C%1", UnknownCharacter),
    ("F/C=C/F", UnsupportedFeature),
    ("F\\C=C\\F", UnsupportedFeature),
    ("C[C@H](O)N", UnsupportedFeature),
    ("C$C", UnsupportedFeature),
    ("[*]", UnsupportedFeature),
    ("[C:1]", UnsupportedFeature),
    ("C(C)(C)(C)(C)C", ValenceViolation),
    ("O(C)(C)C", ValenceViolation),
    ("Cl(C)C", ValenceViolation),
    ("N(C)(C)(C)C", ValenceViolation),
    ("C==C", SmilesSyntaxError),
    ("C=", SmilesSyntaxError),
    ("(C)C", SmilesSyntaxError),
    ("[Xx]", SmilesSyntaxError),
    ("c1cccc1", AromaticityError),
]


def test_malformed_list_has_25_entries():
    assert len(MALFORMED) == 25


@pytest.mark.parametrize("text,kind", MALFORMED)
def test_malformed_rejected_with_kind(text, kind):
    with pytest.raises(kind):
        parse_smiles(text)


def test_unterminated_branch_is_unbalanced_branch():
    with pytest.raises(UnbalancedBranch):
        parse_smiles("C(=O")


def test_tokenize_examples():
    assert [t.text for t in tokenize("CCl")] == ["C", "Cl"]
    assert [t.text for t in tokenize("[nH]1cccc1")] == ["[nH]", "1", "c", "c", "c", "c", "1"]
    assert len(tokenize("C(=O")) == 4
    assert [t.text for t in tokenize("C%12CC%12")] == ["C", "%12", "C", "C", "%12"]


def test_tokenize_errors():
    with pytest.raises(UnknownCharacter):
        tokenize("C^C")
    with pytest.raises(UnterminatedBracket):
        tokenize("C[NH4+")


def test_parse_examples():
    m = parse_smiles("C")
    assert len(m.atoms) == 1 and m.atoms[0].implicit_h == 4
    b = parse_smiles("c1ccccc1")
    assert all(a.aromatic and a.implicit_h == 1 for a in b.atoms)
    pyridine = parse_smiles("c1ccncc1")
    assert [a.implicit_h for a in pyridine.atoms] == [1, 1, 1, 0, 1, 1]
    pyrrole = parse_smiles("[nH]1cccc1")
    assert pyrrole.atoms[0].total_h == 1


@pytest.mark.parametrize("smiles,h", [
    ("B", 3), ("N", 3), ("O", 2), ("P", 3), ("S", 2), ("F", 1), ("Cl", 1), ("Br", 1), ("I", 1),
    ("O=P(O)(O)O", None), ("CS(=O)(=O)C", None),
])
def test_organic_valences(smiles, h):
    m = parse_smiles(smiles)
    if h is not None:
        assert m.atoms[0].implicit_h == h


def test_bracket_atoms_have_no_implicit_h():
    m = parse_smiles("[NH4+]")
    a = m.atoms[0]
    assert a.implicit_h == 0 and a.explicit_h == 4 and a.formal_charge == 1


def test_canonical_key_examples():
    assert parse_smiles("OCC").canonical_key == parse_smiles("CCO").canonical_key
    assert parse_smiles("CCO").canonical_key != parse_smiles("CCN").canonical_key
    assert parse_smiles("OCC") == parse_smiles("CCO")


def test_render_examples():
    assert render_random_smiles(parse_smiles("C"), 0) == "C"
    ring = parse_smiles("C1CCCCCCCCC1")
    a, b = render_random_smiles(ring, 1), render_random_smiles(ring, 2)
    assert parse_smiles(a).canonical_key == parse_smiles(b).canonical_key == ring.canonical_key


def test_twenty_atom_molecule_100_renderings():
    mol = parse_smiles("CC(C)Cc1ccc(cc1)C(C)C(=O)NCCc1ccccc1O")
    keys = {parse_smiles(render_random_smiles(mol, s)).canonical_key for s in range(100)}
    assert len(keys) == 1


def test_multi_fragment_accepted():
    m = parse_smiles("CC(=O)[O-].[Na+]")
    assert len(m.fragments) == 2


def test_corpus_tokenizer_lossless(corpus_smiles):
    for s in corpus_smiles[:2000]:
        assert "".join(t.text for t in tokenize(s)) == s


def test_corpus_round_trip(corpus_mols):
    for m in corpus_mols[:100]:
        for seed in range(20):
            r = parse_smiles(render_random_smiles(m, seed))
            assert r.canonical_key == m.canonical_key
            assert r.total_atom_count == m.total_atom_count


@settings(max_examples=60, deadline=None)
@given(idx=st.integers(0, 299), seed=st.integers(0, 2**31 - 1))
def test_round_trip_property(corpus_mols, idx, seed):
    m = corpus_mols[idx]
    assert parse_smiles(render_random_smiles(m, seed)).canonical_key == m.canonical_key


def test_read_smiles_file_skips_bad_lines(tmp_path):
    p = tmp_path / "c.smi"
    p.write_text("# header\nCCO ethanol\n\nC1CC broken\nc1ccccc1\n")
    assert list(read_smiles_lines(p)) == ["CCO", "C1CC", "c1ccccc1"]
    records, skipped = read_smiles_file(p)
    assert skipped == 1 and len(records) == 2
