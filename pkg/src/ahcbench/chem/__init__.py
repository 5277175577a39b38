"""SMILES parsing, canonical keys and randomized rendering."""

from .canon import canonical_smiles, render_random_smiles, write_smiles
from .molecule import AROMATIC, DOUBLE, SINGLE, TRIPLE, Atom, Bond, Molecule
from .smiles import parse_smiles, read_smiles_file, read_smiles_lines
from .tokenizer import Token, tokenize


def canonical_key(mol):
    """Canonical identity key of a molecule (cached on the instance)."""
    return mol.canonical_key


__all__ = [
    "AROMATIC", "DOUBLE", "SINGLE", "TRIPLE", "Atom", "Bond", "Molecule", "Token",
    "canonical_key", "canonical_smiles", "parse_smiles", "read_smiles_file",
    "read_smiles_lines", "render_random_smiles", "tokenize", "write_smiles",
]
