"""Molecular weight, Crippen LogP and element counts."""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..chem.elements import ATOMIC_WEIGHT
from ..exceptions import UnknownElementMass
from ..validation import check_molecules
from .crippen import atom_types, crippen_logp

__all__ = [
    "DescriptorTransformer", "DescriptorVector", "atom_types", "compute_descriptors",
    "crippen_logp", "element_counts", "mol_weight",
]


def mol_weight(mol):
    """Molecular weight in u, including implicit hydrogens.

    Atoms with an isotope label contribute their mass number.
    """
    values = []
    h_weight = ATOMIC_WEIGHT["H"]
    for a in mol.atoms:
        if a.isotope is not None:
            values.append(float(a.isotope))
        else:
            try:
                values.append(ATOMIC_WEIGHT[a.element])
            except KeyError:
                raise UnknownElementMass(a.element) from None
        values.extend([h_weight] * a.total_h)
    # fsum makes the result independent of atom order
    return math.fsum(values)


def element_counts(mol):
    """Element symbol -> count, hydrogens included."""
    counts = Counter()
    for a in mol.atoms:
        counts[a.element] += 1
        if a.total_h:
            counts["H"] += a.total_h
    return dict(counts)


@dataclass(frozen=True)
class DescriptorVector:
    mol_weight: float
    logp: float
    element_counts: Dict[str, int] = field(compare=True)
    heavy_atom_count: int = 0


def compute_descriptors(mol):
    counts = element_counts(mol)
    heavy = sum(1 for a in mol.atoms if a.element != "H")
    return DescriptorVector(mol_weight(mol), crippen_logp(mol), counts, heavy)


class DescriptorTransformer(TransformerMixin, BaseEstimator):
    """Map SMILES (or molecules) to ``[mol_weight, logp]`` rows.

    Stateless; ``fit`` only validates input.
    """

    def fit(self, X, y=None):
        check_molecules(X)
        return self

    def transform(self, X):
        mols = check_molecules(X)
        return np.array([[mol_weight(m), crippen_logp(m)] for m in mols], dtype=float).reshape(-1, 2)

    def get_feature_names_out(self, input_features=None):
        return np.array(["mol_weight", "logp"], dtype=object)
