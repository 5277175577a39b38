"""ECFP-style hashed circular fingerprints and Tanimoto similarity.

Identifiers are 64-bit FNV-1a hashes of a little-endian byte serialization,
so bits are identical on every platform and Python build.
"""

import struct
from dataclasses import dataclass
from typing import FrozenSet

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import WidthMismatch
from .validation import check_molecules, check_positive_int

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_INIT = struct.Struct("<6q")
_PAIR = struct.Struct("<qQ")


def fnv1a_64(data):
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class Fingerprint:
    width: int
    on_bits: FrozenSet[int]

    def __len__(self):
        return len(self.on_bits)

    def sorted_bits(self):
        return sorted(self.on_bits)

    def to_array(self):
        arr = np.zeros(self.width, dtype=np.uint8)
        if self.on_bits:
            arr[list(self.on_bits)] = 1
        return arr


def atom_identifiers(mol, radius=2):
    """Surviving ``(radius, identifier)`` environments after de-duplication.

    An environment whose atom set was already covered at a smaller radius is
    dropped; among same-radius environments covering the same atoms the
    smallest identifier is kept.
    """
    heavy = [i for i, a in enumerate(mol.atoms) if a.element != "H"]
    if not heavy:
        return []
    ring = mol.ring_atoms
    nbrs = {
        i: sorted((o, j) for j, o in mol.neighbors[i] if mol.atoms[j].element != "H")
        for i in heavy
    }
    ids = {}
    masks = {}
    for i in heavy:
        a = mol.atoms[i]
        ids[i] = fnv1a_64(_INIT.pack(
            a.atomic_number, len(nbrs[i]), mol.total_h(i), a.formal_charge,
            int(i in ring), int(a.aromatic),
        ))
        masks[i] = 1 << i
    seen = set()
    survivors = []
    layer = {}
    for i in heavy:
        m = masks[i]
        if m not in layer or ids[i] < layer[m]:
            layer[m] = ids[i]
    seen.update(layer)
    survivors.extend((0, ident) for ident in sorted(layer.values()))
    for r in range(1, radius + 1):
        new_ids = {}
        new_masks = {}
        for i in heavy:
            pairs = sorted((o, ids[j]) for o, j in nbrs[i])
            payload = _PAIR.pack(r, ids[i]) + b"".join(_PAIR.pack(o, nid) for o, nid in pairs)
            new_ids[i] = fnv1a_64(payload)
            m = masks[i]
            for _, j in nbrs[i]:
                m |= masks[j]
            new_masks[i] = m
        ids, masks = new_ids, new_masks
        layer = {}
        for i in heavy:
            m = masks[i]
            if m in seen:
                continue
            if m not in layer or ids[i] < layer[m]:
                layer[m] = ids[i]
        seen.update(layer)
        survivors.extend((r, ident) for ident in sorted(layer.values()))
    return survivors


def ecfp(mol, radius=2, width=2048):
    """Hashed circular fingerprint (radius 2 corresponds to ECFP4).

    Args:
        mol (Molecule): molecule.
        radius (int): number of neighbourhood expansions.
        width (int): bit count, a power of two.

    Returns:
        Fingerprint
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if width <= 0 or width & (width - 1):
        raise ValueError(f"width must be a power of two, got {width}")
    bits = frozenset(ident % width for _, ident in atom_identifiers(mol, radius))
    return Fingerprint(width, bits)


def tanimoto(a, b):
    """|A & B| / |A | B| over on-bits; 0.0 when both are empty."""
    if a.width != b.width:
        raise WidthMismatch(f"fingerprint widths differ: {a.width} != {b.width}")
    if not a.on_bits and not b.on_bits:
        return 0.0
    inter = len(a.on_bits & b.on_bits)
    return inter / (len(a.on_bits) + len(b.on_bits) - inter)


class ECFPTransformer(TransformerMixin, BaseEstimator):
    """SMILES -> dense 0/1 fingerprint matrix.

    Parameters
    ----------
    radius : int, default=2
    width : int, default=2048
    """

    def __init__(self, radius=2, width=2048):
        self.radius = radius
        self.width = width

    def fit(self, X, y=None):
        check_positive_int(self.radius, "radius", allow_zero=True)
        check_positive_int(self.width, "width")
        self.n_features_out_ = self.width
        return self

    def transform(self, X):
        mols = check_molecules(X)
        out = np.zeros((len(mols), self.width), dtype=np.uint8)
        for row, m in enumerate(mols):
            bits = ecfp(m, self.radius, self.width).on_bits
            if bits:
                out[row, list(bits)] = 1
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array([f"ecfp{i}" for i in range(self.width)], dtype=object)
