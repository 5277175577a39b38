"""Wildman-Crippen atomic LogP contributions.

Atom types are checked in a fixed priority order and the first match wins.
Each type is a predicate over the atom and its immediate neighbourhood, so no
general substructure matcher is needed. Hydrogens (implicit or explicit) are
typed by their parent atom.
"""

import math
from itertools import permutations

from ..chem.molecule import AROMATIC, DOUBLE, SINGLE, TRIPLE

LOGP = {
    "C1": 0.1441, "C2": 0.0, "C3": -0.2035, "C4": -0.2051, "C5": -0.2783,
    "C6": 0.1551, "C7": 0.0017, "C8": 0.08452, "C9": -0.1444, "C10": -0.0516,
    "C11": 0.1193, "C12": -0.0967, "C13": -0.5443, "C14": 0.0, "C15": 0.245,
    "C16": 0.198, "C17": 0.0, "C18": 0.1581, "C19": 0.2955, "C20": 0.2713,
    "C21": 0.136, "C22": 0.4619, "C23": 0.5437, "C24": 0.1893, "C25": -0.8186,
    "C26": 0.264, "C27": 0.2148, "CS": 0.08129,
    "H1": 0.123, "H2": -0.2677, "H3": 0.2142, "H4": 0.298, "HS": 0.1125,
    "N1": -1.019, "N2": -0.7096, "N3": -1.027, "N4": -0.5188, "N5": 0.08387,
    "N6": 0.1836, "N7": -0.3187, "N8": -0.4458, "N9": 0.01508, "N10": -1.95,
    "N11": -0.3239, "N12": -1.119, "N13": -0.3396, "N14": 0.2887, "NS": -0.4806,
    "O1": 0.1552, "O2": -0.2893, "O3": -0.0684, "O4": -0.4195, "O5": 0.0335,
    "O6": -0.3339, "O7": -1.189, "O8": 0.1788, "O9": -0.1526, "O10": 0.1129,
    "O11": 0.4833, "O12": -1.326, "OS": -0.1188,
    "F": 0.4202, "Cl": 0.6895, "Br": 0.8456, "I": 0.8857, "Hal": -2.996,
    "P": 0.8612, "S1": 0.6482, "S2": -0.0024, "S3": 0.6237,
    "Me1": -0.3808, "Me2": -0.0025,
    # untyped atoms (noble gases, lanthanides, ...) contribute nothing
    "X": 0.0,
}

_HETERO = frozenset({"N", "O", "P", "S", "F", "Cl", "Br", "I"})
_ALKALI = frozenset({"Li", "Na", "K", "Rb", "Cs"})
_ME1 = frozenset({
    "Li", "Na", "K", "Rb", "Cs", "Be", "Mg", "Ca", "Sr", "Ba", "B", "Al", "Ga", "In", "Tl",
    "Si", "Ge", "Sn", "Pb", "As", "Sb", "Bi", "Se", "Te", "Po",
})
_ME2 = frozenset({
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
})
_HALOGENS = frozenset({"F", "Cl", "Br", "I"})
_SINGLE_OR_AROMATIC = (SINGLE, AROMATIC)


class _View:
    """Per-atom facts used by the type predicates."""

    __slots__ = ("mol", "el", "arom", "charge", "h", "nbrs")

    def __init__(self, mol):
        self.mol = mol
        atoms = mol.atoms
        self.el = [a.element for a in atoms]
        self.arom = [a.aromatic for a in atoms]
        self.charge = [a.formal_charge for a in atoms]
        self.h = [mol.total_h(i) for i in range(len(atoms))]
        self.nbrs = mol.neighbors

    def x(self, i):
        return len(self.nbrs[i]) + self.mol.atoms[i].total_h

    # neighbour predicates take (index, bond order)
    def heavy(self, j):
        return self.el[j] != "H"

    def aliph_heavy(self, j):
        return self.el[j] != "H" and not self.arom[j]

    def has(self, i, pred, orders=_SINGLE_OR_AROMATIC):
        return any(o in orders and pred(j) for j, o in self.nbrs[i])

    def match(self, i, *specs):
        """True when distinct neighbours satisfy every ``(pred, orders)`` spec."""
        nb = self.nbrs[i]
        if len(nb) < len(specs):
            return False
        for combo in permutations(nb, len(specs)):
            if all(o in orders and pred(j) for (j, o), (pred, orders) in zip(combo, specs)):
                return True
        return False


def _sa(pred):
    return (pred, _SINGLE_OR_AROMATIC)


def _carbon_type(v, i):
    h, x = v.h[i], v.x(i)
    aliph_c = lambda j: v.el[j] == "C" and not v.arom[j]
    arom_c = lambda j: v.el[j] == "C" and v.arom[j]
    arom = lambda j: v.arom[j]
    ah = v.aliph_heavy
    hetero = lambda j: v.el[j] in _HETERO and not v.arom[j]
    if not v.arom[i]:
        if h == 4 or (h == 3 and v.has(i, aliph_c)) or (h == 2 and v.match(i, _sa(aliph_c), _sa(aliph_c))):
            return "C1"
        if (h == 1 and v.match(i, _sa(aliph_c), _sa(aliph_c), _sa(aliph_c))) or \
                v.match(i, _sa(aliph_c), _sa(aliph_c), _sa(aliph_c), _sa(aliph_c)):
            return "C2"
        if (h == 3 and v.has(i, hetero)) or (h == 2 and x == 4 and v.match(i, _sa(hetero), _sa(ah))):
            return "C3"
        if (h == 1 and x == 4 and v.match(i, _sa(hetero), _sa(ah), _sa(ah))) or \
                (h == 0 and x == 4 and v.match(i, _sa(hetero), _sa(ah), _sa(ah), _sa(ah))):
            return "C4"
        if v.has(i, lambda j: v.el[j] not in ("C", "H") and not v.arom[j], (DOUBLE,)):
            return "C5"
        dbl_c = (aliph_c, (DOUBLE,))
        if (h == 2 and v.has(i, aliph_c, (DOUBLE,))) or \
                (h == 1 and v.match(i, dbl_c, _sa(ah))) or \
                (h == 0 and v.match(i, dbl_c, _sa(ah), _sa(ah))) or \
                v.match(i, dbl_c, dbl_c):
            return "C6"
        if x == 2 and v.has(i, ah, (TRIPLE,)):
            return "C7"
        if h == 3 and v.has(i, arom_c):
            return "C8"
        if h == 3 and v.has(i, arom):
            return "C9"
        if x == 4 and h == 2 and v.has(i, arom):
            return "C10"
        if x == 4 and h == 1 and v.has(i, arom):
            return "C11"
        if x == 4 and h == 0 and v.has(i, arom):
            return "C12"
        if v.match(i, dbl_c, _sa(arom), _sa(ah)) or v.match(i, dbl_c, _sa(arom_c), _sa(arom)) or \
                (h == 1 and v.match(i, dbl_c, _sa(arom))) or v.has(i, arom_c, (DOUBLE,)):
            return "C26"
        odd = lambda j: v.el[j] not in ("C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "H") and not v.arom[j]
        if x == 4 and v.has(i, odd):
            return "C27"
        return "CS"
    odd = lambda j: v.el[j] not in ("C", "N", "O", "S", "F", "Cl", "Br", "I", "H") and not v.arom[j]
    if h == 0 and v.has(i, odd, (SINGLE,)):
        return "C13"
    for hal, name in (("F", "C14"), ("Cl", "C15"), ("Br", "C16"), ("I", "C17")):
        if v.has(i, lambda j, hal=hal: v.el[j] == hal):
            return name
    if h == 1:
        return "C18"
    ar = (arom, (AROMATIC,))
    if v.match(i, ar, ar, ar):
        return "C19"
    if v.match(i, ar, ar, (arom, (SINGLE,))):
        return "C20"
    for el, name in (("C", "C21"), ("N", "C22"), ("O", "C23"), ("S", "C24")):
        if v.match(i, ar, ar, (lambda j, el=el: v.el[j] == el and not v.arom[j], (SINGLE,))):
            return name
    if v.match(i, ar, ar, (lambda j: v.el[j] in ("C", "N", "O") and not v.arom[j], (DOUBLE,))):
        return "C25"
    return "CS"


def _nitrogen_type(v, i):
    h, q = v.h[i], v.charge[i]
    ah, heavy, arom = v.aliph_heavy, v.heavy, (lambda j: v.arom[j])
    if not v.arom[i]:
        if q == 0:
            if h == 2 and v.has(i, ah):
                return "N1"
            if h == 1 and v.match(i, _sa(ah), _sa(ah)):
                return "N2"
            if h == 2 and v.has(i, arom):
                return "N3"
            if h == 1 and v.match(i, _sa(arom), _sa(heavy)):
                return "N4"
            if h == 1 and v.has(i, heavy, (DOUBLE,)):
                return "N5"
            if v.match(i, (heavy, (DOUBLE,)), _sa(heavy)):
                return "N6"
            if v.match(i, _sa(ah), _sa(ah), _sa(ah)):
                return "N7"
            if v.match(i, _sa(arom), _sa(heavy), _sa(ah)) or v.match(i, _sa(arom), _sa(arom), _sa(arom)):
                return "N8"
            if v.has(i, ah, (TRIPLE,)):
                return "N9"
        if q in (1, 2, 3) and h in (1, 2, 3):
            return "N10"
    else:
        return "N11" if q == 0 else ("N12" if q > 0 else "NS")
    if q > 0 and h == 0:
        if v.match(i, _sa(ah), _sa(ah), _sa(ah), _sa(ah)) or \
                v.match(i, (ah, (DOUBLE,)), _sa(ah), _sa(heavy)) or \
                v.match(i, (lambda j: v.el[j] == "C", (DOUBLE,)), (lambda j: v.el[j] == "N", (DOUBLE,))):
            return "N13"
    if q > 0 and v.has(i, ah, (TRIPLE,)):
        return "N14"
    if q < 0:
        return "N14"
    if q > 0 and v.match(i, (lambda j: v.el[j] == "N" and not v.arom[j] and v.charge[j] < 0, (DOUBLE,)),
                         (lambda j: v.el[j] == "N" and not v.arom[j], (DOUBLE,))):
        return "N14"
    return "NS"


def _oxygen_type(v, i):
    if v.arom[i]:
        return "O1"
    h, q, x = v.h[i], v.charge[i], v.x(i)
    ah, heavy = v.aliph_heavy, v.heavy
    if h in (1, 2):
        return "O2"
    if v.match(i, _sa(ah), _sa(ah)):
        return "O3"
    if v.match(i, _sa(lambda j: v.arom[j]), _sa(heavy)):
        return "O4"
    if v.has(i, lambda j: v.el[j] in ("N", "O"), (DOUBLE,)) or \
            (x == 1 and q < 0 and v.has(i, lambda j: v.el[j] == "N")):
        return "O5"
    if (x == 1 and q < 0 and v.has(i, lambda j: v.el[j] == "S")) or \
            (q == 0 and v.has(i, lambda j: v.el[j] == "S" and v.charge[j] == 0, (DOUBLE,))):
        return "O6"
    if q == -1 and v.has(i, lambda j: v.el[j] == "C" and not v.arom[j] and _has_double_o(v, j, i)):
        return "O12"
    if x == 1 and q < 0 and v.has(i, lambda j: v.el[j] != "H" and not (v.el[j] in ("N", "S") and not v.arom[j])):
        return "O7"
    partner = None
    for j, o in v.nbrs[i]:
        if o == DOUBLE:
            partner = j
            break
    if partner is None:
        return "OS"
    if v.el[partner] == "C" and v.arom[partner]:
        return "O8"
    if v.el[partner] != "C":
        return "OS"
    c = partner
    ch = v.h[c]
    others = [(j, o) for j, o in v.nbrs[c] if j != i]

    def sub(*specs):
        # distinct neighbours of the carbonyl carbon other than this oxygen
        for combo in permutations(others, len(specs)):
            if all(o in orders and pred(j) for (j, o), (pred, orders) in zip(combo, specs)):
                return True
        return False

    aliph_c = lambda j: v.el[j] == "C" and not v.arom[j]
    arom_c = lambda j: v.el[j] == "C" and v.arom[j]
    arom_heavy = lambda j: v.arom[j] and v.el[j] != "H"
    if (ch == 1 and sub(_sa(aliph_c))) or sub(_sa(aliph_c), _sa(ah)) or \
            (ch == 1 and sub(_sa(lambda j: v.el[j] in ("N", "O") and not v.arom[j]))) or ch == 2 or \
            (v.x(c) == 2 and sub((lambda j: v.el[j] == "O" and not v.arom[j], (DOUBLE,)))):
        return "O9"
    if (ch == 1 and sub(_sa(arom_c))) or \
            sub(_sa(lambda j: v.el[j] == "C"), _sa(arom_heavy)) or \
            sub(_sa(arom_c), _sa(ah)):
        return "O10"
    nonc = lambda j: v.el[j] not in ("H", "C")
    if sub(_sa(nonc), _sa(nonc)):
        return "O11"
    return "OS"


def _has_double_o(v, c, exclude):
    return any(o == DOUBLE and j != exclude and v.el[j] == "O" and not v.arom[j] for j, o in v.nbrs[c])


def _sulfur_type(v, i):
    if v.charge[i] != 0:
        return "S2"
    if not v.arom[i]:
        if v.has(i, lambda j: v.el[j] in ("N", "O", "P", "S") and not v.arom[j], (DOUBLE,)):
            return "S2"
        return "S1"
    return "S3"


def heavy_atom_type(v, i):
    el = v.el[i]
    q = v.charge[i]
    if el == "C":
        return _carbon_type(v, i)
    if el == "N":
        return _nitrogen_type(v, i)
    if el == "O":
        return _oxygen_type(v, i)
    if el in _HALOGENS:
        if q == 0:
            return el
        if q < 0 or (el == "I" and q > 0):
            return "Hal"
        return "X"
    if q == 1 and el in _ALKALI:
        return "Hal"
    if el == "P":
        return "P"
    if el == "S":
        return _sulfur_type(v, i)
    if el in _ME1:
        return "Me1"
    if el in _ME2:
        return "Me2"
    return "X"


def hydrogen_type(v, parent, own=None):
    """Type of a hydrogen bonded to ``parent`` (``None`` for a lone H atom).

    ``own`` is the graph index of the hydrogen when it is an explicit atom, so
    it can be excluded from the parent's other neighbours.
    """
    if parent is None:
        return "HS"
    el, arom = v.el[parent], v.arom[parent]
    if el in ("C", "H"):
        return "H1"
    if el == "N":
        # amine hydrogens, aromatic [nH] included
        return "H3"
    if el == "O" and not arom:
        # the parent's other neighbours: graph atoms plus remaining hydrogens
        others = [j for j, _ in v.nbrs[parent] if j != own]
        extra_h = v.h[parent] - 1
        if any(v.el[j] == "C" and ((not v.arom[j] and v.x(j) == 4) or v.arom[j]) for j in others):
            return "H2"
        if extra_h > 0 or any(v.el[j] != "N" and not (v.el[j] in ("C", "O", "S") and not v.arom[j])
                              for j in others):
            return "H2"
    if not (el in ("C", "N", "O") and not arom):
        return "H2"
    # aliphatic O with only aliphatic C/N/O/S neighbours left
    others = [j for j, _ in v.nbrs[parent] if j != own]
    if any(v.el[j] == "N" for j in others):
        return "H3"
    for j in others:
        if v.el[j] == "C" and not v.arom[j]:
            if any(o == DOUBLE and k != parent and (v.el[k] in ("C", "N") or (v.el[k] in ("O", "S") and not v.arom[k]))
                   for k, o in v.nbrs[j]):
                return "H4"
        if v.el[j] in ("O", "S") and not v.arom[j]:
            return "H4"
    return "HS"


def atom_types(mol):
    """Crippen type for every atom, plus types of the implicit hydrogens.

    Returns:
        tuple[list[str], list[list[str]]]: heavy/graph atom types and, per atom,
        the types of its implicit and bracket hydrogens.
    """
    v = _View(mol)
    types = []
    h_types = []
    for i, a in enumerate(mol.atoms):
        if a.element == "H":
            nb = mol.neighbors[i]
            types.append(hydrogen_type(v, nb[0][0], own=i) if nb else "HS")
        else:
            types.append(heavy_atom_type(v, i))
        h_types.append([hydrogen_type(v, i)] * a.total_h if a.total_h else [])
    return types, h_types


def crippen_logp(mol):
    """Wildman-Crippen LogP: the sum of atomic contributions over all atoms."""
    types, h_types = atom_types(mol)
    values = [LOGP[t] for t in types]
    values.extend(LOGP[ht] for hs in h_types for ht in hs)
    # fsum makes the result independent of atom order
    return math.fsum(values)
