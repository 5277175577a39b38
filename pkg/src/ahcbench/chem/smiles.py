"""SMILES parsing into :class:`Molecule` graphs."""

import logging
import re

from ..exceptions import (
    AromaticityError,
    SmilesError,
    SmilesSyntaxError,
    UnbalancedBranch,
    UnmatchedRingClosure,
    UnsupportedFeature,
    UnterminatedBranch,
    ValenceViolation,
)
from . import tokenizer as tk
from .elements import AROMATIC_SYMBOLS, ATOMIC_NUMBER, DEFAULT_VALENCES
from .molecule import AROMATIC, DOUBLE, SINGLE, TRIPLE, Atom, Bond, Molecule, ring_bond_set, valence_contribution

logger = logging.getLogger(__name__)

_BOND_ORDER = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}

_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>se|as|te|[bcnops]|[A-Z][a-z]?)"
    r"(?P<chiral>@+)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\++\d*|-+\d*)?"
    r"(?P<klass>:\d+)?$"
)

# Valences used to decide whether an aromatic atom still needs a pi bond;
# elements outside the organic subset borrow their group's lowest valence.
_AROMATIC_VALENCE = dict((k, v[0]) for k, v in DEFAULT_VALENCES.items())
_AROMATIC_VALENCE.update({"Se": 2, "Te": 2, "As": 3})
_BY_NUMBER = {z: s for s, z in ATOMIC_NUMBER.items()}


def parse_smiles(text):
    """Parse a SMILES string.

    Args:
        text (str): SMILES; stereo markers are rejected.

    Returns:
        Molecule: graph with implicit hydrogens assigned.

    Raises:
        SmilesError: one of its subclasses naming the problem.
    """
    if not text:
        raise SmilesSyntaxError("empty SMILES")
    tokens = tk.tokenize(text)
    atoms = []      # mutable dicts until hydrogens are assigned
    bonds = {}      # frozenset(i, j) -> [i, j, order or None]
    rings = {}      # digit -> (atom index, bond order or None, position)
    branches = []
    prev = None
    pending = None  # (order, position)

    def add_bond(i, j, order, pos):
        if i == j:
            raise SmilesSyntaxError("ring closure bonds an atom to itself", pos)
        key = frozenset((i, j))
        if key in bonds:
            raise SmilesSyntaxError("duplicate bond between the same atoms", pos)
        bonds[key] = [i, j, order]

    for tok in tokens:
        kind, pos = tok.kind, tok.position
        if kind in (tk.ATOM_ORGANIC, tk.ATOM_BRACKET):
            atom = _organic_atom(tok.text) if kind == tk.ATOM_ORGANIC else _bracket_atom(tok.text, pos)
            atoms.append(atom)
            idx = len(atoms) - 1
            if prev is not None:
                add_bond(prev, idx, pending[0] if pending else None, pos)
            elif pending is not None:
                raise SmilesSyntaxError("bond without a preceding atom", pending[1])
            pending = None
            prev = idx
        elif kind == tk.BOND:
            if tok.text in "/\\":
                raise UnsupportedFeature("directional bonds (stereo) are not supported", pos)
            if tok.text == "$":
                raise UnsupportedFeature("quadruple bonds are not supported", pos)
            if pending is not None:
                raise SmilesSyntaxError("two consecutive bond symbols", pos)
            if prev is None:
                raise SmilesSyntaxError("bond without a preceding atom", pos)
            pending = (_BOND_ORDER[tok.text], pos)
        elif kind == tk.BRANCH_OPEN:
            if prev is None:
                raise SmilesSyntaxError("branch without a preceding atom", pos)
            if pending is not None:
                raise SmilesSyntaxError("bond symbol before '('", pos)
            branches.append((prev, pos, len(atoms)))
        elif kind == tk.BRANCH_CLOSE:
            if not branches:
                raise UnbalancedBranch("')' without matching '('", pos)
            if pending is not None:
                raise SmilesSyntaxError("bond symbol before ')'", pos)
            anchor, _, n_before = branches.pop()
            if len(atoms) == n_before:
                raise SmilesSyntaxError("empty branch", pos)
            prev = anchor
        elif kind == tk.RING_CLOSURE:
            if prev is None:
                raise SmilesSyntaxError("ring closure without a preceding atom", pos)
            digit = int(tok.text.lstrip("%"))
            order = pending[0] if pending else None
            pending = None
            if digit in rings:
                other, other_order, _ = rings.pop(digit)
                if order is not None and other_order is not None and order != other_order:
                    raise SmilesSyntaxError("conflicting ring-closure bond orders", pos)
                add_bond(other, prev, order if order is not None else other_order, pos)
            else:
                rings[digit] = (prev, order, pos)
        elif kind == tk.DOT:
            if prev is None or pending is not None:
                raise SmilesSyntaxError("misplaced '.'", pos)
            if branches:
                raise UnterminatedBranch("'.' inside an open branch", pos)
            prev = None
    if pending is not None:
        raise SmilesSyntaxError("SMILES ends with a bond symbol", pending[1])
    if branches:
        raise UnterminatedBranch("unclosed '('", branches[-1][1])
    if rings:
        digit, (_, _, pos) = next(iter(rings.items()))
        raise UnmatchedRingClosure(f"ring closure {digit} is never closed", pos)
    if prev is None:
        raise SmilesSyntaxError("SMILES ends with '.'", len(text) - 1)
    return _finish(atoms, list(bonds.values()), text)


def _organic_atom(text):
    if text in AROMATIC_SYMBOLS:
        return {"element": AROMATIC_SYMBOLS[text], "aromatic": True, "charge": 0,
                "hcount": None, "isotope": None}
    return {"element": text, "aromatic": False, "charge": 0, "hcount": None, "isotope": None}


def _bracket_atom(text, pos):
    inner = text[1:-1]
    m = _BRACKET_RE.match(inner)
    if m is None:
        if "@" in inner:
            raise UnsupportedFeature("chirality is not supported", pos)
        if "*" in inner:
            raise UnsupportedFeature("wildcard atoms are not supported", pos)
        raise SmilesSyntaxError(f"malformed bracket atom {text!r}", pos)
    if m.group("chiral"):
        raise UnsupportedFeature("chirality is not supported", pos)
    if m.group("klass"):
        raise UnsupportedFeature("atom classes are not supported", pos)
    symbol = m.group("symbol")
    aromatic = symbol in AROMATIC_SYMBOLS
    element = AROMATIC_SYMBOLS[symbol] if aromatic else symbol
    if element not in ATOMIC_NUMBER:
        raise SmilesSyntaxError(f"unknown element {symbol!r}", pos)
    h = m.group("hcount")
    hcount = 0 if not h else (int(h[1:]) if len(h) > 1 else 1)
    charge = 0
    c = m.group("charge")
    if c:
        sign = 1 if c[0] == "+" else -1
        digits = c.lstrip("+-")
        if digits:
            if len(c) - len(digits) != 1:
                raise SmilesSyntaxError(f"malformed charge in {text!r}", pos)
            charge = sign * int(digits)
        else:
            charge = sign * len(c)
    iso = m.group("isotope")
    return {"element": element, "aromatic": aromatic, "charge": charge,
            "hcount": hcount, "isotope": int(iso) if iso else None}


def _finish(atoms, bond_list, text):
    n = len(atoms)
    adj = [[] for _ in range(n)]
    for i, j, order in bond_list:
        adj[i].append((j, order))
        adj[j].append((i, order))
    ring = ring_bond_set(n, adj)
    ring_atoms = {i for pair in ring for i in pair}

    resolved = []
    for i, j, order in bond_list:
        if order is None:
            both_aromatic = atoms[i]["aromatic"] and atoms[j]["aromatic"]
            in_ring = (min(i, j), max(i, j)) in ring
            order = AROMATIC if both_aromatic and in_ring else SINGLE
        elif order == AROMATIC and not (atoms[i]["aromatic"] and atoms[j]["aromatic"]):
            raise SmilesSyntaxError("aromatic bond between non-aromatic atoms")
        resolved.append(Bond(min(i, j), max(i, j), order))

    valence = [0] * n
    aromatic_bonds = [[] for _ in range(n)]
    for b in resolved:
        v = valence_contribution(b.order)
        valence[b.begin] += v
        valence[b.end] += v
        if b.order == AROMATIC:
            aromatic_bonds[b.begin].append(b.end)
            aromatic_bonds[b.end].append(b.begin)

    final = []
    needs_pi = set()
    for idx, a in enumerate(atoms):
        implicit = 0
        if a["hcount"] is None:
            implicit, pi = _organic_hydrogens(a["element"], a["aromatic"], valence[idx], idx)
        else:
            _check_bracket_valence(a, valence[idx], idx)
            pi = a["aromatic"] and _bracket_needs_pi(a, valence[idx])
        if a["aromatic"] and idx not in ring_atoms:
            raise AromaticityError(f"aromatic atom {idx} is not in a ring")
        if len(aromatic_bonds[idx]) > 3:
            raise ValenceViolation(f"atom {idx} has more than three aromatic bonds")
        if pi:
            needs_pi.add(idx)
        final.append(Atom(element=a["element"], aromatic=a["aromatic"], formal_charge=a["charge"],
                          explicit_h=a["hcount"], implicit_h=implicit, isotope=a["isotope"]))
    if needs_pi and not _has_perfect_matching(needs_pi, aromatic_bonds):
        raise AromaticityError("cannot assign alternating bonds to the aromatic system")
    return Molecule(atoms=tuple(final), bonds=tuple(resolved), source=text)


def _organic_hydrogens(element, aromatic, used, idx):
    """Implicit hydrogen count and whether a pi bond is still required."""
    valences = DEFAULT_VALENCES[element]
    if aromatic:
        first = valences[0]
        if used + 1 <= first:
            return first - used - 1, True
        if any(v >= used for v in valences):
            return 0, False
        raise ValenceViolation(f"atom {idx} ({element}) exceeds its allowed valence")
    for v in valences:
        if v >= used:
            return v - used, False
    raise ValenceViolation(f"atom {idx} ({element}) exceeds its allowed valence")


def _check_bracket_valence(a, used, idx):
    if a["element"] == "H":
        limit = 1 if a["charge"] == 0 else 0
    else:
        iso = _BY_NUMBER.get(ATOMIC_NUMBER[a["element"]] - a["charge"])
        if iso not in DEFAULT_VALENCES:
            return
        limit = max(DEFAULT_VALENCES[iso])
    if used + a["hcount"] > limit:
        raise ValenceViolation(f"atom {idx} ({a['element']}) exceeds its allowed valence")


def _bracket_needs_pi(a, used):
    z = ATOMIC_NUMBER[a["element"]] - a["charge"]
    base = _AROMATIC_VALENCE.get(_BY_NUMBER.get(z, ""), None)
    if base is None:
        base = _AROMATIC_VALENCE.get(a["element"])
    if base is None:
        return False
    return used + a["hcount"] + 1 <= base


def _has_perfect_matching(nodes, aromatic_bonds):
    """Backtracking search for a perfect matching among ``nodes``."""
    nodes = set(nodes)
    options = {u: [v for v in aromatic_bonds[u] if v in nodes] for u in nodes}
    if any(not opts for opts in options.values()):
        return False
    matched = set()

    def solve():
        free = [u for u in nodes if u not in matched]
        if not free:
            return True
        u = min(free, key=lambda x: (sum(1 for v in options[x] if v not in matched), x))
        for v in options[u]:
            if v in matched:
                continue
            matched.update((u, v))
            if solve():
                return True
            matched.difference_update((u, v))
        return False

    return solve()


def read_smiles_file(path, skip_invalid=True):
    """Read a SMILES corpus file.

    One record per line; the first whitespace-separated field is the SMILES
    and the rest of the line is ignored. Blank lines and lines starting with
    ``#`` are skipped.

    Args:
        path: file path.
        skip_invalid (bool): skip unparseable records (logged) instead of
            raising.

    Returns:
        tuple[list[tuple[str, Molecule]], int]: parsed records and the number
        of skipped unparseable lines.
    """
    records = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            smi = _first_field(line)
            if smi is None:
                continue
            try:
                records.append((smi, parse_smiles(smi)))
            except SmilesError as err:
                if not skip_invalid:
                    raise
                skipped += 1
                logger.debug("line %d: skipping %r: %s", lineno, smi, err)
    if skipped:
        logger.info("%s: skipped %d unparseable lines", path, skipped)
    return records, skipped


def read_smiles_lines(path):
    """Yield the SMILES field of every record line, unparsed."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            smi = _first_field(line)
            if smi is not None:
                yield smi


def _first_field(line):
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    return line.split()[0]
