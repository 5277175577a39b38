"""Immutable molecular graph types."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

from .elements import ATOMIC_NUMBER

SINGLE = 1
DOUBLE = 2
TRIPLE = 3
AROMATIC = 4

BOND_SYMBOLS = {SINGLE: "-", DOUBLE: "=", TRIPLE: "#", AROMATIC: ":"}


def valence_contribution(order):
    """Bond order as counted towards an atom's valence (aromatic counts 1)."""
    return 1 if order == AROMATIC else order


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    formal_charge: int = 0
    explicit_h: Optional[int] = None
    implicit_h: int = 0
    isotope: Optional[int] = None

    @property
    def bracket(self):
        return self.explicit_h is not None

    @property
    def total_h(self):
        return self.implicit_h + (self.explicit_h or 0)

    @property
    def atomic_number(self):
        return ATOMIC_NUMBER[self.element]


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: int

    @property
    def endpoints(self):
        return (self.begin, self.end)


@dataclass(frozen=True, eq=False)
class Molecule:
    """A parsed molecular graph.

    Atoms and bonds are stored as tuples; adjacency and ring information are
    derived lazily. Hydrogens are normally implicit (``Atom.implicit_h``) or
    bracket counts (``Atom.explicit_h``); ``[H]`` atoms written in the SMILES
    are kept as graph atoms.
    """

    atoms: Tuple[Atom, ...]
    bonds: Tuple[Bond, ...]
    source: Optional[str] = field(default=None, compare=False)

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        return f"Molecule({self.canonical_key!r})"

    def __eq__(self, other):
        if not isinstance(other, Molecule):
            return NotImplemented
        return self.canonical_key == other.canonical_key

    def __hash__(self):
        return hash(self.canonical_key)

    @cached_property
    def neighbors(self):
        """Per atom, a tuple of ``(neighbor index, bond order)`` pairs."""
        adj = [[] for _ in self.atoms]
        for b in self.bonds:
            adj[b.begin].append((b.end, b.order))
            adj[b.end].append((b.begin, b.order))
        return tuple(tuple(a) for a in adj)

    @cached_property
    def bond_index(self):
        return {frozenset(b.endpoints): b for b in self.bonds}

    def bond_between(self, i, j):
        return self.bond_index.get(frozenset((i, j)))

    def degree(self, i):
        return len(self.neighbors[i])

    def heavy_degree(self, i):
        return sum(1 for j, _ in self.neighbors[i] if self.atoms[j].element != "H")

    def total_h(self, i):
        """Hydrogen count of atom ``i``, including ``[H]`` graph neighbours."""
        graph_h = sum(1 for j, _ in self.neighbors[i] if self.atoms[j].element == "H")
        return self.atoms[i].total_h + graph_h

    @cached_property
    def ring_bonds(self):
        """Frozenset of atom-index pairs for bonds that lie on a cycle."""
        return ring_bond_set(len(self.atoms), self.neighbors)

    @cached_property
    def ring_atoms(self):
        return frozenset(i for pair in self.ring_bonds for i in pair)

    @cached_property
    def fragments(self):
        """Connected components as sorted tuples of atom indices."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack = [start]
            seen[start] = True
            comp = []
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self.neighbors[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            out.append(tuple(sorted(comp)))
        return tuple(out)

    @property
    def total_atom_count(self):
        """Atom count including every hydrogen."""
        return len(self.atoms) + sum(a.total_h for a in self.atoms)

    @cached_property
    def canonical_key(self):
        from .canon import canonical_smiles
        return canonical_smiles(self)


def ring_bond_set(n, neighbors):
    """Return the non-bridge edges of an undirected graph (Tarjan lowlink)."""
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(neighbors[root]))]
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v, _ in it:
                if v == parent:
                    continue
                if disc[v] < 0:
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append((v, u, iter(neighbors[v])))
                    advanced = True
                    break
                low[u] = min(low[u], disc[v])
            if not advanced:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[u])
                    if low[u] > disc[p]:
                        bridges.add(frozenset((p, u)))
    ring = set()
    for u in range(n):
        for v, _ in neighbors[u]:
            if u < v and frozenset((u, v)) not in bridges:
                ring.add((u, v))
    return frozenset(ring)
