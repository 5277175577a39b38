"""SMILES writing, canonical keys and randomized renderings.

The canonical key is the lexicographically smallest SMILES obtained from any
total atom ordering consistent with iterative invariant refinement. Ties the
refinement cannot split are broken by trying each candidate and keeping the
smallest string, so the key does not depend on input atom order.
"""

import random

from .elements import DEFAULT_VALENCES
from .molecule import AROMATIC, DOUBLE, SINGLE, TRIPLE


def atom_text(mol, i):
    """SMILES text for atom ``i``: bare organic symbol when it round-trips."""
    a = mol.atoms[i]
    h = a.total_h
    symbol = a.element.lower() if a.aromatic else a.element
    if a.element in DEFAULT_VALENCES and a.formal_charge == 0 and a.isotope is None:
        if _bare_hydrogens(mol, i) == h:
            return symbol
    parts = ["["]
    if a.isotope is not None:
        parts.append(str(a.isotope))
    parts.append(symbol)
    if h == 1:
        parts.append("H")
    elif h > 1:
        parts.append(f"H{h}")
    q = a.formal_charge
    if q == 1:
        parts.append("+")
    elif q == -1:
        parts.append("-")
    elif q > 1:
        parts.append(f"+{q}")
    elif q < -1:
        parts.append(f"-{-q}")
    parts.append("]")
    return "".join(parts)


def _bare_hydrogens(mol, i):
    # Same rule the parser applies to organic-subset atoms.
    a = mol.atoms[i]
    used = sum(1 if o == AROMATIC else o for _, o in mol.neighbors[i])
    valences = DEFAULT_VALENCES[a.element]
    if a.aromatic:
        if used + 1 <= valences[0]:
            return valences[0] - used - 1
        return 0 if any(v >= used for v in valences) else None
    for v in valences:
        if v >= used:
            return v - used
    return None


def bond_text(mol, u, v, order):
    both_aromatic = mol.atoms[u].aromatic and mol.atoms[v].aromatic
    if order == SINGLE:
        return "-" if both_aromatic else ""
    if order == AROMATIC:
        in_ring = (min(u, v), max(u, v)) in mol.ring_bonds
        return "" if both_aromatic and in_ring else ":"
    if order == DOUBLE:
        return "="
    if order == TRIPLE:
        return "#"
    raise ValueError(f"unknown bond order {order}")


def write_smiles(mol, priority):
    """Write ``mol`` as SMILES following an atom priority.

    Each fragment is rooted at its lowest-priority atom and neighbours are
    visited in ascending priority; fragments are emitted in order of their
    root priority.

    Args:
        mol (Molecule): molecule.
        priority (Sequence[int]): one comparable value per atom.

    Returns:
        str: SMILES string.
    """
    n = len(mol.atoms)
    if n == 0:
        return ""
    nbrs = [sorted(mol.neighbors[i], key=lambda t: priority[t[0]]) for i in range(n)]
    visited = [False] * n
    preorder = [0] * n
    children = [[] for _ in range(n)]
    ring_events = [[] for _ in range(n)]  # (is_close, partner, order)
    counter = 0

    roots = sorted((min(frag, key=lambda i: priority[i]) for frag in mol.fragments),
                   key=lambda i: priority[i])
    for root in roots:
        visited[root] = True
        preorder[root] = counter
        counter += 1
        stack = [(root, -1, iter(nbrs[root]))]
        while stack:
            u, parent, it = stack[-1]
            for v, order in it:
                if v == parent:
                    continue
                if visited[v]:
                    if preorder[v] < preorder[u]:
                        # back edge to an ancestor: ring opens at v, closes at u
                        ring_events[v].append((False, u, order))
                        ring_events[u].append((True, v, order))
                    continue
                visited[v] = True
                preorder[v] = counter
                counter += 1
                children[u].append((v, order))
                stack.append((v, u, iter(nbrs[v])))
                break
            else:
                stack.pop()

    out = []
    digits = {}
    free = []
    next_digit = [1]

    def take_digit():
        if free:
            free.sort()
            return free.pop(0)
        d = next_digit[0]
        next_digit[0] += 1
        return d

    def digit_text(d):
        return str(d) if d < 10 else f"%{d:02d}"

    def emit(root):
        # explicit stack of (atom, incoming bond text) and closing parens
        work = [("atom", root, "")]
        while work:
            item = work.pop()
            if item[0] == "text":
                out.append(item[1])
                continue
            _, u, btxt = item
            out.append(btxt)
            out.append(atom_text(mol, u))
            events = ring_events[u]
            closes = [e for e in events if e[0]]
            opens = [e for e in events if not e[0]]
            closes.sort(key=lambda e: digits[frozenset((u, e[1]))])
            opens.sort(key=lambda e: preorder[e[1]])
            for _, partner, _order in closes:
                d = digits.pop(frozenset((u, partner)))
                out.append(digit_text(d))
                free.append(d)
            for _, partner, order in opens:
                d = take_digit()
                digits[frozenset((u, partner))] = d
                out.append(bond_text(mol, u, partner, order) + digit_text(d))
            kids = children[u]
            pushes = []
            for k, (v, order) in enumerate(kids):
                bt = bond_text(mol, u, v, order)
                if k < len(kids) - 1:
                    pushes.append(("text", "("))
                    pushes.append(("atom", v, bt))
                    pushes.append(("text", ")"))
                else:
                    pushes.append(("atom", v, bt))
            work.extend(reversed(pushes))

    for k, root in enumerate(roots):
        if k:
            out.append(".")
        emit(root)
    return "".join(out)


def _initial_invariants(mol):
    return [
        (a.atomic_number, a.aromatic, mol.degree(i), a.formal_charge, a.total_h, a.isotope or 0)
        for i, a in enumerate(mol.atoms)
    ]


def _dense_rank(values):
    order = {v: r for r, v in enumerate(sorted(set(values)))}
    return [order[v] for v in values]


def refine(mol, ranks):
    """Iterate neighbourhood refinement until the number of classes is stable."""
    n_classes = len(set(ranks))
    while True:
        sig = [
            (ranks[i], tuple(sorted((o, ranks[j]) for j, o in mol.neighbors[i])))
            for i in range(len(ranks))
        ]
        new = _dense_rank(sig)
        m = len(set(new))
        if m == n_classes:
            return new
        ranks, n_classes = new, m


def canonical_ranks(mol):
    """Invariant-refined ranks before any tie breaking."""
    return refine(mol, _dense_rank(_initial_invariants(mol)))


def canonical_smiles(mol):
    """Canonical key of ``mol``; identical for every atom ordering."""
    if not mol.atoms:
        return ""
    return _search(mol, canonical_ranks(mol))


def _search(mol, ranks):
    n = len(ranks)
    if len(set(ranks)) == n:
        return write_smiles(mol, ranks)
    counts = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    tied_rank = min(r for r, c in counts.items() if c > 1)
    members = [i for i in range(n) if ranks[i] == tied_rank]
    best = None
    for i in _distinct_candidates(mol, members):
        split = [2 * r for r in ranks]
        split[i] -= 1
        s = _search(mol, refine(mol, _dense_rank(split)))
        if best is None or s < best:
            best = s
    return best


def _distinct_candidates(mol, members):
    # Members with the same neighbourhood are interchangeable (swapping them
    # is an automorphism), so only one of each group has to be tried.
    seen = set()
    out = []
    for i in members:
        key = frozenset(mol.neighbors[i])
        if key in seen:
            continue
        seen.add(key)
        out.append(i)
    return out


def render_random_smiles(mol, seed):
    """Render ``mol`` with a seeded random atom traversal order.

    The result parses back to a molecule with the same canonical key.
    """
    rng = random.Random(seed)
    priority = list(range(len(mol.atoms)))
    rng.shuffle(priority)
    return write_smiles(mol, priority)
