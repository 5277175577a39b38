"""Randomized oracle logs with controllable fingerprints for metric tests."""

from ahcbench.fingerprint import Fingerprint
from ahcbench.metrics import Features
from ahcbench.oracle import OracleRecord

WIDTH = 64


def synthetic_log(rng, max_records=200):
    """Random log with repeats, invalid calls, tied scores and clustered fingerprints."""
    n = int(rng.integers(1, max_records + 1))
    n_keys = int(rng.integers(1, n + 1))
    centers = [frozenset(int(b) for b in rng.choice(WIDTH, size=8, replace=False)) for _ in range(4)]
    bits, passes = {}, {}
    for i in range(n_keys):
        key = f"m{i}"
        base = set(centers[int(rng.integers(len(centers)))])
        for _ in range(int(rng.integers(0, 6))):
            base.symmetric_difference_update({int(rng.integers(WIDTH))})
        bits[key] = frozenset(base)
        passes[key] = bool(rng.random() < 0.7)
    records = []
    for call in range(1, n + 1):
        key = f"m{int(rng.integers(n_keys))}"
        valid = bool(rng.random() < 0.9)
        score = float(rng.integers(0, 21)) / 20 if valid else 0.0
        records.append(OracleRecord(call, key, score, valid))
    # a key keeps the score of its first valid occurrence, as in a cached oracle
    first = {}
    for i, r in enumerate(records):
        if r.valid:
            first.setdefault(r.smiles, r.score)
            records[i] = OracleRecord(r.call_index, r.smiles, first[r.smiles], True)
    features = {k: Features(Fingerprint(WIDTH, v), passes[k]) for k, v in bits.items()}
    budget = n + int(rng.integers(0, 50))
    interval = int(rng.integers(1, 40))
    return records, features, bits, passes, budget, interval
