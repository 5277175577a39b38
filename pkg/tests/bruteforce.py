"""Exhaustive reference evaluator for the AUC Top-10 metrics.

Written without any code from ``ahcbench.metrics``: it rebuilds the unique
pool from scratch for every single oracle call, uses integer bitmasks for
Tanimoto and sums with :func:`math.fsum`.
"""

import math

K = 10
THRESHOLD = 0.35


def _mask(bits):
    out = 0
    for b in bits:
        out |= 1 << b
    return out


def _tanimoto(a, b):
    union = (a | b).bit_count()
    if union == 0:
        return 0.0
    return (a & b).bit_count() / union


def _pool_at(records, t):
    """Unique valid molecules first seen at or before call ``t``."""
    first = {}
    for r in records:
        if r.valid and r.call_index <= t:
            if r.smiles not in first or r.call_index < first[r.smiles][0]:
                first[r.smiles] = (r.call_index, r.score)
    return [(score, idx, key) for key, (idx, score) in first.items()]


def _greedy(ranked, masks):
    chosen = []
    for score, idx, key in ranked:
        if len(chosen) == K:
            break
        if all(_tanimoto(masks[key], masks[c[2]]) <= THRESHOLD for c in chosen):
            chosen.append((score, idx, key))
    return chosen


def _values(pool, masks, passes):
    ranked = sorted(pool, key=lambda x: (-x[0], x[1]))
    filt = [x for x in ranked if passes[x[2]]]
    groups = {
        "plain": ranked[:K],
        "filtered": filt[:K],
        "diverse": _greedy(ranked, masks),
        "combined": _greedy(filt, masks),
    }
    return {m: math.fsum(x[0] for x in g) / K for m, g in groups.items()}


def evaluate(records, bits, passes, budget, interval):
    """Four AUCs by walking every call ``1..budget``.

    Args:
        records: objects with call_index, smiles, score, valid.
        bits (dict): key -> iterable of on-bit positions.
        passes (dict): key -> filter verdict.
        budget (int): normalizer N.
        interval (int): calls between recording points.
    """
    masks = {k: _mask(v) for k, v in bits.items()}
    last = max((r.call_index for r in records), default=0)
    if last == 0:
        return {m: 0.0 for m in ("plain", "filtered", "diverse", "combined")}
    points = [t for t in range(1, last + 1) if t % interval == 0 or t == last]
    per_call = {m: [] for m in ("plain", "filtered", "diverse", "combined")}
    cache = {}
    for t in range(1, budget + 1):
        earlier = [p for p in points if p <= t]
        if not earlier:
            vals = {m: 0.0 for m in per_call}
        else:
            p = earlier[-1]
            if p not in cache:
                cache[p] = _values(_pool_at(records, p), masks, passes)
            vals = cache[p]
        for m in per_call:
            per_call[m].append(vals[m])
    return {m: math.fsum(v) / budget for m, v in per_call.items()}
