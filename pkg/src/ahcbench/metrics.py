"""AUC Top-10 metrics: plain, Filtered, Diverse and Combined.

All sums go through :func:`math.fsum`, so results are independent of
summation order and reproducible exactly by any evaluator that sums the same
values.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List

from .chem import parse_smiles
from .exceptions import BudgetMismatch, IoFailure, ParamMismatch, SmilesError
from .fingerprint import ecfp, tanimoto
from .oracle import SIMILARITY_RADIUS, SIMILARITY_WIDTH
from .refstats import property_filter

logger = logging.getLogger(__name__)

METRICS = ("plain", "filtered", "diverse", "combined")
TOP_K = 10
DIVERSITY_THRESHOLD = 0.35


@dataclass(frozen=True)
class ScoredMol:
    key: str
    score: float
    first_call_index: int
    fingerprint: object = None
    passes: bool = True


@dataclass(frozen=True)
class Features:
    """Per-molecule inputs to the metrics: similarity fingerprint and filter verdict."""

    fingerprint: object
    passes: bool


def top10_mean(pool, k=TOP_K):
    """Sum of the ``k`` best scores divided by exactly ``k`` (zero-padded)."""
    scores = sorted((m.score for m in pool), reverse=True)[:k]
    return math.fsum(scores) / k


def rank(pool):
    """Sort by score descending, then first call index ascending."""
    return sorted(pool, key=lambda m: (-m.score, m.first_call_index))


def diverse_select(ranked, threshold=DIVERSITY_THRESHOLD, k=TOP_K):
    """Greedy scan keeping candidates with max Tanimoto <= ``threshold`` to those kept."""
    selected = []
    for cand in ranked:
        if len(selected) >= k:
            break
        if all(tanimoto(cand.fingerprint, s.fingerprint) <= threshold for s in selected):
            selected.append(cand)
    return selected


def padded_mean(selected, k=TOP_K):
    return math.fsum(m.score for m in selected) / k


def recording_points(last_call, interval):
    """Multiples of ``interval`` up to ``last_call`` plus ``last_call`` itself."""
    if last_call <= 0:
        return []
    points = list(range(interval, last_call + 1, interval))
    if not points or points[-1] != last_call:
        points.append(last_call)
    return points


def auc_series(points, values, budget):
    """Piecewise-constant area under a top-10 curve, normalized by ``budget``.

    The value at call ``t`` is the value at the latest recording point
    ``<= t`` (0 before the first); the last value is held through ``budget``.

    Raises:
        BudgetMismatch: points not strictly increasing or beyond the budget.
    """
    if len(points) != len(values):
        raise ValueError("points and values differ in length")
    if budget <= 0:
        if points:
            raise BudgetMismatch("recording points given for a zero budget")
        return 0.0
    if not points:
        return 0.0
    if any(b <= a for a, b in zip(points, points[1:])) or points[0] < 1:
        raise BudgetMismatch("recording points must be strictly increasing and >= 1")
    if points[-1] > budget:
        raise BudgetMismatch(f"recording point {points[-1]} exceeds budget {budget}")
    per_call = []
    ends = list(points[1:]) + [budget + 1]
    for start, end, v in zip(points, ends, values):
        per_call.extend([v] * (end - start))
    return math.fsum(per_call) / budget


@dataclass
class MetricReport:
    auc_plain: float
    auc_filtered: float
    auc_diverse: float
    auc_combined: float
    budget: int
    points: List[int] = field(default_factory=list)
    series: Dict[str, List[float]] = field(default_factory=dict)
    selected: Dict[str, List[str]] = field(default_factory=dict)

    def aucs(self):
        return {m: getattr(self, f"auc_{m}") for m in METRICS}

    def ordering_holds(self):
        a = self.aucs()
        return (a["combined"] <= a["filtered"] <= a["plain"]
                and a["combined"] <= a["diverse"] <= a["plain"])

    def to_dict(self):
        return {
            "auc_plain": self.auc_plain,
            "auc_filtered": self.auc_filtered,
            "auc_diverse": self.auc_diverse,
            "auc_combined": self.auc_combined,
            "budget": self.budget,
            "points": self.points,
            "series": self.series,
            "certificates": {"selected": self.selected},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["auc_plain"], d["auc_filtered"], d["auc_diverse"], d["auc_combined"], d["budget"],
            list(d.get("points", [])), dict(d.get("series", {})),
            dict(d.get("certificates", {}).get("selected", {})),
        )

    def save(self, path):
        try:
            with open(path, "w") as fh:
                json.dump(self.to_dict(), fh, indent=1)
                fh.write("\n")
        except OSError as exc:
            raise IoFailure(f"cannot write report {path}: {exc}") from exc

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def unique_pool(records, features):
    """First occurrence of each valid key, in call order."""
    seen = set()
    pool = []
    for rec in sorted(records, key=lambda r: r.call_index):
        if not rec.valid or rec.smiles in seen:
            continue
        seen.add(rec.smiles)
        f = features[rec.smiles]
        pool.append(ScoredMol(rec.smiles, rec.score, rec.call_index, f.fingerprint, f.passes))
    return pool


def point_values(pool, threshold=DIVERSITY_THRESHOLD, k=TOP_K):
    """Four top-k values for one pool plus the selected keys per metric."""
    ranked = rank(pool)
    filtered = [m for m in ranked if m.passes]
    sel = {
        "plain": ranked[:k],
        "filtered": filtered[:k],
        "diverse": diverse_select(ranked, threshold, k),
        "combined": diverse_select(filtered, threshold, k),
    }
    return {name: padded_mean(s, k) for name, s in sel.items()}, sel


def evaluate_stream(records, features, budget, record_interval=100,
                    threshold=DIVERSITY_THRESHOLD, k=TOP_K):
    """Metrics from a record stream and precomputed per-key features.

    Args:
        records: objects with ``call_index``, ``smiles`` (key), ``score``, ``valid``.
        features (dict): key -> :class:`Features`.
        budget (int): call budget N used for normalization.
        record_interval (int): calls between recording points.

    Returns:
        MetricReport
    """
    if record_interval < 1:
        raise ValueError(f"record_interval must be >= 1, got {record_interval}")
    last = max((r.call_index for r in records), default=0)
    if last > budget:
        raise BudgetMismatch(f"log reaches call {last} but budget is {budget}")
    pool = unique_pool(records, features)
    points = recording_points(last, record_interval)
    series = {m: [] for m in METRICS}
    selected = {m: [] for m in METRICS}
    j = 0
    for p in points:
        while j < len(pool) and pool[j].first_call_index <= p:
            j += 1
        values, sel = point_values(pool[:j], threshold, k)
        for m in METRICS:
            series[m].append(values[m])
        selected = {m: [x.key for x in sel[m]] for m in METRICS}
    aucs = {m: auc_series(points, series[m], budget) for m in METRICS}
    return MetricReport(aucs["plain"], aucs["filtered"], aucs["diverse"], aucs["combined"],
                        budget, points, series, selected)


def molecule_features(key, stats, k_sigma=4.0, denovo_max=0.10):
    mol = parse_smiles(key)
    fp = ecfp(mol, SIMILARITY_RADIUS, SIMILARITY_WIDTH)
    passes = stats is None or property_filter(mol, stats, k_sigma, denovo_max).passed
    return Features(fp, passes)


def compute_all(records, stats, budget, record_interval=100, threshold=DIVERSITY_THRESHOLD,
                k=TOP_K, k_sigma=4.0, denovo_max=0.10, fp_radius=SIMILARITY_RADIUS):
    """All four AUC Top-10 metrics for an oracle log.

    Args:
        records (list of OracleRecord): run log.
        stats (ReferenceStats): reference statistics for the property filter.
        budget (int): the run's call budget.

    Raises:
        ParamMismatch: ``fp_radius`` differs from the stats fingerprint radius.
        BudgetMismatch: the log exceeds the budget.
    """
    if stats is not None and stats.fingerprint_params[0] != fp_radius:
        raise ParamMismatch(f"stats radius {stats.fingerprint_params[0]} != metric radius {fp_radius}")
    features = {}
    for rec in records:
        if rec.valid and rec.smiles not in features:
            try:
                features[rec.smiles] = molecule_features(rec.smiles, stats, k_sigma, denovo_max)
            except SmilesError:
                logger.warning("call %d: unparseable key %r treated as invalid", rec.call_index, rec.smiles)
    usable = [r for r in records if not r.valid or r.smiles in features]
    return evaluate_stream(usable, features, budget, record_interval, threshold, k)
