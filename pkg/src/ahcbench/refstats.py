"""Reference-corpus statistics and the MW/LogP/de novo property filter."""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Tuple

import numpy as np
from sklearn.base import BaseEstimator

from .chem import parse_smiles
from .chem.smiles import read_smiles_lines
from .descriptors import crippen_logp, mol_weight
from .exceptions import (
    DegenerateStats, EmptyCorpus, EmptyFingerprint, IoFailure, ParamMismatch, SmilesError,
)
from .fingerprint import ecfp
from .validation import check_molecules, check_non_negative, check_fraction, check_positive_int

logger = logging.getLogger(__name__)

STATS_VERSION = 1
# Wide enough that corpus identifiers essentially never collide; a folded
# 2048-bit universe saturates on a few thousand drug-like molecules.
DEFAULT_UNIVERSE_WIDTH = 2 ** 32
REASONS = ("mw_low", "mw_high", "logp_low", "logp_high", "denovo_bits")


@dataclass(frozen=True)
class ReferenceStats:
    mw_mean: float
    mw_std: float
    logp_mean: float
    logp_std: float
    bit_universe: FrozenSet[int]
    n_molecules: int
    source_digest: str
    fingerprint_params: Tuple[int, int] = (2, DEFAULT_UNIVERSE_WIDTH)
    skipped: int = 0

    def to_dict(self):
        radius, width = self.fingerprint_params
        return {
            "version": STATS_VERSION,
            "mw_mean": self.mw_mean,
            "mw_std": self.mw_std,
            "logp_mean": self.logp_mean,
            "logp_std": self.logp_std,
            "n_molecules": self.n_molecules,
            "skipped": self.skipped,
            "fp_radius": radius,
            "fp_width": width,
            "source_digest": self.source_digest,
            "bit_universe": sorted(self.bit_universe),
        }

    @classmethod
    def from_dict(cls, d):
        version = d.get("version", STATS_VERSION)
        if version != STATS_VERSION:
            raise ValueError(f"unsupported stats version {version}")
        return cls(
            mw_mean=float(d["mw_mean"]),
            mw_std=float(d["mw_std"]),
            logp_mean=float(d["logp_mean"]),
            logp_std=float(d["logp_std"]),
            bit_universe=frozenset(int(b) for b in d["bit_universe"]),
            n_molecules=int(d["n_molecules"]),
            source_digest=str(d["source_digest"]),
            fingerprint_params=(int(d["fp_radius"]), int(d["fp_width"])),
            skipped=int(d.get("skipped", 0)),
        )

    def save(self, path):
        try:
            with open(path, "w") as fh:
                json.dump(self.to_dict(), fh, separators=(",", ":"))
                fh.write("\n")
        except OSError as exc:
            raise IoFailure(f"cannot write stats to {path}: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise IoFailure(f"cannot read stats from {path}: {exc}") from exc


@dataclass(frozen=True)
class FilterVerdict:
    passed: bool
    reasons: FrozenSet[str] = field(default_factory=frozenset)

    def __bool__(self):
        return self.passed


def file_digest(path):
    """sha256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return h.hexdigest()


def _population_moments(values):
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def stats_from_molecules(mols, source_digest="", radius=2, width=DEFAULT_UNIVERSE_WIDTH, skipped=0):
    """Build :class:`ReferenceStats` from parsed molecules.

    Raises:
        EmptyCorpus: fewer than two molecules.
        DegenerateStats: zero spread in MW or LogP.
    """
    if len(mols) < 2:
        raise EmptyCorpus(f"need at least 2 parseable molecules, got {len(mols)}")
    mw = [mol_weight(m) for m in mols]
    lp = [crippen_logp(m) for m in mols]
    universe = set()
    for m in mols:
        universe |= ecfp(m, radius, width).on_bits
    mw_mean, mw_std = _population_moments(mw)
    lp_mean, lp_std = _population_moments(lp)
    if mw_std == 0 or lp_std == 0:
        raise DegenerateStats(f"zero standard deviation (mw_std={mw_std}, logp_std={lp_std})")
    return ReferenceStats(
        mw_mean, mw_std, lp_mean, lp_std, frozenset(universe), len(mols),
        source_digest, (radius, width), skipped,
    )


def build_stats(corpus, radius=2, width=DEFAULT_UNIVERSE_WIDTH):
    """Compute reference statistics for a SMILES file.

    Unparseable lines are skipped and counted in ``skipped``.

    Args:
        corpus (str): path to a SMILES file (first whitespace field per line).
        radius (int): fingerprint radius for the bit universe.
        width (int): fingerprint width for the bit universe.

    Returns:
        ReferenceStats
    """
    digest = file_digest(corpus)
    mols = []
    skipped = 0
    for line in read_smiles_lines(corpus):
        try:
            mols.append(parse_smiles(line))
        except SmilesError:
            skipped += 1
    if skipped:
        logger.warning("skipped %d unparseable lines in %s", skipped, corpus)
    return stats_from_molecules(mols, digest, radius, width, skipped)


def denovo_fraction(fp, stats):
    """Fraction of ``fp`` on-bits absent from the reference universe."""
    if (fp.width != stats.fingerprint_params[1]):
        raise ParamMismatch(f"fingerprint width {fp.width} != stats width {stats.fingerprint_params[1]}")
    if not fp.on_bits:
        raise EmptyFingerprint("fingerprint has no on-bits")
    novel = len(fp.on_bits - stats.bit_universe)
    return novel / len(fp.on_bits)


def molecule_denovo_fraction(mol, stats):
    radius, width = stats.fingerprint_params
    return denovo_fraction(ecfp(mol, radius, width), stats)


def property_filter(mol, stats, k_sigma=4.0, denovo_max=0.10):
    """Closed-interval MW/LogP bounds plus the de novo bit cap.

    Args:
        mol (Molecule): candidate.
        stats (ReferenceStats): reference statistics.
        k_sigma (float): half-width of the bounds in standard deviations.
        denovo_max (float): largest tolerated de novo fraction (inclusive).

    Returns:
        FilterVerdict
    """
    reasons = set()
    mw = mol_weight(mol)
    lp = crippen_logp(mol)
    if mw < stats.mw_mean - k_sigma * stats.mw_std:
        reasons.add("mw_low")
    if mw > stats.mw_mean + k_sigma * stats.mw_std:
        reasons.add("mw_high")
    if lp < stats.logp_mean - k_sigma * stats.logp_std:
        reasons.add("logp_low")
    if lp > stats.logp_mean + k_sigma * stats.logp_std:
        reasons.add("logp_high")
    try:
        if molecule_denovo_fraction(mol, stats) > denovo_max:
            reasons.add("denovo_bits")
    except EmptyFingerprint:
        # No heavy-atom environments at all; nothing can be judged novel.
        pass
    return FilterVerdict(not reasons, frozenset(reasons))


class PropertyFilter(BaseEstimator):
    """Estimator form of :func:`property_filter`.

    ``fit`` builds reference statistics from training SMILES; ``predict``
    returns a boolean pass mask.

    Parameters
    ----------
    k_sigma : float, default=4.0
    denovo_max : float, default=0.10
    radius : int, default=2
    width : int, default=2**32
    """

    def __init__(self, k_sigma=4.0, denovo_max=0.10, radius=2, width=DEFAULT_UNIVERSE_WIDTH):
        self.k_sigma = k_sigma
        self.denovo_max = denovo_max
        self.radius = radius
        self.width = width

    def fit(self, X, y=None):
        check_non_negative(self.k_sigma, "k_sigma")
        check_fraction(self.denovo_max, "denovo_max", allow_zero=True)
        check_positive_int(self.radius, "radius", allow_zero=True)
        check_positive_int(self.width, "width")
        self.stats_ = stats_from_molecules(check_molecules(X), radius=self.radius, width=self.width)
        return self

    @classmethod
    def from_stats(cls, stats, k_sigma=4.0, denovo_max=0.10):
        radius, width = stats.fingerprint_params
        est = cls(k_sigma=k_sigma, denovo_max=denovo_max, radius=radius, width=width)
        est.stats_ = stats
        return est

    def verdicts(self, X):
        if not hasattr(self, "stats_"):
            raise AttributeError("PropertyFilter is not fitted")
        return [property_filter(m, self.stats_, self.k_sigma, self.denovo_max) for m in check_molecules(X)]

    def predict(self, X):
        return np.array([v.passed for v in self.verdicts(X)], dtype=bool)

    def score(self, X, y=None):
        """Pass rate over ``X``."""
        return float(self.predict(X).mean())
