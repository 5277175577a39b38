"""Scoring functions, multi-property objectives and the budgeted oracle.

Objectives map a :class:`Molecule` to a score in [0, 1]. The budgeted
oracle charges one call per unique canonical key and keeps an append-only
log in the order molecules were submitted.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

from .chem import parse_smiles
from .descriptors import crippen_logp, element_counts, mol_weight
from .exceptions import BudgetExhausted, ConfigError, IoFailure, SmilesError
from .fingerprint import ecfp, tanimoto

logger = logging.getLogger(__name__)

SIMILARITY_RADIUS = 2
SIMILARITY_WIDTH = 2048
_OBJECTIVE_DIR = Path(__file__).parent / "data" / "objectives"


def _clip01(x):
    return min(1.0, max(0.0, float(x)))


@dataclass(frozen=True)
class ScoreModifier:
    """Map a raw descriptor value into [0, 1].

    Kinds: ``gaussian`` (mu, sigma), ``min_threshold`` (t: values at or
    above t score 1, below scale linearly from 0), ``max_threshold`` (t:
    values at or below t score 1, above decay as t/x), ``identity``
    (clipped to [0, 1]).
    """

    kind: str
    params: tuple = ()

    KINDS = ("gaussian", "min_threshold", "max_threshold", "identity")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown modifier kind {self.kind!r}")
        expected = {"gaussian": 2, "min_threshold": 1, "max_threshold": 1, "identity": 0}[self.kind]
        if len(self.params) != expected:
            raise ConfigError(f"{self.kind} takes {expected} parameters, got {len(self.params)}")
        if self.kind == "gaussian" and not self.params[1] > 0:
            raise ConfigError(f"gaussian sigma must be > 0, got {self.params[1]}")
        if self.kind in ("min_threshold", "max_threshold") and not self.params[0] > 0:
            raise ConfigError(f"{self.kind} threshold must be > 0, got {self.params[0]}")

    def __call__(self, x):
        if self.kind == "gaussian":
            mu, sigma = self.params
            return math.exp(-0.5 * ((x - mu) / sigma) ** 2)
        if self.kind == "min_threshold":
            return _clip01(x / self.params[0])
        if self.kind == "max_threshold":
            t = self.params[0]
            return 1.0 if x <= t else _clip01(t / x)
        return _clip01(x)

    def to_dict(self):
        names = {"gaussian": ("mu", "sigma"), "min_threshold": ("t",),
                 "max_threshold": ("t",), "identity": ()}[self.kind]
        return {"kind": self.kind, "params": dict(zip(names, self.params))}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        params = d.get("params", {})
        if isinstance(params, dict):
            names = {"gaussian": ("mu", "sigma"), "min_threshold": ("t",),
                     "max_threshold": ("t",), "identity": ()}.get(kind)
            if names is None:
                raise ConfigError(f"unknown modifier kind {kind!r}")
            missing = [n for n in names if n not in params]
            extra = sorted(set(params) - set(names))
            if missing or extra:
                raise ConfigError(f"{kind} params: missing {missing}, unexpected {extra}")
            params = tuple(float(params[n]) for n in names)
        else:
            params = tuple(float(p) for p in params)
        return cls(kind, params)


class Source:
    """A named molecule -> float descriptor used as an objective component."""

    def __init__(self, spec):
        self.spec = spec
        if spec.startswith("similarity:"):
            target = parse_smiles(spec.split(":", 1)[1])
            self._target_fp = ecfp(target, SIMILARITY_RADIUS, SIMILARITY_WIDTH)
            self._fn = self._similarity
        elif spec.startswith("element:"):
            self._element = spec.split(":", 1)[1]
            if not self._element:
                raise ConfigError("element source needs a symbol")
            self._fn = lambda m: float(element_counts(m).get(self._element, 0))
        elif spec == "mw":
            self._fn = mol_weight
        elif spec == "logp":
            self._fn = crippen_logp
        elif spec == "total_atoms":
            self._fn = lambda m: float(m.total_atom_count)
        else:
            raise ConfigError(f"unknown component source {spec!r}")

    def _similarity(self, mol):
        return tanimoto(ecfp(mol, SIMILARITY_RADIUS, SIMILARITY_WIDTH), self._target_fp)

    def __call__(self, mol):
        return self._fn(mol)

    def __repr__(self):
        return f"Source({self.spec!r})"


@dataclass
class Component:
    source: Callable
    modifier: ScoreModifier

    def __call__(self, mol):
        return self.modifier(self.source(mol))


class Objective:
    """Geometric mean of modified component scores.

    Args:
        name (str): objective name.
        components (list of Component): at least one component.
    """

    def __init__(self, name, components):
        if not components:
            raise ConfigError("an objective needs at least one component")
        self.name = name
        self.components = list(components)

    def component_scores(self, mol):
        return [c(mol) for c in self.components]

    def __call__(self, mol):
        vals = self.component_scores(mol)
        if len(vals) == 1:
            return _clip01(vals[0])
        return _clip01(math.prod(vals) ** (1.0 / len(vals)))

    def to_dict(self):
        comps = []
        for c in self.components:
            if not isinstance(c.source, Source):
                raise ConfigError("only built-in sources can be serialized")
            comps.append({"source": c.source.spec, "modifier": c.modifier.to_dict()})
        return {"name": self.name, "components": comps}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"name", "components"}
        if unknown:
            raise ConfigError(f"unknown objective keys: {sorted(unknown)}")
        comps = [
            Component(Source(c["source"]), ScoreModifier.from_dict(c.get("modifier", {"kind": "identity"})))
            for c in d.get("components", [])
        ]
        return cls(d.get("name", "objective"), comps)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise IoFailure(f"cannot read objective {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"objective {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def __repr__(self):
        return f"Objective({self.name!r}, {len(self.components)} components)"


def similarity_objective(target, name=None):
    """ECFP4 Tanimoto similarity to ``target``."""
    src = Source(f"similarity:{target}")
    return Objective(name or f"similarity:{target}", [Component(src, ScoreModifier("identity"))])


def isomer_objective(formula, name=None):
    """Isomer objective for an element -> count formula.

    One gaussian (sigma 1) per element count plus a gaussian (sigma 2) on the
    total atom count, hydrogens included.
    """
    if not formula:
        raise ConfigError("isomer formula must be nonempty")
    comps = [
        Component(Source(f"element:{el}"), ScoreModifier("gaussian", (float(n), 1.0)))
        for el, n in sorted(formula.items())
    ]
    total = float(sum(formula.values()))
    comps.append(Component(Source("total_atoms"), ScoreModifier("gaussian", (total, 2.0))))
    label = "".join(f"{el}{n}" for el, n in sorted(formula.items()))
    return Objective(name or f"isomer:{label}", comps)


@dataclass(frozen=True)
class OracleRecord:
    call_index: int
    smiles: str
    score: float
    valid: bool = True

    def to_dict(self):
        return {"call_index": self.call_index, "smiles": self.smiles,
                "score": self.score, "valid": self.valid}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["call_index"]), str(d["smiles"]), float(d["score"]), bool(d.get("valid", True)))


@dataclass
class BatchResult:
    """Per-sample outcome of :meth:`BudgetedOracle.score_smiles`.

    ``scores[i]`` is None for samples left unscored after the budget ran
    out; ``valid[i]`` is False for strings that failed to parse.
    """

    scores: List[Optional[float]]
    valid: List[bool]
    keys: List[Optional[str]]
    exhausted: bool


class BudgetedOracle:
    """Caching wrapper that charges one call per unique canonical key.

    Args:
        objective (Objective): inner scoring function.
        budget (int): maximum number of charged calls.
        charge_invalid (bool): charge (and log) unparseable strings once each.
        threads (int): worker threads for evaluating new molecules in a batch.
    """

    def __init__(self, objective, budget=10_000, charge_invalid=False, threads=1):
        if budget < 0:
            raise ConfigError(f"budget must be >= 0, got {budget}")
        self.objective = objective
        self.budget = int(budget)
        self.charge_invalid = charge_invalid
        self.threads = max(1, int(threads))
        self.calls_used = 0
        self.cache = {}
        self._invalid_cache = {}
        self.log = []

    @property
    def exhausted(self):
        return self.calls_used >= self.budget

    def _charge(self, key, score, valid=True):
        self.calls_used += 1
        self.log.append(OracleRecord(self.calls_used, key, score, valid))

    def evaluate(self, key, mol):
        """Score one molecule, charging the budget on a cache miss."""
        if key in self.cache:
            return self.cache[key]
        if self.exhausted:
            raise BudgetExhausted(f"budget of {self.budget} calls exhausted")
        score = _clip01(self.objective(mol))
        self.cache[key] = score
        self._charge(key, score)
        return score

    def score_smiles(self, smiles):
        """Parse and score a batch of strings in order.

        Invalid strings score 0 and, unless ``charge_invalid`` is set, cost
        nothing. Once the budget runs out the remaining uncached samples are
        left unscored.

        Returns:
            BatchResult
        """
        n = len(smiles)
        scores = [None] * n
        valid = [True] * n
        keys = [None] * n
        mols = {}
        pending = []  # (key, mol) to evaluate, in call order
        exhausted = False
        for i, s in enumerate(smiles):
            try:
                mol = parse_smiles(s)
            except SmilesError:
                valid[i] = False
                if not self.charge_invalid:
                    scores[i] = 0.0
                elif s in self._invalid_cache:
                    scores[i] = 0.0
                elif self.exhausted:
                    exhausted = True
                    break
                else:
                    self._invalid_cache[s] = 0.0
                    self._charge(s, 0.0, valid=False)
                    scores[i] = 0.0
                continue
            key = mol.canonical_key
            keys[i] = key
            if key in self.cache or key in mols:
                continue
            if self.exhausted:
                exhausted = True
                break
            mols[key] = mol
            self.cache[key] = None
            self._charge(key, None)
            pending.append((key, len(self.log) - 1))
        self._fill(pending, mols)
        for i in range(n):
            if scores[i] is None and keys[i] is not None and self.cache.get(keys[i]) is not None:
                scores[i] = self.cache[keys[i]]
        return BatchResult(scores, valid, keys, exhausted or self.exhausted)

    def _fill(self, pending, mols):
        if not pending:
            return
        keys = [k for k, _ in pending]
        if self.threads > 1 and len(keys) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                values = list(pool.map(lambda k: self.objective(mols[k]), keys))
        else:
            values = [self.objective(mols[k]) for k in keys]
        # results land in submission order whatever the thread scheduling
        for (key, idx), v in zip(pending, values):
            v = _clip01(v)
            self.cache[key] = v
            rec = self.log[idx]
            self.log[idx] = OracleRecord(rec.call_index, rec.smiles, v, rec.valid)

    def write_log(self, path):
        try:
            with open(path, "w") as fh:
                for rec in self.log:
                    fh.write(json.dumps(rec.to_dict(), separators=(",", ":")) + "\n")
        except OSError as exc:
            raise IoFailure(f"cannot write log {path}: {exc}") from exc


def read_log(path):
    """Read a JSONL run log of ``{call_index, smiles, score[, valid]}`` rows."""
    records = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(OracleRecord.from_dict(json.loads(line)))
    except OSError as exc:
        raise IoFailure(f"cannot read log {path}: {exc}") from exc
    return records


def replay(records, objective):
    """Rescore logged valid molecules; returns the list of fresh scores."""
    return [_clip01(objective(parse_smiles(r.smiles))) for r in records if r.valid]


BUILTIN_TARGETS = {
    "celecoxib": "Cc1ccc(-c2cc(C(F)(F)F)nn2-c2ccc(S(N)(=O)=O)cc2)cc1",
    "zaleplon": "CCN(C(C)=O)c1cccc(-c2ccnc3c(C#N)cnn23)c1",
    "perindopril": "CCCC(NC(C)C(=O)N1C2CCCCC2CC1C(=O)O)C(=O)OCC",
}


def builtin_objective(name):
    """Look up a bundled objective by name.

    ``<target>_similarity`` for each bundled target, or the stem of a JSON
    definition shipped in ``ahcbench/data/objectives`` (``zaleplon_mpo``,
    ``perindopril_mpo``).
    """
    if name.endswith("_similarity") and name[: -len("_similarity")] in BUILTIN_TARGETS:
        return similarity_objective(BUILTIN_TARGETS[name[: -len("_similarity")]], name)
    path = _OBJECTIVE_DIR / f"{name}.json"
    if path.is_file():
        return Objective.load(path)
    raise ConfigError(f"unknown built-in objective {name!r}")


def resolve_objective(ref):
    """Objective from a JSON file path or a built-in name."""
    if isinstance(ref, Objective):
        return ref
    if isinstance(ref, dict):
        return Objective.from_dict(ref)
    if str(ref).endswith(".json") or Path(str(ref)).is_file():
        return Objective.load(ref)
    return builtin_objective(str(ref))


def score_many(objective, mols: Sequence):
    return [_clip01(objective(m)) for m in mols]
