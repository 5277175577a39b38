"""Budgeted optimization loops: AHC, REINVENT, plain hill-climb and random sampling."""

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import ConfigError, IoFailure
from .oracle import BudgetedOracle, resolve_objective
from .policy import Adam, GruLM, gradients

logger = logging.getLogger(__name__)

OPTIMIZERS = ("AHC", "REINVENT", "HC", "RANDOM")
_DEFAULTS = {
    "AHC": {"sigma": 120.0, "k_fraction": 0.25},
    "REINVENT": {"sigma": 500.0, "k_fraction": 1.0},
    "HC": {"sigma": 0.0, "k_fraction": 0.25},
    "RANDOM": {"sigma": 0.0, "k_fraction": 1.0},
}


@dataclass
class RunConfig:
    """Settings for one optimization run.

    ``sigma`` and ``k_fraction`` default per optimizer when left as None.
    ``stall_steps`` ends a run whose policy has stopped producing new
    molecules (no new oracle call for that many consecutive steps).
    """

    optimizer: str = "AHC"
    sigma: Optional[float] = None
    k_fraction: Optional[float] = None
    batch_size: int = 256
    budget: int = 10_000
    patience: int = 5
    improvement_eps: float = 1e-3
    seed: int = 0
    objective: str = "celecoxib_similarity"
    record_interval: int = 100
    lr: float = 5e-4
    max_len: int = 100
    charge_invalid: bool = False
    threads: int = 1
    stall_steps: int = 50
    name: Optional[str] = None

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        defaults = _DEFAULTS[self.optimizer]
        if self.sigma is None:
            self.sigma = defaults["sigma"]
        if self.k_fraction is None:
            self.k_fraction = defaults["k_fraction"]
        self.validate()

    def validate(self):
        def integer(name, low):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < low:
                raise ConfigError(f"{name} must be an integer >= {low}, got {v!r}")

        if not 0 < self.k_fraction <= 1:
            raise ConfigError(f"k_fraction must be in (0, 1], got {self.k_fraction}")
        if not self.sigma >= 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if not self.improvement_eps >= 0:
            raise ConfigError(f"improvement_eps must be >= 0, got {self.improvement_eps}")
        integer("batch_size", 1)
        integer("budget", 0)
        integer("patience", 1)
        integer("record_interval", 1)
        integer("max_len", 1)
        integer("threads", 1)
        integer("stall_steps", 1)
        integer("seed", 0)

    @property
    def label(self):
        return self.name or self.optimizer

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown RunConfig keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise IoFailure(f"cannot read config {path}: {exc}") from exc

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class StepOutcome:
    loss: Optional[float]
    smiles: List[str]
    scores: List[Optional[float]]
    kept: List[int]
    exhausted: bool


@dataclass
class RunResult:
    log: list
    stop_reason: str
    steps_taken: int
    model_digest: str
    losses: List[Optional[float]] = field(default_factory=list)
    config: Optional[RunConfig] = None

    @property
    def calls_used(self):
        return len(self.log)


def select_top(scores, k_fraction):
    """Indices of the top ``ceil(k * n)`` scored samples, returned in sample order.

    ``scores`` entries that are None (unscored) are ignored; ties keep the
    earlier sample.
    """
    scored = [i for i, s in enumerate(scores) if s is not None]
    if not scored:
        return []
    n_keep = math.ceil(k_fraction * len(scored))
    ranked = sorted(scored, key=lambda i: (-scores[i], i))
    return sorted(ranked[:n_keep])


def _sample_and_score(model, oracle, rng, cfg):
    seqs, _ = model.sample(rng, cfg.batch_size, cfg.max_len)
    smiles = [model.vocab.decode(s) for s in seqs]
    batch = oracle.score_smiles(smiles)
    return seqs, smiles, batch


def ahc_step(agent, prior, oracle, cfg, rng, opt):
    """One Augmented Hill-Climb update (REINVENT when ``k_fraction`` is 1).

    Loss is the mean over the kept samples of
    ``(logP_prior + sigma * score - logP_agent) ** 2``.
    """
    seqs, smiles, batch = _sample_and_score(agent, oracle, rng, cfg)
    kept = select_top(batch.scores, cfg.k_fraction)
    if not kept:
        return StepOutcome(None, smiles, batch.scores, kept, batch.exhausted)
    kept_seqs = [seqs[i] for i in kept]
    target = -prior.nll(kept_seqs) + cfg.sigma * np.array([batch.scores[i] for i in kept])

    def loss_fn(tape, nll_fn):
        # target - logP_agent == target + nll_agent
        diff = tape.add(nll_fn(kept_seqs), target)
        return tape.mean(tape.mul(diff, diff))

    loss, grads = gradients(agent, loss_fn)
    opt.step(grads)
    return StepOutcome(loss, smiles, batch.scores, kept, batch.exhausted)


def reinvent_step(agent, prior, oracle, cfg, rng, opt):
    """Full-batch augmented-likelihood update."""
    return ahc_step(agent, prior, oracle, cfg.replace(k_fraction=1.0), rng, opt)


def hc_step(agent, oracle, cfg, rng, opt):
    """Plain hill-climb: mean NLL of the top valid samples, no prior term."""
    seqs, smiles, batch = _sample_and_score(agent, oracle, rng, cfg)
    scores = [s if ok else None for s, ok in zip(batch.scores, batch.valid)]
    kept = select_top(scores, cfg.k_fraction)
    if not kept:
        return StepOutcome(None, smiles, batch.scores, kept, batch.exhausted)
    kept_seqs = [seqs[i] for i in kept]
    loss, grads = gradients(agent, lambda tape, nll_fn: tape.mean(nll_fn(kept_seqs)))
    opt.step(grads)
    return StepOutcome(loss, smiles, batch.scores, kept, batch.exhausted)


def random_step(prior, oracle, cfg, rng):
    _, smiles, batch = _sample_and_score(prior, oracle, rng, cfg)
    return StepOutcome(None, smiles, batch.scores, [], batch.exhausted)


def _top10(scores_sorted):
    return math.fsum(scores_sorted[:10]) / 10


class _Patience:
    """Early stop after ``patience`` non-improving recording boundaries.

    The first boundary sets the baseline; a later boundary improves when the
    plain top-10 mean exceeds the best so far by more than ``eps``.
    """

    def __init__(self, interval, patience, eps):
        self.interval = interval
        self.patience = patience
        self.eps = eps
        self.next_boundary = interval
        self.best = None
        self.stale = 0
        self._scores = []
        self._seen = 0

    def update(self, log):
        for b in range(self.next_boundary, len(log) + 1, self.interval):
            while self._seen < b:
                rec = log[self._seen]
                if rec.valid:
                    self._scores.append(rec.score)
                self._seen += 1
            self._scores.sort(reverse=True)
            del self._scores[10:]
            value = _top10(self._scores)
            self.next_boundary = b + self.interval
            if self.best is None:
                self.best = value
            elif value > self.best + self.eps:
                self.best = value
                self.stale = 0
            else:
                self.stale += 1
                if self.stale >= self.patience:
                    return True
        return False


def run_optimization(cfg, prior, objective=None, stats=None, on_step=None):
    """Run one budgeted optimization.

    Args:
        cfg (RunConfig): run settings.
        prior (GruLM or str): prior model or checkpoint path; never modified.
        objective: Objective, JSON path or built-in name; defaults to ``cfg.objective``.
        stats (ReferenceStats): unused by the loop; accepted so callers can
            pass a single context to runs and metrics.
        on_step (callable): called with (step, StepOutcome, oracle).

    Returns:
        RunResult
    """
    cfg.validate()
    if isinstance(prior, str):
        prior = GruLM.load(prior)
    objective = resolve_objective(objective if objective is not None else cfg.objective)
    rng = np.random.default_rng(cfg.seed)
    oracle = BudgetedOracle(objective, cfg.budget, cfg.charge_invalid, cfg.threads)
    agent = prior.clone()
    opt = Adam(agent.params, lr=cfg.lr)
    patience = _Patience(cfg.record_interval, cfg.patience, cfg.improvement_eps)
    losses = []
    steps = 0
    stall = 0
    stop = "completed"
    while True:
        if oracle.exhausted:
            stop = "budget"
            break
        before = oracle.calls_used
        if cfg.optimizer == "RANDOM":
            out = random_step(prior, oracle, cfg, rng)
        elif cfg.optimizer == "HC":
            out = hc_step(agent, oracle, cfg, rng, opt)
        else:
            out = ahc_step(agent, prior, oracle, cfg, rng, opt)
        steps += 1
        losses.append(out.loss)
        if on_step is not None:
            on_step(steps, out, oracle)
        if patience.update(oracle.log):
            stop = "patience"
            break
        if out.exhausted or oracle.exhausted:
            stop = "budget"
            break
        stall = stall + 1 if oracle.calls_used == before else 0
        if stall >= cfg.stall_steps:
            logger.warning("no new molecules for %d steps; ending run", stall)
            break
    logger.info("%s seed %d: %s after %d steps, %d calls",
                cfg.label, cfg.seed, stop, steps, oracle.calls_used)
    model = prior if cfg.optimizer == "RANDOM" else agent
    return RunResult(list(oracle.log), stop, steps, model.digest(), losses, cfg)


class AugmentedHillClimb(BaseEstimator):
    """Estimator wrapper around :func:`run_optimization`.

    ``fit`` optimizes a copy of ``prior`` against ``objective``; the result
    is exposed as ``result_``, ``log_`` and ``agent_digest_``.

    Parameters
    ----------
    prior : GruLM or str
    objective : Objective, str
    sigma : float, default=120.0
    k_fraction : float, default=0.25
    batch_size : int, default=256
    budget : int, default=10000
    patience : int, default=5
    lr : float, default=5e-4
    random_state : int, default=0
    """

    def __init__(self, prior=None, objective="celecoxib_similarity", sigma=120.0, k_fraction=0.25,
                 batch_size=256, budget=10_000, patience=5, lr=5e-4, random_state=0):
        self.prior = prior
        self.objective = objective
        self.sigma = sigma
        self.k_fraction = k_fraction
        self.batch_size = batch_size
        self.budget = budget
        self.patience = patience
        self.lr = lr
        self.random_state = random_state

    def fit(self, X=None, y=None):
        if self.prior is None:
            raise ConfigError("a prior model is required")
        cfg = RunConfig("AHC", sigma=self.sigma, k_fraction=self.k_fraction, batch_size=self.batch_size,
                        budget=self.budget, patience=self.patience, lr=self.lr, seed=self.random_state)
        self.result_ = run_optimization(cfg, self.prior, self.objective)
        self.log_ = self.result_.log
        self.agent_digest_ = self.result_.model_digest
        return self

    def best(self, n=10):
        """Top ``n`` (smiles, score) pairs found."""
        if not hasattr(self, "log_"):
            raise AttributeError("AugmentedHillClimb is not fitted")
        recs = sorted((r for r in self.log_ if r.valid), key=lambda r: (-r.score, r.call_index))
        return [(r.smiles, r.score) for r in recs[:n]]
