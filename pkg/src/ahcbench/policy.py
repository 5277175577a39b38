"""Token-level GRU language model over SMILES.

The forward pass is written once against the ops interface of
:mod:`ahcbench.autograd`; training records it on a tape, sampling runs the
same arithmetic on plain arrays, so sampled log-probabilities agree with the
training likelihood.
"""

import base64
import copy
import hashlib
import json
import logging
import math

import numpy as np
from sklearn.base import BaseEstimator

from .autograd import NumpyOps, Tape, log_softmax
from .chem.tokenizer import tokenize
from .exceptions import ConfigError, IoFailure, SmilesError, UnknownToken
from .validation import check_positive_int, check_smiles

logger = logging.getLogger(__name__)

PAD, BOS, EOS = "<pad>", "<bos>", "<eos>"
CHECKPOINT_FORMAT = "ahcbench-grulm"
CHECKPOINT_VERSION = 1
# Logit offset for tokens that may never be emitted (PAD, BOS); exp() of it
# underflows to exactly 0, so the softmax is over the emittable tokens only.
_FORBIDDEN = -1e9

PROFILES = {
    "desk": {"embed_dim": 48, "hidden_dim": 128, "n_layers": 1},
    "full": {"embed_dim": 128, "hidden_dim": 512, "n_layers": 3},
}
# Pretraining recipes per profile.
TRAINING = {
    "desk": {"epochs": 5, "batch_size": 128, "lr": 1e-3},
    "full": {"epochs": 5, "batch_size": 128, "lr": 1e-3},
}


class Vocabulary:
    """Bijective token <-> index map with PAD=0, BOS=1, EOS=2."""

    def __init__(self, tokens):
        tokens = list(tokens)
        if tokens[:3] != [PAD, BOS, EOS]:
            tokens = [PAD, BOS, EOS] + [t for t in tokens if t not in (PAD, BOS, EOS)]
        if len(set(tokens)) != len(tokens):
            raise ConfigError("vocabulary tokens must be unique")
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}

    pad = 0
    bos = 1
    eos = 2

    @classmethod
    def build(cls, smiles):
        """Vocabulary covering every token of the strings that tokenize."""
        seen = set()
        bad = 0
        for s in smiles:
            try:
                seen.update(t.text for t in tokenize(s))
            except SmilesError:
                bad += 1
        if bad:
            logger.warning("vocabulary: %d strings failed to tokenize", bad)
        return cls(sorted(seen))

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def encode(self, smiles):
        """``[BOS] + token ids + [EOS]``."""
        out = [self.bos]
        for tok in tokenize(smiles):
            try:
                out.append(self.index[tok.text])
            except KeyError:
                raise UnknownToken(f"token {tok.text!r} at position {tok.position} not in vocabulary") from None
        out.append(self.eos)
        return out

    def decode(self, ids):
        """Concatenate token texts, ignoring BOS and stopping at EOS."""
        parts = []
        for i in ids:
            if i == self.eos:
                break
            if i in (self.bos, self.pad):
                continue
            parts.append(self.tokens[i])
        return "".join(parts)


def pad_batch(seqs, pad=0):
    width = max(len(s) for s in seqs)
    out = np.full((len(seqs), width), pad, dtype=np.int64)
    for row, s in enumerate(seqs):
        out[row, : len(s)] = s
    return out


class GruLM:
    """Embedding, stacked GRU layers and a softmax head.

    Args:
        vocab (Vocabulary): token set.
        embed_dim (int): embedding size E.
        hidden_dim (int): GRU state size H.
        n_layers (int): number of stacked GRU layers.
        seed (int): initialization seed.
    """

    def __init__(self, vocab, embed_dim=48, hidden_dim=128, n_layers=1, seed=0):
        self.vocab = vocab
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.n_layers = n_layers
        rng = np.random.default_rng(seed)
        V, E, H = len(vocab), embed_dim, hidden_dim
        p = {"embed": rng.standard_normal((V, E))}
        bound = 1.0 / math.sqrt(H)
        for layer in range(n_layers):
            n_in = E if layer == 0 else H
            for gate in ("z", "r", "h"):
                p[f"l{layer}.W_{gate}"] = rng.uniform(-bound, bound, (n_in, H))
                p[f"l{layer}.U_{gate}"] = rng.uniform(-bound, bound, (H, H))
                p[f"l{layer}.b_{gate}"] = rng.uniform(-bound, bound, (H,))
        p["out.W"] = rng.uniform(-bound, bound, (H, V))
        p["out.b"] = rng.uniform(-bound, bound, (V,))
        self.params = p
        self._logit_mask = np.zeros(V)
        self._logit_mask[[vocab.pad, vocab.bos]] = _FORBIDDEN

    @classmethod
    def from_profile(cls, vocab, profile="desk", seed=0):
        try:
            hp = PROFILES[profile]
        except KeyError:
            raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}") from None
        return cls(vocab, seed=seed, **hp)

    @property
    def hyperparams(self):
        return {"embed_dim": self.embed_dim, "hidden_dim": self.hidden_dim, "n_layers": self.n_layers}

    def _cell(self, ops, P, layer, x, h):
        W = lambda g: P[f"l{layer}.W_{g}"]
        U = lambda g: P[f"l{layer}.U_{g}"]
        b = lambda g: P[f"l{layer}.b_{g}"]
        z = ops.sigmoid(ops.add(ops.add(ops.matmul(x, W("z")), ops.matmul(h, U("z"))), b("z")))
        r = ops.sigmoid(ops.add(ops.add(ops.matmul(x, W("r")), ops.matmul(h, U("r"))), b("r")))
        cand = ops.tanh(ops.add(ops.add(ops.matmul(x, W("h")), ops.matmul(ops.mul(r, h), U("h"))), b("h")))
        return ops.add(ops.mul(ops.sub(1.0, z), h), ops.mul(z, cand))

    def _step(self, ops, P, tokens, hidden):
        x = ops.gather(P["embed"], tokens)
        new_hidden = []
        for layer in range(self.n_layers):
            x = self._cell(ops, P, layer, x, hidden[layer])
            new_hidden.append(x)
        logits = ops.add(ops.add(ops.matmul(x, P["out.W"]), P["out.b"]), self._logit_mask)
        return logits, new_hidden

    def _sequence_nll(self, ops, P, batch):
        # batch: (B, T) ids starting with BOS, PAD after EOS
        B, T = batch.shape
        hidden = [ops.const(np.zeros((B, self.hidden_dim))) for _ in range(self.n_layers)]
        total = None
        for t in range(T - 1):
            logits, hidden = self._step(ops, P, batch[:, t], hidden)
            target = batch[:, t + 1]
            live = target != self.vocab.pad
            ce = ops.softmax_ce(logits, np.where(live, target, self.vocab.eos))
            ce = ops.mul(ce, live.astype(float))
            total = ce if total is None else ops.add(total, ce)
        if total is None:
            total = ops.const(np.zeros(B))
        return total

    def nll(self, seqs):
        """Per-sequence negative log-likelihood (no gradient)."""
        if not len(seqs):
            return np.zeros(0)
        batch = seqs if isinstance(seqs, np.ndarray) else pad_batch(seqs, self.vocab.pad)
        self._check_batch(batch)
        return self._sequence_nll(NumpyOps, self.params, batch)

    def nll_on_tape(self, tape, seqs):
        """Per-sequence NLL recorded on ``tape``.

        Returns:
            (Node, dict): the NLL vector node and the parameter leaf nodes.
        """
        batch = seqs if isinstance(seqs, np.ndarray) else pad_batch(seqs, self.vocab.pad)
        self._check_batch(batch)
        leaves = {k: tape.param(v) for k, v in self.params.items()}
        return self._sequence_nll(tape, leaves, batch), leaves

    def _check_batch(self, batch):
        if batch.ndim != 2 or batch.shape[1] < 2:
            raise ValueError("sequences need at least BOS and one more token")
        if np.any(batch[:, 0] != self.vocab.bos):
            raise ValueError("sequences must start with BOS")
        if batch.min() < 0 or batch.max() >= len(self.vocab):
            raise UnknownToken("token index out of vocabulary range")

    def step_log_probs(self, tokens, hidden):
        logits, hidden = self._step(NumpyOps, self.params, tokens, hidden)
        return log_softmax(logits), hidden

    def sample(self, rng, n=1, max_len=100):
        """Ancestral sampling at temperature 1.

        Args:
            rng (numpy.random.Generator): randomness source.
            n (int): number of sequences.
            max_len (int): maximum number of generated tokens (EOS included).

        Returns:
            (list of list of int, numpy.ndarray): sequences starting with BOS
            and their log-probabilities.
        """
        ops = NumpyOps
        P = self.params
        V = len(self.vocab)
        hidden = [np.zeros((n, self.hidden_dim)) for _ in range(self.n_layers)]
        tokens = np.full(n, self.vocab.bos, dtype=np.int64)
        seqs = [[self.vocab.bos] for _ in range(n)]
        done = np.zeros(n, dtype=bool)
        total = None
        for _ in range(max_len):
            logits, hidden = self._step(ops, P, tokens, hidden)
            logp = log_softmax(logits)
            cdf = np.cumsum(np.exp(logp), axis=1)
            u = rng.random(n) * cdf[:, -1]
            choice = np.minimum((cdf <= u[:, None]).sum(axis=1), V - 1)
            # guard against landing on a zero-probability slot at the edges
            bad = logp[np.arange(n), choice] <= _FORBIDDEN / 2
            if bad.any():
                choice[bad] = np.argmax(logp[bad], axis=1)
            live = ~done
            ce = ops.softmax_ce(logits, np.where(live, choice, self.vocab.eos))
            ce = ops.mul(ce, live.astype(float))
            total = ce if total is None else ops.add(total, ce)
            for i in np.flatnonzero(live):
                seqs[i].append(int(choice[i]))
            done |= live & (choice == self.vocab.eos)
            if done.all():
                break
            tokens = np.where(done, self.vocab.eos, choice)
        if total is None:
            total = np.zeros(n)
        return seqs, -total

    def clone(self):
        other = copy.copy(self)
        other.params = {k: v.copy() for k, v in self.params.items()}
        other._logit_mask = self._logit_mask.copy()
        return other

    def digest(self):
        h = hashlib.sha256()
        for k in sorted(self.params):
            h.update(k.encode())
            h.update(np.ascontiguousarray(self.params[k], dtype="<f8").tobytes())
        return h.hexdigest()

    def to_dict(self):
        blocks = {}
        for k, v in self.params.items():
            arr = np.ascontiguousarray(v, dtype="<f8")
            blocks[k] = {"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")}
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "vocabulary": self.vocab.tokens,
            "hyperparams": self.hyperparams,
            "params": blocks,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != CHECKPOINT_FORMAT:
            raise ConfigError("not a GRU language model checkpoint")
        if d.get("version") != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {d.get('version')}")
        model = cls(Vocabulary(d["vocabulary"]), **d["hyperparams"])
        for k, block in d["params"].items():
            if k not in model.params:
                raise ConfigError(f"unexpected parameter block {k!r}")
            arr = np.frombuffer(base64.b64decode(block["data"]), dtype="<f8").reshape(block["shape"])
            if arr.shape != model.params[k].shape:
                raise ConfigError(f"shape mismatch for {k}: {arr.shape} vs {model.params[k].shape}")
            model.params[k] = arr.astype(float)
        missing = set(model.params) - set(d["params"])
        if missing:
            raise ConfigError(f"checkpoint missing blocks {sorted(missing)}")
        return model

    def save(self, path):
        try:
            with open(path, "w") as fh:
                json.dump(self.to_dict(), fh)
        except OSError as exc:
            raise IoFailure(f"cannot write checkpoint {path}: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise IoFailure(f"cannot read checkpoint {path}: {exc}") from exc


def nll(model, seq):
    """NLL of one sequence plus the tape that recorded it.

    Returns:
        (float, Tape, Node, dict): value, tape, scalar node, parameter leaves.
    """
    tape = Tape()
    vec, leaves = model.nll_on_tape(tape, [list(seq)])
    total = tape.sum(vec)
    return float(total.value), tape, total, leaves


def gradients(model, loss_fn):
    """Run ``loss_fn(tape, nll_fn)`` and return (loss value, grads by name).

    ``nll_fn(seqs)`` records the model's per-sequence NLL on the tape.
    """
    tape = Tape()
    holder = {}

    def nll_fn(seqs):
        vec, leaves = model.nll_on_tape(tape, seqs)
        holder.update(leaves)
        return vec

    loss = loss_fn(tape, nll_fn)
    tape.backward(loss)
    grads = {k: (n.grad if n.grad is not None else np.zeros_like(n.value)) for k, n in holder.items()}
    return float(loss.value), grads


class Adam:
    """Adam with bias correction.

    Args:
        params (dict): name -> array, updated in place.
        lr (float): step size.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads):
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.step_count
        c2 = 1.0 - b2 ** self.step_count
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            self.params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def encode_corpus(vocab, smiles, max_len=100):
    """Encode strings, skipping those too long or not tokenizable.

    Returns:
        (list of list of int, int): encoded sequences and the skip count.
    """
    seqs = []
    skipped = 0
    for s in smiles:
        try:
            ids = vocab.encode(s)
        except SmilesError:
            skipped += 1
            continue
        if len(ids) - 1 > max_len:
            skipped += 1
            continue
        seqs.append(ids)
    return seqs, skipped


def _mean_nll(tape, nll_fn, batch):
    return tape.mean(nll_fn(batch))


def pretrain(model, smiles, epochs=5, batch_size=128, lr=1e-3, seed=0, max_len=100, on_epoch=None):
    """Maximum-likelihood training with Adam.

    Args:
        model (GruLM): trained in place.
        smiles (list of str): training strings.
        epochs (int): passes over the data.
        batch_size (int): sequences per update.
        lr (float): Adam step size.
        seed (int): shuffling seed.
        max_len (int): longer sequences are skipped.
        on_epoch (callable): called with (epoch, mean_nll) after each epoch.

    Returns:
        (GruLM, list of float): the model and per-epoch mean sequence NLL.
    """
    check_positive_int(epochs, "epochs", allow_zero=True)
    check_positive_int(batch_size, "batch_size")
    seqs, skipped = encode_corpus(model.vocab, smiles, max_len)
    if skipped:
        logger.info("pretrain: skipped %d sequences (untokenizable or over %d tokens)", skipped, max_len)
    if not seqs and epochs:
        raise ConfigError("no trainable sequences in corpus")
    rng = np.random.default_rng(seed)
    opt = Adam(model.params, lr=lr)
    history = []
    for epoch in range(epochs):
        order = rng.permutation(len(seqs))
        losses = []
        for start in range(0, len(seqs), batch_size):
            batch = pad_batch([seqs[i] for i in order[start:start + batch_size]], model.vocab.pad)
            value, grads = gradients(model, lambda tape, fn: _mean_nll(tape, fn, batch))
            opt.step(grads)
            losses.extend([value] * batch.shape[0])
        mean = math.fsum(losses) / len(losses)
        history.append(mean)
        logger.info("epoch %d mean NLL %.4f", epoch + 1, mean)
        if on_epoch is not None:
            on_epoch(epoch + 1, mean)
    return model, history


class SmilesRNN(BaseEstimator):
    """Estimator wrapper: ``fit`` pretrains a GRU prior on SMILES.

    Parameters
    ----------
    embed_dim, hidden_dim, n_layers : int
        Architecture (desk profile by default).
    epochs : int, default=5
    batch_size : int, default=128
    lr : float, default=1e-3
    max_len : int, default=100
    random_state : int, default=0
    """

    def __init__(self, embed_dim=48, hidden_dim=128, n_layers=1, epochs=5, batch_size=128,
                 lr=1e-3, max_len=100, random_state=0):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.n_layers = n_layers
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.max_len = max_len
        self.random_state = random_state

    def fit(self, X, y=None):
        smiles = check_smiles(X)
        for name in ("embed_dim", "hidden_dim", "n_layers", "batch_size", "max_len"):
            check_positive_int(getattr(self, name), name)
        vocab = Vocabulary.build(smiles)
        self.model_ = GruLM(vocab, self.embed_dim, self.hidden_dim, self.n_layers, seed=self.random_state)
        _, self.history_ = pretrain(self.model_, smiles, self.epochs, self.batch_size, self.lr,
                                    self.random_state, self.max_len)
        self.vocabulary_ = vocab
        return self

    def _fitted(self):
        if not hasattr(self, "model_"):
            raise AttributeError("SmilesRNN is not fitted")
        return self.model_

    def score_samples(self, X):
        """Log-likelihood per string (-inf for strings the vocabulary cannot encode)."""
        model = self._fitted()
        out = np.full(len(check_smiles(X)), -np.inf)
        for i, s in enumerate(check_smiles(X)):
            try:
                out[i] = -model.nll([model.vocab.encode(s)])[0]
            except (SmilesError, UnknownToken):
                pass
        return out

    def score(self, X, y=None):
        """Mean log-likelihood."""
        return float(np.mean(self.score_samples(X)))

    def sample(self, n=1, random_state=None):
        model = self._fitted()
        rng = np.random.default_rng(self.random_state if random_state is None else random_state)
        seqs, _ = model.sample(rng, n, self.max_len)
        return [model.vocab.decode(s) for s in seqs]
