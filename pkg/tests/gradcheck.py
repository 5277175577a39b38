"""Central-difference gradient check for GruLM, independent of the tape."""

import numpy as np

from ahcbench.policy import GruLM, Vocabulary, gradients


def small_model(seed=1):
    # |V| = 5: PAD, BOS, EOS plus two symbols
    return GruLM(Vocabulary(["C", "O"]), embed_dim=4, hidden_dim=3, n_layers=1, seed=seed)


def random_sequences(rng, n=10, max_body=6):
    return [[1] + [int(t) for t in rng.integers(3, 5, size=rng.integers(1, max_body))] + [2]
            for _ in range(n)]


def max_relative_errors(model, seqs, h=1e-5):
    """Per-block relative error between tape gradients and finite differences."""
    _, grads = gradients(model, lambda tape, fn: tape.sum(fn(seqs)))
    errors = {}
    for name, p in model.params.items():
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + h
            up = model.nll(seqs).sum()
            p[idx] = orig - h
            down = model.nll(seqs).sum()
            p[idx] = orig
            num[idx] = (up - down) / (2 * h)
        denom = np.maximum(np.abs(grads[name]) + np.abs(num), 1e-8)
        errors[name] = float(np.max(np.abs(grads[name] - num) / denom))
    return errors
