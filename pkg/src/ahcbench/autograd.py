"""Minimal reverse-mode differentiation over a recorded tape.

Only the operations the GRU language model needs are provided. Every op has
a plain-numpy twin in :class:`NumpyOps` with identical forward arithmetic, so
code written against the ops interface produces the same numbers whether or
not a tape is recording.
"""

import numpy as np


class Node:
    """A value on the tape together with its backward rule."""

    __slots__ = ("value", "parents", "backward_fn", "requires_grad", "grad")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=False):
        self.value = value
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(shape={self.value.shape}, requires_grad={self.requires_grad})"


def _unbroadcast(grad, shape):
    # Sum out axes that were broadcast in the forward pass.
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _log_softmax(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


class Tape:
    """Records operations and runs reverse accumulation.

    Example:
        >>> tape = Tape()
        >>> w = tape.param(np.ones((2, 2)))
        >>> loss = tape.sum(tape.matmul(tape.const(np.ones((1, 2))), w))
        >>> tape.backward(loss)
        >>> w.grad.tolist()
        [[1.0, 1.0], [1.0, 1.0]]
    """

    def __init__(self):
        self.nodes = []

    def param(self, value):
        node = Node(np.asarray(value, dtype=float), requires_grad=True)
        return node

    def const(self, value):
        if isinstance(value, Node):
            return value
        return Node(np.asarray(value, dtype=float))

    def _record(self, value, parents, backward_fn):
        needs = any(p.requires_grad for p in parents)
        node = Node(value, parents, backward_fn if needs else None, needs)
        if needs:
            self.nodes.append(node)
        return node

    def _wrap(self, x):
        return x if isinstance(x, Node) else self.const(x)

    def matmul(self, a, b):
        a, b = self._wrap(a), self._wrap(b)
        av, bv = a.value, b.value
        return self._record(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))

    def add(self, a, b):
        a, b = self._wrap(a), self._wrap(b)
        sa, sb = a.value.shape, b.value.shape
        return self._record(a.value + b.value, (a, b),
                            lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))

    def sub(self, a, b):
        a, b = self._wrap(a), self._wrap(b)
        sa, sb = a.value.shape, b.value.shape
        return self._record(a.value - b.value, (a, b),
                            lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))

    def mul(self, a, b):
        a, b = self._wrap(a), self._wrap(b)
        av, bv = a.value, b.value
        return self._record(av * bv, (a, b),
                            lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))

    def sigmoid(self, a):
        a = self._wrap(a)
        y = _sigmoid(a.value)
        return self._record(y, (a,), lambda g: (g * y * (1.0 - y),))

    def tanh(self, a):
        a = self._wrap(a)
        y = np.tanh(a.value)
        return self._record(y, (a,), lambda g: (g * (1.0 - y * y),))

    def gather(self, table, index):
        """Rows ``table[index]`` (embedding lookup)."""
        table = self._wrap(table)
        idx = np.asarray(index)
        shape = table.value.shape

        def back(g):
            out = np.zeros(shape)
            np.add.at(out, idx, g)
            return (out,)

        return self._record(table.value[idx], (table,), back)

    def softmax_ce(self, logits, targets):
        """Per-row ``-log softmax(logits)[target]``; returns a vector."""
        logits = self._wrap(logits)
        t = np.asarray(targets)
        logp = _log_softmax(logits.value)
        rows = np.arange(len(t))
        loss = -logp[rows, t]

        def back(g):
            p = np.exp(logp)
            p[rows, t] -= 1.0
            return (p * g[:, None],)

        return self._record(loss, (logits,), back)

    def sum(self, a):
        a = self._wrap(a)
        shape = a.value.shape
        return self._record(np.asarray(a.value.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))

    def mean(self, a):
        a = self._wrap(a)
        shape = a.value.shape
        n = a.value.size
        return self._record(np.asarray(a.value.mean()), (a,),
                            lambda g: (np.broadcast_to(g / n, shape).copy(),))

    def backward(self, root, seed=None):
        """Accumulate gradients of ``root`` into every reachable param's ``grad``."""
        root.grad = np.ones_like(root.value) if seed is None else np.asarray(seed, dtype=float)
        for node in reversed(self.nodes):
            if node.grad is None or node.backward_fn is None:
                continue
            grads = node.backward_fn(node.grad)
            for parent, g in zip(node.parents, grads):
                if not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g
        for node in self.nodes:
            # free intermediates; leaves keep their grads
            node.grad = None


class NumpyOps:
    """Same interface as :class:`Tape` without recording; values are arrays."""

    @staticmethod
    def param(value):
        return np.asarray(value, dtype=float)

    const = param

    @staticmethod
    def matmul(a, b):
        return a @ b

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def sigmoid(a):
        return _sigmoid(a)

    @staticmethod
    def tanh(a):
        return np.tanh(a)

    @staticmethod
    def gather(table, index):
        return table[np.asarray(index)]

    @staticmethod
    def softmax_ce(logits, targets):
        t = np.asarray(targets)
        return -_log_softmax(logits)[np.arange(len(t)), t]

    @staticmethod
    def sum(a):
        return np.asarray(a.sum())

    @staticmethod
    def mean(a):
        return np.asarray(a.mean())


def value_of(x):
    return x.value if isinstance(x, Node) else x


log_softmax = _log_softmax
sigmoid = _sigmoid
