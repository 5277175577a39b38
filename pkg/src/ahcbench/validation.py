"""Input validation helpers shared by the estimators."""

import numbers

import numpy as np

from .chem import Molecule, parse_smiles


def check_smiles(X):
    """Return ``X`` as a list of SMILES strings.

    Accepts a single string, any iterable of strings, or a 1-D / single
    column 2-D array of strings.
    """
    if isinstance(X, str):
        return [X]
    if isinstance(X, np.ndarray):
        if X.ndim == 2 and X.shape[1] == 1:
            X = X[:, 0]
        elif X.ndim != 1:
            raise ValueError(f"expected a 1-D array of SMILES, got shape {X.shape}")
    out = []
    for item in X:
        if not isinstance(item, str):
            raise TypeError(f"expected SMILES strings, got {type(item).__name__}")
        out.append(item)
    return out


def check_molecules(X):
    """Return ``X`` as a list of :class:`Molecule`, parsing strings as needed."""
    if isinstance(X, (str, Molecule)):
        X = [X]
    if isinstance(X, np.ndarray) and X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    out = []
    for item in X:
        if isinstance(item, Molecule):
            out.append(item)
        elif isinstance(item, str):
            out.append(parse_smiles(item))
        else:
            raise TypeError(f"expected SMILES or Molecule, got {type(item).__name__}")
    return out


def check_fraction(value, name, *, allow_zero=False):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    low_ok = value >= 0 if allow_zero else value > 0
    if not (low_ok and value <= 1):
        bound = "[0, 1]" if allow_zero else "(0, 1]"
        raise ValueError(f"{name} must be in {bound}, got {value}")
    return float(value)


def check_positive_int(value, name, *, allow_zero=False):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'>= 0' if allow_zero else '>= 1'}, got {value}")
    return int(value)


def check_non_negative(value, name):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    if not value >= 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return float(value)
