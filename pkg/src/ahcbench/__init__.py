"""Augmented Hill-Climb benchmark harness with chemistry-aware AUC Top-10 metrics."""

from pathlib import Path

__version__ = "0.1.0"

DATA_DIR = Path(__file__).parent / "data"
DESK_CORPUS = DATA_DIR / "desk_corpus.smi"
