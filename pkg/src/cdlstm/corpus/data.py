"""Labeled reviews, file loaders and pretrained embeddings."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .treebank import NEUTRAL, POS, TreebankNode, read_trees, write_trees

SPLITS = ("train", "dev", "test")


@dataclass
class LabeledReview:
    tokens: list[str]
    label: int
    tree: TreebankNode | None = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("a review needs at least one token")
        if self.label not in (0, 1):
            raise ValueError(f"review label must be 0 or 1, got {self.label!r}")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def review_from_tree(tree: TreebankNode) -> LabeledReview | None:
    """Binary review for a labeled tree; None when the root is neutral."""
    if tree.polarity == NEUTRAL:
        return None
    return LabeledReview(tree.leaves(), int(tree.polarity == POS), tree)


def reviews_from_trees(trees: Sequence[TreebankNode]) -> list[LabeledReview]:
    return [r for r in (review_from_tree(t) for t in trees) if r is not None]


def load_sst(path) -> list[LabeledReview]:
    """One tree per line; neutral-root reviews are dropped."""
    return reviews_from_trees(read_trees(path))


def load_reviews(path) -> list[LabeledReview]:
    """Tab-separated ``label<TAB>space separated tokens`` lines."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise ValueError(f"{path} line {lineno}: expected 'label<TAB>tokens'")
            label, text = line.split("\t", 1)
            try:
                y = int(label)
            except ValueError:
                raise ValueError(f"{path} line {lineno}: label {label!r} is not an integer") from None
            out.append(LabeledReview(text.split(), y))
    return out


def write_reviews(path, reviews: Sequence[LabeledReview]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reviews:
            fh.write(f"{r.label}\t{r.text}\n")


def load_corpus_file(path) -> list[LabeledReview]:
    """Dispatch on content: tree lines start with '('."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = next((ln for ln in fh if ln.strip()), "")
    if first.lstrip().startswith("("):
        return load_sst(path)
    return load_reviews(path)


def find_split(directory, split: str) -> Path | None:
    directory = Path(directory)
    for suffix in (".txt", ".trees", ".tsv"):
        p = directory / f"{split}{suffix}"
        if p.exists():
            return p
    return None


def load_corpus_dir(directory) -> dict[str, list[LabeledReview]]:
    """Load ``train``/``dev``/``test`` files from a directory (missing splits are skipped)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    out = {}
    for split in SPLITS:
        p = find_split(directory, split)
        if p is not None:
            out[split] = load_corpus_file(p)
    if not out:
        raise FileNotFoundError(f"no train/dev/test files in {directory}")
    return out


def save_corpus_dir(directory, splits: dict[str, list[LabeledReview]]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, reviews in splits.items():
        if all(r.tree is not None for r in reviews):
            write_trees(directory / f"{name}.txt", [r.tree for r in reviews])
        else:
            write_reviews(directory / f"{name}.tsv", reviews)


def load_embeddings(path, dim: int) -> dict[str, np.ndarray]:
    """Read whitespace-separated ``token v1 ... v_dim`` lines (GloVe text format).

    Later duplicates replace earlier ones, with a warning.
    """
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ValueError(f"{path} line {lineno}: expected {dim} values, found {len(parts) - 1}")
            tok = parts[0]
            try:
                vec = np.array([float(v) for v in parts[1:]])
            except ValueError:
                raise ValueError(f"{path} line {lineno}: non-numeric vector entry") from None
            if tok in vectors:
                warnings.warn(f"duplicate embedding for {tok!r} at line {lineno}; keeping the later one", stacklevel=2)
            vectors[tok] = vec
    return vectors
