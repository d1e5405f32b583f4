"""Treebank parsing, corpus loaders, the synthetic grammar and linear reference models."""

from .data import (
    LabeledReview,
    load_corpus_dir,
    load_corpus_file,
    load_embeddings,
    load_reviews,
    load_sst,
    reviews_from_trees,
    save_corpus_dir,
)
from .logistic import (
    BowConfig,
    BowModel,
    NgramLogistic,
    ngram_phrase_score,
    ngrams,
    train_logistic_bow,
    train_logistic_ngram,
)
from .synthetic import GrammarConfig, gen_synthetic_corpus
from .treebank import TreebankNode, TreeParseError, binarize_label, parse_ptb_tree, read_trees

__all__ = [
    "BowConfig",
    "BowModel",
    "GrammarConfig",
    "LabeledReview",
    "NgramLogistic",
    "TreeParseError",
    "TreebankNode",
    "binarize_label",
    "gen_synthetic_corpus",
    "load_corpus_dir",
    "load_corpus_file",
    "load_embeddings",
    "load_reviews",
    "load_sst",
    "ngram_phrase_score",
    "ngrams",
    "parse_ptb_tree",
    "read_trees",
    "reviews_from_trees",
    "save_corpus_dir",
    "train_logistic_bow",
    "train_logistic_ngram",
]
