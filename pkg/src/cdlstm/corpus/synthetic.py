"""A small sentiment grammar with labeled binary parse trees.

Reviews are drawn from four templates:

* plain clauses, ``the plot was very good .``, and attributive phrases,
  ``a really charming film .``
* negated clauses, ``the movie was not good .`` / ``the film is n't bad .``
* contrasts, ``the acting was nice but the plot was really awful .``
  (a mild first clause, a strong second clause that decides the label)
* "used to be" templates, ``it used to be my favorite .`` (negative) next
  to ``this is my favorite film .`` (positive)

Every node of every tree is labeled by the rules that built it, so the
phrase-level protocols have ground truth. Generation is a pure function
of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledReview
from .treebank import TreebankNode

# word -> planted strength (1 mild, 2 strong)
POSITIVE_WORDS = {
    "good": 1, "nice": 1, "fun": 1, "enjoyable": 1, "charming": 1,
    "funny": 1, "engaging": 1, "solid": 1,
    "great": 2, "excellent": 2, "wonderful": 2, "brilliant": 2, "superb": 2,
}  # fmt: skip
NEGATIVE_WORDS = {
    "bad": 1, "dull": 1, "boring": 1, "weak": 1, "bland": 1,
    "tired": 1, "tedious": 1, "messy": 1,
    "awful": 2, "terrible": 2, "dreadful": 2, "horrible": 2, "painful": 2,
}  # fmt: skip
NOUNS = ("movie", "film", "plot", "acting", "story", "cast", "script", "ending", "music", "dialogue")
DETERMINERS = ("the", "this")
ARTICLE = "a"
VERBS = ("was", "is", "seems", "felt", "looks")
INTENSIFIERS = ("very", "really", "truly")
NEGATORS = ("not", "never")
CONTRACTED_NEGATOR = "n't"
PERIOD = "."

NEUTRAL_LABEL = 2


@dataclass(frozen=True)
class GrammarConfig:
    """Template mixture. Weights are normalized."""

    plain: float = 0.60
    negation: float = 0.15
    contrast: float = 0.13
    used_to_be: float = 0.12
    plain_positive_fraction: float = 0.56  # offsets the negation template's skew
    negated_positive_fraction: float = 0.75
    intensifier_prob: float = 0.25
    conjunction_prob: float = 0.15
    attributive_prob: float = 0.4


def _leaf(token: str, label: int = NEUTRAL_LABEL) -> TreebankNode:
    return TreebankNode(label, token=token)


def _node(label: int, left: TreebankNode, right: TreebankNode) -> TreebankNode:
    return TreebankNode(label, [left, right])


def word_label(word: str) -> int:
    if word in POSITIVE_WORDS:
        return 2 + POSITIVE_WORDS[word]
    if word in NEGATIVE_WORDS:
        return 2 - NEGATIVE_WORDS[word]
    if word == "favorite":
        return 4
    return NEUTRAL_LABEL


def flip(label: int) -> int:
    """Negating a phrase: strong or mild positive becomes mildly negative and vice versa."""
    if label > NEUTRAL_LABEL:
        return 1
    if label < NEUTRAL_LABEL:
        return 3
    return NEUTRAL_LABEL


def intensify(label: int) -> int:
    if label > NEUTRAL_LABEL:
        return 4
    if label < NEUTRAL_LABEL:
        return 0
    return label


def is_positive(label: int) -> bool:
    return label > NEUTRAL_LABEL


class _Builder:
    def __init__(self, rng: np.random.Generator, cfg: GrammarConfig):
        self.rng = rng
        self.cfg = cfg
        self.pos = sorted(POSITIVE_WORDS)
        self.neg = sorted(NEGATIVE_WORDS)

    def pick(self, options):
        return options[int(self.rng.integers(len(options)))]

    def adjective(self, positive: bool, strength: int | None = None) -> TreebankNode:
        words = self.pos if positive else self.neg
        if strength is not None:
            lex = POSITIVE_WORDS if positive else NEGATIVE_WORDS
            words = [w for w in words if lex[w] == strength]
        w = self.pick(words)
        return _leaf(w, word_label(w))

    def strong_predicate(self, positive: bool) -> TreebankNode:
        adj = self.adjective(positive, strength=2)
        if self.rng.random() < 0.5:
            return _node(intensify(adj.label), _leaf(self.pick(INTENSIFIERS)), adj)
        return adj

    def predicate(self, positive: bool, allow_conjunction: bool = True) -> TreebankNode:
        adj = self.adjective(positive)
        if self.rng.random() < self.cfg.intensifier_prob:
            return _node(intensify(adj.label), _leaf(self.pick(INTENSIFIERS)), adj)
        if allow_conjunction and self.rng.random() < self.cfg.conjunction_prob:
            return self.double_predicate(positive, first=adj)
        return adj

    def double_predicate(self, positive: bool, first: TreebankNode | None = None) -> TreebankNode:
        first = first or self.adjective(positive)
        second = self.adjective(positive)
        while second.token == first.token:
            second = self.adjective(positive)
        tail = _node(second.label, _leaf("and"), second)
        lab = intensify(first.label) if max(abs(first.label - 2), abs(second.label - 2)) > 1 else first.label
        return _node(lab, first, tail)

    def noun_phrase(self) -> TreebankNode:
        return _node(NEUTRAL_LABEL, _leaf(self.pick(DETERMINERS)), _leaf(self.pick(NOUNS)))

    def attributive(self, positive: bool) -> TreebankNode:
        pred = self.predicate(positive, allow_conjunction=False)
        nominal = _node(pred.label, pred, _leaf(self.pick(NOUNS)))
        return _node(pred.label, _leaf(ARTICLE), nominal)

    def clause(self, pred: TreebankNode) -> TreebankNode:
        vp = _node(pred.label, _leaf(self.pick(VERBS)), pred)
        return _node(pred.label, self.noun_phrase(), vp)

    def negated_clause(self, pred_positive: bool) -> TreebankNode:
        pred = self.predicate(pred_positive)
        lab = flip(pred.label)
        verb = _leaf(self.pick(VERBS))
        if self.rng.random() < 0.3:
            vp = _node(lab, _node(NEUTRAL_LABEL, verb, _leaf(CONTRACTED_NEGATOR)), pred)
        else:
            vp = _node(lab, verb, _node(lab, _leaf(self.pick(NEGATORS)), pred))
        return _node(lab, self.noun_phrase(), vp)

    def used_to_be(self, positive: bool) -> TreebankNode:
        fav = _node(3, _leaf("my"), _leaf("favorite", word_label("favorite")))
        with_noun = self.rng.random() < 0.5
        if with_noun:
            obj = _node(3, fav, _leaf(self.pick(("film", "movie"))))
            subj = _leaf("this")
        else:
            obj = fav
            subj = _leaf("it")
        if positive:
            vp = _node(3, _leaf("is"), obj)
            return _node(3, subj, vp)
        inner = _node(3, _leaf("to"), _node(3, _leaf("be"), obj))
        vp = _node(1, _leaf("used"), inner)
        return _node(1, subj, vp)

    def review(self) -> TreebankNode:
        cfg = self.cfg
        weights = np.array([cfg.plain, cfg.negation, cfg.contrast, cfg.used_to_be], dtype=float)
        kind = int(self.rng.choice(4, p=weights / weights.sum()))
        if kind == 0:
            positive = bool(self.rng.random() < cfg.plain_positive_fraction)
            if self.rng.random() < cfg.attributive_prob:
                content = self.attributive(positive)
            else:
                content = self.clause(self.predicate(positive))
        elif kind == 1:
            content = self.negated_clause(bool(self.rng.random() < cfg.negated_positive_fraction))
        elif kind == 2:
            first_positive = bool(self.rng.random() < 0.5)
            first = self.clause(self.adjective(first_positive, strength=1))
            second = self.clause(self.strong_predicate(not first_positive))
            tail = _node(second.label, _leaf("but"), second)
            content = _node(second.label, first, tail)
        else:
            content = self.used_to_be(bool(self.rng.random() < 0.5))
        root = _node(content.label, content, _leaf(PERIOD))
        root.assign_spans()
        return root


def generate_trees(rng: np.random.Generator, n: int, cfg: GrammarConfig | None = None) -> list[TreebankNode]:
    b = _Builder(rng, cfg or GrammarConfig())
    return [b.review() for _ in range(n)]


def gen_synthetic_corpus(
    seed: int = 0,
    size: int = 5000,
    valid_size: int | None = None,
    test_size: int | None = None,
    cfg: GrammarConfig | None = None,
) -> dict[str, list[LabeledReview]]:
    """Train/dev/test splits of labeled reviews with trees.

    ``size`` is the number of training reviews; dev and test default to a
    fifth of that each (at least one).
    """
    if size < 1:
        raise ValueError("corpus size must be at least 1")
    valid_size = max(1, size // 5) if valid_size is None else valid_size
    test_size = max(1, size // 5) if test_size is None else test_size
    rng = np.random.default_rng(seed)
    out = {}
    for name, n in (("train", size), ("dev", valid_size), ("test", test_size)):
        trees = generate_trees(rng, n, cfg)
        out[name] = [LabeledReview(t.leaves(), int(is_positive(t.label)), t) for t in trees]
    return out
