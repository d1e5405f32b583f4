"""Evaluation protocols: unigram correlation, dissenting subphrases,
compositionality, negation interactions and phrase-embedding neighbors.

Ground-truth polarity always comes from tree labels or the n-gram model,
never from the attribution method being evaluated.
"""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .baselines import DEFAULT_IG_STEPS, PERIOD, METHODS, canonical_method, loo_phrase_score, word_scores
from .cd import PhraseSpan, cd_decompose_spans, cd_span_scores
from .corpus.logistic import NgramLogistic, ngram_phrase_score, train_logistic_ngram
from .corpus.treebank import NEUTRAL, POS, TreebankNode
from .lstm import LstmModel

NEGATION_WORDS = frozenset(
    ["not", "n't", "lacks", "nobody", "nor", "nothing", "neither", "never", "none", "nowhere", "remotely"]
)
DISSENT_THRESHOLD = 1.5
DISSENT_MAX_LEN = 5
NEGATION_MAX_LEN = 10  # exclusive
REFERENCE_MAX_LEN = 5  # exclusive
MODES = ("phrase", "review")
POLARITIES = ("pos", "neg")


# ---------------------------------------------------------------------------
# statistics


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"pearson needs two equal-length 1-d samples, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("pearson needs at least 2 points")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("pearson is undefined for a sample with zero variance")
    return float(np.clip(stats.pearsonr(x, y)[0], -1.0, 1.0))


def ks_one_sided(a: Sequence[float], b: Sequence[float]) -> float:
    """One-sided two-sample KS statistic ``sup_x F_b(x) - F_a(x)``.

    Large when ``a`` is stochastically larger than ``b``; 0 when it is not
    larger anywhere.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_one_sided needs two non-empty samples")
    return float(stats.ks_2samp(b, a, alternative="greater", method="asymp").statistic)


def ks_two_sided(a: Sequence[float], b: Sequence[float]) -> float:
    return max(ks_one_sided(a, b), ks_one_sided(b, a))


# ---------------------------------------------------------------------------
# method scoring


@dataclass
class Scorer:
    """Phrase scores for one attribution method, cached per input sequence.

    CD scores a span directly; the other methods sum their word scores over
    the span. Inputs for which a method is unusable (integrated gradients
    with non-finite output) score NaN.
    """

    model: LstmModel
    method: str
    ig_steps: int = DEFAULT_IG_STEPS
    baseline_token: str = PERIOD
    _words: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.method = canonical_method(self.method)

    def word_scores(self, tokens: Sequence[str]) -> np.ndarray:
        key = tuple(tokens)
        if key not in self._words:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # period-baseline notice, reported once by the caller
                rep = word_scores(self.model, list(key), self.method, self.ig_steps, self.baseline_token)
            self._words[key] = rep.scores if rep.usable else np.full(len(key), np.nan)
        return self._words[key]

    def span_scores(self, tokens: Sequence[str], spans: Sequence) -> np.ndarray:
        spans = [PhraseSpan(*s) if not isinstance(s, PhraseSpan) else s for s in spans]
        if not spans:
            return np.zeros(0)
        if self.method == "cd":
            return np.asarray(cd_span_scores(self.model.params, self.model.embed(tokens), spans), dtype=np.float64)
        w = self.word_scores(tokens)
        return np.array([w[s.slice()].sum() for s in spans])


def make_scorers(model: LstmModel, methods: Iterable[str] = METHODS, ig_steps: int = DEFAULT_IG_STEPS) -> dict[str, Scorer]:
    return {canonical_method(m): Scorer(model, m, ig_steps) for m in methods}


def _finite(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return v[np.isfinite(v)]


# ---------------------------------------------------------------------------
# scored phrase sets


@dataclass
class PhraseEntry:
    review_id: int
    span: PhraseSpan  # absolute, within the review
    polarity: str  # "pos" | "neg", from labels or the n-gram model
    context: PhraseSpan  # the input used in phrase-as-input mode
    text: str
    scores: dict[str, float] = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "review_id": self.review_id,
            "span": str(self.span),
            "context": str(self.context),
            "polarity": self.polarity,
            "text": self.text,
            "scores": {k: _json_float(v) for k, v in self.scores.items()},
            **self.info,
        }


@dataclass
class ScoredPhraseSet:
    entries: list[PhraseEntry] = field(default_factory=list)
    mode: str = "phrase"
    params: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def methods(self) -> list[str]:
        seen = []
        for e in self.entries:
            seen.extend(k for k in e.scores if k not in seen)
        return seen

    def scores(self, method: str, polarity: str) -> np.ndarray:
        method = canonical_method(method)
        return _finite([e.scores[method] for e in self.entries if e.polarity == polarity])

    def ks(self, method: str) -> float:
        """Separation of positive from negative entries; NaN when either side is empty."""
        pos, neg = self.scores(method, "pos"), self.scores(method, "neg")
        if pos.size == 0 or neg.size == 0:
            return float("nan")
        return ks_one_sided(pos, neg)

    def counts(self) -> dict[str, int]:
        return {p: sum(e.polarity == p for e in self.entries) for p in POLARITIES}

    def summary(self) -> dict:
        out = {"counts": self.counts(), "mode": self.mode, **self.params, "ks": {}}
        for m in self.methods:
            out["ks"][m] = _json_float(self.ks(m))
        return out

    def to_dict(self) -> dict:
        return {**self.summary(), "entries": [e.to_dict() for e in self.entries]}


def _input_for(entry: PhraseEntry, tokens: Sequence[str], mode: str) -> tuple[list[str], PhraseSpan]:
    if mode == "review":
        return list(tokens), entry.span
    c = entry.context
    return list(tokens[c.slice()]), PhraseSpan(entry.span.q - c.q + 1, entry.span.r - c.q + 1)


def score_entries(phrases: ScoredPhraseSet, reviews: Sequence, scorers: dict[str, Scorer], mode: str | None = None) -> ScoredPhraseSet:
    """Fill in every scorer's score for every entry (in place; also returned)."""
    mode = mode or phrases.mode
    if mode not in MODES:
        raise ValueError(f"unknown scoring mode {mode!r}; expected one of {MODES}")
    phrases.mode = mode
    groups: dict[tuple, list[tuple[int, PhraseSpan]]] = defaultdict(list)
    for k, e in enumerate(phrases.entries):
        toks, span = _input_for(e, reviews[e.review_id].tokens, mode)
        groups[tuple(toks)].append((k, span))
    for toks, items in groups.items():
        for name, scorer in scorers.items():
            vals = scorer.span_scores(list(toks), [s for _, s in items])
            for (k, _), v in zip(items, vals):
                phrases.entries[k].scores[name] = float(v)
    return phrases


# ---------------------------------------------------------------------------
# unigram correlation


@dataclass
class UnigramCorrelation:
    method: str
    r: float
    words: list[str]
    coefficients: np.ndarray
    scores: np.ndarray
    counts: np.ndarray

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "r": _json_float(self.r),
            "points": [
                {"word": w, "coefficient": float(c), "score": float(s), "count": int(n)}
                for w, c, s, n in zip(self.words, self.coefficients, self.scores, self.counts)
            ],
        }


def unigram_correlation(
    model: LstmModel,
    logistic: NgramLogistic,
    reviews: Sequence,
    method: str | Scorer,
    level: str = "type",
) -> UnigramCorrelation:
    """Correlate per-word method scores with unigram logistic coefficients.

    Word scores are taken in the context of each full review. With
    ``level="type"`` each word type's scores are averaged over its
    occurrences; ``level="occurrence"`` keeps one point per occurrence.
    Only words with a unigram coefficient are used.
    """
    scorer = method if isinstance(method, Scorer) else Scorer(model, method)
    if level not in ("type", "occurrence"):
        raise ValueError("level must be 'type' or 'occurrence'")
    per_word: dict[str, list[float]] = defaultdict(list)
    for r in reviews:
        w = scorer.word_scores(r.tokens)
        for tok, s in zip(r.tokens, w):
            if (tok,) in logistic.coef and np.isfinite(s):
                per_word[tok].append(float(s))
    if not per_word:
        raise ValueError("no overlap between the review vocabulary and the logistic model's unigrams")
    words = sorted(per_word)
    if level == "type":
        coefs = np.array([logistic.coefficient((w,)) for w in words])
        scores = np.array([np.mean(per_word[w]) for w in words])
        counts = np.array([len(per_word[w]) for w in words])
    else:
        pairs = [(w, s) for w in words for s in per_word[w]]
        words = [w for w, _ in pairs]
        coefs = np.array([logistic.coefficient((w,)) for w in words])
        scores = np.array([s for _, s in pairs])
        counts = np.ones(len(words), dtype=np.int64)
    return UnigramCorrelation(scorer.method, pearson(coefs, scores), words, coefs, scores, counts)


def train_unigram_logistic(train, l2: float = 1e-4) -> NgramLogistic:
    """Unigram-only logistic regression used as the word-level reference."""
    return train_logistic_ngram(train, n_range=(1, 1), l2=l2)


# ---------------------------------------------------------------------------
# dissenting subphrases


def find_dissent(
    reviews: Sequence,
    ngram: NgramLogistic,
    threshold: float = DISSENT_THRESHOLD,
    sub_threshold: float = DISSENT_THRESHOLD,
    max_len: int = DISSENT_MAX_LEN,
) -> ScoredPhraseSet:
    """Phrases of at most ``max_len`` words whose n-gram score exceeds
    ``threshold`` in magnitude and that contain a proper subphrase scored
    beyond ``sub_threshold`` with the opposite sign.

    Each entry is the dissenting subphrase, with the enclosing phrase as
    context. A (phrase text, relative subspan) pair is kept once, at its
    first occurrence.
    """
    out = ScoredPhraseSet(params={"threshold": threshold, "sub_threshold": sub_threshold, "max_len": max_len})
    seen = set()
    for rid, review in enumerate(reviews):
        toks = review.tokens
        T = len(toks)
        for q in range(1, T + 1):
            for r in range(q, min(T, q + max_len - 1) + 1):
                phrase = toks[q - 1 : r]
                s = ngram_phrase_score(ngram, phrase)
                if abs(s) <= threshold:
                    continue
                for a in range(q, r + 1):
                    for b in range(a, r + 1):
                        if (a, b) == (q, r):
                            continue
                        ss = ngram_phrase_score(ngram, toks[a - 1 : b])
                        if abs(ss) <= sub_threshold or np.sign(ss) == np.sign(s):
                            continue
                        key = (tuple(phrase), a - q, b - q)
                        if key in seen:
                            continue
                        seen.add(key)
                        out.entries.append(
                            PhraseEntry(
                                rid,
                                PhraseSpan(a, b),
                                "pos" if ss > 0 else "neg",
                                PhraseSpan(q, r),
                                " ".join(toks[a - 1 : b]),
                                info={"phrase": " ".join(phrase), "phrase_ngram": s, "subphrase_ngram": ss},
                            )
                        )
    return out


def dissent_search(
    reviews: Sequence,
    ngram: NgramLogistic,
    scorers: dict[str, Scorer],
    threshold: float = DISSENT_THRESHOLD,
    sub_threshold: float = DISSENT_THRESHOLD,
    max_len: int = DISSENT_MAX_LEN,
    mode: str = "phrase",
) -> ScoredPhraseSet:
    found = find_dissent(reviews, ngram, threshold, sub_threshold, max_len)
    return score_entries(found, reviews, scorers, mode)


# ---------------------------------------------------------------------------
# compositionality


def find_compositional(reviews: Sequence, lo: float = 1 / 3, hi: float = 2 / 3) -> ScoredPhraseSet:
    """Labeled phrases opposing their review's label, ``lo*L <= len <= hi*L``."""
    out = ScoredPhraseSet(mode="review", params={"min_fraction": lo, "max_fraction": hi})
    for rid, review in enumerate(reviews):
        if review.tree is None:
            continue
        L = len(review.tokens)
        opposite = "neg" if review.label == 1 else "pos"
        whole = PhraseSpan(1, L)
        for node in review.tree.nodes():
            if node.polarity == NEUTRAL or node.polarity != opposite:
                continue
            if lo * L - 1e-9 <= node.length <= hi * L + 1e-9:
                span = PhraseSpan(node.start, node.end)
                out.entries.append(PhraseEntry(rid, span, node.polarity, whole, " ".join(node.leaves())))
    out.entries.sort(key=lambda e: (e.review_id, e.span.q, e.span.r))
    return out


def compositionality_search(reviews: Sequence, scorers: dict[str, Scorer], mode: str = "review") -> ScoredPhraseSet:
    return score_entries(find_compositional(reviews), reviews, scorers, mode)


# ---------------------------------------------------------------------------
# negation


@dataclass
class NegationInstance:
    review_id: int
    full: PhraseSpan
    negation: PhraseSpan
    child: PhraseSpan
    direction: str  # "positive" (negating something negative) | "negative"
    text: str
    interactions: dict[str, float] = field(default_factory=dict)

    def relative(self) -> tuple[PhraseSpan, PhraseSpan, PhraseSpan]:
        off = self.full.q - 1
        shift = lambda s: PhraseSpan(s.q - off, s.r - off)  # noqa: E731
        return shift(self.full), shift(self.negation), shift(self.child)

    def to_dict(self) -> dict:
        return {
            "review_id": self.review_id,
            "full": str(self.full),
            "negation": str(self.negation),
            "child": str(self.child),
            "direction": self.direction,
            "text": self.text,
            "interactions": {k: _json_float(v) for k, v in self.interactions.items()},
        }


def _has_non_neutral(node: TreebankNode) -> bool:
    return any(n.polarity != NEUTRAL for n in node.nodes())


def extract_negations(reviews: Sequence, words: Iterable[str] = NEGATION_WORDS, max_len: int = NEGATION_MAX_LEN) -> list[NegationInstance]:
    """Negation phrases: internal nodes shorter than ``max_len`` whose left
    child has a negation word among its first two leaves, whose own label
    is non-neutral and whose right child contains a non-neutral node.

    The direction is the phrase's own polarity: a positive phrase is a
    positive negation.
    """
    words = set(words)
    out = []
    for rid, review in enumerate(reviews):
        tree = review.tree
        if tree is None:
            continue
        for node in tree.nodes():
            if node.is_leaf or node.length >= max_len or node.polarity == NEUTRAL:
                continue
            if not any(w in words for w in node.left.leaves()[:2]):
                continue
            if not _has_non_neutral(node.right):
                continue
            out.append(
                NegationInstance(
                    rid,
                    PhraseSpan(node.start, node.end),
                    PhraseSpan(node.left.start, node.left.end),
                    PhraseSpan(node.right.start, node.right.end),
                    "positive" if node.polarity == POS else "negative",
                    " ".join(node.leaves()),
                )
            )
    return out


INTERACTION_METHODS = ("cd", "loo")


def _interaction_method(method: str) -> str:
    method = canonical_method(method)
    if method not in INTERACTION_METHODS:
        raise ValueError(f"interaction scores need a phrase-level method (cd or loo), got {method!r}")
    return method


def interaction(model: LstmModel, tokens: Sequence[str], full, left, right, method: str = "cd") -> float:
    """``score(full) - score(left) - score(right)`` on the input ``tokens``."""
    method = _interaction_method(method)
    spans = [PhraseSpan(*s) if not isinstance(s, PhraseSpan) else s for s in (full, left, right)]
    xs = model.embed(tokens)
    if method == "cd":
        s = cd_span_scores(model.params, xs, spans)
    else:
        s = [loo_phrase_score(model.params, xs, sp) for sp in spans]
    return float(s[0] - s[1] - s[2])


def negation_interaction(model: LstmModel, instance: NegationInstance, tokens: Sequence[str], method: str = "cd", mode: str = "phrase") -> float:
    """Interaction of a negation with the phrase it negates.

    ``tokens`` are the review's tokens. In ``"phrase"`` mode the negation
    phrase alone is the model input; in ``"review"`` mode the whole review.
    """
    if mode == "phrase":
        full, neg, child = instance.relative()
        toks = list(tokens[instance.full.slice()])
    elif mode == "review":
        full, neg, child = instance.full, instance.negation, instance.child
        toks = list(tokens)
    else:
        raise ValueError(f"unknown scoring mode {mode!r}; expected one of {MODES}")
    return interaction(model, toks, full, neg, child, method)


def score_negations(model: LstmModel, instances: list[NegationInstance], reviews: Sequence, methods=INTERACTION_METHODS, mode: str = "phrase") -> list[NegationInstance]:
    for inst in instances:
        for m in methods:
            m = _interaction_method(m)
            inst.interactions[m] = negation_interaction(model, inst, reviews[inst.review_id].tokens, m, mode)
    return instances


def negation_ks(instances: list[NegationInstance], method: str) -> float:
    pos = _finite([i.interactions[method] for i in instances if i.direction == "positive"])
    neg = _finite([i.interactions[method] for i in instances if i.direction == "negative"])
    if pos.size == 0 or neg.size == 0:
        return float("nan")
    return ks_one_sided(pos, neg)


def reference_interactions(model: LstmModel, reviews: Sequence, method: str = "cd", max_len: int = REFERENCE_MAX_LEN, mode: str = "phrase") -> np.ndarray:
    """parent - left - right for every internal parse node shorter than ``max_len``."""
    method = _interaction_method(method)
    vals = []
    for review in reviews:
        if review.tree is None:
            continue
        for node in review.tree.nodes():
            if node.is_leaf or node.length >= max_len:
                continue
            if mode == "phrase":
                off = node.start - 1
                toks = review.tokens[node.start - 1 : node.end]
            else:
                off = 0
                toks = review.tokens
            spans = [(n.start - off, n.end - off) for n in (node, node.left, node.right)]
            vals.append(interaction(model, toks, *spans, method=method))
    return np.array(vals)


def substituted_negations(instances: list[NegationInstance], reviews: Sequence, token: str) -> tuple[list, list[NegationInstance]]:
    """Copies of the negation phrases with every negation-child token replaced by ``token``.

    Returns pseudo-reviews (one per instance) and instances pointing at them.
    """
    fake, moved = [], []
    for k, inst in enumerate(instances):
        toks = list(reviews[inst.review_id].tokens[inst.full.slice()])
        full, neg, child = inst.relative()
        for t in range(neg.q - 1, neg.r):
            toks[t] = token
        fake.append(_Tokens(toks))
        moved.append(NegationInstance(k, full, neg, child, inst.direction, " ".join(toks)))
    return fake, moved


@dataclass
class _Tokens:
    tokens: list[str]
    tree: None = None


# ---------------------------------------------------------------------------
# phrase embedding neighbors


@dataclass
class PhraseEmbeddings:
    phrases: list[str]
    vectors: np.ndarray  # (n, d2) averaged beta_T
    counts: np.ndarray

    def index(self, phrase: str) -> int | None:
        try:
            return self.phrases.index(phrase)
        except ValueError:
            return None


def phrase_embeddings(model: LstmModel, reviews: Sequence, max_len: int = DISSENT_MAX_LEN) -> PhraseEmbeddings:
    """Average CD phrase vector ``beta_T`` of every word and every parse-node
    phrase up to ``max_len`` words, each occurrence decomposed within its
    review."""
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = defaultdict(int)
    for review in reviews:
        spans = {(t, t) for t in range(1, len(review.tokens) + 1)}
        if review.tree is not None:
            spans |= {n.span for n in review.tree.nodes() if n.length <= max_len}
        spans = sorted(spans)
        res = cd_decompose_spans(model.params, model.embed(review.tokens), spans)
        for (q, r), cd in zip(spans, res):
            key = " ".join(review.tokens[q - 1 : r])
            sums[key] = sums.get(key, 0.0) + cd.beta_T
            counts[key] += 1
    phrases = sorted(sums)
    vecs = np.array([sums[p] / counts[p] for p in phrases]) if phrases else np.zeros((0, model.params.d2))
    return PhraseEmbeddings(phrases, vecs, np.array([counts[p] for p in phrases]))


def cosine_similarity(a: np.ndarray, B: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    na = np.linalg.norm(a)
    nb = np.linalg.norm(B, axis=1)
    denom = na * nb
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(denom > 0, B @ a / np.where(denom > 0, denom, 1.0), 0.0)
    return sim


def phrase_embedding_neighbors(
    model: LstmModel,
    table: PhraseEmbeddings,
    query: str | Sequence[str],
    k: int = 5,
    exclude_self: bool = False,
) -> list[tuple[str, float]]:
    """``k`` most cosine-similar phrases to ``query``.

    A query absent from the table is decomposed fresh as its own input.
    Ties are broken alphabetically. With ``exclude_self`` the query phrase
    itself is left out of the ranking.
    """
    text = query if isinstance(query, str) else " ".join(query)
    toks = text.split()
    if not toks:
        raise ValueError("empty query")
    idx = table.index(text)
    if idx is not None:
        vec = table.vectors[idx]
    else:
        vec = cd_decompose_spans(model.params, model.embed(toks), [(1, len(toks))])[0].beta_T
    sims = cosine_similarity(vec, table.vectors) if len(table.phrases) else np.zeros(0)
    cands = [(p, float(s)) for p, s in zip(table.phrases, sims) if not (exclude_self and p == text)]
    if k <= 0:
        warnings.warn("k must be positive; returning no neighbors", stacklevel=2)
        return []
    if k > len(cands):
        warnings.warn(f"only {len(cands)} candidate phrases for k={k}; returning all", stacklevel=2)
    cands.sort(key=lambda ps: (-ps[1], ps[0]))
    return cands[:k]


# ---------------------------------------------------------------------------
# heat-map buckets


LEGEND = ("very negative", "negative", "neutral", "positive", "very positive")


def bucket_edges(scores: Iterable[float]) -> tuple[float, float]:
    """Symmetric edges from the 1/3 and 2/3 quantiles of ``|score|``."""
    a = np.abs(_finite(list(scores)))
    if a.size == 0:
        return (0.0, 0.0)
    lo, hi = np.quantile(a, [1 / 3, 2 / 3])
    return float(lo), float(hi)


def bucketize(scores: Sequence[float], edges: tuple[float, float]) -> list[int]:
    """Legend index 0..4 for each score: beyond ``hi`` is very, within ``lo`` neutral."""
    lo, hi = edges
    out = []
    for s in scores:
        if not np.isfinite(s) or abs(s) <= lo:
            out.append(2)
        elif abs(s) <= hi:
            out.append(3 if s > 0 else 1)
        else:
            out.append(4 if s > 0 else 0)
    return out


def _json_float(v) -> float | None:
    v = float(v)
    return v if np.isfinite(v) else None
