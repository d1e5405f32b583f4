"""Reference linear models: bag of vectors and n-gram logistic regression."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, sparse

from ..lstm import Adam, TrainingDiverged, _example_parts, build_vocab
from ..numerics import log_softmax

logger = logging.getLogger(__name__)


def _check_classes(labels: np.ndarray, n_classes: int = 2) -> None:
    counts = np.bincount(labels, minlength=n_classes)
    empty = [k for k in range(n_classes) if counts[k] == 0]
    if empty:
        raise ValueError(f"training data has no examples of class {empty[0]}")


# ---------------------------------------------------------------------------
# bag of vectors


@dataclass
class BowModel:
    """Summed word vectors followed by a linear layer."""

    vocab: list[str]
    embeddings: np.ndarray
    W: np.ndarray
    b: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {w: k for k, w in enumerate(self.vocab)}

    def features(self, tokens: Sequence[str]) -> np.ndarray:
        ids = [self._index[t] for t in tokens if t in self._index]
        return self.embeddings[ids].sum(axis=0) if ids else np.zeros(self.embeddings.shape[1])

    def predict_proba(self, tokens: Sequence[str]) -> np.ndarray:
        z = self.W @ self.features(tokens) + self.b
        return np.exp(log_softmax(z))

    def accuracy(self, data) -> float:
        hits = 0
        data = list(data)
        for ex in data:
            tokens, label = _example_parts(ex)
            hits += int(np.argmax(self.predict_proba(tokens)) == label)
        return hits / len(data)


@dataclass
class BowConfig:
    lr: float = 0.001
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 3
    dim: int = 32
    init_sigma: float = 0.1
    seed: int = 0


def _count_matrix(data, index: dict[str, int]) -> tuple[sparse.csr_matrix, np.ndarray]:
    rows, cols, labels = [], [], []
    for r, ex in enumerate(data):
        tokens, label = _example_parts(ex)
        labels.append(label)
        for t in tokens:
            k = index.get(t)
            if k is not None:
                rows.append(r)
                cols.append(k)
    m = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(labels), len(index)))
    m.sum_duplicates()
    return m, np.array(labels, dtype=np.int64)


def train_logistic_bow(train, valid, embeddings: dict[str, np.ndarray] | None = None, cfg: BowConfig | None = None) -> BowModel:
    """Adam (lr 0.001) with early stopping on validation loss; word vectors are fine-tuned."""
    cfg = cfg or BowConfig()
    train, valid = list(train), list(valid)
    if not train or not valid:
        raise ValueError("training and validation sets must be non-empty")
    vocab = build_vocab(train + valid)
    index = {w: k for k, w in enumerate(vocab)}
    rng = np.random.default_rng(cfg.seed)
    dim = len(next(iter(embeddings.values()))) if embeddings else cfg.dim
    E = rng.normal(0.0, cfg.init_sigma, size=(len(vocab), dim))
    if embeddings:
        for k, w in enumerate(vocab):
            if w in embeddings:
                E[k] = embeddings[w]
    Xtr, ytr = _count_matrix(train, index)
    Xva, yva = _count_matrix(valid, index)
    _check_classes(ytr)
    C = 2
    weights = {"E": E, "W": rng.uniform(-1 / np.sqrt(dim), 1 / np.sqrt(dim), size=(C, dim)), "b": np.zeros(C)}

    def loss_on(X, y):
        lp = log_softmax(X @ weights["E"] @ weights["W"].T + weights["b"], axis=-1)
        return -float(lp[np.arange(len(y)), y].mean())

    opt = Adam(cfg.lr)
    best = {k: v.copy() for k, v in weights.items()}
    best_loss = loss_on(Xva, yva)
    since = 0
    order_rng = np.random.default_rng([cfg.seed, 1])
    for epoch in range(1, cfg.max_epochs + 1):
        perm = order_rng.permutation(len(ytr))
        for s in range(0, len(perm), cfg.batch_size):
            idx = perm[s : s + cfg.batch_size]
            Xb, yb = Xtr[idx], ytr[idx]
            feats = Xb @ weights["E"]
            lp = log_softmax(feats @ weights["W"].T + weights["b"], axis=-1)
            d = np.exp(lp)
            d[np.arange(len(yb)), yb] -= 1.0
            d /= len(yb)
            grads = {"W": d.T @ feats, "b": d.sum(axis=0), "E": Xb.T @ (d @ weights["W"])}
            opt.step(weights, grads)
        vl = loss_on(Xva, yva)
        if not np.isfinite(vl):
            raise TrainingDiverged(f"bag-of-vectors validation loss became non-finite at epoch {epoch}")
        if vl < best_loss:
            best_loss, since = vl, 0
            best = {k: v.copy() for k, v in weights.items()}
        else:
            since += 1
            if since >= cfg.patience:
                break
    return BowModel(vocab, best["E"], best["W"], best["b"])


# ---------------------------------------------------------------------------
# n-gram logistic regression


def ngrams(tokens: Sequence[str], n_range: tuple[int, int] = (1, 3)) -> list[tuple[str, ...]]:
    """Every contiguous n-gram with n in the inclusive range, in order of position."""
    lo, hi = n_range
    toks = list(tokens)
    out = []
    for n in range(lo, hi + 1):
        for s in range(len(toks) - n + 1):
            out.append(tuple(toks[s : s + n]))
    return out


@dataclass
class NgramLogistic:
    coef: dict[tuple[str, ...], float]
    bias: float
    n_range: tuple[int, int] = (1, 3)

    def __post_init__(self):
        if not np.isfinite(self.bias) or not all(np.isfinite(v) for v in self.coef.values()):
            raise ValueError("n-gram model has non-finite coefficients")

    def coefficient(self, gram) -> float:
        if isinstance(gram, str):
            gram = tuple(gram.split())
        return self.coef.get(tuple(gram), 0.0)

    def decision_function(self, tokens: Sequence[str]) -> float:
        """Phrase score plus the intercept: the model's log-odds for ``tokens``."""
        return ngram_phrase_score(self, tokens) + self.bias

    def predict(self, tokens: Sequence[str]) -> int:
        return int(self.decision_function(tokens) > 0)

    def accuracy(self, data) -> float:
        data = list(data)
        return sum(self.predict(t) == y for t, y in map(_example_parts, data)) / len(data)


def ngram_phrase_score(model: NgramLogistic, tokens: Sequence[str]) -> float:
    """Sum of the coefficients of every n-gram occurrence inside ``tokens`` (no intercept)."""
    return float(sum(model.coef.get(g, 0.0) for g in ngrams(tokens, model.n_range)))


def train_logistic_ngram(
    train,
    valid=None,
    n_range: tuple[int, int] = (1, 3),
    l2: float = 1e-4,
    max_iter: int = 1000,
) -> NgramLogistic:
    """L2-regularized logistic regression on n-gram counts, fit by L-BFGS.

    Minimizes the summed log-loss plus ``l2 / 2 * ||w||^2`` (intercept
    unpenalized).
    """
    train = list(train)
    if not train:
        raise ValueError("training set must be non-empty")
    counts = Counter()
    docs = []
    labels = []
    for ex in train:
        tokens, label = _example_parts(ex)
        grams = ngrams(tokens, n_range)
        docs.append(grams)
        labels.append(label)
        counts.update(set(grams))
    feats = sorted(counts)
    index = {g: k for k, g in enumerate(feats)}
    rows, cols = [], []
    for r, grams in enumerate(docs):
        for g in grams:
            rows.append(r)
            cols.append(index[g])
    X = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(docs), len(feats)))
    X.sum_duplicates()
    y = np.array(labels, dtype=np.int64)
    _check_classes(y)
    sign = 2.0 * y - 1.0

    def objective(theta):
        w, b = theta[:-1], theta[-1]
        z = sign * (X @ w + b)
        loss = np.logaddexp(0.0, -z).sum() + 0.5 * l2 * (w @ w)
        s = -sign * np.exp(-np.logaddexp(0.0, z))  # d loss / d (X w + b)
        grad_w = X.T @ s + l2 * w
        return loss, np.concatenate([grad_w, [s.sum()]])

    res = optimize.minimize(
        objective, np.zeros(len(feats) + 1), jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": 1e-8, "ftol": 1e-15},
    )  # fmt: skip
    if not np.all(np.isfinite(res.x)):
        raise TrainingDiverged("n-gram logistic regression produced non-finite coefficients")
    theta = res.x
    model = NgramLogistic({g: float(theta[k]) for g, k in index.items()}, float(theta[-1]), tuple(n_range))
    if valid is not None:
        logger.info("n-gram logistic validation accuracy %.4f", model.accuracy(valid))
    return model
