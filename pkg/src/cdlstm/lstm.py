"""Single-layer LSTM classifier with hand-written backpropagation.

Cell equations (``h_0 = c_0 = 0``)::

    o_t = sigmoid(Wo x_t + Vo h_{t-1} + bo)
    f_t = sigmoid(Wf x_t + Vf h_{t-1} + bf)
    i_t = sigmoid(Wi x_t + Vi h_{t-1} + bi)
    g_t = tanh(Wg x_t + Vg h_{t-1} + bg)
    c_t = f_t * c_{t-1} + i_t * g_t
    h_t = o_t * tanh(c_t)

and ``p = softmax(Wsoft h_T + bsoft)``.

The forward and backward passes are written over a leading batch axis so
training and integrated gradients can push many equal-length sequences
through at once; the single-sequence API is the batch-of-one case.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .numerics import log_softmax, sigmoid, stable_softmax

logger = logging.getLogger(__name__)

GATES = ("o", "f", "i", "g")
PARAM_NAMES = (
    "Wo", "Wf", "Wi", "Wg",
    "Vo", "Vf", "Vi", "Vg",
    "bo", "bf", "bi", "bg",
    "Wsoft", "bsoft",
)  # fmt: skip

OOV_SIGMA = 0.1


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class LstmParams:
    Wo: np.ndarray
    Wf: np.ndarray
    Wi: np.ndarray
    Wg: np.ndarray
    Vo: np.ndarray
    Vf: np.ndarray
    Vi: np.ndarray
    Vg: np.ndarray
    bo: np.ndarray
    bf: np.ndarray
    bi: np.ndarray
    bg: np.ndarray
    Wsoft: np.ndarray
    bsoft: np.ndarray

    def __post_init__(self):
        for name in PARAM_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        self.validate()

    @property
    def d1(self) -> int:
        return self.Wo.shape[1]

    @property
    def d2(self) -> int:
        return self.Wo.shape[0]

    @property
    def n_classes(self) -> int:
        return self.Wsoft.shape[0]

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        return param_shapes(self.d1, self.d2, self.n_classes)

    def validate(self) -> None:
        if self.Wo.ndim != 2:
            raise ValueError(f"Wo must be a matrix, got shape {self.Wo.shape}")
        for name, shape in self.expected_shapes().items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "LstmParams":
        return LstmParams(**{k: v.copy() for k, v in self.as_dict().items()})

    # stacked views in gate order o, f, i, g
    @property
    def W_stack(self) -> np.ndarray:
        return np.concatenate([self.Wo, self.Wf, self.Wi, self.Wg], axis=0)

    @property
    def V_stack(self) -> np.ndarray:
        return np.concatenate([self.Vo, self.Vf, self.Vi, self.Vg], axis=0)

    @property
    def b_stack(self) -> np.ndarray:
        return np.concatenate([self.bo, self.bf, self.bi, self.bg])

    @classmethod
    def zeros(cls, d1: int, d2: int, n_classes: int = 2) -> "LstmParams":
        return cls(**{k: np.zeros(s) for k, s in param_shapes(d1, d2, n_classes).items()})

    @classmethod
    def random(cls, d1: int, d2: int, n_classes: int = 2, rng=None, scale: float | None = None) -> "LstmParams":
        """Uniform(-s, s) init with ``s = 1/sqrt(d2)`` unless ``scale`` is given."""
        rng = np.random.default_rng(rng)
        s = 1.0 / np.sqrt(d2) if scale is None else scale
        return cls(
            **{k: rng.uniform(-s, s, size=shape) for k, shape in param_shapes(d1, d2, n_classes).items()}
        )


def param_shapes(d1: int, d2: int, n_classes: int) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for g in GATES:
        shapes[f"W{g}"] = (d2, d1)
    for g in GATES:
        shapes[f"V{g}"] = (d2, d2)
    for g in GATES:
        shapes[f"b{g}"] = (d2,)
    shapes["Wsoft"] = (n_classes, d2)
    shapes["bsoft"] = (n_classes,)
    return shapes


@dataclass
class ForwardTrace:
    """Everything the forward pass computed, indexed ``[..., t, :]`` with t from 0.

    ``c`` and ``h`` hold c_1..c_T and h_1..h_T; the zero initial states are
    implied. Pre-activations are stored under ``a_o`` etc.
    """

    xs: np.ndarray
    a_o: np.ndarray
    a_f: np.ndarray
    a_i: np.ndarray
    a_g: np.ndarray
    o: np.ndarray
    f: np.ndarray
    i: np.ndarray
    g: np.ndarray
    c: np.ndarray
    h: np.ndarray

    @property
    def length(self) -> int:
        return self.xs.shape[-2]

    @property
    def h_final(self) -> np.ndarray:
        return self.h[..., -1, :]

    def prev_c(self) -> np.ndarray:
        """c_0..c_{T-1}, aligned with ``c``."""
        zero = np.zeros_like(self.c[..., :1, :])
        return np.concatenate([zero, self.c[..., :-1, :]], axis=-2)

    def prev_h(self) -> np.ndarray:
        zero = np.zeros_like(self.h[..., :1, :])
        return np.concatenate([zero, self.h[..., :-1, :]], axis=-2)


def _as_sequence(params: LstmParams, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0 or xs.shape[0] == 0:
        raise ValueError("empty input")
    if xs.ndim == 1:
        xs = xs.reshape(-1, 1) if params.d1 == 1 else xs.reshape(1, -1)
    if xs.ndim != 2 or xs.shape[1] != params.d1:
        raise ValueError(f"inputs must have shape (T, {params.d1}), got {xs.shape}")
    return xs


def forward_batch(params: LstmParams, X: np.ndarray) -> ForwardTrace:
    """Run a stack of equal-length sequences, ``X`` of shape (B, T, d1)."""
    X = np.asarray(X, dtype=np.float64)
    B, T, _ = X.shape
    d2 = params.d2
    pre_x = X @ params.W_stack.T + params.b_stack  # (B, T, 4*d2)
    Vt = params.V_stack.T
    out = {k: np.empty((B, T, d2)) for k in ("a_o", "a_f", "a_i", "a_g", "o", "f", "i", "g", "c", "h")}
    h = np.zeros((B, d2))
    c = np.zeros((B, d2))
    for t in range(T):
        a = pre_x[:, t] + h @ Vt
        a_o, a_f, a_i, a_g = a[:, :d2], a[:, d2 : 2 * d2], a[:, 2 * d2 : 3 * d2], a[:, 3 * d2 :]
        o, f, i, g = sigmoid(a_o), sigmoid(a_f), sigmoid(a_i), np.tanh(a_g)
        c = f * c + i * g
        h = o * np.tanh(c)
        for k, v in (("a_o", a_o), ("a_f", a_f), ("a_i", a_i), ("a_g", a_g),
                     ("o", o), ("f", f), ("i", i), ("g", g), ("c", c), ("h", h)):  # fmt: skip
            out[k][:, t] = v
    return ForwardTrace(xs=X, **out)


def lstm_forward(params: LstmParams, xs) -> ForwardTrace:
    """Forward pass over one sequence of input vectors (shape (T, d1))."""
    xs = _as_sequence(params, xs)
    tr = forward_batch(params, xs[None])
    return ForwardTrace(**{k: v[0] for k, v in vars(tr).items()})


def logits_from_trace(params: LstmParams, trace: ForwardTrace) -> np.ndarray:
    return trace.h_final @ params.Wsoft.T + params.bsoft


def classify(params: LstmParams, xs) -> np.ndarray:
    """Class probabilities for one sequence."""
    return stable_softmax(logits_from_trace(params, lstm_forward(params, xs)))


def classify_batch(params: LstmParams, X: np.ndarray) -> np.ndarray:
    return stable_softmax(logits_from_trace(params, forward_batch(params, X)), axis=-1)


@dataclass
class Gradients:
    """Gradients of a scalar objective. ``dxs`` follows the input's shape."""

    dxs: np.ndarray
    params: dict[str, np.ndarray]


def backward_batch(params: LstmParams, trace: ForwardTrace, dlogits: np.ndarray) -> Gradients:
    """Backpropagate upstream logit gradients ``dlogits`` (B, C) through a batched trace.

    Parameter gradients are summed over the batch.
    """
    d2 = params.d2
    X = trace.xs
    B, T, _ = X.shape
    W, V = params.W_stack, params.V_stack
    h_prev_all = trace.prev_h()
    c_prev_all = trace.prev_c()

    grads = {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES}
    grads["Wsoft"] = dlogits.T @ trace.h[:, -1]
    grads["bsoft"] = dlogits.sum(axis=0)
    dW = np.zeros_like(W)
    dV = np.zeros_like(V)
    db = np.zeros(4 * d2)
    dX = np.empty_like(X)

    dh = dlogits @ params.Wsoft
    dc = np.zeros((B, d2))
    for t in range(T - 1, -1, -1):
        o, f, i, g = trace.o[:, t], trace.f[:, t], trace.i[:, t], trace.g[:, t]
        tc = np.tanh(trace.c[:, t])
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        da = np.concatenate(
            [
                do * o * (1.0 - o),
                dc * c_prev_all[:, t] * f * (1.0 - f),
                dc * g * i * (1.0 - i),
                dc * i * (1.0 - g * g),
            ],
            axis=1,
        )
        dW += da.T @ X[:, t]
        dV += da.T @ h_prev_all[:, t]
        db += da.sum(axis=0)
        dX[:, t] = da @ W
        dh = da @ V
        dc = dc * f

    for k, gate in enumerate(GATES):
        sl = slice(k * d2, (k + 1) * d2)
        grads[f"W{gate}"] = dW[sl]
        grads[f"V{gate}"] = dV[sl]
        grads[f"b{gate}"] = db[sl]
    return Gradients(dxs=dX, params=grads)


def objective_dlogits(probs: np.ndarray, target_class: int, wrt: str = "log_prob") -> np.ndarray:
    """d(objective)/d(logits) for log p_target (``"log_prob"``) or p_target (``"prob"``)."""
    onehot = np.zeros_like(probs)
    onehot[..., target_class] = 1.0
    d = onehot - probs
    if wrt == "log_prob":
        return d
    if wrt == "prob":
        return probs[..., target_class : target_class + 1] * d
    raise ValueError(f"wrt must be 'log_prob' or 'prob', got {wrt!r}")


def lstm_backward(params: LstmParams, trace: ForwardTrace, target_class: int, wrt: str = "log_prob") -> Gradients:
    """Gradient of log p(target_class) (or p itself with ``wrt="prob"``) for one sequence."""
    if not 0 <= target_class < params.n_classes:
        raise ValueError(f"class index {target_class} out of range for {params.n_classes} classes")
    batched = ForwardTrace(**{k: v[None] for k, v in vars(trace).items()})
    probs = stable_softmax(logits_from_trace(params, batched), axis=-1)
    grads = backward_batch(params, batched, objective_dlogits(probs, target_class, wrt))
    return Gradients(dxs=grads.dxs[0], params=grads.params)


# ---------------------------------------------------------------------------
# model = params + vocabulary + embedding table


@dataclass
class LstmModel:
    params: LstmParams
    vocab: list[str]
    embeddings: np.ndarray
    oov_seed: int = 0
    _index: dict[str, int] = field(init=False, repr=False)
    _oov_cache: dict[str, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.embeddings = np.asarray(self.embeddings, dtype=np.float64)
        if self.embeddings.shape != (len(self.vocab), self.params.d1):
            raise ValueError(
                f"embedding table has shape {self.embeddings.shape}, "
                f"expected ({len(self.vocab)}, {self.params.d1})"
            )
        if len(set(self.vocab)) != len(self.vocab):
            raise ValueError("vocabulary contains duplicate tokens")
        self._index = {w: k for k, w in enumerate(self.vocab)}
        self._oov_cache = {}

    @property
    def d1(self) -> int:
        return self.params.d1

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def oov_vector(self, token: str) -> np.ndarray:
        """Fixed Gaussian vector for a token outside the vocabulary."""
        if token not in self._oov_cache:
            rng = np.random.default_rng([self.oov_seed, zlib.crc32(token.encode("utf-8"))])
            self._oov_cache[token] = rng.normal(0.0, OOV_SIGMA, size=self.d1)
        return self._oov_cache[token]

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        if len(tokens) == 0:
            raise ValueError("empty input")
        rows = []
        for tok in tokens:
            k = self._index.get(tok)
            rows.append(self.embeddings[k] if k is not None else self.oov_vector(tok))
        return np.array(rows)

    def ids(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self._index[t] for t in tokens], dtype=np.int64)

    def predict_proba(self, tokens: Sequence[str]) -> np.ndarray:
        return classify(self.params, self.embed(tokens))

    def copy(self) -> "LstmModel":
        return LstmModel(self.params.copy(), list(self.vocab), self.embeddings.copy(), self.oov_seed)


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 30
    patience: int = 3
    batch_size: int = 32
    clip_norm: float = 5.0
    min_delta: float = 0.0
    seed: int = 0
    hidden_dim: int = 16
    embed_dim: int = 32
    embed_init_sigma: float = OOV_SIGMA
    fine_tune_embeddings: bool = True

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be at least 1")


class Adam:
    """Adam over a dict of arrays, updated in place."""

    def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for k in sorted(grads):
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + self.eps)


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * scale
    return norm


def _example_parts(ex) -> tuple[Sequence[str], int]:
    if hasattr(ex, "tokens"):
        return ex.tokens, int(ex.label)
    tokens, label = ex
    return tokens, int(label)


def length_batches(lengths: Sequence[int], batch_size: int, rng=None) -> list[np.ndarray]:
    """Index batches of equal-length examples; shuffled when ``rng`` is given."""
    by_len: dict[int, list[int]] = {}
    for k, n in enumerate(lengths):
        by_len.setdefault(n, []).append(k)
    batches = []
    for n in sorted(by_len):
        idx = np.array(by_len[n])
        if rng is not None:
            idx = idx[rng.permutation(len(idx))]
        for s in range(0, len(idx), batch_size):
            batches.append(idx[s : s + batch_size])
    if rng is not None:
        batches = [batches[k] for k in rng.permutation(len(batches))]
    return batches


def _encode(model: LstmModel, data) -> tuple[list[np.ndarray], np.ndarray]:
    ids, labels = [], []
    for ex in data:
        tokens, label = _example_parts(ex)
        if len(tokens) == 0:
            raise ValueError("training example with no tokens")
        ids.append(model.ids(tokens))
        labels.append(label)
    return ids, np.array(labels, dtype=np.int64)


def dataset_loss(model: LstmModel, data, batch_size: int = 256) -> tuple[float, float]:
    """Mean negative log-likelihood and accuracy of ``model`` on ``data``."""
    seqs, labels = [], []
    for ex in data:
        tokens, label = _example_parts(ex)
        seqs.append(model.embed(tokens))
        labels.append(label)
    labels = np.array(labels, dtype=np.int64)
    total, correct = 0.0, 0
    for batch in length_batches([len(x) for x in seqs], batch_size):
        X = np.stack([seqs[k] for k in batch])
        logits = logits_from_trace(model.params, forward_batch(model.params, X))
        lp = log_softmax(logits, axis=-1)
        yb = labels[batch]
        total -= float(lp[np.arange(len(batch)), yb].sum())
        correct += int((lp.argmax(axis=-1) == yb).sum())
    n = len(labels)
    return total / n, correct / n


def build_vocab(data: Iterable) -> list[str]:
    """Tokens in first-appearance order."""
    seen: dict[str, None] = {}
    for ex in data:
        tokens, _ = _example_parts(ex)
        for t in tokens:
            seen.setdefault(t, None)
    return list(seen)


def init_model(
    vocab: Sequence[str],
    cfg: TrainConfig,
    n_classes: int = 2,
    pretrained: dict[str, np.ndarray] | None = None,
) -> LstmModel:
    rng = np.random.default_rng(cfg.seed)
    d1 = cfg.embed_dim
    if pretrained:
        d1 = len(next(iter(pretrained.values())))
    emb = rng.normal(0.0, cfg.embed_init_sigma, size=(len(vocab), d1))
    if pretrained:
        for k, w in enumerate(vocab):
            if w in pretrained:
                emb[k] = pretrained[w]
    params = LstmParams.random(d1, cfg.hidden_dim, n_classes, rng=rng)
    return LstmModel(params, list(vocab), emb)


def train_lstm(
    train,
    valid,
    cfg: TrainConfig | None = None,
    model: LstmModel | None = None,
    pretrained: dict[str, np.ndarray] | None = None,
    history: list | None = None,
) -> LstmModel:
    """Fit with Adam and early stopping on validation loss.

    Returns the model snapshot with the lowest validation loss seen. Pass a
    list as ``history`` to collect one record per epoch.
    """
    cfg = cfg or TrainConfig()
    train, valid = list(train), list(valid)
    if not train or not valid:
        raise ValueError("training and validation sets must be non-empty")
    labels = {_example_parts(ex)[1] for ex in train + valid}
    if model is None:
        n_classes = max(2, max(labels) + 1)
        model = init_model(build_vocab(train + valid), cfg, n_classes, pretrained)
    else:
        model = model.copy()
    if min(labels) < 0 or max(labels) >= model.params.n_classes:
        raise ValueError(f"labels must lie in 0..{model.params.n_classes - 1}")

    rng = np.random.default_rng([cfg.seed, 1])
    ids, y = _encode(model, train)
    lengths = [len(x) for x in ids]
    weights = model.params.as_dict()
    weights["embeddings"] = model.embeddings
    opt = Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)

    best_loss, _ = dataset_loss(model, valid)
    best = model.copy()
    since_best = 0
    if history is not None:
        history.append({"epoch": 0, "train_loss": None, "valid_loss": best_loss})

    for epoch in range(1, cfg.max_epochs + 1):
        total = 0.0
        for b, batch in enumerate(length_batches(lengths, cfg.batch_size, rng)):
            tok = np.stack([ids[k] for k in batch])
            X = model.embeddings[tok]
            trace = forward_batch(model.params, X)
            logits = logits_from_trace(model.params, trace)
            lp = log_softmax(logits, axis=-1)
            yb = y[batch]
            loss = -float(lp[np.arange(len(batch)), yb].sum())
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite training loss at epoch {epoch}, batch {b}")
            total += loss
            onehot = np.eye(model.params.n_classes)[yb]
            dlogits = (np.exp(lp) - onehot) / len(batch)
            grads = backward_batch(model.params, trace, dlogits)
            g = dict(grads.params)
            if cfg.fine_tune_embeddings:
                demb = np.zeros_like(model.embeddings)
                np.add.at(demb, tok.reshape(-1), grads.dxs.reshape(-1, model.d1))
                g["embeddings"] = demb
            clip_by_global_norm(g, cfg.clip_norm)
            opt.step(weights, g)

        valid_loss, valid_acc = dataset_loss(model, valid)
        if not np.isfinite(valid_loss):
            raise TrainingDiverged(f"non-finite validation loss at epoch {epoch}")
        record = {
            "epoch": epoch,
            "train_loss": total / len(ids),
            "valid_loss": valid_loss,
            "valid_acc": valid_acc,
        }
        if history is not None:
            history.append(record)
        logger.info("epoch %d train %.4f valid %.4f acc %.4f", epoch, record["train_loss"], valid_loss, valid_acc)
        if valid_loss < best_loss - cfg.min_delta:
            best_loss = valid_loss
            best = model.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                logger.info("early stop after epoch %d", epoch)
                break
    return best

