"""Comparison attribution methods: leave one out, gradient times input,
integrated gradients and cell decomposition.

Word-level methods are oriented like CD: with two classes and the default
target (the positive class) a positive score pushes toward "positive".
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cd import POSITIVE, PhraseSpan, as_span, cd_word_scores, scalar_from_logits
from .lstm import (
    LstmModel,
    LstmParams,
    _as_sequence,
    backward_batch,
    classify,
    forward_batch,
    logits_from_trace,
    lstm_backward,
    lstm_forward,
    objective_dlogits,
)
from .numerics import log_softmax, stable_softmax

METHODS = ("cd", "loo", "grad_input", "integrated_gradients", "cell_decomp")
METHOD_ALIASES = {
    "grad": "grad_input",
    "gradient": "grad_input",
    "ig": "integrated_gradients",
    "cell": "cell_decomp",
    "leave_one_out": "loo",
}
PERIOD = "."
DEFAULT_IG_STEPS = 300


def canonical_method(name: str) -> str:
    name = METHOD_ALIASES.get(name, name)
    if name not in METHODS:
        raise ValueError(f"unknown attribution method {name!r}; expected one of {METHODS}")
    return name


@dataclass
class AttributionReport:
    method: str
    scores: np.ndarray
    spans: list[PhraseSpan]
    tokens: list[str] | None = None
    orientation: str = "positive-minus-negative"
    usable: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.method = canonical_method(self.method)
        self.scores = np.asarray(self.scores, dtype=np.float64)

    def phrase_score(self, span) -> float:
        return phrase_score_by_sum(self.scores, span)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "orientation": self.orientation,
            "usable": self.usable,
            "tokens": self.tokens,
            "spans": [str(s) for s in self.spans],
            "scores": [float(x) for x in self.scores],
            "metadata": self.metadata,
        }


def _log_prob(params: LstmParams, xs: np.ndarray, target_class: int) -> float:
    return float(log_softmax(logits_from_trace(params, lstm_forward(params, xs)))[target_class])


def leave_one_out_scores(params: LstmParams, xs, target_class: int = POSITIVE) -> np.ndarray:
    """``log p(target | xs) - log p(target | xs with x_t zeroed)`` for each t."""
    xs = _as_sequence(params, xs)
    full = _log_prob(params, xs, target_class)
    out = np.empty(xs.shape[0])
    for t in range(xs.shape[0]):
        masked = xs.copy()
        masked[t] = 0.0
        out[t] = full - _log_prob(params, masked, target_class)
    return out


def loo_phrase_score(params: LstmParams, xs, span, target_class: int = POSITIVE) -> float:
    """Log-probability drop when every embedding in ``span`` is zeroed."""
    xs = _as_sequence(params, xs)
    span = as_span(span).check(xs.shape[0])
    masked = xs.copy()
    masked[span.slice()] = 0.0
    return _log_prob(params, xs, target_class) - _log_prob(params, masked, target_class)


def gradient_input_scores(params: LstmParams, xs, target_class: int = POSITIVE) -> np.ndarray:
    """Dot product of each word vector with the gradient of p(target) w.r.t. it."""
    xs = _as_sequence(params, xs)
    grads = lstm_backward(params, lstm_forward(params, xs), target_class, wrt="prob")
    return np.einsum("td,td->t", xs, grads.dxs)


@dataclass
class IntegratedGradients:
    scores: np.ndarray
    raw: np.ndarray
    steps: int
    usable: bool
    rescaled: bool
    scale: float
    completeness_gap: float
    flags: list[str] = field(default_factory=list)


def _ig_raw(params: LstmParams, xs: np.ndarray, baseline: np.ndarray, target_class: int, steps: int):
    diff = xs - baseline
    alphas = np.arange(1, steps + 1) / steps
    path = baseline[None] + alphas[:, None, None] * diff[None]
    trace = forward_batch(params, path)
    probs = stable_softmax(logits_from_trace(params, trace), axis=-1)
    grads = backward_batch(params, trace, objective_dlogits(probs, target_class, wrt="prob"))
    avg = grads.dxs.mean(axis=0)
    return np.einsum("td,td->t", diff, avg)


def integrated_gradients_scores(
    params: LstmParams,
    xs,
    target_class: int = POSITIVE,
    steps: int = DEFAULT_IG_STEPS,
    baseline=None,
    rescale: bool = True,
) -> IntegratedGradients:
    """Right-Riemann integrated gradients of p(target) from ``baseline`` to ``xs``.

    ``baseline`` is a (T, d1) array or a single (d1,) vector repeated T
    times; the zero vector when omitted. Per-word raw attributions are
    divided by their standard deviation across the input when ``rescale``.
    """
    if steps < 1:
        raise ValueError("integrated gradients needs at least one step")
    xs = _as_sequence(params, xs)
    T = xs.shape[0]
    if baseline is None:
        base = np.zeros_like(xs)
    else:
        base = np.asarray(baseline, dtype=np.float64)
        if base.ndim == 1:
            base = np.tile(base, (T, 1))
        if base.shape != xs.shape:
            raise ValueError(f"baseline shape {base.shape} does not match input shape {xs.shape}")

    flags = []
    with np.errstate(all="ignore"):
        raw = _ig_raw(params, xs, base, target_class, steps)
    gap = float(abs(raw.sum() - (classify(params, xs)[target_class] - classify(params, base)[target_class])))
    if not np.all(np.isfinite(raw)):
        flags.append("non-finite attribution")
        nan = np.full(T, np.nan)
        return IntegratedGradients(nan, raw, steps, False, False, float("nan"), gap, flags)

    scale = float(np.std(raw))
    rescaled = False
    scores = raw.copy()
    if rescale:
        if scale > 0:
            scores = raw / scale
            rescaled = True
        else:
            flags.append("zero standard deviation; rescaling skipped")
    return IntegratedGradients(scores, raw, steps, True, rescaled, scale, gap, flags)


def cell_decomposition_scores(params: LstmParams, xs, target_class: int | None = None) -> np.ndarray:
    """Telescoping split of the output through the final output gate.

    Word t gets ``Wsoft (o_T * (tanh(c_t) - tanh(c_{t-1})))`` reduced to a
    positive-minus-negative scalar (or to ``target_class``'s logit).
    """
    xs = _as_sequence(params, xs)
    tr = lstm_forward(params, xs)
    diffs = np.tanh(tr.c) - np.tanh(tr.prev_c())
    contrib = (tr.o[-1] * diffs) @ params.Wsoft.T  # (T, C)
    if target_class is None:
        return scalar_from_logits(contrib)
    return contrib[:, target_class]


def phrase_score_by_sum(word_scores: Sequence[float], span) -> float:
    """Sum of the word scores inside ``span``."""
    scores = np.asarray(word_scores, dtype=np.float64)
    span = as_span(span).check(len(scores))
    return float(scores[span.slice()].sum())


def period_baseline(model: LstmModel, length: int, token: str = PERIOD) -> np.ndarray:
    if token in model:
        vec = model.embed([token])[0]
    else:
        warnings.warn(f"baseline token {token!r} not in vocabulary; using the zero vector", stacklevel=2)
        vec = np.zeros(model.d1)
    return np.tile(vec, (length, 1))


def word_scores(
    model: LstmModel,
    tokens: Sequence[str],
    method: str,
    ig_steps: int = DEFAULT_IG_STEPS,
    baseline_token: str = PERIOD,
    xs: np.ndarray | None = None,
) -> AttributionReport:
    """Per-word scores for ``tokens`` under one attribution method."""
    method = canonical_method(method)
    if len(tokens) == 0:
        raise ValueError("empty input")
    xs = model.embed(tokens) if xs is None else xs
    params = model.params
    T = len(tokens)
    spans = [PhraseSpan(t, t) for t in range(1, T + 1)]
    meta: dict = {}
    usable = True
    if method == "cd":
        scores = cd_word_scores(params, xs)
    elif method == "loo":
        scores = leave_one_out_scores(params, xs)
    elif method == "grad_input":
        scores = gradient_input_scores(params, xs)
    elif method == "cell_decomp":
        scores = cell_decomposition_scores(params, xs)
    else:
        base = period_baseline(model, T, baseline_token)
        ig = integrated_gradients_scores(params, xs, steps=ig_steps, baseline=base)
        scores = ig.scores
        usable = ig.usable
        meta = {
            "ig_steps": ig_steps,
            "baseline_token": baseline_token if baseline_token in model else None,
            "rescale_factor": ig.scale,
            "rescaled": ig.rescaled,
            "completeness_gap": ig.completeness_gap,
            "flags": ig.flags,
        }
    return AttributionReport(method, scores, spans, list(tokens), usable=usable, metadata=meta)
