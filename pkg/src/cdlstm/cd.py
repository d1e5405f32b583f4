"""Contextual decomposition of LSTM states.

For a phrase x_q..x_r every cell state and hidden state is split as
``c_t = beta_c_t + gamma_c_t`` and ``h_t = beta_t + gamma_t``, where the
beta parts collect contributions made by the phrase alone. Gate
pre-activations are linearized over four addends (input ``W x_t``, the
phrase part ``V beta_{t-1}``, the rest ``V gamma_{t-1}`` and the bias) and
the gate products are expanded; cross-terms are routed by who produced
them. ``x_t`` counts as phrase only while ``q <= t <= r``. The pure bias
product ``L(b_i) * L(b_g)`` always goes to gamma and the output gate is
used whole.

Every span is handled by the same code path; spans are stacked along a
leading axis so a whole family (e.g. every single-word span) runs in one
sweep over the sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linearization import linearize_values
from .lstm import LstmParams, _as_sequence
from .numerics import sigmoid

NEGATIVE = 0
POSITIVE = 1

# term order inside each gate linearization
_INPUT, _PHRASE, _OTHER, _BIAS = range(4)


@dataclass(frozen=True)
class PhraseSpan:
    """1-based inclusive token span."""

    q: int
    r: int

    def check(self, length: int) -> "PhraseSpan":
        if not (1 <= self.q <= self.r <= length):
            raise ValueError(f"invalid span {self.q}:{self.r} for input of length {length}")
        return self

    @property
    def width(self) -> int:
        return self.r - self.q + 1

    def slice(self) -> slice:
        return slice(self.q - 1, self.r)

    @classmethod
    def parse(cls, text: str) -> "PhraseSpan":
        """Parse ``"q:r"`` (or a single index ``"q"``)."""
        try:
            if ":" in text:
                q, r = text.split(":", 1)
                return cls(int(q), int(r))
            return cls(int(text), int(text))
        except ValueError:
            raise ValueError(f"malformed span {text!r}; expected q:r") from None

    def __str__(self) -> str:
        return f"{self.q}:{self.r}"


def as_span(span) -> PhraseSpan:
    if isinstance(span, PhraseSpan):
        return span
    if isinstance(span, str):
        return PhraseSpan.parse(span)
    q, r = span
    return PhraseSpan(int(q), int(r))


@dataclass
class CdState:
    """Per-step trail, arrays of shape (T, d2) for t = 1..T."""

    beta: np.ndarray
    gamma: np.ndarray
    beta_c: np.ndarray
    gamma_c: np.ndarray


@dataclass
class CdResult:
    span: PhraseSpan
    beta_T: np.ndarray
    gamma_T: np.ndarray
    beta_logits: np.ndarray
    gamma_logits: np.ndarray
    bias_logits: np.ndarray
    state: CdState

    @property
    def scalar_score(self) -> float:
        return cd_scalar_score(self)

    @property
    def logits(self) -> np.ndarray:
        return self.beta_logits + self.gamma_logits + self.bias_logits


def cd_scalar_score(result: CdResult) -> float:
    """Positive-class minus negative-class phrase logit."""
    return scalar_from_logits(result.beta_logits)


def scalar_from_logits(logits: np.ndarray):
    logits = np.asarray(logits)
    if logits.shape[-1] != 2:
        raise ValueError(
            f"a scalar score needs exactly 2 classes, got {logits.shape[-1]}; use the per-class beta_logits instead"
        )
    return logits[..., POSITIVE] - logits[..., NEGATIVE]


def _decompose(params: LstmParams, xs: np.ndarray, spans: Sequence[PhraseSpan], bias_first: bool = True):
    T = xs.shape[0]
    d2 = params.d2
    S = len(spans)
    inside = np.zeros((S, T, 1))
    for s, sp in enumerate(spans):
        inside[s, sp.q - 1 : sp.r] = 1.0

    Wx = {g: xs @ getattr(params, f"W{g}").T for g in "ofig"}  # (T, d2) each
    beta = np.zeros((S, d2))
    gamma = np.zeros((S, d2))
    beta_c = np.zeros((S, d2))
    gamma_c = np.zeros((S, d2))
    trail = {k: np.empty((S, T, d2)) for k in ("beta", "gamma", "beta_c", "gamma_c")}

    def gate(name: str, nonlinearity: str, t: int):
        V = getattr(params, f"V{name}")
        terms = [Wx[name][t], beta @ V.T, gamma @ V.T, getattr(params, f"b{name}")]
        return linearize_values(terms, nonlinearity, bias_index=_BIAS, bias_first=bias_first)

    for t in range(T):
        m = inside[:, t]
        out_m = 1.0 - m

        Lf = gate("f", "sigmoid", t)
        f_t = Lf[_INPUT] + Lf[_PHRASE] + Lf[_OTHER] + Lf[_BIAS]
        beta_f = (Lf[_PHRASE] + Lf[_BIAS] + m * Lf[_INPUT]) * beta_c
        gamma_f = f_t * gamma_c + (Lf[_OTHER] + out_m * Lf[_INPUT]) * beta_c

        Li = gate("i", "sigmoid", t)
        Lg = gate("g", "tanh", t)
        i_t = Li[_INPUT] + Li[_PHRASE] + Li[_OTHER] + Li[_BIAS]
        g_t = Lg[_INPUT] + Lg[_PHRASE] + Lg[_OTHER] + Lg[_BIAS]
        # products that involve x_t and nothing from gamma
        x_part = Li[_INPUT] * (Lg[_INPUT] + Lg[_PHRASE] + Lg[_BIAS]) + (Li[_BIAS] + Li[_PHRASE]) * Lg[_INPUT]
        beta_u = Li[_PHRASE] * (Lg[_PHRASE] + Lg[_BIAS]) + Li[_BIAS] * Lg[_PHRASE] + m * x_part
        gamma_u = (
            Li[_OTHER] * g_t
            + i_t * Lg[_OTHER]
            - Li[_OTHER] * Lg[_OTHER]
            + Li[_BIAS] * Lg[_BIAS]
            + out_m * x_part
        )

        beta_c = beta_f + beta_u
        gamma_c = gamma_f + gamma_u

        o_t = sigmoid(Wx["o"][t] + (beta + gamma) @ params.Vo.T + params.bo)
        Lb, Lr = linearize_values([beta_c, gamma_c], "tanh")
        beta = o_t * Lb
        gamma = o_t * Lr

        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(gamma))
                and np.all(np.isfinite(beta_c)) and np.all(np.isfinite(gamma_c))):  # fmt: skip
            raise FloatingPointError(f"non-finite decomposition at step {t + 1}")
        trail["beta"][:, t] = beta
        trail["gamma"][:, t] = gamma
        trail["beta_c"][:, t] = beta_c
        trail["gamma_c"][:, t] = gamma_c
    return trail


def cd_decompose_spans(params: LstmParams, xs, spans, bias_first: bool = True) -> list[CdResult]:
    """Decompose the same input for several spans at once."""
    xs = _as_sequence(params, xs)
    T = xs.shape[0]
    spans = [as_span(s).check(T) for s in spans]
    if not spans:
        return []
    trail = _decompose(params, xs, spans, bias_first)
    results = []
    for s, sp in enumerate(spans):
        state = CdState(**{k: v[s] for k, v in trail.items()})
        beta_T = state.beta[-1]
        gamma_T = state.gamma[-1]
        results.append(
            CdResult(
                span=sp,
                beta_T=beta_T,
                gamma_T=gamma_T,
                beta_logits=params.Wsoft @ beta_T,
                gamma_logits=params.Wsoft @ gamma_T,
                bias_logits=params.bsoft.copy(),
                state=state,
            )
        )
    return results


def cd_decompose(params: LstmParams, xs, span, bias_first: bool = True) -> CdResult:
    """Split the final state of ``xs`` into the contribution of ``span`` and the rest."""
    return cd_decompose_spans(params, xs, [span], bias_first)[0]


def cd_span_scores(params: LstmParams, xs, spans, target_class: int | None = None, bias_first: bool = True) -> np.ndarray:
    """Scalar (two-class) or per-class phrase scores for each span."""
    results = cd_decompose_spans(params, xs, spans, bias_first)
    logits = np.array([r.beta_logits for r in results])
    if target_class is None:
        return scalar_from_logits(logits)
    return logits[:, target_class]


def cd_word_scores(params: LstmParams, xs, target_class: int | None = None, bias_first: bool = True) -> np.ndarray:
    """CD score of every single-token span ``(t, t)``."""
    xs = _as_sequence(params, xs)
    T = xs.shape[0]
    return cd_span_scores(params, xs, [(t, t) for t in range(1, T + 1)], target_class, bias_first)


def all_spans(length: int) -> list[PhraseSpan]:
    return [PhraseSpan(q, r) for q in range(1, length + 1) for r in range(q, length + 1)]
