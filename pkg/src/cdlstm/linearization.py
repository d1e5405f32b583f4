"""Additive linearization of sigmoid/tanh over a sum of named inputs.

``f(y_1 + ... + y_N)`` is split into per-term contributions by averaging
telescoping differences over orderings of the terms. Each ordering assigns
term ``k`` the jump ``f(prefix + y_k) - f(prefix)``. The empty prefix is
valued at 0 rather than ``f(0)``, so for the sigmoid the constant
``sigmoid(0) = 0.5`` lands on whichever term comes first. With a bias term
forced to the front that constant belongs to the bias; otherwise the
average spreads it evenly. Either way the contributions add up to
``f(sum)`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from math import factorial
from typing import Sequence

import numpy as np

from .numerics import NONLINEARITIES

LABELS = ("phrase", "other", "input", "bias")
MIN_TERMS = 2
MAX_TERMS = 4


@dataclass(frozen=True)
class Term:
    label: str
    value: np.ndarray

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown term label {self.label!r}; expected one of {LABELS}")
        object.__setattr__(self, "value", np.asarray(self.value, dtype=np.float64))


@dataclass(frozen=True)
class TermGroup:
    """Between two and four same-shaped addends fed to one nonlinearity."""

    terms: tuple[Term, ...]
    nonlinearity: str = "tanh"
    bias_first: bool = field(default=True, compare=False)

    def __post_init__(self):
        terms = tuple(t if isinstance(t, Term) else Term(*t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        if not MIN_TERMS <= len(terms) <= MAX_TERMS:
            raise ValueError(f"term count must be between {MIN_TERMS} and {MAX_TERMS}, got {len(terms)}")
        if sum(t.label == "bias" for t in terms) > 1:
            raise ValueError("a term group may hold at most one bias term")
        shapes = {t.value.shape for t in terms}
        if len(shapes) != 1:
            raise ValueError(f"all terms must share one shape, got {sorted(shapes)}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")

    @property
    def bias_index(self) -> int | None:
        for k, t in enumerate(self.terms):
            if t.label == "bias":
                return k
        return None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.terms)


def orderings(n: int, bias_index: int | None = None, bias_first: bool = True) -> list[tuple[int, ...]]:
    """Term orderings averaged over; bias pinned to the front when requested."""
    if bias_index is None or not bias_first:
        return list(permutations(range(n)))
    rest = [k for k in range(n) if k != bias_index]
    return [(bias_index, *p) for p in permutations(rest)]


def linearize_values(
    values: Sequence[np.ndarray],
    nonlinearity: str,
    bias_index: int | None = None,
    bias_first: bool = True,
) -> list[np.ndarray]:
    """Contribution of each addend to ``nonlinearity(sum(values))``.

    Inputs only need to broadcast against each other; this is the path the
    decomposition uses with stacks of spans. :func:`linearize` wraps it with
    label bookkeeping and validation.
    """
    f = NONLINEARITIES[nonlinearity]
    vals = np.broadcast_arrays(*[np.asarray(v, dtype=np.float64) for v in values])
    n = len(vals)
    cache: dict[int, np.ndarray | float] = {0: 0.0}

    def value_of(mask: int):
        if mask not in cache:
            total = None
            for k in range(n):
                if mask >> k & 1:
                    total = vals[k] if total is None else total + vals[k]
            cache[mask] = f(total)
        return cache[mask]

    perms = orderings(n, bias_index, bias_first)
    contribs = [np.zeros(vals[0].shape) for _ in range(n)]
    for perm in perms:
        mask = 0
        for k in perm:
            grown = mask | (1 << k)
            contribs[k] += value_of(grown) - value_of(mask)
            mask = grown
    scale = 1.0 / len(perms)
    return [c * scale for c in contribs]


def linearize(group: TermGroup, bias_first: bool | None = None) -> list[np.ndarray]:
    """Per-term contributions for ``group``, in the group's term order.

    ``bias_first`` overrides the group's own flag when given.
    """
    flag = group.bias_first if bias_first is None else bias_first
    return linearize_values(
        [t.value for t in group.terms], group.nonlinearity, group.bias_index, flag
    )


def linearize_labeled(group: TermGroup, bias_first: bool | None = None) -> list[tuple[str, np.ndarray]]:
    return list(zip(group.labels, linearize(group, bias_first)))


def linearize_pair_closed_form(y1, y2, nonlinearity: str = "tanh") -> np.ndarray:
    """Two-term contribution of ``y1``, written out directly.

    ``0.5 * ((f(y1) - e) + (f(y1 + y2) - f(y2)))`` where ``e`` is the value
    given to the empty prefix (0; equals ``tanh(0)``).
    """
    f = NONLINEARITIES[nonlinearity]
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    if y1.shape != y2.shape:
        raise ValueError(f"shape mismatch: {y1.shape} vs {y2.shape}")
    return 0.5 * ((f(y1) - 0.0) + (f(y1 + y2) - f(y2)))


def n_orderings(n: int, with_bias: bool, bias_first: bool = True) -> int:
    return factorial(n - 1) if with_bias and bias_first else factorial(n)
