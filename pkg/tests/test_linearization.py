import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdlstm.linearization import (
    Term,
    TermGroup,
    linearize,
    linearize_labeled,
    linearize_pair_closed_form,
    n_orderings,
    orderings,
)
from cdlstm.numerics import elementwise

LABELS = ("phrase", "other", "input")


def group(values, nl="tanh", bias=None, labels=None):
    labels = labels or [LABELS[k % 3] for k in range(len(values))]
    terms = [Term(lab, v) for lab, v in zip(labels, values)]
    if bias is not None:
        terms.insert(bias[0], Term("bias", bias[1]))
    return TermGroup(tuple(terms), nl)


def test_zero_partner():
    a, b = linearize(group([[1.0], [0.0]]))
    assert a[0] == pytest.approx(0.761594, abs=1e-6)
    assert a[0] == pytest.approx(math.tanh(1.0), abs=1e-15)
    assert b[0] == 0.0


@pytest.mark.parametrize("a", [-1.3, 0.0, 0.4, 2.5])
def test_equal_terms_split_evenly(a):
    c1, c2 = linearize(group([[a], [a]]))
    assert c1[0] == pytest.approx(math.tanh(2 * a) / 2, abs=1e-15)
    assert c2[0] == pytest.approx(math.tanh(2 * a) / 2, abs=1e-15)


def test_pair_example_value():
    y1 = linearize(group([[0.5], [0.3]]))[0][0]
    # hand evaluation of the two orderings
    expected = 0.5 * ((math.tanh(0.5) - math.tanh(0.0)) + (math.tanh(0.8) - math.tanh(0.3)))
    assert y1 == pytest.approx(expected, abs=1e-15)
    assert y1 == pytest.approx(0.41742, abs=1e-5)


def test_closed_form_examples(rng):
    y2 = rng.normal(size=5)
    np.testing.assert_array_equal(linearize_pair_closed_form(np.zeros(5), y2), np.zeros(5))
    y1 = rng.normal(size=5)
    np.testing.assert_allclose(linearize_pair_closed_form(y1, np.zeros(5)), np.tanh(y1), atol=1e-15)
    a, b = rng.normal(size=8), rng.normal(size=8)
    for nl in ("tanh", "sigmoid"):
        np.testing.assert_allclose(linearize_pair_closed_form(a, b, nl), linearize(group([a, b], nl))[0], atol=1e-12)


def test_closed_form_shape_mismatch():
    with pytest.raises(ValueError):
        linearize_pair_closed_form(np.zeros(2), np.zeros(3))


@pytest.mark.parametrize("n", [1, 5])
def test_term_count_bounds(n):
    with pytest.raises(ValueError, match="between 2 and 4"):
        group([[0.1]] * n)


def test_two_biases_rejected():
    with pytest.raises(ValueError, match="at most one bias"):
        TermGroup((Term("bias", [1.0]), Term("bias", [2.0])))


def test_shape_and_label_validation():
    with pytest.raises(ValueError):
        TermGroup((Term("phrase", [1.0]), Term("other", [1.0, 2.0])))
    with pytest.raises(ValueError):
        Term("noise", [1.0])
    with pytest.raises(ValueError):
        TermGroup((Term("phrase", [1.0]), Term("other", [1.0])), "relu")


def test_ordering_counts():
    assert len(orderings(4)) == 24
    assert len(orderings(4, bias_index=2)) == 6
    assert all(p[0] == 2 for p in orderings(4, bias_index=2))
    assert len(orderings(4, bias_index=2, bias_first=False)) == 24
    assert n_orderings(3, True) == 2 and n_orderings(3, False) == 6


def test_sigmoid_bias_takes_the_constant():
    # with the bias first, the other terms see f(b + ...) - f(b): zero terms get zero
    (b, x) = linearize(TermGroup((Term("bias", [0.0]), Term("input", [0.0])), "sigmoid"))
    assert b[0] == 0.5 and x[0] == 0.0


def test_labels_travel_with_contributions():
    g = TermGroup((Term("input", [0.3]), Term("bias", [0.1]), Term("phrase", [-0.2])), "sigmoid")
    labeled = linearize_labeled(g)
    assert [lab for lab, _ in labeled] == ["input", "bias", "phrase"]


# ---------------------------------------------------------------------------
# properties

coord = st.floats(-4, 4, allow_nan=False)


@st.composite
def term_groups(draw):
    n = draw(st.integers(2, 4))
    dim = draw(st.integers(1, 5))
    has_bias = draw(st.booleans())
    nl = draw(st.sampled_from(["tanh", "sigmoid"]))
    vals = [np.array(draw(st.lists(coord, min_size=dim, max_size=dim))) for _ in range(n)]
    labels = [draw(st.sampled_from(LABELS)) for _ in range(n)]
    if has_bias:
        labels[draw(st.integers(0, n - 1))] = "bias"
    return TermGroup(tuple(Term(lab, v) for lab, v in zip(labels, vals)), nl)


@given(term_groups(), st.booleans())
def test_completeness(g, bias_first):
    contribs = linearize(g, bias_first=bias_first)
    total = sum(t.value for t in g.terms)
    np.testing.assert_allclose(sum(contribs), elementwise(g.nonlinearity, total), atol=1e-12, rtol=0)


@given(term_groups())
def test_swapping_equal_label_terms_swaps_contributions(g):
    idx = [k for k, t in enumerate(g.terms) if t.label != "bias"]
    if len(idx) < 2:
        return
    a, b = idx[0], idx[1]
    terms = list(g.terms)
    swapped = list(terms)
    swapped[a] = Term(terms[a].label, terms[b].value)
    swapped[b] = Term(terms[b].label, terms[a].value)
    c1 = linearize(g)
    c2 = linearize(TermGroup(tuple(swapped), g.nonlinearity))
    np.testing.assert_allclose(c2[a], c1[b], atol=1e-15, rtol=0)
    np.testing.assert_allclose(c2[b], c1[a], atol=1e-15, rtol=0)


@given(st.lists(coord, min_size=1, max_size=6), st.lists(coord, min_size=1, max_size=6))
def test_pair_without_bias_equals_closed_form(a, b):
    n = min(len(a), len(b))
    a, b = np.array(a[:n]), np.array(b[:n])
    for nl in ("tanh", "sigmoid"):
        general = linearize(group([a, b], nl))
        np.testing.assert_allclose(general[0], linearize_pair_closed_form(a, b, nl), atol=1e-12, rtol=0)
        np.testing.assert_allclose(general[1], linearize_pair_closed_form(b, a, nl), atol=1e-12, rtol=0)


@given(term_groups())
def test_tanh_contributions_are_odd(g):
    if g.nonlinearity != "tanh":
        return
    neg = TermGroup(tuple(Term(t.label, -t.value) for t in g.terms), "tanh")
    for c, d in zip(linearize(g), linearize(neg)):
        np.testing.assert_allclose(d, -c, atol=1e-15, rtol=0)
