import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma, gammainc

from oracles import kernel_antiderivative

from fradic.mlf import kernel_weight
from fradic.quadrature import build_rule, graded_rule, integrate_weighted


@given(st.floats(-0.95, 3.0), st.integers(0, 15))
def test_jacobi_rule_exact_on_polynomials(g, k):
    rule = build_rule(g, 8)
    assert rule.weights @ rule.nodes**k == pytest.approx(1.0 / (g + k + 1.0), rel=1e-12)


def test_jacobi_rule_basic_shape():
    rule = build_rule(-0.25)
    assert rule.n == 64 and rule.nodes.shape == (64,)
    assert np.all(np.diff(rule.nodes) > 0) and np.all(rule.weights > 0)
    assert 0.0 < rule.nodes[0] and rule.nodes[-1] < 1.0
    with pytest.raises(ValueError):
        rule.nodes[0] = 0.5


@pytest.mark.parametrize("g", [-1.0, -1.5])
def test_non_integrable_weight_rejected(g):
    with pytest.raises(ValueError):
        build_rule(g)
    with pytest.raises(ValueError):
        graded_rule(g, 0.75)


def test_bad_order_rejected():
    with pytest.raises(ValueError):
        build_rule(0.0, 0)
    with pytest.raises(ValueError):
        build_rule(0.0, 2.5)
    with pytest.raises(ValueError):
        graded_rule(0.0, 1.5)


@pytest.mark.parametrize("g", [-0.5, -0.25, 0.0, 0.7])
@pytest.mark.parametrize("lam", [1.0, 50.0, 3000.0])
def test_graded_rule_on_exponentials(g, lam):
    rule = graded_rule(g, 1.0, lam)
    exact = gammainc(g + 1.0, lam) * gamma(g + 1.0) / lam ** (g + 1.0)
    assert rule.weights @ np.exp(-lam * rule.nodes) == pytest.approx(exact, rel=1e-13)


@pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
@pytest.mark.parametrize("lam", [1.0, 40.0, 400.0])
def test_graded_rule_on_resolvent_kernels(alpha, lam):
    rule = graded_rule(alpha - 1.0, alpha, lam)
    got = rule.weights @ kernel_weight(alpha, lam, rule.nodes)
    assert got == pytest.approx(kernel_antiderivative(lam, 1.0, alpha), rel=1e-12)


def test_breaks_make_kinks_exact():
    rule = graded_rule(0.0, 1.0, 1.0, breaks=(0.3,))
    assert 0.3 in rule.panels
    got = rule.weights @ np.abs(rule.nodes - 0.3)
    assert got == pytest.approx(0.3**2 / 2 + 0.7**2 / 2, rel=1e-14)


@given(st.lists(st.floats(0.001, 0.999), min_size=1, max_size=6))
def test_panels_grow_by_at_most_two(breaks):
    rule = graded_rule(-0.25, 0.75, 100.0, breaks=tuple(breaks))
    edges = rule.panels
    assert edges[0] == 0.0 and edges[-1] == 1.0
    assert np.all(edges[2:] / edges[1:-1] <= 2.0 + 1e-12)
    assert rule.weights.sum() == pytest.approx(1.0 / 0.75, rel=1e-12)


def test_integrate_weighted_scales_with_horizon():
    rule = build_rule(-0.4, 16)
    b = 2.5
    assert integrate_weighted(rule, b, np.ones_like) == pytest.approx(b**0.6 / 0.6, rel=1e-13)
    # f(s) = s: int_0^b (b-s)**g s ds = b**(g+2) / ((g+1)(g+2))
    exact = b**1.6 / (0.6 * 1.6)
    assert integrate_weighted(rule, b, lambda s: s) == pytest.approx(exact, rel=1e-13)
    vec = integrate_weighted(rule, b, lambda s: np.vstack([s, 2 * s]))
    np.testing.assert_allclose(vec, [exact, 2 * exact], rtol=1e-13)
    with pytest.raises(ValueError):
        integrate_weighted(rule, 0.0, np.ones_like)


def test_graded_rule_cached_and_stiffness_floor():
    a = graded_rule(-0.25, 0.75, 1e-3)
    assert graded_rule(-0.25, 0.75, 1e-3) is a
    b = graded_rule(-0.25, 0.75, 1.0)
    np.testing.assert_array_equal(a.nodes, b.nodes)
    head = a.panels[1]
    assert head ** 0.75 <= 1e-6 * (1 + 1e-12) and not math.isclose(head, 0.0)
