import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal

from framelab import DimensionError, ExponentError, NonFiniteError, SpaceSpec
from framelab.spaces import (
    INF,
    dual_exponent,
    format_exponent,
    norm,
    parse_exponent,
    pnorm,
    sample_unit_sphere,
)

EXPONENTS = [1.0, 1.5, 2.0, 3.0, 4.0, INF]
finite_vectors = arrays(np.float64, st.integers(1, 6), elements=st.floats(-1e3, 1e3, allow_nan=False))


@pytest.mark.parametrize(
    "v, p, expected",
    [((3, 4), 2, 5.0), ((1, -1, 1), 1, 3.0), ((1, -2), INF, 2.0)],
)
def test_norm_examples(v, p, expected):
    assert norm(v, SpaceSpec(len(v), p)) == expected


def test_norm_rejects_wrong_dimension():
    with pytest.raises(DimensionError):
        norm([1.0, 2.0, 3.0], SpaceSpec(2, 2))


def test_norm_rejects_nan():
    with pytest.raises(NonFiniteError):
        norm([1.0, np.nan], SpaceSpec(2, 2))


@pytest.mark.parametrize("p, expected", [(2, 2), (1, INF), (3, 1.5), (INF, 1.0), (1.5, 3.0)])
def test_dual_exponent(p, expected):
    assert dual_exponent(p) == pytest.approx(expected)


@pytest.mark.parametrize("p", EXPONENTS)
def test_dual_exponent_is_an_involution(p):
    assert dual_exponent(dual_exponent(p)) == pytest.approx(p)


@pytest.mark.parametrize("raw", ["inf", "Infinity", math.inf, "∞"])
def test_parse_exponent_accepts_spellings_of_infinity(raw):
    assert parse_exponent(raw) == INF


@pytest.mark.parametrize("raw", [0.5, -2, "abc", math.nan, True])
def test_parse_exponent_rejects(raw):
    with pytest.raises(ExponentError):
        parse_exponent(raw)


def test_format_exponent_round_trip():
    assert format_exponent(INF) == "inf"
    assert parse_exponent(format_exponent(3.0)) == 3.0


def test_pnorm_does_not_overflow_for_large_entries():
    v = np.array([1e200, 1e200])
    assert_allclose(pnorm(v, 3.0), 1e200 * 2 ** (1 / 3), rtol=1e-14)
    assert pnorm(np.zeros(3), 3.0) == 0.0


def test_pnorm_is_batched():
    X = np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 0.0]])
    assert_allclose(pnorm(X, 2.0), [5.0, 0.0, 1.0])


def test_sample_includes_canonical_vectors():
    pts = np.array(sample_unit_sphere(SpaceSpec(2, 2), 4, seed=0))
    for e in ([1, 0], [0, 1], [-1, 0], [0, -1]):
        assert any(np.allclose(x, e) for x in pts)


@pytest.mark.parametrize("p", EXPONENTS)
@pytest.mark.parametrize("dim", [1, 2, 3, 5])
def test_samples_lie_on_the_sphere(p, dim):
    s = SpaceSpec(dim, p)
    pts = sample_unit_sphere(s, 50, seed=3)
    assert len(pts) == 50
    assert_allclose([norm(x, s) for x in pts], 1.0, atol=1e-12)


def test_samples_cover_every_orthant_in_low_dimension():
    pts = np.array(sample_unit_sphere(SpaceSpec(3, 1.5), 40, seed=0))
    signs = {tuple(np.sign(x)) for x in pts if np.all(x != 0)}
    assert len(signs) == 8


def test_sampling_is_deterministic():
    s = SpaceSpec(3, 3)
    a = sample_unit_sphere(s, 30, seed=11)
    b = sample_unit_sphere(s, 30, seed=11)
    assert_array_equal(np.array(a), np.array(b))


def test_space_dual():
    s = SpaceSpec(3, 1)
    assert s.dual() == SpaceSpec(3, INF)
    assert not s.is_reflexive_cb
    assert SpaceSpec(3, 2).is_reflexive_cb


@settings(max_examples=200, deadline=None)
@given(finite_vectors, st.sampled_from(EXPONENTS), st.data())
def test_holder_inequality(v, p, data):
    w = data.draw(arrays(np.float64, v.shape, elements=st.floats(-1e3, 1e3, allow_nan=False)))
    lhs = abs(float(v @ w))
    rhs = float(pnorm(v, p) * pnorm(w, dual_exponent(p)))
    assert lhs <= rhs * (1 + 1e-12) + 1e-9


@settings(max_examples=200, deadline=None)
@given(finite_vectors, st.sampled_from(EXPONENTS), st.sampled_from(EXPONENTS))
def test_norm_nesting(v, p, q):
    if p > q:
        p, q = q, p
    assert pnorm(v, q) <= pnorm(v, p) * (1 + 1e-12) + 1e-12
