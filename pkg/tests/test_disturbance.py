import json

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate

from phenoess.disturbance import Disturbance, DisturbanceKind, SupportGap, piecewise, shift_disturbance, uniform
from phenoess.errors import InvalidDomainError

TRI = [[0, 0], [0.5, 2], [1, 0]]
GAPPED = [[0.1, 0], [0.3, 1], [0.4, 0], [0.6, 0], [0.8, 2], [1.0, 0]]


@st.composite
def densities(draw):
    n = draw(st.integers(2, 7))
    x0 = draw(st.floats(0.0, 2.0))
    steps = draw(st.lists(st.floats(0.01, 1.0), min_size=n - 1, max_size=n - 1))
    ys = draw(st.lists(st.one_of(st.just(0.0), st.floats(0.0, 5.0)), min_size=n, max_size=n))
    xs = x0 + np.concatenate([[0.0], np.cumsum(steps)])
    seg = 0.5 * (np.array(ys[1:]) + np.array(ys[:-1])) * np.diff(xs)
    assume(seg.sum() > 1e-3)
    return Disturbance.piecewise(np.column_stack([xs, ys]))


def test_uniform_density():
    d = uniform(0.5, 0.9)
    assert d.density(0.7) == pytest.approx(2.5)
    assert d.density(0.2) == 0.0
    assert d.kind is DisturbanceKind.UNIFORM


def test_triangular_density_at_peak():
    assert piecewise(TRI).density(0.5) == pytest.approx(2.0)


def test_tail_of_uniform():
    assert uniform(0, 1).tail(0.791448) == pytest.approx(0.208552, abs=1e-12)


def test_cdf_endpoints():
    for d in (uniform(0.3, 1.0), piecewise(TRI), piecewise(GAPPED)):
        assert d.tail(d.t_low) == 1.0
        assert d.cdf(d.t_high) == 1.0
        assert d.cdf(d.t_low - 1) == 0.0


def test_cdf_plus_tail_exact():
    d = piecewise(GAPPED)
    x = np.linspace(0, 1.2, 101)
    assert np.all(d.cdf(x) + d.tail(x) == 1.0)


def test_triangular_cdf_closed_form():
    d = piecewise(TRI)
    x = np.linspace(0, 0.5, 11)
    assert np.allclose(d.cdf(x), 2 * x ** 2, atol=1e-15)


def test_quantiles():
    assert uniform(0.5, 0.9).quantile(0.5) == pytest.approx(0.7)
    assert uniform(0.5, 0.9).quantile(0.0) == 0.5
    assert piecewise(TRI).quantile(0.5) == pytest.approx(0.5, abs=1e-14)


def test_quantile_domain():
    with pytest.raises(InvalidDomainError):
        uniform(0, 1).quantile(1.2)


def test_quantiles_on_flat_span():
    d = piecewise(GAPPED)
    level = float(d.cdf(0.5))
    assert d.quantile(level) == pytest.approx(0.4)
    assert d.upper_quantile(level) == pytest.approx(0.6)


def test_normalisation_recorded():
    d = piecewise([[0, 0], [1, 4], [2, 0]])
    assert d.mass_scale == pytest.approx(4.0)
    assert d.density(1.0) == pytest.approx(1.0)


def test_zero_support_trimmed():
    d = piecewise([[0, 0], [0.2, 0], [0.5, 1], [0.9, 0], [1.5, 0]])
    assert (d.t_low, d.t_high) == (0.2, 0.9)


def test_t_low_may_be_zero():
    d = uniform(0.0, 1.0)
    assert d.t_low == 0.0 and d.cdf(0.0) == 0.0 and d.quantile(0.25) == pytest.approx(0.25)


@pytest.mark.parametrize("knots", [[[0, 1]], [[0, 1], [0, 1]], [[0, -1], [1, 1]], [[-0.5, 1], [1, 1]],
                                   [[0, 0], [1, 0]]])
def test_invalid_piecewise(knots):
    with pytest.raises(InvalidDomainError):
        piecewise(knots)


def test_invalid_uniform():
    with pytest.raises(InvalidDomainError):
        uniform(0.9, 0.5)


def test_gaps_reported():
    d = piecewise(GAPPED)
    assert d.gaps() == [SupportGap(0.4, 0.6)]
    assert not d.in_esupp(0.5)
    assert d.in_esupp(0.4) and d.in_esupp(0.6)


def test_rescale_uniform():
    d = uniform(0, 1).rescale(0.5, 0.9)
    assert d.kind is DisturbanceKind.UNIFORM
    assert (d.t_low, d.t_high) == (0.5, 0.9)
    assert d.density(0.7) == pytest.approx(2.5)


def test_rescale_identity():
    d = piecewise(TRI)
    assert d.rescale(0.0, 1.0) is d


def test_rescale_triangle_peak():
    d = piecewise(TRI).rescale(0.3, 1.0)
    peak = d.xs[np.argmax(d.ys)]
    assert peak == pytest.approx(0.65)


def test_shift():
    d = shift_disturbance(uniform(0.5, 0.9), 0.1)
    assert (d.t_low, d.t_high) == pytest.approx((0.6, 1.0))
    assert shift_disturbance(d, 0.0) is d
    tri = shift_disturbance(piecewise(TRI), 0.2)
    assert tri.xs[np.argmax(tri.ys)] == pytest.approx(0.7)
    with pytest.raises(InvalidDomainError):
        shift_disturbance(uniform(0.1, 0.2), -0.5)


def test_json_round_trip():
    for d in (uniform(0.5, 0.9), piecewise(GAPPED)):
        e = Disturbance.from_json(json.loads(json.dumps(d.to_json())))
        assert np.array_equal(e.xs, d.xs) and np.allclose(e.ys, d.ys)
    assert uniform(0.5, 0.9).to_json() == {"kind": "uniform", "t_low": 0.5, "t_high": 0.9}


@given(densities())
def test_normalised(d):
    total, _ = integrate.quad(d.density, d.t_low, d.t_high, points=d.xs[1:-1], limit=200)
    assert total == pytest.approx(1.0, abs=1e-9)


@given(densities(), st.floats(0.0, 1.0))
def test_cdf_of_quantile(d, q):
    assert d.cdf(d.quantile(q)) >= q - 1e-12
    assert d.cdf(d.upper_quantile(q)) <= q + 1e-12


@given(densities(), st.floats(0.0, 1.0))
def test_quantile_of_cdf(d, u):
    x = d.t_low + u * (d.t_high - d.t_low)
    assert d.quantile(d.cdf(x)) <= x + 1e-9


@given(densities())
def test_cdf_monotone(d):
    x = np.linspace(d.t_low - 0.1, d.t_high + 0.1, 400)
    assert np.all(np.diff(d.cdf(x)) >= 0)


@given(densities(), st.floats(0.0, 3.0), st.floats(0.05, 3.0))
def test_rescale_properties(d, lo, width):
    e = d.rescale(lo, lo + width)
    assert (e.t_low, e.t_high) == pytest.approx((lo, lo + width))
    total = float(np.sum(0.5 * (e.ys[1:] + e.ys[:-1]) * np.diff(e.xs)))
    assert total == pytest.approx(1.0, abs=1e-9)
    u = np.linspace(0, 1, 17)
    x_old = d.t_low + u * (d.t_high - d.t_low)
    x_new = lo + u * width
    assert np.allclose(e.cdf(x_new), d.cdf(x_old), atol=1e-9)
