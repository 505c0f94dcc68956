import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncconv.errors import DomainError, WeightSumError
from ncconv.measures import (TWO_PI, AtomicMeasure, DensityMeasure, Dilate, Domain, Rotate,
                             Translate, atoms_close, bernoulli, dirac, from_json, make_atomic,
                             mixture, moments, push_map, to_json)

positions = st.floats(-10, 10, allow_nan=False)
weights = st.floats(0.01, 1.0)
atom_lists = st.lists(st.tuples(positions, weights), min_size=1, max_size=6)


def test_make_atomic_sorts_and_normalizes_small_drift():
    mu = make_atomic("real", [(2.0, 0.5), (-1.0, 0.5 + 5e-10)])
    assert mu.positions == (-1.0, 2.0)
    assert math.isclose(sum(mu.weights), 1.0, abs_tol=1e-15)


def test_make_atomic_merges_close_atoms():
    mu = make_atomic("real", [(1.0, 0.25), (1.0 + 1e-13, 0.25), (3.0, 0.5)])
    assert len(mu) == 2
    assert mu.weights[0] == pytest.approx(0.5)


def test_circle_wraps_angles_and_merges_across_zero():
    mu = make_atomic("circle", [(-1e-14, 0.5), (0.0, 0.5)])
    assert mu.is_dirac()
    nu = make_atomic("circle", [(TWO_PI + 1.0, 1.0)])
    assert nu.positions[0] == pytest.approx(1.0)


@pytest.mark.parametrize("domain,x", [("positive", -0.1), ("real", math.inf), ("circle", math.nan)])
def test_positions_outside_domain_raise(domain, x):
    with pytest.raises(DomainError):
        make_atomic(domain, [(x, 1.0)])


def test_weight_errors():
    with pytest.raises(WeightSumError):
        make_atomic("real", [(0.0, 0.0)])
    with pytest.raises(WeightSumError):
        make_atomic("real", [(0.0, 0.5)], normalize=False)
    with pytest.raises(WeightSumError):
        AtomicMeasure(Domain.REAL, (0.0, 1.0), (0.3, 0.3))


def test_bernoulli_degenerate_cases_are_diracs():
    assert bernoulli(1.0, 2.0, 3.0) == dirac(2.0)
    assert bernoulli(0.0, 2.0, 3.0) == dirac(3.0)
    assert bernoulli(0.25, 1.0, -1.0).weights == (0.75, 0.25)


def test_domain_aliases():
    assert Domain.parse("R+") is Domain.POSITIVE
    assert Domain.parse("T") is Domain.CIRCLE
    with pytest.raises(DomainError):
        Domain.parse("sphere")


def test_push_map_domain_rules():
    with pytest.raises(DomainError):
        push_map(dirac(1.0), Dilate(2.0))
    with pytest.raises(DomainError):
        push_map(dirac(1.0, "positive"), Dilate(-1.0))
    with pytest.raises(DomainError):
        push_map(dirac(1.0, "positive"), Rotate(1.0))
    rot = push_map(dirac(6.0, "circle"), Rotate(1.0))
    assert rot.positions[0] == pytest.approx(7.0 - TWO_PI)


@given(atom_lists, st.floats(-5, 5))
def test_translate_round_trip(pairs, t):
    mu = make_atomic("real", pairs)
    back = push_map(push_map(mu, Translate(t)), Translate(-t))
    assert len(back) == len(mu)
    assert np.allclose(back.x, mu.x, atol=1e-9)
    assert np.allclose(back.w, mu.w, atol=1e-12)


@given(st.lists(st.tuples(st.floats(0, 10), weights), min_size=1, max_size=6),
       st.floats(0.1, 10))
def test_dilate_round_trip(pairs, a):
    mu = make_atomic("positive", pairs)
    back = push_map(push_map(mu, Dilate(a)), Dilate(1.0 / a))
    assert np.allclose(back.x, mu.x, rtol=1e-12, atol=1e-12)


@given(atom_lists, atom_lists, st.floats(0.0, 1.0))
def test_mixture_commutes(a, b, c):
    mu, nu = make_atomic("real", a), make_atomic("real", b)
    left = mixture([c, 1 - c], [mu, nu])
    right = mixture([1 - c, c], [nu, mu])
    assert atoms_close(left, right, tol=1e-12)


def test_mixture_with_density_component():
    grid = np.linspace(0, 1, 11)
    flat = DensityMeasure(Domain.REAL, grid, np.ones(11))
    mix = mixture([0.5, 0.5], [flat, dirac(3.0)])
    assert mix.total_mass() == pytest.approx(1.0)
    assert mix.atom_positions == (3.0,)


def test_density_mass_is_checked():
    grid = np.linspace(0, 1, 11)
    with pytest.raises(WeightSumError):
        DensityMeasure(Domain.REAL, grid, 2 * np.ones(11))
    DensityMeasure(Domain.REAL, grid, 2 * np.ones(11), mass_tol=None)


def test_moments_on_circle_are_fourier_coefficients():
    mu = make_atomic("circle", [(0.0, 0.5), (math.pi, 0.5)])
    m = moments(mu, 4)
    assert np.allclose(m, [0, 1, 0, 1], atol=1e-15)


@given(atom_lists)
def test_json_round_trip_is_exact(pairs):
    mu = make_atomic("real", pairs)
    assert from_json(to_json(mu)) == mu


def test_density_json_round_trip():
    grid = np.linspace(-1, 1, 5)
    d = DensityMeasure(Domain.REAL, grid, np.full(5, 0.25), (0.5,), (0.5,), mass_tol=None)
    back = from_json(to_json(d))
    assert np.array_equal(back.grid, d.grid)
    assert back.atom_weights == (0.5,)
