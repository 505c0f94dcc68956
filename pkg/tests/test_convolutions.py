import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncconv import convolutions as conv
from ncconv.errors import DomainError, PreconditionError
from ncconv.measures import Domain, bernoulli, dirac, make_atomic
from ncconv.operator_models import random_atomic
from ncconv.transforms import TransformHandle, haar_circle, handle_of, semicircle
from ncconv.verification import measure_gap

import oracles

PHI = (1 + math.sqrt(5)) / 2
Z = conv.seeded_upper_points(20)
D = conv.seeded_disk_points(20)
seeds = st.integers(0, 2 ** 32 - 1)


def _same(a, b, tol=1e-12):
    return measure_gap(a, b) < tol


def _gap(which, h1, h2, z):
    return float(np.max(np.abs(handle_of(h1).evaluate(which, z) - handle_of(h2).evaluate(which, z))))


# -- additive ------------------------------------------------------------------------

def test_mono_add_identities():
    mu = make_atomic("real", [(-1, .2), (0.5, .3), (2, .5)])
    assert _same(conv.mono_add(dirac(0.0), mu).measure, mu)
    assert _same(conv.mono_add(mu, dirac(0.0)).measure, mu)


def test_bernoulli_mono_bernoulli():
    b = bernoulli(0.5)
    lam = conv.mono_add(b, b)
    assert lam.is_atomic and lam.method is conv.Method.OPERATOR_MODEL
    assert np.allclose(lam.measure.x, [-PHI, -1 / PHI, 1 / PHI, PHI], atol=1e-12)
    assert conv.identity_residual(lam, b, b) < 1e-12


def test_bool_add_examples():
    b = bernoulli(0.5)
    lam = conv.bool_add(b, b).measure
    assert np.allclose(lam.x, [-math.sqrt(2), math.sqrt(2)], atol=1e-12)
    assert np.allclose(lam.w, [0.5, 0.5], atol=1e-12)
    mu = make_atomic("real", [(-2, .4), (1, .6)])
    assert _same(conv.bool_add(dirac(0.0), mu).measure, mu)
    assert _same(conv.bool_add(dirac(1.5), mu).measure, conv.mono_add(dirac(1.5), mu).measure)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_additive_identities_hold(seed):
    rng = np.random.default_rng(seed)
    mu, nu = random_atomic(rng, "real"), random_atomic(rng, "real")
    for op in (conv.mono_add, conv.bool_add):
        assert conv.identity_residual(op(mu, nu), mu, nu) < 1e-10
    assert _gap("F", conv.bool_add(mu, nu).handle, conv.bool_add(nu, mu).handle, Z) < 1e-10


def test_transform_level_inputs():
    sc = semicircle(0, 1)
    res = conv.mono_add(sc, dirac(1.0))
    assert not res.is_atomic
    assert _gap("G", res.handle, semicircle(1, 1), Z) < 1e-12


def test_free_add_with_dirac_is_translation():
    mu = make_atomic("real", [(-1, .5), (3, .5)])
    res = conv.free_add(dirac(2.0), mu)
    assert res.method is conv.Method.SHORT_CIRCUIT
    assert _same(res.measure, make_atomic("real", [(1, .5), (5, .5)]))


def test_free_add_bernoulli_is_arcsine():
    b = bernoulli(0.5)
    h = conv.free_add(b, b).handle
    assert abs(h.G(1j) - oracles.arcsine_G(1j)) < 1e-10
    m = oracles.atomic_moments([1, -1], [0.5, 0.5], 6)
    assert np.allclose(np.real(h.moments(6, radius=3.0)), oracles.free_additive_moments(m, m),
                       atol=1e-8)


def test_free_add_semicircles():
    h = conv.free_add(semicircle(0, 1), semicircle(0, 1)).handle
    assert abs(h.F(2j) - 1j * (1 + math.sqrt(3))) < 1e-10
    assert abs(np.real(h.moments(2, radius=4.0))[1] - 2.0) < 1e-6


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_free_add_matches_cumulant_oracle(seed):
    rng = np.random.default_rng(seed)
    mu, nu = (random_atomic(rng, "real", max_atoms=3, min_atoms=2) for _ in range(2))
    got = np.real(conv.free_add(mu, nu).handle.moments(4, radius=8.0))
    want = oracles.free_additive_moments(oracles.atomic_moments(mu.x, mu.w, 4),
                                         oracles.atomic_moments(nu.x, nu.w, 4))
    assert np.allclose(got, want, atol=1e-7 * (1 + np.abs(want)))


# -- multiplicative on the half-line -----------------------------------------------------

def test_mono_mult_pos_identities():
    nu = make_atomic("positive", [(0.5, .3), (2, .7)])
    assert _same(conv.mono_mult_pos(dirac(1.0, "positive"), nu).measure, nu)
    lam = conv.mono_mult_pos(nu, dirac(3.0, "positive")).measure
    assert _same(lam, make_atomic("positive", [(1.5, .3), (6, .7)]))
    assert conv.mono_mult_pos(nu, dirac(0.0, "positive")).measure == dirac(0.0, "positive")


def test_dirac_mono_mult_two_atoms():
    """Closed form with p the weight of the nonzero atom."""
    x, y, p = 2.0, 3.0, 0.25
    nu = make_atomic("positive", [(0.0, 1 - p), (y, p)])
    d = x * p + 1 - p
    lam = conv.mono_mult_pos(dirac(x, "positive"), nu).measure
    assert _same(lam, make_atomic("positive", [(0, (1 - p) / d), (y * d, x * p / d)]))


def test_dirac_alt_mono_mult_two_atoms():
    x, y, p = 2.0, 3.0, 0.25
    nu = make_atomic("positive", [(0.0, 1 - p), (y, p)])
    lam = conv.mono_mult_alt(dirac(x, "positive"), nu).measure
    assert _same(lam, make_atomic("positive", [(0, 1 - p), (y * (x * p + 1 - p), p)]))
    mu = make_atomic("positive", [(1, .5), (4, .5)])
    assert _same(conv.mono_mult_alt(mu, dirac(2.0, "positive")).measure,
                 make_atomic("positive", [(2, .5), (8, .5)]))


def test_new_bool_mult_bridges():
    x = 1.7
    nu = make_atomic("positive", [(0.0, 0.35), (2.5, 0.65)])
    dx = dirac(x, "positive")
    assert _same(conv.bool_mult_new(nu, dx).measure, conv.mono_mult_alt(dx, nu).measure)
    assert _same(conv.bool_mult_new(dx, nu).measure, conv.mono_mult_pos(dx, nu).measure)
    assert _same(conv.bool_mult_new(dirac(1.0, "positive"), nu).measure, nu)


def test_non_associative_and_non_commutative_witnesses():
    d2, d3 = dirac(2.0, "positive"), dirac(3.0, "positive")
    half = make_atomic("positive", [(0, .5), (1, .5)])
    alt = conv.mono_mult_alt
    left = alt(alt(d2, d3), half).measure
    right = alt(d2, alt(d3, half)).measure
    assert _same(left, make_atomic("positive", [(0, .5), (3.5, .5)]))
    assert _same(right, make_atomic("positive", [(0, .5), (3, .5)]))
    m1 = conv.mono_add(dirac(1.0), bernoulli(0.5)).measure
    m2 = conv.mono_add(bernoulli(0.5), dirac(1.0)).measure
    assert np.allclose(m2.x, [0, 2])
    assert np.allclose(m1.x, [1 - PHI, PHI])


def test_transform_level_mult_needs_W():
    bare = TransformHandle(Domain.POSITIVE, G=handle_of(dirac(2.0, "positive")).G)
    with pytest.raises(DomainError):
        conv.mono_mult_alt(dirac(1.0, "positive"), bare)


def test_bercovici_dirac_product():
    res = conv.bool_mult_bercovici_pos(dirac(2.0, "positive"), dirac(3.0, "positive"))
    assert res.defined
    assert _gap("G", res.handle, dirac(6.0, "positive"), Z) < 1e-12
    nu = make_atomic("positive", [(0.5, .3), (2, .7)])
    res = conv.bool_mult_bercovici_pos(dirac(1.0, "positive"), nu)
    assert _gap("K", res.handle, nu, Z) < 1e-12


def test_bercovici_undefined_witness():
    mu = make_atomic("positive", [(1, .5), (2, .5)])
    res = conv.bool_mult_bercovici_pos(mu, mu)
    assert not res.defined
    z, v = res.witness
    assert z.imag > 0 and v > 0
    assert str(res).startswith("undefined: class P violated")
    with pytest.raises(DomainError):
        conv.mono_add(res, mu)


def test_free_mult_pos_matches_s_transform():
    mu = make_atomic("positive", [(1, .5), (2, .5)])
    got = np.real(conv.free_mult_pos(mu, mu).handle.moments(4, radius=6.0))
    m = oracles.atomic_moments([1, 2], [.5, .5], 4)
    assert np.allclose(got, oracles.free_multiplicative_moments(m, m), atol=1e-8)


def test_free_mult_pos_dirac_is_dilation():
    nu = make_atomic("positive", [(0.5, .3), (2, .7)])
    res = conv.free_mult_pos(dirac(3.0, "positive"), nu)
    assert _gap("G", res.handle, make_atomic("positive", [(1.5, .3), (6, .7)]), Z) < 1e-10


# -- the circle ----------------------------------------------------------------------

def test_circle_mono_mult_rotation_and_haar():
    nu = make_atomic("circle", [(0.3, .4), (2.0, .6)])
    rot = conv.mono_mult_circle(nu, dirac(1.0, "circle")).measure
    assert _same(rot, make_atomic("circle", [(1.3, .4), (3.0, .6)]))
    assert _same(conv.mono_mult_circle(dirac(0.0, "circle"), nu).measure, nu)
    haar = conv.mono_mult_circle(haar_circle(), nu)
    assert np.allclose(haar.handle.moments(6), 0, atol=1e-14)


def test_circle_bool_mult():
    a, b = dirac(1.0, "circle"), dirac(2.5, "circle")
    assert _same(conv.bool_mult_circle(a, b).measure, dirac(3.5, "circle"))
    nu = make_atomic("circle", [(0.3, .4), (2.0, .6)])
    assert _same(conv.bool_mult_circle(dirac(0.0, "circle"), nu).measure, nu)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_circle_bool_mult_commutes(seed):
    rng = np.random.default_rng(seed)
    mu = random_atomic(rng, "circle", max_atoms=3, min_atoms=3)
    nu = random_atomic(rng, "circle", max_atoms=3, min_atoms=3)
    m1 = conv.first_moments(conv.bool_mult_circle(mu, nu), 8)
    m2 = conv.first_moments(conv.bool_mult_circle(nu, mu), 8)
    assert np.allclose(m1, m2, atol=1e-10)


def test_free_mult_circle():
    nu = make_atomic("circle", [(0.3, .4), (2.0, .6)])
    res = conv.free_mult_circle(dirac(1.0, "circle"), nu)
    assert _gap("K", res.handle, make_atomic("circle", [(1.3, .4), (3.0, .6)]), D) < 1e-10
    sym = make_atomic("circle", [(0.0, .5), (math.pi, .5)])
    with pytest.raises(PreconditionError):
        conv.free_mult_circle(sym, sym)


# -- errors --------------------------------------------------------------------------

def test_domain_mismatch():
    with pytest.raises(DomainError):
        conv.mono_add(dirac(1.0), dirac(1.0, "positive"))
    with pytest.raises(DomainError):
        conv.mono_mult_pos(dirac(1.0), dirac(1.0))


def test_identity_residuals_for_every_operation():
    rng = np.random.default_rng(5)
    plan = (("mono_add", "real"), ("bool_add", "real"), ("mono_mult_pos", "positive"),
            ("mono_mult_alt", "positive"), ("bool_mult_new", "positive"),
            ("mono_mult_circle", "circle"), ("bool_mult_circle", "circle"))
    for op, dom in plan:
        mu, nu = random_atomic(rng, dom), random_atomic(rng, dom)
        res = conv.OPERATIONS[op](mu, nu)
        assert conv.identity_residual(res, mu, nu) < 1e-10, op
