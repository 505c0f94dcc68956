import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncconv.errors import DomainError, NoSolutionError, PreconditionError
from ncconv.measures import bernoulli, dirac, make_atomic
from ncconv.operator_models import random_atomic
from ncconv.subordination import (decompose_free, deconvolution_handle, free_additive_handle,
                                  free_multiplicative_handle, hemigroup_residual,
                                  hemigroup_transfer, mono_deconvolve_left,
                                  solve_additive_subordination,
                                  solve_multiplicative_subordination)
from ncconv.transforms import handle_of, semicircle
from ncconv import convolutions as conv

import oracles

Z = conv.seeded_upper_points(20)
seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_additive_pair_satisfies_both_identities(seed):
    rng = np.random.default_rng(seed)
    mu, nu = random_atomic(rng, "real"), random_atomic(rng, "real")
    pair = solve_additive_subordination(mu, nu, Z)
    hm, hn = handle_of(mu), handle_of(nu)
    f1 = hm.F(pair.Z1)
    assert np.max(np.abs(f1 - hn.F(pair.Z2))) < 1e-10
    assert np.max(np.abs(f1 - (pair.Z1 + pair.Z2 - Z))) < 1e-10
    assert np.all(pair.Z1.imag >= Z.imag - 1e-12)
    assert np.all(pair.Z2.imag >= Z.imag - 1e-12)
    assert np.max(pair.residual) < 1e-10


def test_conjugate_symmetry_and_scalar_input():
    b = bernoulli(0.3, 2.0, -1.0)
    up = solve_additive_subordination(b, b, 0.5 + 1j)
    down = solve_additive_subordination(b, b, 0.5 - 1j)
    assert isinstance(up.Z1, complex)
    assert down.Z1 == pytest.approx(up.Z1.conjugate())
    with pytest.raises(DomainError):
        solve_additive_subordination(b, b, 1.0 + 0j)


def test_dirac_subordination_is_a_shift():
    a = 1.5
    nu = make_atomic("real", [(-1, .4), (2, .6)])
    pair = solve_additive_subordination(dirac(a), nu, Z)
    assert np.allclose(pair.Z2, Z - a, atol=1e-12)
    assert np.allclose(pair.Z1, handle_of(nu).F(Z - a) + a, atol=1e-12)


def test_semicircle_pair_is_symmetric():
    pair = solve_additive_subordination(semicircle(0, 1), semicircle(0, 1), Z)
    assert np.max(np.abs(pair.Z1 - pair.Z2)) < 1e-10
    assert np.allclose(semicircle(0, 1).F(pair.Z1), oracles.semicircle_F(Z, 2), atol=1e-10)


def test_free_additive_handle_caches():
    b = bernoulli(0.5)
    h = free_additive_handle(b, b)
    first = h.F(Z)
    assert len(h.subordination._memo) == len(Z)
    assert np.array_equal(h.F(Z), first)
    assert np.allclose(first, 1 / oracles.arcsine_G(Z), atol=1e-10)


def test_decomposition_of_bernoulli():
    b = bernoulli(0.5)
    z1, z2 = decompose_free(b, b)
    f = free_additive_handle(b, b).F(Z)
    hb = handle_of(b)
    assert np.max(np.abs(hb.F(z1.F(Z)) - f)) < 1e-10
    assert np.max(np.abs(z1.F(Z) + z2.F(Z) - Z - f)) < 1e-10


def test_multiplicative_half_line():
    mu = make_atomic("positive", [(1, .5), (2, .5)])
    z = np.array([-1 + 0.5j, 0.5 + 1j, -2 + 0j])
    pair = solve_multiplicative_subordination(mu, mu, z, "positive")
    hm = handle_of(mu)
    assert np.max(np.abs(hm.K(pair.Z1) - pair.Z1 * pair.Z2 / z)) < 1e-10
    assert np.max(np.abs(hm.K(pair.Z1) - hm.K(pair.Z2))) < 1e-10
    with pytest.raises(PreconditionError):
        solve_multiplicative_subordination(dirac(0.0, "positive"), mu, z, "positive")
    with pytest.raises(DomainError):
        solve_multiplicative_subordination(mu, mu, np.array([2.0 + 0j]), "positive")


def test_multiplicative_circle():
    mu = make_atomic("circle", [(0.2, .6), (1.5, .4)])
    nu = make_atomic("circle", [(0.5, .5), (3.0, .5)])
    z = conv.seeded_disk_points(20)
    pair = solve_multiplicative_subordination(mu, nu, z, "circle")
    assert np.all(np.abs(pair.Z1) < 1) and np.all(np.abs(pair.Z2) < 1)
    assert np.max(pair.residual) < 1e-10
    with pytest.raises(DomainError):
        solve_multiplicative_subordination(mu, nu, np.array([0.97 + 0j]), "circle")
    solve_multiplicative_subordination(mu, nu, np.array([0.97 + 0j]), "circle", max_iter=2000)
    rot = free_multiplicative_handle(dirac(1.0, "circle"), nu, "circle")
    want = handle_of(make_atomic("circle", [(1.5, .5), (4.0, .5)]))
    assert np.max(np.abs(rot.K(z) - want.K(z))) < 1e-10


def test_circle_precondition():
    sym = make_atomic("circle", [(0.0, .5), (np.pi, .5)])
    with pytest.raises(PreconditionError):
        free_multiplicative_handle(sym, sym, "circle")


def test_deconvolution_examples():
    mu = make_atomic("real", [(-1, .3), (1, .7)])
    assert np.allclose(mono_deconvolve_left(mu, mu, Z), Z, atol=1e-12)

    a = 0.75
    total = conv.mono_add(dirac(a), mu).measure
    w = mono_deconvolve_left(dirac(a), total, Z)
    assert np.allclose(w, handle_of(mu).F(Z), atol=1e-9)


def test_semicircle_deconvolution():
    # sc(0,1) |> zeta = sc(0,2) forces F_zeta = u + 1/u with u = F_sc(0,2)
    handle, report = deconvolution_handle(semicircle(0, 1), semicircle(0, 2), samples=100)
    assert report.passed
    u = oracles.semicircle_F(Z, 2)
    assert np.max(np.abs(handle.F(Z) - (u + 1 / u))) < 1e-9


def test_deconvolution_without_solution():
    with pytest.raises(NoSolutionError):
        mono_deconvolve_left(semicircle(0, 2), dirac(0.0), np.array([0.1 + 0.1j]))


def test_hemigroup_transfer():
    zeta = hemigroup_transfer([semicircle(0, t) for t in (0.5, 1.0, 2.0)])
    assert hemigroup_residual(zeta, Z) < 1e-7
    assert zeta[1][0] is None
    assert np.allclose(zeta[0][0].F(Z), Z)

    mu = make_atomic("real", [(-1, .5), (2, .5)])
    zeta = hemigroup_transfer([dirac(0.0), mu])
    assert np.allclose(zeta[0][1].F(Z), handle_of(mu).F(Z), atol=1e-10)
    zeta = hemigroup_transfer([mu, mu, mu])
    assert np.allclose(zeta[0][2].F(Z), Z, atol=1e-10)


def test_hemigroup_reports_failing_index():
    with pytest.raises(NoSolutionError, match=r"zeta\(0, 1\)"):
        hemigroup_transfer([semicircle(0, 2), dirac(0.0)], check_points=[0.1 + 0.1j])
