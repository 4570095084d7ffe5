import math

import numpy as np
import pytest
from scipy.integrate import quad

from oracles import heat_gramian, ml_series, zone_coefficients

from fradic.controllability import (
    GRAMIAN_DIAGNOSTIC,
    GramianIntegrabilityError,
    build_Gj,
    build_gramian,
    mode_kernel_matrix,
    strategic_test,
)
from fradic.dynamics import FractionalSystem
from fradic.spectral import (
    Actuator,
    Region,
    dirichlet_laplacian_basis,
    periodic_laplacian_basis,
)


def failing(rep):
    return [j for j, _, _ in rep.failures]


def test_build_Gj_shapes():
    acts = [Actuator.zone(0.1, 0.4), Actuator.pointwise(0.3)]
    G = build_Gj(acts, periodic_laplacian_basis(3), 2)
    assert G.shape == (2, 2)
    G = build_Gj(acts, dirichlet_laplacian_basis(5), 3)
    np.testing.assert_allclose(G[:, 0], [zone_coefficients(0.1, 0.4, 3)[2],
                                         math.sqrt(2) * math.sin(0.9 * math.pi)])
    with pytest.raises(ValueError):
        build_Gj(acts, dirichlet_laplacian_basis(5), 6)


def test_irrational_zone_is_strategic():
    rep = strategic_test([Actuator.zone(0.0, 0.70710678118654757)], dirichlet_laplacian_basis(32))
    assert rep.strategic and rep.failures == [] and rep.reason == ""
    assert "strategic" in rep.summary()


@pytest.mark.parametrize("zone, dead", [((0.0, 0.3), [20]),
                                        ((0.25, 0.75), list(range(2, 33, 2))),
                                        ((0.0, 0.5), [4, 8, 12, 16, 20, 24, 28, 32])])
def test_rational_zones_fail_on_exact_modes(zone, dead):
    rep = strategic_test([Actuator.zone(*zone)], dirichlet_laplacian_basis(32))
    assert not rep.strategic and rep.certified
    assert failing(rep) == dead and rep.reason == "rank"
    assert all(rk == 0 and r == 1 for _, rk, r in rep.failures)
    assert "mode %d: rank G_j = 0 < r_j = 1" % dead[0] in rep.summary()


def test_truncated_check():
    rep = strategic_test([Actuator.zone(0.0, 0.5)], dirichlet_laplacian_basis(16), N=7)
    assert failing(rep) == [4] and rep.N == 7
    with pytest.raises(ValueError):
        strategic_test([Actuator.zone(0.0, 0.5)], dirichlet_laplacian_basis(4), N=5)
    with pytest.raises(ValueError):
        strategic_test([], dirichlet_laplacian_basis(4))


def test_second_actuator_repairs_dead_modes():
    acts = [Actuator.zone(0.0, 0.5), Actuator.pointwise(0.18169011381620932)]
    assert strategic_test(acts, dirichlet_laplacian_basis(32)).strategic


def test_scale_does_not_change_verdict():
    basis = dirichlet_laplacian_basis(16)
    for scale in (1e-6, 1.0, 1e6):
        rep = strategic_test([Actuator.zone(0.0, 0.5, scale=scale)], basis)
        assert failing(rep) == [4, 8, 12, 16]
        rep = strategic_test([Actuator.zone(0.0, 0.7071067811865476, scale=scale)], basis)
        assert rep.strategic


def test_periodic_needs_two_actuators():
    basis = periodic_laplacian_basis(8)
    rep = strategic_test([Actuator.zone(0.1, 0.35)], basis)
    assert not rep.strategic and rep.reason == "p<r" and rep.r_max == 2
    assert not rep.certified
    two = [Actuator.pointwise(0.1), Actuator.pointwise(0.1 + 1 / math.sqrt(8))]
    assert strategic_test(two, basis).strategic
    # points half a period apart give rows equal up to (-1)**j, so every mode collapses
    twin = [Actuator.pointwise(0.1), Actuator.pointwise(0.6)]
    rep = strategic_test(twin, basis)
    assert not rep.strategic and failing(rep) == list(range(1, 9))
    assert all(rk == 1 and r == 2 for _, rk, r in rep.failures)


def test_region_skips_modes_without_mass():
    # custom basis: mode 2 lives on [0.5, 1] only
    def eigfun(x):
        x = np.asarray(x, float)
        return np.vstack([np.ones_like(x), np.where(x > 0.5, math.sqrt(2), 0.0)])

    from fradic.spectral import SpectralBasis
    basis = SpectralBasis(np.array([1.0, 2.0]), np.array([1, 1]), eigfun, (0.0, 1.0))
    acts = [Actuator.zone(0.0, 0.25)]
    assert failing(strategic_test(acts, basis)) == [2]
    assert strategic_test(acts, basis, region=Region(0.0, 0.4)).strategic


def half_zone(alpha=0.75, N=8, b=1.0):
    return FractionalSystem(alpha, b, dirichlet_laplacian_basis(N), [Actuator.zone(0.0, 0.5)])


def test_gramian_symmetric_and_verdicts():
    sys = half_zone(N=16)
    whole = build_gramian(sys, Region(0.0, 1.0))
    np.testing.assert_array_equal(whole.W, whole.W.T)
    assert not whole.positive_definite and whole.n_omega == 16
    assert whole.min_eigenvalue < whole.tau_pd
    reg = build_gramian(sys, Region(0.25, 0.75))
    assert reg.positive_definite and reg.n_omega == 8
    assert math.isfinite(reg.condition_number) and reg.condition_number > 1
    assert np.all(np.diff(reg.eigenvalues) >= 0)


def test_whole_domain_sine_gramian_is_the_mode_kernel():
    sys = half_zone()
    rep = build_gramian(sys, Region(0.0, 1.0))
    np.testing.assert_allclose(rep.W, rep.K, atol=1e-13 * np.abs(rep.K).max())


def test_heat_gramian_closed_form():
    N, b = 6, 0.4
    sys = FractionalSystem(1.0, b, dirichlet_laplacian_basis(N), [Actuator.zone(0.1, 0.45)])
    lam = (np.arange(1, N + 1) * np.pi) ** 2
    ref = heat_gramian(zone_coefficients(0.1, 0.45, N), lam, b)
    np.testing.assert_allclose(mode_kernel_matrix(sys), ref, rtol=1e-12, atol=1e-17)


@pytest.mark.parametrize("alpha", [0.6, 0.8])
def test_mode_kernel_against_independent_quadrature(alpha):
    # w = s**(2 alpha - 1) absorbs the weight: int_0^b s**(2a-2) f ds = int f dw / (2a-1)
    b, N = 0.5, 2
    sys = FractionalSystem(alpha, b, dirichlet_laplacian_basis(N), [Actuator.zone(0.13, 0.61)])
    lam = (np.arange(1, N + 1) * np.pi) ** 2
    beta = zone_coefficients(0.13, 0.61, N)
    q = 2 * alpha - 1

    def E(i, w):
        s = w ** (1 / q)
        return ml_series(-lam[i] * s**alpha, alpha, alpha)

    ref = np.empty((N, N))
    for i in range(N):
        for l in range(i, N):
            v = quad(lambda w: E(i, w) * E(l, w), 0.0, b**q, epsabs=0, epsrel=1e-11)[0]
            ref[i, l] = ref[l, i] = beta[i] * beta[l] * v / q
    np.testing.assert_allclose(mode_kernel_matrix(sys), ref, rtol=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 0.3, 0.1])
def test_non_integrable_order_refused(alpha):
    sys = half_zone(alpha=alpha)
    with pytest.raises(GramianIntegrabilityError, match="non-integrable") as exc:
        build_gramian(sys, Region(0.25, 0.75))
    assert GRAMIAN_DIAGNOSTIC in str(exc.value) and exc.value.alpha == alpha
    with pytest.raises(ValueError):
        mode_kernel_matrix(sys)
    # the strategic test does not need the Gramian
    assert not strategic_test(sys.actuators, sys.basis).strategic


def test_restricted_omega_basis():
    sys = half_zone(N=8)
    rep = build_gramian(sys, Region(0.25, 0.75), omega_kind="restricted")
    assert rep.n_omega == 8 and rep.omega_kind == "restricted"
    np.testing.assert_allclose(rep.W, rep.omega.R @ rep.K @ rep.omega.R.T, rtol=1e-12,
                               atol=1e-18)
    assert build_gramian(sys, Region(0.25, 0.75), n_omega=3).n_omega == 3
