"""Tests for the closed-form reduced-energy minimization.

Expected minima were computed independently with mpmath (50 digits,
mpmath.lambertw branch -1) from the displayed formulas and frozen here;
the grid scan provides a second, formula-free route to the same values.
"""

import math
import warnings

import numpy as np
import pytest

from skyrm.reduced import (
    LAMBDA_C,
    ExpansionTerms,
    ReducedPoint,
    delta_gap,
    domain_floor,
    g,
    g_bar,
    k_star,
    minimal_energy_expansion,
    optimal_angles,
    reduced_energy,
    reduced_minimize,
    reduced_scan,
    stability_envelope,
)
from skyrm.specfun import Branch, lambert_w

K_STAR = 2.1444589403192003  # mpmath: 16 pi / exp(2 (1 + euler))
GBAR_AT_CRITICAL = 8.0524262859600286  # mpmath: 16 pi^3 / (32 + 3 pi^2)

# mpmath lambertw route, 50 digits: (sigma, lam) -> minimal energy at K*
MINIMA = {
    (1e-2, 0.0): -0.07692717230074333,
    (1e-2, 0.3): -0.10366915824310104,
    (1e-2, LAMBDA_C): -0.36611653900098571,
    (1e-2, 0.8): -2.2070702962890951,
    (1e-2, 1.0): -4.2616015684916128,
    (1e-3, 0.0): -0.089704927610590427,
    (1e-3, 0.3): -0.12035518629484326,
    (1e-3, LAMBDA_C): -0.41636506818513346,
    (1e-3, 0.8): -2.4209221936811486,
    (1e-3, 1.0): -4.6011558182204194,
}


def test_lambda_c_value():
    assert math.isclose(LAMBDA_C, 3 * math.pi**2 / (32 + 3 * math.pi**2), rel_tol=1e-15)
    assert math.isclose(LAMBDA_C, 0.48059379273511892, rel_tol=1e-14)


def test_g_bar_endpoints():
    assert math.isclose(g_bar(0.0), math.pi**3 / 8, rel_tol=1e-15)
    assert math.isclose(g_bar(1.0), 8 * math.pi, rel_tol=1e-15)
    # the upper branch at lam=1 collapses algebraically to 8 pi
    upper = (8 + math.pi**2 / 4) * math.pi - math.pi**3 / 4
    assert math.isclose(upper, 8 * math.pi, rel_tol=1e-14)


def test_g_bar_branch_continuity():
    lower = (
        128 * LAMBDA_C**2 / (3 * math.pi * (1 - LAMBDA_C))
        + math.pi**3 / 8 * (1 - LAMBDA_C)
    )
    upper = (8 + math.pi**2 / 4) * math.pi * LAMBDA_C - math.pi**3 / 4
    assert abs(lower - upper) <= 1e-12
    assert math.isclose(g_bar(LAMBDA_C), GBAR_AT_CRITICAL, rel_tol=1e-13)
    # approach from both sides
    eps = 1e-13
    assert abs(g_bar(LAMBDA_C * (1 - eps)) - g_bar(LAMBDA_C * (1 + eps))) <= 1e-11


def test_g_bar_rejects_out_of_range():
    with pytest.raises(ValueError, match="lam"):
        g_bar(-0.01)
    with pytest.raises(ValueError, match="lam"):
        g_bar(1.01)


def test_g_bar_bounded():
    lams = np.linspace(0.0, 1.0, 501)
    vals = np.array([g_bar(l) for l in lams])
    assert np.all(vals >= 1 / 30.0)
    assert np.all(vals <= 30.0)


def test_g_spot_values():
    assert math.isclose(g(1.0, 0.0), 8 * math.pi, rel_tol=1e-15)
    assert math.isclose(g(0.0, math.pi / 2), math.pi**3 / 8, rel_tol=1e-13)
    assert math.isclose(g(0.0, 0.0), -math.pi**3 / 4, rel_tol=1e-15)


def test_g_attains_g_bar_at_optimal_angles():
    lams = list(np.linspace(0.0, 1.0, 50)) + [0.2, 0.7, LAMBDA_C]
    for lam in lams:
        gb = g_bar(lam)
        plus, minus = optimal_angles(lam)
        assert abs(g(lam, plus) - gb) <= 1e-12
        assert abs(g(lam, minus) - gb) <= 1e-12


def test_optimal_angles():
    assert optimal_angles(0.0) == (math.pi / 2, -math.pi / 2)
    assert optimal_angles(LAMBDA_C) == (0.0, 0.0)
    assert optimal_angles(1.0) == (0.0, 0.0)
    # continuous approach to zero from below the threshold
    assert optimal_angles(LAMBDA_C * (1 - 1e-9))[0] < 1e-3
    # decreasing and within [0, pi/2] on the tilted branch
    lams = np.linspace(0.0, LAMBDA_C, 200, endpoint=False)
    angles = np.array([optimal_angles(l)[0] for l in lams])
    assert np.all(angles >= 0.0) and np.all(angles <= math.pi / 2)
    assert np.all(np.diff(angles) < 0.0)


def test_delta_gap_matches_difference():
    lams = np.linspace(0.0, 1.0, 200)
    thetas = np.linspace(-math.pi, math.pi, 200, endpoint=False)
    for lam in lams:
        direct = g_bar(lam) - g(lam, thetas)
        squared = delta_gap(lam, thetas)
        assert np.max(np.abs(direct - squared)) <= 1e-12
        assert np.min(squared) >= -1e-15
        # vanishes only near the optimal angles
        plus, minus = optimal_angles(lam)
        far = (np.abs(thetas - plus) > 0.05) & (np.abs(thetas - minus) > 0.05)
        assert np.min(squared[far]) > 1e-10


def test_k_star():
    assert math.isclose(k_star(), K_STAR, rel_tol=1e-15)
    gamma = 0.5772156649015329
    assert math.isclose(k_star() * math.exp(2 * (1 + gamma)), 16 * math.pi, rel_tol=1e-12)


def test_reduced_point_validation():
    with pytest.raises(ValueError, match="rho_tilde"):
        ReducedPoint(0.0, 0.0, 10.0)
    with pytest.raises(ValueError, match="rho_tilde"):
        ReducedPoint(-1.0, 0.0, 10.0)
    with pytest.raises(ValueError):
        ReducedPoint(1.0, math.nan, 10.0)
    assert ReducedPoint(1.0, math.pi, 10.0).theta == -math.pi
    assert ReducedPoint(1.0, 2 * math.pi, 10.0).theta == pytest.approx(0.0, abs=1e-15)


def test_reduced_energy_formula():
    sigma, lam, K = 1e-2, 0.6, K_STAR
    pt = ReducedPoint(0.3, 0.4, 500.0)
    logs = abs(math.log(sigma))
    by_hand = (
        logs / (sigma * 500.0) ** 2
        + 4 * math.pi * math.log(K * 500.0**2) * 0.3**2 / logs
        - g(lam, pt.theta) * 0.3
    )
    assert math.isclose(reduced_energy(pt, sigma, lam, K), by_hand, rel_tol=1e-15)


def test_reduced_energy_domain_checks():
    floor = domain_floor(1e-2)
    with pytest.raises(ValueError, match="floor"):
        reduced_energy(ReducedPoint(0.3, 0.0, 0.99 * floor), 1e-2, 0.5, K_STAR)
    # on the floor is admissible
    reduced_energy(ReducedPoint(0.3, 0.0, floor), 1e-2, 0.5, K_STAR)
    with pytest.raises(ValueError, match="sigma"):
        reduced_energy(ReducedPoint(0.3, 0.0, 100.0), 0.0, 0.5, K_STAR)
    # a large sigma admits cutoffs with K L^2 <= 1; the log must refuse
    with pytest.raises(ValueError, match="log"):
        reduced_energy(ReducedPoint(0.3, 0.0, domain_floor(0.9)), 0.9, 0.5, 2.0)


def test_reduced_energy_k_band_warning():
    pt = ReducedPoint(0.3, 0.0, 500.0)
    with pytest.warns(UserWarning, match="K"):
        reduced_energy(pt, 1e-2, 0.5, K_STAR / 8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        reduced_energy(pt, 1e-2, 0.5, K_STAR)


def test_reduced_energy_blows_up_at_domain_floor():
    sigma, lam, K = 1e-3, 1.0, K_STAR
    floor = domain_floor(sigma)
    vals = [
        reduced_energy(ReducedPoint(0.4, 0.0, f * floor), sigma, lam, K)
        for f in (1.0, 1.05, 1.3, 4.0)
    ]
    assert vals[0] > vals[1] > vals[2] > vals[3]
    # dominated by the cutoff cost 16 pi |log sigma| ~ 347 at the floor
    assert vals[0] > 0.9 * 16 * math.pi * abs(math.log(sigma))


def test_rho_stationarity():
    rng = np.random.default_rng(11)
    for _ in range(8):
        sigma = 10.0 ** rng.uniform(-4, -1.5)
        lam = rng.uniform(0.0, 1.0)
        K = K_STAR
        gb = g_bar(lam)
        logs = abs(math.log(sigma))
        Lt = domain_floor(sigma) * rng.uniform(2.0, 50.0)
        rho_star = gb * logs / (8 * math.pi * math.log(K * Lt**2))
        theta = optimal_angles(lam)[0]
        analytic = 8 * math.pi * math.log(K * Lt**2) * rho_star / logs - gb
        assert abs(analytic) <= 1e-10
        h = 1e-6 * rho_star
        ep = reduced_energy(ReducedPoint(rho_star + h, theta, Lt), sigma, lam, K)
        em = reduced_energy(ReducedPoint(rho_star - h, theta, Lt), sigma, lam, K)
        assert abs((ep - em) / (2 * h)) <= 1e-6 * gb


def test_completed_square_representation():
    # energy == cutoff cost - g_bar^2 |log s| / (16 pi log(K L^2))
    #           + gap * rho + quadratic in (rho - rho_star(L))
    rng = np.random.default_rng(23)
    for _ in range(50):
        sigma = 10.0 ** rng.uniform(-4, math.log10(0.04))
        lam = rng.uniform(0.0, 1.0)
        K = K_STAR
        gb = g_bar(lam)
        logs = abs(math.log(sigma))
        Lt = domain_floor(sigma) * rng.uniform(1.001, 100.0)
        rho = rng.uniform(1e-3, gb / (4 * math.pi))
        theta = rng.uniform(-math.pi, math.pi)
        lhs = reduced_energy(ReducedPoint(rho, theta, Lt), sigma, lam, K)
        kl2 = math.log(K * Lt**2)
        rho_star = gb * logs / (8 * math.pi * kl2)
        rhs = (
            logs / (sigma * Lt) ** 2
            - gb**2 * logs / (16 * math.pi * kl2)
            + float(delta_gap(lam, theta)) * rho
            + 4 * math.pi * kl2 / logs * (rho - rho_star) ** 2
        )
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_minimize_matches_frozen_oracle():
    for (sigma, lam), want in MINIMA.items():
        got = reduced_minimize(sigma, lam, K_STAR).min_energy
        assert math.isclose(got, want, rel_tol=1e-13), (sigma, lam)


def test_minimize_internal_consistency():
    for sigma in (1e-2, 1e-3, 1e-4):
        for lam in (0.0, 0.25, LAMBDA_C, 0.7, 1.0):
            m = reduced_minimize(sigma, lam, K_STAR)
            assert m.theta0_minus == -m.theta0_plus
            assert 0.0 < m.t0 < 16 * math.pi * sigma**2 / K_STAR
            assert math.isclose(m.L0, 1 / math.sqrt(K_STAR * m.t0), rel_tol=1e-14)
            for th in (m.theta0_plus, m.theta0_minus):
                at_min = reduced_energy(
                    ReducedPoint(m.rho0, th, m.L0), sigma, lam, K_STAR
                )
                assert abs(at_min - m.min_energy) <= 1e-12
            # genuinely a local minimum against coordinate pokes
            for drho, dL in ((1.02, 1.0), (0.98, 1.0), (1.0, 1.05), (1.0, 0.95)):
                poked = reduced_energy(
                    ReducedPoint(m.rho0 * drho, m.theta0_plus, m.L0 * dL),
                    sigma, lam, K_STAR,
                )
                assert poked > m.min_energy


def test_lambert_residual():
    for sigma in (1e-2, 1e-3):
        for lam in (0.0, 0.3, LAMBDA_C, 0.8, 1.0):
            s_arg = -g_bar(lam) * sigma / (8 * math.sqrt(math.pi * K_STAR))
            w = lambert_w(Branch.MINUS_ONE, s_arg)
            assert abs(w * math.exp(w) - s_arg) <= 1e-13 * abs(s_arg)


def test_scan_agrees_with_closed_form():
    m = reduced_minimize(1e-3, 1.0, K_STAR)
    s = reduced_scan(1e-3, 1.0, K_STAR)
    assert abs(s.energy - m.min_energy) <= 1e-6 * abs(m.min_energy)
    assert abs(s.rho_tilde - m.rho0) <= 1e-5
    assert abs(s.L_tilde - m.L0) / m.L0 <= 1e-4
    assert abs(s.theta - m.theta0_plus) <= 1e-3
    assert s.L_tilde >= domain_floor(1e-3)
    assert s.rho_tilde > 0


def test_scan_finds_tilted_angle():
    # below the threshold the scan must land on one of the two angles
    lam = 0.2
    m = reduced_minimize(1e-2, lam, K_STAR)
    s = reduced_scan(1e-2, lam, K_STAR, n_rho=200, n_theta=64, n_L=200)
    assert m.theta0_plus > 0.5
    assert min(abs(s.theta - m.theta0_plus), abs(s.theta - m.theta0_minus)) <= 1e-2
    assert abs(s.energy - m.min_energy) <= 1e-5 * abs(m.min_energy)


def test_scan_scale_invariance():
    kw = dict(n_rho=120, n_theta=32, n_L=120, refinements=1)
    base = reduced_scan(1e-2, 0.5, K_STAR, **kw)
    scaled = reduced_scan(1e-2, 0.5, K_STAR, scale=7.25, **kw)
    assert scaled.rho_tilde == base.rho_tilde
    assert scaled.theta == base.theta
    assert scaled.L_tilde == base.L_tilde
    assert math.isclose(scaled.energy, 7.25 * base.energy, rel_tol=1e-12)


def test_principal_branch_solution_rejected():
    # the other stationary point of the cutoff problem sits outside the
    # admissible interval and near 1
    for sigma in (1e-2, 1e-3):
        for lam in (0.0, 1.0):
            s_arg = -g_bar(lam) * sigma / (8 * math.sqrt(math.pi * K_STAR))
            t_principal = math.exp(2 * lambert_w(Branch.PRINCIPAL, s_arg))
            bound = 16 * math.pi * sigma**2 / K_STAR
            assert t_principal > bound
            assert abs(t_principal - 1.0) <= 3 * abs(s_arg)


def test_branch_domain_error_names_sigma():
    with pytest.raises(ValueError, match="sigma"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            reduced_minimize(0.35, 1.0, K_STAR)
    # just inside the branch domain: works, but warns about sigma size
    with pytest.warns(UserWarning, match="sigma"):
        m = reduced_minimize(0.3, 1.0, K_STAR)
    assert m.min_energy < 0


def test_sigma_warning_gate():
    with pytest.warns(UserWarning, match="sigma"):
        reduced_minimize(0.06, 1.0, K_STAR)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        reduced_minimize(0.01, 1.0, K_STAR)


def test_expansion_terms():
    m = reduced_minimize(1e-6, 1.0, K_STAR)
    terms = m.expansion_terms
    assert isinstance(terms, ExpansionTerms)
    assert math.isclose(
        terms.total, minimal_energy_expansion(1e-6, 1.0, K_STAR), rel_tol=1e-14
    )
    assert math.isclose(terms.leading, -2 * math.pi, rel_tol=1e-14)
    assert terms.loglog > 0
    lam0 = reduced_minimize(1e-6, 0.0, K_STAR).expansion_terms
    assert math.isclose(lam0.leading, -math.pi**5 / 2048, rel_tol=1e-14)
    # quantitative gap bound at sigma = 1e-6
    logs = abs(math.log(1e-6))
    bound = 0.05 * (math.log(logs) ** 2 / logs**2) * g_bar(1.0) ** 2
    assert abs(terms.total - m.min_energy) <= bound


def test_expansion_gap_shrinks():
    rate_consts = []
    gaps = []
    for sigma in (1e-4, 1e-6, 1e-8):
        m = reduced_minimize(sigma, 1.0, K_STAR)
        gap = abs(m.expansion_terms.total - m.min_energy)
        logs = abs(math.log(sigma))
        rate_consts.append(gap / (math.log(logs) ** 2 / logs**2))
        gaps.append(gap)
    assert gaps[0] > gaps[1] > gaps[2]
    # measured fitted constants: 4.69, 4.88, 5.01
    assert max(rate_consts) < 6.0


def test_asymptotic_limits():
    for lam in (0.0, 1.0):
        gb = g_bar(lam)
        rho_devs, L_devs = [], []
        for sigma in (1e-4, 1e-6, 1e-8):
            m = reduced_minimize(sigma, lam, K_STAR)
            logs = abs(math.log(sigma))
            rho_devs.append(abs(m.rho0 - gb / (16 * math.pi)))
            L_devs.append(abs(sigma * m.L0 / logs - 8 * math.sqrt(math.pi) / gb))
        assert rho_devs[0] > rho_devs[1] > rho_devs[2]
        assert L_devs[0] > L_devs[1] > L_devs[2]
        # rate log|log s| / |log s| with a modest constant
        logs = abs(math.log(1e-8))
        rate = math.log(logs) / logs
        assert rho_devs[2] <= 0.5 * gb / (16 * math.pi) * rate * 4
        assert L_devs[2] <= 8 * math.sqrt(math.pi) / gb * rate * 4


def test_stability_envelope():
    sigma, lam = 1e-4, 1.0
    env = stability_envelope(sigma, lam, K_STAR)
    m = reduced_minimize(sigma, lam, K_STAR)
    assert env.count > 0
    assert env.rho_min <= m.rho0 <= env.rho_max
    assert env.L_min <= m.L0 <= env.L_max
    gb = g_bar(lam)
    logs = abs(math.log(sigma))
    dev = max(abs(env.rho_min - gb / (16 * math.pi)), abs(env.rho_max - gb / (16 * math.pi)))
    # measured 0.622 / sqrt(|log sigma|); assert with headroom
    assert dev <= 0.8 / math.sqrt(logs)
    assert env.L_min >= m.L0 / 8 and env.L_max <= 8 * m.L0
    assert env.theta_absmax <= 0.3


def test_stability_envelope_tightens():
    devs = []
    for sigma in (1e-3, 1e-4, 1e-5):
        env = stability_envelope(sigma, 1.0, K_STAR)
        lim = g_bar(1.0) / (16 * math.pi)
        devs.append(max(abs(env.rho_min - lim), abs(env.rho_max - lim)))
    assert devs[0] > devs[1] > devs[2]
