"""Curvature frames, rate pairs, decay estimation, verdicts and transforms."""

import numpy as np
import pytest

from surro.descent import mirror_descent_problem, mirror_prox_problem, newton_problem
from surro.domains import AffineSlice, Box, FullSpace, Simplex
from surro.latent import GaussianLatentModel, em_population_problem
from surro.mirror_maps import NegEntropyMap, QuadraticMap
from surro.objectives import Quartic1D, QuadraticForm, ShiftedQuadratic
from surro.rates import (
    FDSpec,
    H4Violated,
    RatesError,
    SingularAcceleration,
    WindowTooShort,
    accelerate,
    alpha_transform,
    curvature_at,
    decay_estimate,
    default_floor,
    direction_basis,
    empirical_rate,
    mirror_prox_spectrum_map,
    optimal_alpha,
    reparam_invariance_check,
    theoretical_rates,
    verdicts,
)
from surro.linalg import RatePair
from surro.rng import CounterRNG
from surro.surrogate import StopRule, SurrogateProblem, Trace, StopReason, inner_minimize, iterate


def _gd(diag, eta, q=None):
    f = QuadraticForm(np.diag(diag))
    return mirror_descent_problem(f, QuadraticMap(len(diag)), eta, FullSpace(len(diag)))


def _synthetic_trace(ratio, n, direction, theta_star):
    pts = [theta_star + ratio**k * direction for k in range(n)]
    return Trace(
        iterates=pts,
        q_values=[0.0] * (n - 1),
        residuals=[float(np.linalg.norm(pts[k + 1] - pts[k])) for k in range(n - 1)],
        stop_reason=StopReason.MAX_ITERS,
    )


def test_direction_basis_variants():
    np.testing.assert_allclose(direction_basis(FullSpace(3), np.zeros(3)), np.eye(3))
    p = direction_basis(Simplex(2), np.array([0.5, 0.5]))
    assert abs(abs(p[0, 0]) - 1 / np.sqrt(2)) < 1e-12 and p[0, 0] == -p[1, 0]
    dom = AffineSlice([[1.0, 1.0, 1.0]], [1.0], Box([-2.0] * 3, [2.0] * 3))
    p = direction_basis(dom, np.array([1 / 3] * 3))
    np.testing.assert_allclose(np.array([[1.0, 1.0, 1.0]]) @ p, 0.0, atol=1e-12)


def test_direction_basis_rejects_points_outside():
    with pytest.raises(RatesError):
        direction_basis(Simplex(2), np.array([0.9, 0.9]))


def test_curvature_md_quadratic_analytic_and_fd_agree():
    prob = _gd([1.0, 4.0], 0.4)
    star = np.zeros(2)
    analytic = curvature_at(prob, star)
    fd = curvature_at(prob, star, prefer_analytic=False)
    np.testing.assert_allclose(analytic.a_tilde, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(analytic.b_tilde, np.diag([0.6, -0.6]), atol=1e-12)
    np.testing.assert_allclose(fd.a_tilde, analytic.a_tilde, atol=1e-5)
    np.testing.assert_allclose(fd.b_tilde, analytic.b_tilde, atol=1e-5)
    assert analytic.h4_pass


def test_curvature_reduced_on_simplex_problem():
    center = np.array([0.5, 0.3, 0.2])
    prob = mirror_descent_problem(ShiftedQuadratic(center), NegEntropyMap(3), 0.2, Simplex(3))
    frame = curvature_at(prob, center)
    assert frame.a_tilde.shape == (2, 2)
    p = frame.basis
    np.testing.assert_allclose(p.T @ p, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(p.T @ frame.a_star @ p, frame.a_tilde, atol=1e-10)
    np.testing.assert_allclose(p.T @ frame.b_star @ p, frame.b_tilde, atol=1e-10)
    # analytic reduction of the mirror Hessian
    expected = p.T @ np.diag(1.0 / center) @ p
    np.testing.assert_allclose(frame.a_tilde, expected, atol=1e-9)


def test_curvature_newton_and_population_em():
    frame = curvature_at(newton_problem(QuadraticForm(np.diag([2.0, 7.0]))), np.zeros(2))
    np.testing.assert_allclose(frame.a_tilde, np.eye(2), atol=1e-9)
    np.testing.assert_allclose(frame.b_tilde, 0.0, atol=1e-9)

    em = em_population_problem(GaussianLatentModel(1.0, 1.0, theta_star=1.0))
    fd = curvature_at(em, np.array([1.0]), prefer_analytic=False)
    assert fd.a_tilde[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert fd.b_tilde[0, 0] == pytest.approx(0.5, abs=1e-6)


def test_theoretical_rates_examples():
    prob = _gd([1.0, 4.0], 0.4)
    rates = theoretical_rates(curvature_at(prob, np.zeros(2)))
    assert rates == pytest.approx((0.6, 0.6))
    # the optimal step for spectrum {1, 4} equalizes the two edge multipliers
    eta_opt = 2.0 / (1.0 + 4.0)
    rates = theoretical_rates(curvature_at(_gd([1.0, 4.0], eta_opt), np.zeros(2)))
    assert rates == pytest.approx((0.6, 0.6))
    rates = theoretical_rates(curvature_at(newton_problem(Quartic1D()), np.zeros(1)))
    assert rates == pytest.approx((0.0, 0.0), abs=1e-9)


def test_theoretical_rates_h4_violation():
    frame = curvature_at(_gd([1.0, 4.0], 0.4), np.zeros(2))
    bad = type(frame)(
        a_star=-frame.a_star,
        b_star=frame.b_star,
        basis=frame.basis,
        a_tilde=-frame.a_tilde,
        b_tilde=frame.b_tilde,
        asymmetry_diag=0.0,
        h4_pass=False,
        point=frame.point,
    )
    with pytest.raises(H4Violated):
        theoretical_rates(bad)


def test_rate_definition_sampling_consistency():
    center = np.array([0.5, 0.3, 0.2])
    prob = mirror_descent_problem(ShiftedQuadratic(center), NegEntropyMap(3), 0.2, Simplex(3))
    frame = curvature_at(prob, center)
    rates = theoretical_rates(frame)
    rng = CounterRNG(70)
    v = rng.gaussian(100_000 * frame.d).reshape(100_000, frame.d)
    num = np.abs(np.einsum("ij,jk,ik->i", v, frame.b_tilde, v))
    den = np.einsum("ij,jk,ik->i", v, frame.a_tilde, v)
    ratios = num / den
    assert np.max(ratios) <= rates.rho_sup * (1 + 1e-9)
    assert rates.rho_sup - np.max(ratios) <= 1e-2 * (1 + rates.rho_sup)
    assert rates.rho_inf <= np.min(ratios) + 1e-9  # the reduced pencil is definite here


def test_empirical_rate_exact_geometric_inputs():
    star = np.zeros(2)
    direction = np.array([1.0, -1.0])
    trace = _synthetic_trace(0.6, 60, direction, star)
    slope, ratio = empirical_rate(trace, star)
    assert slope == pytest.approx(np.log(0.6), abs=1e-9)
    assert ratio == pytest.approx(0.6, abs=1e-12)


def test_empirical_rate_calibration_sweep():
    star = np.zeros(1)
    for r in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
        # size the trace so every point clears the floor even at r = 0.1
        n = min(240, int(16.0 / abs(np.log10(r))))
        trace = _synthetic_trace(r, max(n, 16), 1e4 * np.ones(1), star)
        slope, _ = empirical_rate(trace, star)
        assert abs(np.exp(slope) - r) <= 1e-6


def test_empirical_rate_gd_trace():
    prob = _gd([1.0, 4.0], 0.4)
    trace = iterate(prob, np.array([1.0, 1.0]))
    slope, ratio = empirical_rate(trace, np.zeros(2))
    assert np.exp(slope) == pytest.approx(0.6, abs=1e-3)
    assert ratio == pytest.approx(0.6, abs=1e-3)


def test_empirical_rate_window_too_short_for_newton():
    prob = newton_problem(Quartic1D())
    trace = iterate(prob, np.array([1.0]))
    with pytest.raises(WindowTooShort):
        empirical_rate(trace, np.zeros(1))
    est = decay_estimate(trace.errors(np.zeros(1)), default_floor(np.zeros(1)))
    assert est.superlinear
    assert est.rate < 0.05


def test_verdicts_gradient_descent_exact_regime():
    prob = _gd([1.0, 1.5], 0.4)
    trace = iterate(prob, np.array([1.0, 1.0]))
    frame = curvature_at(prob, np.zeros(2))
    rep = verdicts(trace, np.zeros(2), frame, prob)
    assert rep.theory == pytest.approx((0.4, 0.6))
    assert rep.verdicts == {k: "pass" for k in ("upper", "lower", "exact", "q_gap")}
    assert abs(rep.empirical_rate - 0.6) <= 0.02


def test_verdicts_newton_superlinear_convention():
    prob = newton_problem(Quartic1D())
    trace = iterate(prob, np.array([1.0]))
    frame = curvature_at(prob, np.zeros(1))
    rep = verdicts(trace, np.zeros(1), frame, prob)
    assert rep.superlinear
    assert rep.verdicts["upper"] == "pass"
    assert rep.verdicts["exact"] == "pass"  # zero rate pair, applicable at 0 <= 0


def test_verdicts_population_em():
    em = em_population_problem(GaussianLatentModel(1.0, 1.0, theta_star=1.0))
    trace = iterate(em, np.array([2.0]))
    frame = curvature_at(em, np.array([1.0]))
    rep = verdicts(trace, np.array([1.0]), frame, em)
    assert all(v == "pass" for v in rep.verdicts.values())
    assert rep.empirical_rate == pytest.approx(0.5, abs=2e-3)


def test_verdicts_fail_when_theory_is_wrong():
    prob = _gd([1.0, 4.0], 0.4)
    trace = iterate(prob, np.array([1.0, 1.0]))
    frame = curvature_at(prob, np.zeros(2))
    rep = verdicts(trace, np.array([0.5, 0.0]), frame, prob)  # wrong fixed point
    assert rep.verdicts["upper"] == "fail"
    assert not rep.passed


def test_verdicts_boundary_point_marks_lower_inapplicable():
    prob = mirror_descent_problem(
        QuadraticForm(np.eye(1)), QuadraticMap(1), 0.5, Box([0.0], [2.0])
    )
    trace = iterate(prob, np.array([1.0]))
    frame = curvature_at(prob, np.zeros(1))
    rep = verdicts(trace, np.zeros(1), frame, prob)  # limit on the box boundary
    assert rep.verdicts["lower"] == "inapplicable"


def test_span_warning_on_concentrated_trace():
    star = np.zeros(2)
    trace = _synthetic_trace(0.6, 60, np.array([1.0, 0.0]), star)  # single direction
    prob = _gd([1.0, 4.0], 0.4)
    frame = curvature_at(prob, star)
    rep = verdicts(trace, star, frame, prob)
    assert rep.span_warning
    full = _synthetic_trace(0.6, 60, np.array([1.0, 1.0]), star)
    # two directional components decaying at one rate still span only a line
    assert verdicts(full, star, frame, prob).span_warning


def test_prox_spectrum_map_values():
    frame_half = curvature_at(_gd([1.0], 1.0), np.zeros(1))
    pred = mirror_prox_spectrum_map(
        curvature_at(_gd([0.5], 1.0), np.zeros(1))
    )  # descent multiplier 1/2
    assert pred.rates == pytest.approx((0.75, 0.75))
    assert pred.contraction

    prob = _gd([0.8, 0.4], 1.0)  # descent spectrum {0.2, 0.6}
    pred = mirror_prox_spectrum_map(curvature_at(prob, np.zeros(2)))
    assert pred.rates == pytest.approx((0.76, 0.84))
    assert pred.contraction

    prob = _gd([1.1, 0.4], 1.0)  # descent spectrum {-0.1, 0.6}
    pred = mirror_prox_spectrum_map(curvature_at(prob, np.zeros(2)))
    assert pred.rates.rho_sup == pytest.approx(1.11)
    assert not pred.contraction


def test_prox_rates_strictly_dominate_descent_rates():
    rng = CounterRNG(71)
    for _ in range(25):
        lam = 0.05 + 0.9 * rng.uniform(3)  # descent spectrum inside (0, 1)
        eta = 1.0
        prob = _gd(list(1.0 - lam), eta)
        frame = curvature_at(prob, np.zeros(3))
        base = theoretical_rates(frame)
        pred = mirror_prox_spectrum_map(frame)
        assert pred.rates.rho_sup > base.rho_sup
        assert pred.rates.rho_inf >= 0.75 - 1e-9


def test_alpha_transform_and_optimal_alpha():
    pair = RatePair(0.5, 0.5)
    assert alpha_transform(pair, 0.0) == pytest.approx(0.5)
    alpha, rho = optimal_alpha(pair)
    assert (alpha, rho) == pytest.approx((0.5, 0.0))

    pair = RatePair(0.3, 0.5)
    alpha, rho = optimal_alpha(pair)
    assert alpha == pytest.approx(0.4)
    assert rho == pytest.approx(0.2 / 1.2)
    # grid scan over the transform index confirms the analytic optimum
    grid = np.linspace(0.0, 0.49, 4_000)
    worst = [alpha_transform(pair, a) for a in grid]
    best_idx = int(np.argmin(worst))
    assert grid[best_idx] == pytest.approx(alpha, abs=1e-3)
    assert worst[best_idx] == pytest.approx(rho, abs=1e-3)
    with pytest.raises(RatesError):
        alpha_transform(pair, 1.0)


def test_accelerate_exact_on_affine_iterations():
    # the EM map is affine, so one extrapolation recovers its fixed point
    em = em_population_problem(GaussianLatentModel(1.0, 1.0, theta_star=1.0))
    theta_n = np.array([1.1])
    theta_n1 = inner_minimize(em, theta_n)
    acc = accelerate(theta_n, theta_n1, curvature_at(em, theta_n))
    assert abs(acc[0] - 1.0) <= 1e-12
    assert abs(theta_n1[0] - 1.0) == pytest.approx(0.05)


def test_accelerate_is_newton_on_quadratics():
    prob = _gd([1.0, 4.0], 0.4)
    theta0 = np.array([1.0, 1.0])
    theta1 = inner_minimize(prob, theta0)
    acc = accelerate(theta0, theta1, curvature_at(prob, theta0))
    assert np.linalg.norm(acc) <= 1e-12


def test_accelerate_singular_map():
    em = em_population_problem(GaussianLatentModel(1.0, 1.0, theta_star=0.0))
    frame = curvature_at(em, np.zeros(1))
    degenerate = type(frame)(
        a_star=frame.a_star,
        b_star=frame.a_star,  # B = A makes I - A^{-1}B singular
        basis=frame.basis,
        a_tilde=frame.a_tilde,
        b_tilde=frame.a_tilde,
        asymmetry_diag=0.0,
        h4_pass=False,
        point=frame.point,
    )
    with pytest.raises(SingularAcceleration):
        accelerate(np.zeros(1), np.ones(1), degenerate)


def test_reparam_identity_map_is_exactly_invariant():
    em = em_population_problem(GaussianLatentModel(1.0, 1.0, theta_star=1.0))
    base, pulled = reparam_invariance_check(
        em,
        np.array([1.0]),
        psi=lambda t: np.asarray(t, dtype=float),
        psi_inv=lambda t: np.asarray(t, dtype=float),
        dpsi=lambda t: np.eye(1),
    )
    assert base == pytest.approx(pulled, abs=1e-12)


def test_reparam_interior_invariance_quadratic_warp():
    em = em_population_problem(GaussianLatentModel(1.0, 1.0, theta_star=1.0))
    base, pulled = reparam_invariance_check(
        em,
        np.array([1.0]),
        psi=lambda t: t + 0.1 * t * t,
        psi_inv=lambda t: (-1.0 + np.sqrt(1.0 + 0.4 * np.asarray(t))) / 0.2,
        dpsi=lambda t: np.diag(1.0 + 0.2 * np.atleast_1d(t)),
    )
    assert abs(base.rho_sup - pulled.rho_sup) <= 1e-5
    assert abs(base.rho_inf - pulled.rho_inf) <= 1e-5


def test_fd_spec_validation():
    with pytest.raises(ValueError):
        FDSpec(step=0.0)
    coarse = curvature_at(
        _gd([1.0, 4.0], 0.4), np.zeros(2), FDSpec(step=1e-3, richardson=False),
        prefer_analytic=False,
    )
    np.testing.assert_allclose(coarse.b_tilde, np.diag([0.6, -0.6]), atol=1e-6)
