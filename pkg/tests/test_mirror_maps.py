"""Mirror maps, Bregman divergences and Bregman projections."""

import math

import numpy as np
import pytest

from surro import mirror_maps
from surro.domains import Box, EuclideanBall, Simplex
from surro.mirror_maps import BallMap, NegEntropyMap, QuadraticMap, bregman, bregman_project
from surro.rng import CounterRNG


def _fd_grad(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


ALL_MAPS = [
    (QuadraticMap(3), lambda rng: rng.gaussian(3)),
    (NegEntropyMap(3), lambda rng: 0.1 + rng.uniform(3)),
    (BallMap(3, r2=4.0), lambda rng: rng.gaussian(3) * 0.4),
]


@pytest.mark.parametrize("phi,draw", ALL_MAPS, ids=["quadratic", "entropy", "ball"])
def test_gradient_matches_finite_differences(phi, draw):
    rng = CounterRNG(10)
    for _ in range(20):
        x = draw(rng)
        approx = _fd_grad(phi.value, x)
        exact = phi.grad(x)
        np.testing.assert_allclose(exact, approx, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("phi,draw", ALL_MAPS, ids=["quadratic", "entropy", "ball"])
def test_hessian_positive_definite_at_interior_points(phi, draw):
    rng = CounterRNG(11)
    for _ in range(100):
        x = draw(rng)
        h = phi.hess(x)
        np.testing.assert_allclose(h, h.T, atol=1e-12)
        assert np.linalg.eigvalsh(h).min() > 0


def test_ball_map_gradient_diverges_at_boundary():
    phi = BallMap(2, r2=4.0)
    radius = phi.radius()
    x = np.array([radius - 1e-6 * phi.r2, 0.0])
    assert np.linalg.norm(phi.grad(x)) > 1e6


def test_ball_map_strong_convexity_constant():
    phi = BallMap(2, r2=4.0)
    dom = EuclideanBall(np.zeros(2), 1.0)
    gamma = phi.strong_convexity(dom)
    assert gamma == pytest.approx(0.5)
    rng = CounterRNG(12)
    for _ in range(50):
        x = rng.gaussian(2) * 0.5
        assert np.linalg.eigvalsh(phi.hess(x)).min() >= gamma - 1e-12


def test_bregman_quadratic_is_half_squared_distance():
    phi = QuadraticMap(2)
    val = bregman(phi, np.array([1.0, 0.0]), np.array([0.0, 0.0]))
    assert val == pytest.approx(0.5)


def test_bregman_at_equal_points_is_zero():
    rng = CounterRNG(13)
    for phi, draw in ALL_MAPS:
        x = draw(rng)
        assert bregman(phi, x, x) == pytest.approx(0.0, abs=1e-12)


def test_bregman_entropy_is_kl_on_simplex():
    phi = NegEntropyMap(2)
    # direct evaluation of the KL formula
    expected = 0.5 * math.log(0.5 / 0.25) + 0.5 * math.log(0.5 / 0.75)
    got = bregman(phi, np.array([0.5, 0.5]), np.array([0.25, 0.75]))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.14384, abs=1e-5)


def test_bregman_nonnegative_for_convex_maps():
    rng = CounterRNG(14)
    for phi, draw in ALL_MAPS:
        for _ in range(50):
            x, y = draw(rng), draw(rng)
            assert bregman(phi, x, y) >= -1e-12


def test_bregman_outside_domain_raises():
    phi = NegEntropyMap(2)
    with pytest.raises(mirror_maps.OutsideMirrorDomain):
        bregman(phi, np.array([-0.1, 0.5]), np.array([0.5, 0.5]))
    ball = BallMap(2, r2=1.0)
    with pytest.raises(mirror_maps.OutsideMirrorDomain):
        ball.grad(np.array([2.0, 0.0]))


def test_bregman_project_quadratic_clips_to_box():
    out = bregman_project(Box([0.0, 0.0], [1.0, 1.0]), QuadraticMap(2), np.array([2.0, 0.5]))
    np.testing.assert_allclose(out, [1.0, 0.5])


def test_bregman_project_feasible_point_is_fixed():
    dom = Box([0.0, 0.0], [1.0, 1.0])
    z = np.array([0.3, 0.7])
    np.testing.assert_allclose(bregman_project(dom, QuadraticMap(2), z), z)


def test_bregman_project_entropy_normalizes():
    out = bregman_project(Simplex(2), NegEntropyMap(2), np.array([0.2, 0.6]))
    np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-12)


def test_bregman_project_entropy_matches_grid_search():
    dom = Simplex(2)
    phi = NegEntropyMap(2)
    zeta = np.array([0.8, 0.1])
    out = bregman_project(dom, phi, zeta)
    xs = np.linspace(1e-6, 1 - 1e-6, 10_000)
    values = [bregman(phi, np.array([x, 1 - x]), zeta) for x in xs]
    best = xs[int(np.argmin(values))]
    assert abs(out[0] - best) <= 2e-4  # grid resolution


def test_bregman_project_ball_map_numeric():
    phi = BallMap(2, r2=4.0)
    dom = EuclideanBall(np.zeros(2), 1.0)
    zeta = np.array([1.5, 0.9])  # inside the map domain, outside the feasible ball
    out = bregman_project(dom, phi, zeta)
    assert dom.contains(out, tol=1e-9)
    # optimality among feasible candidates
    base = bregman(phi, out, zeta)
    rng = CounterRNG(15)
    for _ in range(300):
        y = dom.sample(rng)
        assert bregman(phi, y, zeta) >= base - 1e-8
