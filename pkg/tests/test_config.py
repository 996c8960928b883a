"""Config schema: fail-closed validation and problem assembly."""

import numpy as np
import pytest

from surro.config import ConfigInvalid, assemble, validate, validate_sweep
from surro.domains import Simplex


def _base(algorithm, **extra):
    cfg = {"name": "t", "algorithm": algorithm}
    cfg.update(extra)
    return cfg


GD = dict(
    objective={"type": "quadratic_form", "h": [[1.0, 0.0], [0.0, 4.0]]},
    eta=0.4,
    theta0=[1.0, 1.0],
    theta_star=[0.0, 0.0],
)


def test_missing_required_fields_are_named():
    with pytest.raises(ConfigInvalid, match="mirror_descent requires field eta"):
        validate(
            _base(
                "mirror_descent",
                objective={"type": "quartic_1d"},
                mirror_map={"type": "quadratic"},
                domain={"type": "full_space", "q": 1},
            )
        )
    with pytest.raises(ConfigInvalid, match="em_sample requires field data"):
        validate(
            _base(
                "em_sample",
                latent_model={
                    "type": "gaussian_latent",
                    "sigma_x2": 1.0,
                    "sigma_y2": 1.0,
                    "theta_star": 0.0,
                },
            )
        )


def test_unknown_fields_rejected_everywhere():
    cfg = _base("gradient_descent", **GD)
    cfg["extra_knob"] = 1
    with pytest.raises(ConfigInvalid, match="unknown field 'extra_knob'"):
        validate(cfg)
    cfg = _base("gradient_descent", **GD)
    cfg["stop"] = {"max_iters": 10, "typo": 1}
    with pytest.raises(ConfigInvalid, match="unknown field 'typo'"):
        validate(cfg)
    cfg = _base("gradient_descent", **dict(GD, objective={"type": "quartic_1d", "junk": 2}))
    with pytest.raises(ConfigInvalid, match="unknown field 'junk'"):
        assemble(cfg)


def test_unknown_algorithm_rejected():
    with pytest.raises(ConfigInvalid, match="unknown algorithm"):
        validate(_base("simulated_annealing"))


def test_assemble_gradient_descent_round_trip():
    asm = assemble(_base("gradient_descent", **GD))
    assert asm.problem.q == 2
    np.testing.assert_allclose(asm.theta0, [1.0, 1.0])
    np.testing.assert_allclose(asm.theta_star, [0.0, 0.0])
    assert asm.stop.max_iters == 10_000
    step = asm.problem.closed_form_step(np.array([1.0, 1.0]))
    np.testing.assert_allclose(step, [0.6, -0.6])


def test_assemble_random_theta0_is_deterministic_and_feasible():
    cfg = _base(
        "mirror_descent",
        objective={"type": "shifted_quadratic", "target": [0.5, 0.3, 0.2]},
        mirror_map={"type": "neg_entropy"},
        eta=0.2,
        domain={"type": "simplex", "q": 3},
        theta0="random",
        seed=11,
    )
    a = assemble(cfg)
    b = assemble(cfg)
    np.testing.assert_array_equal(a.theta0, b.theta0)
    assert Simplex(3).contains(a.theta0, tol=1e-9)
    cfg["theta0"] = "random(99)"
    c = assemble(cfg)
    assert not np.array_equal(a.theta0, c.theta0)


def test_assemble_em_sample_with_drawn_data():
    cfg = _base(
        "em_sample",
        latent_model={
            "type": "gaussian_latent",
            "sigma_x2": 1.0,
            "sigma_y2": 1.0,
            "theta_star": 1.0,
        },
        data={"k": 25, "seed": 3},
        theta0=[0.0],
    )
    asm = assemble(cfg)
    assert "k=25" in asm.problem.label
    again = assemble(cfg)
    # identical draw both times
    assert asm.problem.eval_q(np.zeros(1), np.ones(1)) == again.problem.eval_q(
        np.zeros(1), np.ones(1)
    )


def test_assemble_alpha_em_requires_data_in_sample_mode():
    cfg = _base(
        "alpha_em",
        latent_model={
            "type": "gaussian_latent",
            "sigma_x2": 1.0,
            "sigma_y2": 1.0,
            "theta_star": 1.0,
        },
        alpha=0.25,
        mode="sample",
    )
    with pytest.raises(ConfigInvalid, match="alpha_em requires field data"):
        assemble(cfg)


def test_theta_star_auto_and_bad_strings():
    cfg = _base("gradient_descent", **dict(GD, theta_star="auto"))
    assert assemble(cfg).theta_star is None
    with pytest.raises(ConfigInvalid, match="theta_star"):
        assemble(_base("gradient_descent", **dict(GD, theta_star="guess")))
    with pytest.raises(ConfigInvalid, match="theta0"):
        assemble(_base("gradient_descent", **dict(GD, theta0="sometimes")))


def test_sweep_validation():
    good = {"name": "s", "model": {"type": "mixture", "theta_star": 1.0},
            "ks": [10, 20], "seeds": [0]}
    validate_sweep(good)
    with pytest.raises(ConfigInvalid, match="seeds must be a nonempty list"):
        validate_sweep(dict(good, seeds=[]))
    with pytest.raises(ConfigInvalid, match="ks must be ascending"):
        validate_sweep(dict(good, ks=[20, 10]))
    with pytest.raises(ConfigInvalid, match="unknown field"):
        validate_sweep(dict(good, typo=1))
