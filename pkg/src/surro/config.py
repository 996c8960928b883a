"""Experiment configuration: a fail-closed JSON schema and problem assembly.

Configs are single JSON objects.  Unknown fields are rejected everywhere (a
typo in a math-heavy config should be an error, not a silent default), and
algorithm-specific required fields are checked before any computation runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descent import mirror_descent_problem, mirror_prox_problem, newton_problem
from .domains import AffineSlice, Box, ConvexDomain, EuclideanBall, FullSpace, Simplex
from .latent import (
    GaussianLatentModel,
    TwoComponentMixture,
    alpha_em_problem,
    em_population_problem,
)
from .mirror_maps import BallMap, NegEntropyMap, QuadraticMap
from .objectives import Quartic1D, QuadraticForm, ShiftedQuadratic, SmoothLogSumExp
from .rates import FDSpec
from .rng import CounterRNG
from .surrogate import StopRule, SurrogateProblem

ALGORITHMS = (
    "gradient_descent",
    "mirror_descent",
    "mirror_prox",
    "em_population",
    "em_sample",
    "alpha_em",
    "newton",
)

_COMMON_FIELDS = {"name", "algorithm", "seed", "theta0", "theta_star", "stop", "fd"}
_ALGO_FIELDS: dict[str, tuple[set[str], set[str]]] = {
    "gradient_descent": ({"objective", "eta"}, {"domain"}),
    "mirror_descent": ({"objective", "mirror_map", "eta", "domain"}, set()),
    "mirror_prox": ({"objective", "mirror_map", "eta", "domain"}, set()),
    "em_population": ({"latent_model"}, set()),
    "em_sample": ({"latent_model", "data"}, set()),
    "alpha_em": ({"latent_model", "alpha"}, {"mode", "data"}),
    "newton": ({"objective"}, {"domain"}),
}


class ConfigInvalid(Exception):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


def _require_keys(obj: dict, allowed: set[str], context: str):
    unknown = set(obj) - allowed
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigInvalid(f"unknown field {name!r} in {context}", field=name)


def _vector(value, context: str) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{context} must be a numeric vector") from exc
    if v.ndim != 1 or v.size == 0:
        raise ConfigInvalid(f"{context} must be a nonempty vector")
    return v


def _matrix(value, context: str) -> np.ndarray:
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{context} must be a numeric matrix") from exc
    if m.ndim != 2:
        raise ConfigInvalid(f"{context} must be a matrix")
    return m


def build_objective(spec, context="objective"):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigInvalid(f"{context} must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "quadratic_form":
        _require_keys(spec, {"type", "h", "c"}, context)
        return QuadraticForm(_matrix(spec["h"], f"{context}.h"),
                             _vector(spec["c"], f"{context}.c") if "c" in spec else None)
    if kind == "shifted_quadratic":
        _require_keys(spec, {"type", "target"}, context)
        return ShiftedQuadratic(_vector(spec["target"], f"{context}.target"))
    if kind == "log_sum_exp":
        _require_keys(spec, {"type", "q", "scale"}, context)
        return SmoothLogSumExp(int(spec["q"]), float(spec.get("scale", 1.0)))
    if kind == "quartic_1d":
        _require_keys(spec, {"type"}, context)
        return Quartic1D()
    raise ConfigInvalid(f"unknown objective type {kind!r}")


def build_mirror_map(spec, q: int, context="mirror_map"):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigInvalid(f"{context} must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "quadratic":
        _require_keys(spec, {"type"}, context)
        return QuadraticMap(q)
    if kind == "neg_entropy":
        _require_keys(spec, {"type"}, context)
        return NegEntropyMap(q)
    if kind == "ball":
        _require_keys(spec, {"type", "r2"}, context)
        if "r2" not in spec:
            raise ConfigInvalid(f"{context} of type 'ball' requires field r2", field="r2")
        return BallMap(q, float(spec["r2"]))
    raise ConfigInvalid(f"unknown mirror map type {kind!r}")


def build_domain(spec, context="domain") -> ConvexDomain:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigInvalid(f"{context} must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "full_space":
        _require_keys(spec, {"type", "q"}, context)
        return FullSpace(int(spec["q"]))
    if kind == "box":
        _require_keys(spec, {"type", "lower", "upper"}, context)
        return Box(_vector(spec["lower"], f"{context}.lower"),
                   _vector(spec["upper"], f"{context}.upper"))
    if kind == "ball":
        _require_keys(spec, {"type", "center", "radius", "open"}, context)
        return EuclideanBall(_vector(spec["center"], f"{context}.center"),
                             float(spec["radius"]), bool(spec.get("open", False)))
    if kind == "simplex":
        _require_keys(spec, {"type", "q", "face_eps"}, context)
        if "face_eps" in spec:
            return Simplex(int(spec["q"]), float(spec["face_eps"]))
        return Simplex(int(spec["q"]))
    if kind == "affine_slice":
        _require_keys(spec, {"type", "c", "b", "lower", "upper"}, context)
        return AffineSlice(
            _matrix(spec["c"], f"{context}.c"),
            _vector(spec["b"], f"{context}.b"),
            Box(_vector(spec["lower"], f"{context}.lower"),
                _vector(spec["upper"], f"{context}.upper")),
        )
    raise ConfigInvalid(f"unknown domain type {kind!r}")


def build_latent_model(spec, context="latent_model"):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigInvalid(f"{context} must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "gaussian_latent":
        _require_keys(spec, {"type", "sigma_x2", "sigma_y2", "theta_star"}, context)
        for key in ("sigma_x2", "sigma_y2", "theta_star"):
            if key not in spec:
                raise ConfigInvalid(f"{context} requires field {key}", field=key)
        return GaussianLatentModel(float(spec["sigma_x2"]), float(spec["sigma_y2"]),
                                   float(spec["theta_star"]))
    if kind == "mixture":
        _require_keys(spec, {"type", "theta_star"}, context)
        if "theta_star" not in spec:
            raise ConfigInvalid(f"{context} requires field theta_star", field="theta_star")
        return TwoComponentMixture(float(spec["theta_star"]))
    raise ConfigInvalid(f"unknown latent model type {kind!r}")


def _resolve_data(spec, model, context="data") -> np.ndarray:
    if isinstance(spec, dict):
        _require_keys(spec, {"k", "seed"}, context)
        if "k" not in spec:
            raise ConfigInvalid(f"{context} requires field k", field="k")
        k = int(spec["k"])
        seed = int(spec.get("seed", 0))
        return model.sample_y(k, CounterRNG((seed, k)))
    return _vector(spec, context)


@dataclass
class Assembled:
    name: str
    algorithm: str
    problem: SurrogateProblem
    theta0: np.ndarray
    theta_star: np.ndarray | None  # None means locate automatically
    stop: StopRule
    fd: FDSpec
    seed: int


def validate(cfg: dict) -> None:
    """Schema-check a config dict; raises ConfigInvalid naming the bad field."""
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    if "name" not in cfg:
        raise ConfigInvalid("config requires field name", field="name")
    if "algorithm" not in cfg:
        raise ConfigInvalid("config requires field algorithm", field="algorithm")
    algo = cfg["algorithm"]
    if algo not in ALGORITHMS:
        raise ConfigInvalid(f"unknown algorithm {algo!r}", field="algorithm")
    required, optional = _ALGO_FIELDS[algo]
    _require_keys(cfg, _COMMON_FIELDS | required | optional, "config")
    for key in sorted(required):
        if key not in cfg:
            raise ConfigInvalid(f"{algo} requires field {key}", field=key)
    if "stop" in cfg:
        _require_keys(cfg["stop"], {"max_iters", "residual_tol", "stall_window"}, "stop")
    if "fd" in cfg:
        _require_keys(cfg["fd"], {"step", "richardson"}, "fd")


def assemble(cfg: dict) -> Assembled:
    """Turn a validated config into a runnable problem and its run parameters."""
    validate(cfg)
    algo = cfg["algorithm"]
    seed = int(cfg.get("seed", 0))

    if algo in ("gradient_descent", "mirror_descent", "mirror_prox"):
        objective = build_objective(cfg["objective"])
        eta = float(cfg["eta"])
        domain = build_domain(cfg["domain"]) if "domain" in cfg else FullSpace(objective.q)
        if algo == "gradient_descent":
            phi = QuadraticMap(objective.q)
            problem = mirror_descent_problem(objective, phi, eta, domain)
        else:
            phi = build_mirror_map(cfg["mirror_map"], objective.q)
            builder = mirror_descent_problem if algo == "mirror_descent" else mirror_prox_problem
            problem = builder(objective, phi, eta, domain)
    elif algo == "em_population":
        model = build_latent_model(cfg["latent_model"])
        if not isinstance(model, GaussianLatentModel):
            raise ConfigInvalid("em_population requires a gaussian_latent model")
        problem = em_population_problem(model)
    elif algo == "em_sample":
        model = build_latent_model(cfg["latent_model"])
        data = _resolve_data(cfg["data"], model)
        problem = model.sample_problem(data)
    elif algo == "alpha_em":
        model = build_latent_model(cfg["latent_model"])
        if not isinstance(model, GaussianLatentModel):
            raise ConfigInvalid("alpha_em requires a gaussian_latent model")
        mode = cfg.get("mode", "population")
        data = _resolve_data(cfg["data"], model) if "data" in cfg else None
        if mode == "sample" and data is None:
            raise ConfigInvalid("alpha_em requires field data when mode is 'sample'",
                                field="data")
        problem = alpha_em_problem(model, float(cfg["alpha"]), mode=mode, data=data)
    elif algo == "newton":
        objective = build_objective(cfg["objective"])
        domain = build_domain(cfg["domain"]) if "domain" in cfg else None
        problem = newton_problem(objective, domain)
    else:  # pragma: no cover - guarded by validate
        raise ConfigInvalid(f"unknown algorithm {algo!r}", field="algorithm")

    theta0_spec = cfg.get("theta0", "random")
    if isinstance(theta0_spec, str):
        if theta0_spec == "random":
            theta0 = problem.domain.sample(CounterRNG(seed))
        elif theta0_spec.startswith("random(") and theta0_spec.endswith(")"):
            theta0 = problem.domain.sample(CounterRNG(int(theta0_spec[7:-1])))
        else:
            raise ConfigInvalid(f"theta0 must be a vector, 'random' or 'random(seed)', "
                                f"got {theta0_spec!r}", field="theta0")
    else:
        theta0 = _vector(theta0_spec, "theta0")

    star_spec = cfg.get("theta_star", "auto")
    if isinstance(star_spec, str):
        if star_spec != "auto":
            raise ConfigInvalid(f"theta_star must be a vector or 'auto', got {star_spec!r}",
                                field="theta_star")
        theta_star = None
    else:
        theta_star = _vector(star_spec, "theta_star")

    stop_spec = cfg.get("stop", {})
    stop = StopRule(
        max_iters=int(stop_spec.get("max_iters", 10_000)),
        residual_tol=float(stop_spec.get("residual_tol", 1e-13)),
        stall_window=int(stop_spec.get("stall_window", 20)),
    )
    fd_spec = cfg.get("fd", {})
    fd = FDSpec(step=float(fd_spec.get("step", 1e-4)),
                richardson=bool(fd_spec.get("richardson", True)))

    return Assembled(
        name=str(cfg["name"]),
        algorithm=algo,
        problem=problem,
        theta0=theta0,
        theta_star=theta_star,
        stop=stop,
        fd=fd,
        seed=seed,
    )


def load_config(path) -> dict:
    p = Path(path)
    try:
        with open(p) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigInvalid(f"config file not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc


def validate_sweep(cfg: dict) -> None:
    if not isinstance(cfg, dict):
        raise ConfigInvalid("sweep config must be a JSON object")
    _require_keys(cfg, {"name", "model", "ks", "seeds"}, "sweep config")
    for key in ("name", "model", "ks", "seeds"):
        if key not in cfg:
            raise ConfigInvalid(f"sweep requires field {key}", field=key)
    if not isinstance(cfg["ks"], list) or not cfg["ks"]:
        raise ConfigInvalid("ks must be a nonempty ascending list", field="ks")
    if list(cfg["ks"]) != sorted(int(k) for k in cfg["ks"]):
        raise ConfigInvalid("ks must be ascending", field="ks")
    if not isinstance(cfg["seeds"], list) or not cfg["seeds"]:
        raise ConfigInvalid("seeds must be a nonempty list", field="seeds")
