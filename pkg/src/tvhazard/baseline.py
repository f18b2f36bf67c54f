"""Constant-coefficient reference models under the same censored likelihood.

Two baselines for held-out comparisons against the time-varying fit: a
constant additive-hazard model (the one-interval special case of the main
model class) and a constant-base-rate proportional-hazards model
``lambda(t|x) = lambda_0 * exp(w . x(t))``, both fitted by maximum likelihood
on the identical censored data with a small ridge term for identifiability
with collinear binary features.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .likelihood import HazardModel, _log1mexp
from .penalty import PenaltyConfig
from .solver import SolverConfig, fit
from .timeline import KnotSet, StepFunction

_WEIGHT_CAP = 50.0


class SeparationWarning(UserWarning):
    """A proportional-model weight hit the divergence cap (quasi-separation)."""


@dataclass(frozen=True)
class ConstantAdditiveModel:
    """Additive hazard with time-constant coefficients: ``w_0 + w . x(t)``."""

    intercept: float
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.intercept < 0 or any(w < 0 for w in self.weights):
            raise ValueError("constant additive model requires nonnegative values")

    @property
    def d(self):
        return len(self.weights)

    def to_hazard_model(self, horizon):
        """Equivalent one-interval :class:`HazardModel` on ``[0, horizon]``."""
        knots = KnotSet((), horizon=horizon)
        coefficients = {
            j: StepFunction(knots, (w,)) for j, w in enumerate(self.weights) if w != 0.0
        }
        return HazardModel(
            knots=knots,
            d=self.d,
            intercept=StepFunction(knots, (self.intercept,)),
            coefficients=coefficients,
        )


@dataclass(frozen=True)
class ProportionalModel:
    """Proportional hazards with constant base rate: ``lambda_0 exp(w . x(t))``."""

    base_rate: float
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "base_rate", float(self.base_rate))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.base_rate > 0:
            raise ValueError("base_rate must be positive")

    @property
    def d(self):
        return len(self.weights)


def fit_constant_additive(observations, l2_weight=1e-6):
    """Censored-likelihood fit of the constant additive model.

    Reuses the TV solver on a single-interval knot set (one value per row),
    with ``l2_weight * ||weights||^2`` added for identifiability.
    """
    observations = list(observations)
    if not observations:
        raise ValueError("no observations")
    horizon = max(o.right for o in observations)
    knots = KnotSet((), horizon=horizon)
    config = SolverConfig(
        penalty=PenaltyConfig(gamma=0.0),
        max_iterations=5000,
        tolerance=1e-12,
        ridge=l2_weight,
    )
    result = fit(observations, config, knots=knots)
    W = np.zeros(result.model.d + 1)
    W[0] = result.model.intercept.values[0]
    for j, sf in result.model.coefficients.items():
        W[j + 1] = sf.values[0]
    return ConstantAdditiveModel(intercept=W[0], weights=tuple(W[1:]))


def _segments(path, a, b):
    """Constant-feature segments of ``[a, b]``: list of (length, {j: x_j})."""
    cuts = [a] + [t for t in path.change_times() if a < t < b] + [b]
    out = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        active = {}
        for j in path.entries:
            x = path.value(j, lo)
            if x != 0.0:
                active[j] = x
        out.append((hi - lo, active))
    return out


def _precompute(observations):
    per_obs = []
    for o in observations:
        head = _segments(o.path, 0.0, o.left if o.kind == "interval" else o.right)
        bracket = _segments(o.path, o.left, o.right) if o.kind == "interval" else None
        per_obs.append((head, bracket))
    return per_obs


_EXP_CAP = 700.0  # keeps exp() finite while the optimizer probes extreme weights


def _exposure_term(theta, segs, d):
    """``lambda_0 * sum_k len_k exp(w . x_k)`` and its gradient in (rho, w)."""
    rho = theta[0]
    total = 0.0
    grad = np.zeros(d + 1)
    for length, active in segs:
        s = sum(theta[1 + j] * x for j, x in active.items())
        e = math.exp(min(rho + s, _EXP_CAP)) * length
        total += e
        grad[0] += e
        for j, x in active.items():
            grad[1 + j] += e * x
    return total, grad


def proportional_nll(model, observations):
    """Censored NLL of a :class:`ProportionalModel` (exact segment-wise)."""
    theta = np.concatenate(([math.log(model.base_rate)], model.weights))
    value, _ = _proportional_value_grad(theta, _precompute(observations), model.d, 0.0)
    return value


def _proportional_value_grad(theta, per_obs, d, l2_weight):
    value = 0.0
    grad = np.zeros(d + 1)
    for head, bracket in per_obs:
        eh, gh = _exposure_term(theta, head, d)
        value += eh
        grad += gh
        if bracket is not None:
            eb, gb = _exposure_term(theta, bracket, d)
            # eb > 0 always: positive base rate over a nonempty bracket
            value -= _log1mexp(eb)
            coef = 1.0 / math.expm1(eb) if eb < 30.0 else math.exp(-eb)
            grad -= coef * gb
    if l2_weight > 0.0:
        w = theta[1:]
        value += l2_weight * float(w @ w)
        grad[1:] += 2.0 * l2_weight * w
    return value, grad


def fit_proportional(observations, l2_weight=1e-6):
    """Censored-likelihood fit of the constant-base-rate proportional model.

    L-BFGS-B over ``(log lambda_0, w)`` with ``|w_j| <= 50``; hitting the cap
    indicates quasi-separation and raises a :class:`SeparationWarning`.
    """
    observations = list(observations)
    if not observations:
        raise ValueError("no observations")
    d = observations[0].path.d
    per_obs = _precompute(observations)

    events = sum(1 for o in observations if o.kind == "interval")
    exposure = sum(
        o.right if o.kind == "right" else 0.5 * (o.left + o.right) for o in observations
    )
    rate0 = events / exposure if events and exposure > 0 else 0.01
    x0 = np.concatenate(([math.log(rate0)], np.zeros(d)))
    bounds = [(-30.0, 30.0)] + [(-_WEIGHT_CAP, _WEIGHT_CAP)] * d

    res = optimize.minimize(
        _proportional_value_grad,
        x0,
        args=(per_obs, d, l2_weight),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": 2000, "ftol": 1e-12, "gtol": 1e-10},
    )
    theta = res.x
    if np.any(np.abs(theta[1:]) >= _WEIGHT_CAP - 1e-6):
        warnings.warn(
            "proportional-model weights hit the +-50 cap (possible separation)",
            SeparationWarning,
            stacklevel=2,
        )
    return ProportionalModel(base_rate=math.exp(theta[0]), weights=tuple(theta[1:]))
