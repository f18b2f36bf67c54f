"""Additive hazard models and the censored negative log-likelihood.

The hazard of a unit with feature path ``x`` is

    lambda(x, t) = w_0(t) + sum_j x_j(t) * w_j(t)

with every coefficient path a nonnegative step function on a shared knot set.
Survival is ``exp(-Lambda(0, t))`` with ``Lambda`` the cumulative hazard.  An
interval-censored observation ``(l, r]`` contributes

    Lambda(0, l) - log(1 - exp(-Lambda(l, r)))

to the negative log-likelihood and a right-censored one contributes
``Lambda(0, at)``.  Everything here is exact piecewise-constant arithmetic;
the log terms use expm1/log1p forms that stay accurate for tiny brackets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .timeline import (
    FeaturePath,
    KnotSet,
    Observation,
    StepFunction,
    eval_feature,
    eval_step,
    integrate_step,
    integrate_step_product,
)

_LOG2 = math.log(2.0)


class ZeroBracketWarning(UserWarning):
    """A model assigned exactly zero probability mass to an observed event bracket."""


@dataclass(frozen=True)
class HazardModel:
    """Additive hazard model: intercept plus sparse per-feature coefficient paths.

    Parameters
    ----------
    knots : KnotSet
        Shared partition for every coefficient path.
    d : int
        Feature-space dimension; coefficient keys must lie in ``[0, d)``.
    intercept : StepFunction
        The baseline rate ``w_0``.
    coefficients : dict
        Maps feature index ``j`` to its coefficient path ``w_j``; absent
        features are identically zero.  Treat as immutable after construction.

    All stored values must be nonnegative so that the hazard is a valid rate
    for any nonnegative feature path.
    """

    knots: KnotSet
    d: int
    intercept: StepFunction
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be nonnegative")
        self._check_row(self.intercept, "intercept")
        for j, sf in self.coefficients.items():
            if not 0 <= int(j) < self.d:
                raise ValueError(f"coefficient index {j} outside [0, {self.d})")
            self._check_row(sf, f"coefficient {j}")

    def _check_row(self, sf, what):
        if sf.knots != self.knots:
            raise ValueError(f"{what} does not share the model's knot set")
        if any(v < 0 for v in sf.values):
            raise ValueError(f"{what} has a negative value; hazards require w >= 0")

    def __call__(self, p, t):
        return hazard(self, p, t)


def hazard(m, p, t):
    """Instantaneous hazard ``w_0(t) + sum_j x_j(t) w_j(t)``."""
    total = eval_step(m.intercept, t)
    for j in m.coefficients.keys() & p.entries.keys():
        total += eval_feature(p, j, t) * eval_step(m.coefficients[j], t)
    return total


def cumulative_hazard(m, p, a, b):
    """Exact integral of the hazard over ``[a, b]`` for feature path ``p``."""
    total = integrate_step(m.intercept, a, b)
    for j in sorted(m.coefficients.keys() & p.entries.keys()):
        total += integrate_step_product(m.coefficients[j], p, j, a, b)
    return total


def survival(m, p, t):
    """Probability of no event up to ``t``: exp(-Lambda(0, t))."""
    return math.exp(-cumulative_hazard(m, p, 0.0, t))


def _log1mexp(x):
    # log(1 - exp(-x)) for x >= 0; switch keeps full precision on both sides
    if x <= 0.0:
        return -math.inf
    if x < _LOG2:
        return math.log(-math.expm1(-x))
    return math.log1p(-math.exp(-x))


def nll_observation(m, o):
    """Negative log-likelihood contribution of a single observation.

    Right-censored at ``at``: ``Lambda(0, at)``.  Interval-censored on
    ``(l, r]``: ``Lambda(0, l) - log(1 - exp(-Lambda(l, r)))``.  A bracket
    with exactly zero hazard mass yields ``+inf`` with a
    :class:`ZeroBracketWarning` rather than an exception.
    """
    if o.kind == "right":
        return cumulative_hazard(m, o.path, 0.0, o.right)
    head = cumulative_hazard(m, o.path, 0.0, o.left)
    bracket = cumulative_hazard(m, o.path, o.left, o.right)
    if bracket <= 0.0:
        warnings.warn(
            f"model assigns zero mass to event bracket ({o.left}, {o.right}]; NLL is +inf",
            ZeroBracketWarning,
            stacklevel=2,
        )
        return math.inf
    return head - _log1mexp(bracket)


def nll_dataset(m, observations):
    """Sum of per-observation NLLs in input order (deterministic)."""
    total = 0.0
    for o in observations:
        total += nll_observation(m, o)
    return total


def model_matrix(m):
    """Dense (d+1, intervals) value matrix; row 0 is the intercept."""
    W = np.zeros((m.d + 1, m.knots.n_intervals))
    W[0] = m.intercept.values
    for j, sf in m.coefficients.items():
        W[j + 1] = sf.values
    return W


def matrix_model(knots, W):
    """Inverse of :func:`model_matrix`; all-zero feature rows are omitted."""
    W = np.asarray(W, float)
    coefficients = {}
    for j in range(1, W.shape[0]):
        if np.any(W[j] != 0.0):
            coefficients[j - 1] = StepFunction(knots, tuple(W[j]))
    return HazardModel(
        knots=knots,
        d=W.shape[0] - 1,
        intercept=StepFunction(knots, tuple(W[0])),
        coefficients=coefficients,
    )


class CensoredDesign:
    """Precomputed exposure matrices for fast NLL and gradient evaluation.

    For coefficient matrix ``W`` (row 0 = intercept) flattened to ``w``, the
    head term of every observation is the linear form ``U @ w`` (exposure of
    each coefficient slot on ``[0, e_i]``) and each interval bracket's
    cumulative hazard is ``V @ w``.  The censored NLL and its gradient are
    then a handful of matrix-vector products, bitwise reproducible across
    runs.
    """

    def __init__(self, knots, observations):
        observations = list(observations)
        if not observations:
            raise ValueError("no observations")
        d = observations[0].path.d
        for o in observations:
            if o.path.d != d:
                raise ValueError(f"dimension mismatch: paths with d={d} and d={o.path.d}")
            if o.right > knots.horizon or o.left < knots.origin:
                raise ValueError(
                    f"observation times ({o.left}, {o.right}) outside knot range "
                    f"[{knots.origin}, {knots.horizon}]"
                )
        self.knots = knots
        self.observations = observations
        self.d = d
        self.n = len(observations)
        self.n_slots = knots.n_intervals
        self.shape = (d + 1, self.n_slots)

        B = knots.boundaries()
        U = np.zeros((self.n, (d + 1) * self.n_slots))
        interval_rows = []
        v_rows = []
        for i, o in enumerate(observations):
            head_end = o.left if o.kind == "interval" else o.right
            self._exposure(B, o.path, 0.0, head_end, U[i].reshape(self.shape))
            if o.kind == "interval":
                row = np.zeros(self.shape)
                self._exposure(B, o.path, o.left, o.right, row)
                interval_rows.append(i)
                v_rows.append(row.ravel())
        self.U = U
        self.V = np.array(v_rows) if v_rows else np.zeros((0, U.shape[1]))
        self.interval_rows = np.array(interval_rows, dtype=int)
        self._u_colsum = U.sum(axis=0)

    @staticmethod
    def _exposure(B, path, a, b, out):
        # overlap of [a, b] with every knot interval, per coefficient row
        lo = np.maximum(B[:-1], a)
        hi = np.minimum(B[1:], b)
        out[0] += np.clip(hi - lo, 0.0, None)
        for j in path.entries:
            starts, vals = path.runs(j)
            ends = np.append(starts[1:], np.inf)
            for s, e, v in zip(starts, ends, vals):
                if v == 0.0:
                    continue
                aa = max(a, s)
                bb = min(b, e)
                if bb <= aa:
                    continue
                lo = np.maximum(B[:-1], aa)
                hi = np.minimum(B[1:], bb)
                out[j + 1] += v * np.clip(hi - lo, 0.0, None)

    def brackets(self, w):
        """Cumulative hazard of every interval bracket at coefficients ``w``."""
        return self.V @ np.asarray(w).ravel()

    def nll(self, w, floor=0.0):
        """Dataset NLL at flattened coefficients ``w``.

        With ``floor > 0`` bracket masses are clamped below at ``floor``
        (optimizer use: keeps the objective finite and smooth near the
        boundary); with ``floor = 0`` a zero-mass bracket yields ``+inf``.
        """
        w = np.asarray(w).ravel()
        heads = self.U @ w
        total = float(heads.sum())
        if self.V.shape[0]:
            br = self.V @ w
            if floor > 0.0:
                br = np.maximum(br, floor)
            elif np.any(br <= 0.0):
                return math.inf
            total += float(-_log1mexp_vec(br).sum())
        return total

    def nll_grad(self, w, floor=0.0):
        """NLL value and gradient (flattened) at ``w``, same flooring as :meth:`nll`."""
        w = np.asarray(w).ravel()
        heads = self.U @ w
        value = float(heads.sum())
        grad = self._u_colsum.copy()
        if self.V.shape[0]:
            br = self.V @ w
            if floor > 0.0:
                br = np.maximum(br, floor)
            elif np.any(br <= 0.0):
                raise ValueError("zero-mass event bracket: gradient undefined without a floor")
            value += float(-_log1mexp_vec(br).sum())
            grad -= self.V.T @ _inv_expm1(br)
        return value, grad

    def nll_grad_batch(self, w, idx, floor=1e-12):
        """Unscaled NLL gradient of the observation subset ``idx``."""
        w = np.asarray(w).ravel()
        idx = np.asarray(idx, dtype=int)
        grad = self.U[idx].sum(axis=0)
        mask = np.isin(self.interval_rows, idx, assume_unique=False)
        if mask.any():
            V = self.V[mask]
            br = np.maximum(V @ w, floor)
            grad -= V.T @ _inv_expm1(br)
        return grad


def _inv_expm1(x):
    # 1/(e^x - 1) written as e^-x/(1 - e^-x): no overflow for huge x
    return np.exp(-x) / (-np.expm1(-x))


def _log1mexp_vec(x):
    out = np.empty_like(x)
    small = x < _LOG2
    with np.errstate(divide="ignore"):
        out[small] = np.log(-np.expm1(-x[small]))
        out[~small] = np.log1p(-np.exp(-x[~small]))
    return out


def nll_gradient(m, observations):
    """Exact gradient of :func:`nll_dataset` w.r.t. every coefficient value.

    Returns a dense ``(d+1, intervals)`` array: row 0 is the intercept, row
    ``j+1`` is feature ``j``.  Each right-censored observation contributes
    feature-weighted segment overlaps with ``[0, at]``; each interval
    observation additionally contributes the bracket term
    ``-(exp(-L)/(1-exp(-L))) * dL/dw`` with ``L`` the bracket mass.

    Raises
    ------
    ValueError
        If some bracket has exactly zero mass (gradient undefined there);
        start from a strictly positive intercept to stay off the boundary.
    """
    observations = list(observations)
    design = CensoredDesign(m.knots, observations)
    if design.d != m.d:
        raise ValueError(f"dimension mismatch: model d={m.d}, observations d={design.d}")
    w = model_matrix(m).ravel()
    if design.V.shape[0] and np.any(design.brackets(w) <= 0.0):
        raise ValueError(
            "gradient undefined: an event bracket has zero hazard mass; "
            "keep the intercept strictly positive (positivity floor)"
        )
    _, grad = design.nll_grad(w)
    return grad.reshape(design.shape)
