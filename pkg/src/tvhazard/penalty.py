"""Total-variation penalty and the proximal toolbox.

The solver's nonsmooth subproblem per coefficient row is

    argmin_w  (1/2) ||y - w||^2 + weight * sum_l |w[l+1] - w[l]|    (+ w >= 0)

solved exactly by dynamic-programming message passing (fused lasso), with
elementwise clipping for the nonnegativity constraint; in one dimension
clipping after the TV prox is exact.  In monotone mode the TV of a
nondecreasing row telescopes to ``w[last] - w[first]``, a linear term the
solver folds into the smooth objective, so the prox reduces to isotonic
projection (pool-adjacent-violators) plus clipping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty and constraint switches for one fit.

    Parameters
    ----------
    gamma : float
        Total-variation weight, >= 0.
    monotone : bool
        Constrain coefficient rows to be nondecreasing in time.
    nonnegative : bool
        Clip rows at zero (required for valid hazards; default True).
    monotone_intercept : bool
        Whether the monotone constraint also binds the intercept row
        (ignored when ``monotone`` is False; default True).
    """

    gamma: float = 0.0
    monotone: bool = False
    nonnegative: bool = True
    monotone_intercept: bool = True

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")


def tv(values):
    """Total variation: sum of absolute successive differences."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("tv of an empty sequence is undefined")
    return float(np.abs(np.diff(v)).sum())


def _validated(y, name="y"):
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} must be finite")
    return y


def fused_lasso_prox(y, weight):
    """Exact minimizer of ``(1/2)||y - w||^2 + weight * tv(w)``.

    Dynamic-programming message passing over the piecewise-linear
    derivative of the backward value function: left-to-right, each step
    clips the derivative at ``+-weight`` and records the clip locations;
    the right-to-left sweep then reads the solution off the recorded
    thresholds.  Linear time, exact up to float arithmetic.
    """
    y = _validated(y)
    if not weight >= 0:
        raise ValueError(f"weight must be >= 0, got {weight!r}")
    n = y.size
    if n == 1 or weight == 0.0:
        return y.copy()

    lam = float(weight)
    beta = np.empty(n)
    # breakpoints of the clipped derivative, with slope/intercept increments
    x = np.empty(2 * n)
    a = np.empty(2 * n)
    b = np.empty(2 * n)
    # clip thresholds per step, for the backward sweep
    tm = np.empty(n - 1)
    tp = np.empty(n - 1)

    tm[0] = y[0] - lam
    tp[0] = y[0] + lam
    l = n - 1
    r = n
    x[l] = tm[0]
    x[r] = tp[0]
    a[l] = 1.0
    b[l] = -y[0] + lam
    a[r] = -1.0
    b[r] = y[0] + lam
    afirst = 1.0
    bfirst = -lam - y[1]
    alast = -1.0
    blast = -lam + y[1]

    for k in range(1, n - 1):
        # leftmost breakpoint where the derivative exceeds -lam
        alo, blo = afirst, bfirst
        lo = l
        while lo <= r and alo * x[lo] + blo <= -lam:
            alo += a[lo]
            blo += b[lo]
            lo += 1
        # rightmost breakpoint where the derivative is below +lam
        ahi, bhi = alast, blast
        hi = r
        while hi >= lo and -(ahi * x[hi] + bhi) >= lam:
            ahi += a[hi]
            bhi += b[hi]
            hi -= 1

        tm[k] = (-lam - blo) / alo
        tp[k] = (lam + bhi) / (-ahi)
        l = lo - 1
        r = hi + 1
        x[l] = tm[k]
        x[r] = tp[k]
        a[l] = alo
        b[l] = blo + lam
        a[r] = ahi
        b[r] = bhi + lam
        afirst = 1.0
        bfirst = -lam - y[k + 1]
        alast = -1.0
        blast = -lam + y[k + 1]

    # last coefficient: zero of the unclipped derivative
    alo, blo = afirst, bfirst
    for lo in range(l, r + 1):
        if alo * x[lo] + blo > 0.0:
            break
        alo += a[lo]
        blo += b[lo]
    beta[n - 1] = -blo / alo

    for k in range(n - 2, -1, -1):
        if beta[k + 1] > tp[k]:
            beta[k] = tp[k]
        elif beta[k + 1] < tm[k]:
            beta[k] = tm[k]
        else:
            beta[k] = beta[k + 1]
    return beta


def isotonic_project(y):
    """Euclidean projection onto nondecreasing sequences (PAVA).

    Pools adjacent violating blocks into their weighted mean; the result is
    nondecreasing, idempotent, and preserves the total sum.
    """
    y = _validated(y)
    totals = []  # block sums
    counts = []
    for v in y:
        t, c = float(v), 1
        # pool while the previous block mean exceeds the new block mean
        while totals and totals[-1] * c > t * counts[-1]:
            t += totals.pop()
            c += counts.pop()
        totals.append(t)
        counts.append(c)
    out = np.empty(y.size)
    pos = 0
    for t, c in zip(totals, counts):
        out[pos : pos + c] = t / c
        pos += c
    return out


def nonneg_clip(y):
    """Elementwise ``max(y, 0)``."""
    return np.maximum(_validated(y), 0.0)


def prox_step(y, weight, cfg):
    """Proximal update of one coefficient row under ``cfg``.

    Non-monotone mode: ``nonneg_clip(fused_lasso_prox(y, weight))`` — exact
    for TV + nonnegativity in one dimension.  Monotone mode: isotonic
    projection then clipping; ``weight`` is ignored because the TV term of a
    monotone row is linear and lives in the smooth objective.
    """
    if cfg.monotone:
        z = isotonic_project(y)
    else:
        z = fused_lasso_prox(y, weight)
    if cfg.nonnegative:
        z = np.maximum(z, 0.0)
    return z
