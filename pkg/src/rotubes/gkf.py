"""Expected-Euler-characteristic machinery for the max-Hotelling quantile.

The tail probability P(max_t H_t > h) of the Hotelling process of a smooth
Gaussian residual field over [0, 1] is approximated by the expected Euler
characteristic of its excursion set.  For the three-dimensional algebra
this expands into Student-t EC densities with N - 1 degrees of freedom,
weighted by the intrinsic volumes of the 2-sphere (2 and 4*pi) and the two
Lipschitz-Killing curvatures of the interval, L0 = 1 and L1.

The combination implemented in expected_ec is the fully additive one,

    2 rho0(sqrt(h)) + 4 pi rho2(sqrt(h)) + L1 (2 rho1(sqrt(h)) + 4 pi rho3(sqrt(h))),

which evaluates to exactly 1 at h = 0 (the excursion set is the whole
interval) and matches Monte Carlo quantiles of the max-Hotelling statistic;
see tests/test_acceptance.py for the cross-check that fixed this choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .curves import ResidualField
from .errors import InvalidDof, NonMonotoneBracket, NoRoot, ZeroResidualColumn

__all__ = ["EcContext", "t_ec_density", "lkc_estimate", "expected_ec", "solve_quantile"]

_BRACKET_TOL = 1e-12       # well below the 1e-8 contract; keeps roots reproducible
_VALUE_TOL = 1e-8


@dataclass(frozen=True)
class EcContext:
    """Inputs of the quantile equation: sample size N and interval LKC L1."""

    n: int
    l1: float

    def __post_init__(self):
        if self.n < 3:
            raise InvalidDof(f"need N >= 3, got N = {self.n}")
        if not (self.l1 >= 0.0 and math.isfinite(self.l1)):
            raise ValueError(f"L1 must be finite and nonnegative, got {self.l1}")


def t_ec_density(j: int, t, n: int):
    """Euler characteristic density rho_j of a t-process with n - 1 dof.

    rho_0 is the upper tail probability of Student's t (regularized
    incomplete beta, not quadrature); rho_1..rho_3 are closed forms.
    """
    if n < 3:
        raise InvalidDof(f"need N >= 3, got N = {n}")
    if j not in (0, 1, 2, 3):
        raise ValueError(f"density order must be 0..3, got {j}")
    t = np.asarray(t, dtype=float)
    nu = n - 1
    if j == 0:
        return special.stdtr(nu, -t)
    base = (1.0 + t * t / nu) ** (1.0 - n / 2.0)
    if j == 1:
        return base / (2.0 * np.pi)
    gamma_ratio = math.exp(special.gammaln(n / 2.0) - special.gammaln((n - 1) / 2.0))
    if j == 2:
        return (2.0 * np.pi) ** -1.5 * gamma_ratio / math.sqrt(nu / 2.0) * t * base
    return (2.0 * np.pi) ** -2.0 * ((n - 2.0) / nu * t * t - 1.0) * base


def lkc_estimate(res: ResidualField) -> float:
    """Interval LKC from normalized residual increments.

    Each residual coordinate d gives a unit vector in R^N per time point;
    summed chord lengths of that path, averaged over the three coordinates,
    estimate the metric length of [0, 1] under the residual process.
    """
    x = res.sample                                # (N, K, 3)
    norms = np.linalg.norm(x, axis=0)             # (K, 3)
    if np.any(norms == 0.0):
        k, d = np.argwhere(norms == 0.0)[0]
        raise ZeroResidualColumn(
            f"residual coordinate {d} vanishes across the sample at grid index {k}")
    unit = x / norms                               # (N, K, 3)
    increments = np.linalg.norm(np.diff(unit, axis=1), axis=0)   # (K-1, 3)
    return float(increments.sum() / 3.0)


def expected_ec(h, ctx: EcContext):
    """Expected Euler characteristic of the excursion set {t : H_t >= h}.

    Approximates P(max_t H_t > h); equals 1 at h = 0 and decreases to 0.
    """
    root = np.sqrt(np.asarray(h, dtype=float))
    value = (2.0 * t_ec_density(0, root, ctx.n)
             + 4.0 * np.pi * t_ec_density(2, root, ctx.n)
             + ctx.l1 * (2.0 * t_ec_density(1, root, ctx.n)
                         + 4.0 * np.pi * t_ec_density(3, root, ctx.n)))
    return value if value.ndim else float(value)


def solve_quantile(alpha: float, ctx: EcContext) -> float:
    """Threshold h with expected_ec(h, ctx) = alpha, by guarded bisection.

    The lower end of the bracket is pushed past the mode region (largest
    scanned h with value >= 0.5); the upper end doubles from 100 until the
    value drops below alpha.  On the final bracket the function must be
    strictly decreasing, otherwise NonMonotoneBracket is raised.
    """
    if not (0.0 < alpha <= 0.5):
        raise ValueError(f"alpha must be in (0, 0.5], got {alpha}")

    def f(h: float) -> float:
        return expected_ec(h, ctx)

    lo = 0.0
    h = 1.0
    while h <= 100.0 and f(h) >= 0.5:
        lo = h
        h *= 2.0
    hi = 100.0
    while f(hi) >= alpha:
        hi *= 2.0
        if hi > 1e15:
            raise NoRoot(f"expected_ec never falls below alpha = {alpha}")

    f_lo, f_hi = f(lo), f(hi)
    checked = False
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        width = hi - lo
        if width < _VALUE_TOL and not checked:
            # Strict-decrease guard on the final contracted bracket.
            if not (f_lo > f_mid > f_hi):
                raise NonMonotoneBracket(
                    f"expected_ec not strictly decreasing on [{lo}, {hi}]")
            checked = True
        if width < _BRACKET_TOL and abs(f_mid - alpha) <= _VALUE_TOL:
            return mid
        if f_mid >= alpha:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi)
