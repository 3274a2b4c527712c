"""Hotelling process, simultaneous confidence tubes and tube comparison.

The pointwise Mahalanobis statistic of the intrinsic residuals,
H_t = N xbar_t^T S_t^{-1} xbar_t, drives simultaneous inference: a curve
lies in the tube when its algebra displacement a from the tube center
satisfies N a^T S_t^{-1} a <= h at every t, with h the expected-Euler-
characteristic quantile of max_t H_t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gkf, so3
from .curves import (CurveSample, ResidualField, RotationCurve, SpatioTemporalAction,
                     TimeGrid, _residuals_about, apply_action, pointwise_extrinsic_mean)
from .errors import GridMismatch, SingularCovariance

__all__ = [
    "HotellingProcess",
    "ConfidenceTube",
    "OverlapReport",
    "hotelling",
    "build_tube",
    "tube_contains",
    "compare_tubes",
    "act_on_tube",
]

_COND_FLOOR = 1e-12      # min eigenvalue must exceed this times the max
_SYM_TOL = 1e-10
_OVERLAP_MARGIN = 1e-6
_PGD_ITERATIONS = 200


def _check_spd(S: np.ndarray, grid: TimeGrid) -> None:
    sym_err = np.abs(S - np.swapaxes(S, -1, -2)).max()
    if sym_err > _SYM_TOL:
        raise SingularCovariance(f"covariance asymmetric by {sym_err:.3e}")
    eig = np.linalg.eigvalsh(S)
    bad = (eig[..., 0] <= 0.0) | (eig[..., 0] <= _COND_FLOOR * eig[..., -1])
    if np.any(bad):
        k = int(np.argmax(bad))
        raise SingularCovariance(
            f"residual covariance singular at t = {grid.t[k]:.4f}",
            t=float(grid.t[k]), index=k)


@dataclass(frozen=True, eq=False)
class HotellingProcess:
    """Per-time covariance S, optional population residual xbar and statistic H."""

    grid: TimeGrid
    n: int
    s: np.ndarray
    xbar: np.ndarray | None = None
    h: np.ndarray | None = None

    def __post_init__(self):
        S = np.asarray(self.s, dtype=float)
        if S.shape != (len(self.grid), 3, 3):
            raise ValueError(f"S must have shape ({len(self.grid)}, 3, 3)")
        _check_spd(S, self.grid)
        object.__setattr__(self, "s", S)
        if self.h is not None and np.any(np.asarray(self.h) < 0.0):
            raise ValueError("H must be nonnegative")


@dataclass(frozen=True, eq=False)
class ConfidenceTube:
    """Center curve, per-time covariance and max-statistic quantile."""

    center: RotationCurve
    s: np.ndarray
    hquant: float
    alpha: float
    n: int

    def __post_init__(self):
        S = np.asarray(self.s, dtype=float)
        if S.shape != (len(self.grid), 3, 3):
            raise ValueError(f"S must have shape ({len(self.grid)}, 3, 3)")
        _check_spd(S, self.grid)
        object.__setattr__(self, "s", S)
        if not self.hquant >= 0.0:
            raise ValueError("quantile must be nonnegative")
        if not (0.0 < self.alpha <= 0.5):
            raise ValueError(f"alpha must be in (0, 0.5], got {self.alpha}")

    @property
    def grid(self) -> TimeGrid:
        return self.center.grid


@dataclass(frozen=True, eq=False)
class OverlapReport:
    """Pointwise overlap decisions plus the maximal non-overlap intervals."""

    grid: TimeGrid
    overlap: np.ndarray
    loci: tuple[tuple[int, int], ...] = None  # filled from `overlap`

    def __post_init__(self):
        ov = np.asarray(self.overlap, dtype=bool)
        if ov.shape != (len(self.grid),):
            raise ValueError("overlap must hold one boolean per grid point")
        object.__setattr__(self, "overlap", ov)
        object.__setattr__(self, "loci", _false_runs(ov))

    def loci_times(self) -> list[tuple[float, float]]:
        return [(float(self.grid.t[i]), float(self.grid.t[j])) for i, j in self.loci]


def _false_runs(flags: np.ndarray) -> tuple[tuple[int, int], ...]:
    """Maximal index intervals [i, j] where flags is False."""
    runs = []
    start = None
    for idx, ok in enumerate(flags):
        if not ok and start is None:
            start = idx
        elif ok and start is not None:
            runs.append((start, idx - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return tuple(runs)


def _sample_covariance(res: ResidualField) -> np.ndarray:
    """Uncentered second-moment matrices (1/(N-1)) sum_n x_n x_n^T per t."""
    x = res.sample
    return np.einsum("nka,nkb->kab", x, x) / (res.size - 1)


@dataclass(frozen=True, eq=False)
class TubeIngredients:
    """Shared per-sample pieces of a tube: center, residuals, S and the LKC."""

    center: RotationCurve
    res: ResidualField
    s: np.ndarray
    l1: float
    n: int


def tube_ingredients(sample: CurveSample, center: RotationCurve | None = None,
                     min_n: int = 4) -> TubeIngredients:
    """Everything a tube needs except the quantile; raises on singular S."""
    if sample.size < min_n:
        raise ValueError(f"need at least {min_n} curves, got {sample.size}")
    pem = pointwise_extrinsic_mean(sample)
    res = _residuals_about(sample, pem, center)
    S = _sample_covariance(res)
    _check_spd(S, sample.grid)
    l1 = gkf.lkc_estimate(res)
    return TubeIngredients(center=pem, res=res, s=S, l1=l1, n=sample.size)


def assemble_tube(ing: TubeIngredients, alpha: float) -> ConfidenceTube:
    h = gkf.solve_quantile(alpha, gkf.EcContext(ing.n, ing.l1))
    return ConfidenceTube(center=ing.center, s=ing.s, hquant=h, alpha=alpha, n=ing.n)


def hotelling(sample: CurveSample, center: RotationCurve | None = None) -> HotellingProcess:
    """Hotelling process of the intrinsic residuals.

    With a center curve the population residuals and the statistic H are
    filled in; without one the process carries only the covariance, which is
    all tube construction needs.
    """
    if sample.size < 4:
        raise ValueError(f"need at least 4 curves for an invertible S, got {sample.size}")
    pem = pointwise_extrinsic_mean(sample)
    res = _residuals_about(sample, pem, center)
    S = _sample_covariance(res)
    _check_spd(S, sample.grid)
    xbar = res.population
    h = None
    if xbar is not None:
        h = sample.size * np.einsum("ka,ka->k", xbar, np.linalg.solve(S, xbar[..., None])[..., 0])
        h = np.maximum(h, 0.0)
    return HotellingProcess(grid=sample.grid, n=sample.size, s=S, xbar=xbar, h=h)


def build_tube(sample: CurveSample, alpha: float) -> ConfidenceTube:
    """Simultaneous (1 - alpha) confidence tube around the pointwise mean."""
    return assemble_tube(tube_ingredients(sample), alpha)


def tube_contains(tube: ConfidenceTube, curve: RotationCurve) -> tuple[np.ndarray, bool]:
    """Pointwise and overall membership of a curve in the tube (closed boundary)."""
    if tube.grid != curve.grid:
        raise GridMismatch("tube and curve must share the time grid")
    rel = np.einsum("kij,kil->kjl", tube.center.values, curve.values)
    a = so3.log_so3(rel, validate=False)
    q = tube.n * np.einsum("ka,ka->k", a, np.linalg.solve(tube.s, a[..., None])[..., 0])
    per_point = q <= tube.hquant
    return per_point, bool(per_point.all())


def act_on_tube(tube: ConfidenceTube, act: SpatioTemporalAction,
                out_grid: TimeGrid | None = None) -> ConfidenceTube:
    """Tube of the acted sample, derived without re-estimation.

    The center transforms like any curve, the covariance is conjugated by the
    right rotation factor and read off at the warped times (linear
    interpolation between grid points), and the quantile is unchanged.
    """
    grid = tube.grid if out_grid is None else out_grid
    center = apply_action(tube.center, act, grid)
    warped = act.warp(grid.t)
    t = tube.grid.t
    k = np.clip(np.searchsorted(t, warped, side="right") - 1, 0, len(t) - 2)
    u = ((warped - t[k]) / (t[k + 1] - t[k]))[:, None, None]
    s_interp = (1.0 - u) * tube.s[k] + u * tube.s[k + 1]
    s_acted = np.swapaxes(act.q, -1, -2) @ s_interp @ act.q
    return ConfidenceTube(center=center, s=s_acted, hquant=tube.hquant,
                          alpha=tube.alpha, n=tube.n)


# ---------------------------------------------------------------------------
# Tube overlap: constrained minimization in the algebra at one tube's center.

def _right_jacobian(u: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(u)
    U = so3.hat(u)
    U2 = U @ U
    if theta < 1e-6:
        return np.eye(3) - 0.5 * U + U2 / 6.0
    t2 = theta * theta
    return (np.eye(3) - (1.0 - np.cos(theta)) / t2 * U
            + (theta - np.sin(theta)) / (t2 * theta) * U2)


def _right_jacobian_inv(u: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(u)
    U = so3.hat(u)
    U2 = U @ U
    if theta < 1e-6:
        return np.eye(3) + 0.5 * U + U2 / 12.0
    sin = np.sin(theta)
    if abs(sin) < 1e-12:
        sin = 1e-12
    c = 1.0 / (theta * theta) - (1.0 + np.cos(theta)) / (2.0 * theta * sin)
    return np.eye(3) + 0.5 * U + c * U2


class _EllipsoidProjector:
    """Euclidean projection onto {u : u^T A u <= 1} for symmetric PD A."""

    def __init__(self, A: np.ndarray):
        self.A = A
        self.eigval, self.eigvec = np.linalg.eigh(A)

    def __call__(self, p: np.ndarray) -> np.ndarray:
        if p @ self.A @ p <= 1.0:
            return p
        w = self.eigvec.T @ p
        d = self.eigval

        def constraint(lam: float) -> float:
            r = w / (1.0 + lam * d)
            return float(np.sum(d * r * r)) - 1.0

        lo, hi = 0.0, 1.0
        while constraint(hi) > 0.0:
            hi *= 2.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if constraint(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        lam = 0.5 * (lo + hi)
        return self.eigvec @ (w / (1.0 + lam * d))


def _min_mahalanobis_to_other(D: np.ndarray, A: np.ndarray, B: np.ndarray,
                              h_b: float) -> float:
    """min over {u^T A u <= 1} of m(u)^T B m(u), m(u) = log(D exp(u)).

    Projected gradient descent with backtracking from the ellipsoid center
    and from the boundary point toward the other tube's center; exits early
    once the running minimum clears the overlap threshold h_b.
    """
    project = _EllipsoidProjector(A)

    def objective(u: np.ndarray) -> tuple[float, np.ndarray]:
        m = so3.log_so3(D @ so3.exp_so3(u), validate=False)
        return float(m @ B @ m), m

    u_center = -so3.log_so3(D, validate=False)      # exp(u) = D^T: other center
    if u_center @ A @ u_center <= 1.0:
        return 0.0
    starts = [np.zeros(3),
              u_center / np.sqrt(u_center @ A @ u_center)]

    best = np.inf
    for u0 in starts:
        u = project(u0)
        g, m = objective(u)
        best = min(best, g)
        if best <= h_b:
            return best
        step = 1.0 / max(np.abs(B).max(), 1.0)
        for _ in range(_PGD_ITERATIONS):
            grad = 2.0 * (_right_jacobian_inv(m) @ _right_jacobian(u)).T @ (B @ m)
            moved = False
            while step > 1e-16:
                cand = project(u - step * grad)
                g_cand, m_cand = objective(cand)
                if g_cand < g - 1e-15 * (1.0 + abs(g)):
                    u, g, m = cand, g_cand, m_cand
                    step *= 1.5
                    moved = True
                    break
                step *= 0.5
            if not moved:
                break
            best = min(best, g)
            if best <= h_b:
                return best
    return best


def compare_tubes(a: ConfidenceTube, b: ConfidenceTube) -> OverlapReport:
    """Pointwise intersection test of two tubes on a shared grid.

    At each t, tube a's cross-section is an ellipsoid in the algebra at its
    center; tube b's cross-section is pulled back through the exact group
    logarithm (no linearization) and the minimum of b's Mahalanobis form over
    a's ellipsoid decides the overlap.  Non-overlap is declared only when
    that minimum exceeds b's threshold by a relative margin of 1e-6.
    """
    if a.grid != b.grid:
        raise GridMismatch("tubes must share the time grid")
    k_count = len(a.grid)
    overlap = np.empty(k_count, dtype=bool)
    inv_sa = np.linalg.inv(a.s)
    inv_sb = np.linalg.inv(b.s)
    for k in range(k_count):
        D = b.center.values[k].T @ a.center.values[k]
        A = (a.n / a.hquant) * inv_sa[k]
        B = b.n * inv_sb[k]
        q_min = _min_mahalanobis_to_other(D, A, B, b.hquant)
        overlap[k] = q_min <= b.hquant * (1.0 + _OVERLAP_MARGIN)
    return OverlapReport(grid=a.grid, overlap=overlap)
