"""Discretized rotation-valued curves and their sample statistics.

Curves live on a shared time grid over [0, 1].  Sample inference rests on
pointwise extrinsic means (nearest-rotation projection of the entrywise
average) and on intrinsic residuals, the algebra coordinates of
mean(t)^T curve(t).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import so3
from .errors import GridMismatch

__all__ = [
    "TimeGrid",
    "RotationCurve",
    "CurveSample",
    "SpatioTemporalAction",
    "ResidualField",
    "pointwise_extrinsic_mean",
    "residuals",
    "apply_action",
    "geodesic_interpolate",
    "curve_length",
    "length_loss",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time points with t[0] = 0 and t[-1] = 1."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        if t.size < 2:
            raise ValueError("grid needs at least 2 points")
        if not (t[0] == 0.0 and t[-1] == 1.0):
            raise ValueError("grid must start at 0 and end at 1")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "t", _freeze(t))

    @classmethod
    def uniform(cls, size: int) -> "TimeGrid":
        return cls(np.linspace(0.0, 1.0, size))

    def __len__(self) -> int:
        return self.t.size

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeGrid) and np.array_equal(self.t, other.t)

    def __hash__(self):
        return hash((self.t.size, float(self.t[1])))


def _require_same_grid(a: TimeGrid, b: TimeGrid, what: str) -> None:
    if a != b:
        raise GridMismatch(f"{what} must share the time grid")


@dataclass(frozen=True, eq=False)
class RotationCurve:
    """A curve t -> R(t) sampled on a grid; values shaped (K, 3, 3)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.grid), 3, 3):
            raise ValueError(f"values must have shape ({len(self.grid)}, 3, 3), got {v.shape}")
        so3.check_rotation(v)
        object.__setattr__(self, "values", _freeze(v))

    @classmethod
    def identity(cls, grid: TimeGrid) -> "RotationCurve":
        return cls(grid, np.broadcast_to(np.eye(3), (len(grid), 3, 3)).copy())


@dataclass(frozen=True, eq=False)
class CurveSample:
    """N independent rotation curves on one shared grid; values (N, K, 3, 3)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 4 or v.shape[1:] != (len(self.grid), 3, 3):
            raise ValueError(f"values must have shape (N, {len(self.grid)}, 3, 3), got {v.shape}")
        so3.check_rotation(v)
        object.__setattr__(self, "values", _freeze(v))

    @classmethod
    def from_curves(cls, curves: list[RotationCurve]) -> "CurveSample":
        if not curves:
            raise ValueError("empty sample")
        grid = curves[0].grid
        for c in curves[1:]:
            _require_same_grid(grid, c.grid, "sample curves")
        return cls(grid, np.stack([c.values for c in curves]))

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def curve(self, n: int) -> RotationCurve:
        return RotationCurve(self.grid, self.values[n])


@dataclass(frozen=True, eq=False)
class SpatioTemporalAction:
    """Group element (P, Q, warp) acting by curve -> P curve(warp(t)) Q.

    The warp is a strictly increasing piecewise-linear map of [0, 1] given by
    its knots; knots (u, v) require u and v strictly increasing with
    warp(0) = 0 and warp(1) = 1.
    """

    p: np.ndarray
    q: np.ndarray
    warp_knots: np.ndarray = field(default_factory=lambda: np.array([[0.0, 0.0], [1.0, 1.0]]))

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        so3.check_rotation(p)
        so3.check_rotation(q)
        knots = np.asarray(self.warp_knots, dtype=float)
        if knots.ndim != 2 or knots.shape[1] != 2 or knots.shape[0] < 2:
            raise ValueError("warp_knots must be an (n >= 2, 2) array")
        if np.any(np.diff(knots[:, 0]) <= 0) or np.any(np.diff(knots[:, 1]) <= 0):
            raise ValueError("warp knots must be strictly increasing in both coordinates")
        if not (knots[0, 0] == 0.0 and knots[0, 1] == 0.0
                and knots[-1, 0] == 1.0 and knots[-1, 1] == 1.0):
            raise ValueError("warp must fix the endpoints 0 and 1")
        object.__setattr__(self, "p", _freeze(p))
        object.__setattr__(self, "q", _freeze(q))
        object.__setattr__(self, "warp_knots", _freeze(knots))

    @classmethod
    def identity(cls) -> "SpatioTemporalAction":
        return cls(np.eye(3), np.eye(3))

    def warp(self, t: np.ndarray) -> np.ndarray:
        return np.interp(t, self.warp_knots[:, 0], self.warp_knots[:, 1])

    def compose(self, first: "SpatioTemporalAction") -> "SpatioTemporalAction":
        """Action equal to applying `first`, then self."""
        # (P2, Q2, w2) o (P1, Q1, w1): curve -> P2 P1 curve(w1(w2(t))) Q1 Q2.
        u = np.union1d(self.warp_knots[:, 0], _strictly_increasing_preimage(self, first))
        v = first.warp(self.warp(u))
        return SpatioTemporalAction(self.p @ first.p, first.q @ self.q,
                                    np.column_stack([u, v]))


def _strictly_increasing_preimage(outer: SpatioTemporalAction,
                                  inner: SpatioTemporalAction) -> np.ndarray:
    """Knot u-positions where inner's knots are hit through outer's warp."""
    targets = inner.warp_knots[:, 0]
    return np.interp(targets, outer.warp_knots[:, 1], outer.warp_knots[:, 0])


@dataclass(frozen=True, eq=False)
class ResidualField:
    """Intrinsic residuals of a sample around its pointwise extrinsic mean.

    sample[n, k] holds the algebra coordinates of mean(t_k)^T curve_n(t_k);
    population[k], when a center curve was supplied, those of
    mean(t_k)^T center(t_k).
    """

    grid: TimeGrid
    sample: np.ndarray
    population: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.sample, dtype=float)
        if s.ndim != 3 or s.shape[1] != len(self.grid) or s.shape[2] != 3:
            raise ValueError(f"sample residuals must have shape (N, {len(self.grid)}, 3)")
        object.__setattr__(self, "sample", _freeze(s))
        if self.population is not None:
            p = np.asarray(self.population, dtype=float)
            if p.shape != (len(self.grid), 3):
                raise ValueError(f"population residuals must have shape ({len(self.grid)}, 3)")
            object.__setattr__(self, "population", _freeze(p))

    @property
    def size(self) -> int:
        return self.sample.shape[0]


def pointwise_extrinsic_mean(sample: CurveSample) -> RotationCurve:
    """Projection of the entrywise mean onto SO(3), per grid point.

    Raises DegenerateMean where the nearest rotation is non-unique; for
    samples from a perturbation model this is a vanishing-probability event.
    """
    mean = sample.values.mean(axis=0)
    return RotationCurve(sample.grid, so3.project_to_so3(mean))


def residuals(sample: CurveSample, center: RotationCurve | None = None) -> ResidualField:
    """Intrinsic sample (and optionally population) residuals around the mean."""
    pem = pointwise_extrinsic_mean(sample)
    return _residuals_about(sample, pem, center)


def _residuals_about(sample: CurveSample, pem: RotationCurve,
                     center: RotationCurve | None) -> ResidualField:
    rel = np.einsum("kij,nkil->nkjl", pem.values, sample.values)
    sample_res = so3.log_so3(rel, validate=False)
    population = None
    if center is not None:
        _require_same_grid(sample.grid, center.grid, "sample and center")
        rel0 = np.einsum("kij,kil->kjl", pem.values, center.values)
        population = so3.log_so3(rel0, validate=False)
    return ResidualField(sample.grid, sample_res, population)


def _interpolate_many(curve: RotationCurve, s: np.ndarray) -> np.ndarray:
    """Geodesic interpolation of the curve at stacked parameters s in [0, 1]."""
    s = np.asarray(s, dtype=float)
    if np.any((s < 0.0) | (s > 1.0)):
        raise ValueError("interpolation parameter outside [0, 1]")
    t = curve.grid.t
    k = np.clip(np.searchsorted(t, s, side="right") - 1, 0, len(t) - 2)
    u = (s - t[k]) / (t[k + 1] - t[k])
    R0 = curve.values[k]
    R1 = curve.values[k + 1]
    step = so3.log_so3(np.swapaxes(R0, -1, -2) @ R1, validate=False)
    out = R0 @ so3.exp_so3(u[..., None] * step)
    # Exact values at grid points, including the right endpoint.
    exact = u == 0.0
    if np.any(exact):
        out[exact] = R0[exact]
    exact_hi = u == 1.0
    if np.any(exact_hi):
        out[exact_hi] = R1[exact_hi]
    return out


def geodesic_interpolate(curve: RotationCurve, s: float) -> np.ndarray:
    """Value of the piecewise-geodesic interpolant at s; exact at grid points."""
    return _interpolate_many(curve, np.asarray([s], dtype=float))[0]


def apply_action(curve: RotationCurve, act: SpatioTemporalAction,
                 out_grid: TimeGrid | None = None) -> RotationCurve:
    """Curve t -> P curve(warp(t)) Q, sampled on out_grid (default: own grid)."""
    grid = curve.grid if out_grid is None else out_grid
    warped = act.warp(grid.t)
    vals = _interpolate_many(curve, warped)
    return RotationCurve(grid, act.p @ vals @ act.q)


def apply_action_sample(sample: CurveSample, act: SpatioTemporalAction,
                        out_grid: TimeGrid | None = None) -> CurveSample:
    """apply_action mapped over every curve of a sample."""
    grid = sample.grid if out_grid is None else out_grid
    acted = [apply_action(sample.curve(n), act, grid) for n in range(sample.size)]
    return CurveSample.from_curves(acted)


def curve_length(curve: RotationCurve) -> float:
    """First-order quadrature of the bi-invariant length: sum of chord distances."""
    return float(np.sum(so3.geodesic_distance(curve.values[:-1], curve.values[1:])))


def length_loss(g: RotationCurve, h: RotationCurve) -> tuple[float, float, float]:
    """Intrinsic length loss (delta, delta1, delta2) between two curves.

    delta1 is the length of t -> g(t) h(t)^T, delta2 that of t -> g(t)^T h(t),
    delta their mean.
    """
    _require_same_grid(g.grid, h.grid, "loss arguments")
    right = np.einsum("kij,klj->kil", g.values, h.values)   # g h^T
    left = np.einsum("kji,kjl->kil", g.values, h.values)    # g^T h
    d1 = float(np.sum(np.linalg.norm(
        so3.log_so3(np.swapaxes(right[:-1], -1, -2) @ right[1:], validate=False), axis=-1)))
    d2 = float(np.sum(np.linalg.norm(
        so3.log_so3(np.swapaxes(left[:-1], -1, -2) @ left[1:], validate=False), axis=-1)))
    return 0.5 * (d1 + d2), d1, d2
