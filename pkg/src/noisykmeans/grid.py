"""Rectangular 2-D lattices: construction, linear binning, cell integration.

Everything downstream (spectral transforms, density estimation, the
grid-based clustering loop) works on the `Grid2D` type defined here.
Axis counts are restricted to powers of two so the Fourier stages can
assume radix-2 sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundsPolicy",
    "Grid2D",
    "integrate_cells",
    "linear_bin",
    "make_grid",
]


def _is_pow2(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Values attached to the nodes of a rectangular lattice.

    Node ``(a, b)`` sits at ``origin + (a * spacing[0], b * spacing[1])``
    and carries ``values[a, b]`` (row-major, axis 1 first).  Counts per
    axis must be powers of two, at least 4.  Instances are frozen and the
    value array is marked read-only on construction.
    """

    origin: tuple[float, float]
    spacing: tuple[float, float]
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {vals.shape}")
        m1, m2 = vals.shape
        if m1 < 4 or m2 < 4 or not (_is_pow2(m1) and _is_pow2(m2)):
            raise ValueError(
                f"axis counts must be powers of two >= 4, got {(m1, m2)}"
            )
        if not (np.isfinite(self.spacing).all() and min(self.spacing) > 0.0):
            raise ValueError(f"spacing must be finite and positive, got {self.spacing}")
        if not np.isfinite(self.origin).all():
            raise ValueError(f"origin must be finite, got {self.origin}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "spacing", (float(self.spacing[0]), float(self.spacing[1])))

    @property
    def counts(self) -> tuple[int, int]:
        m1, m2 = self.values.shape
        return (int(m1), int(m2))

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates along each axis, as two 1-D arrays."""
        m1, m2 = self.counts
        return (
            self.origin[0] + self.spacing[0] * np.arange(m1),
            self.origin[1] + self.spacing[1] * np.arange(m2),
        )

    def diagonal(self) -> float:
        """Length of the diagonal of the grid rectangle."""
        m1, m2 = self.counts
        return float(np.hypot((m1 - 1) * self.spacing[0], (m2 - 1) * self.spacing[1]))

    def with_values(self, values: np.ndarray) -> "Grid2D":
        """New grid with the same geometry and different node values."""
        return Grid2D(self.origin, self.spacing, values)


@dataclass(frozen=True)
class BoundsPolicy:
    """How the grid rectangle is derived from a data cloud.

    The automatic rectangle is the data bounding box padded by
    ``margin_fraction`` of the box side length on every side.  An axis
    whose data collapse to a single value is widened to half a unit each
    way before the margin is applied.  ``explicit_bounds``, when given as
    ``((lo1, hi1), (lo2, hi2))``, overrides the automatic rectangle
    entirely.
    """

    margin_fraction: float = 0.15
    explicit_bounds: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.margin_fraction) and 0.0 <= self.margin_fraction <= 1.0):
            raise ValueError(
                f"margin_fraction must lie in [0, 1], got {self.margin_fraction}"
            )
        if self.explicit_bounds is not None:
            for lo, hi in self.explicit_bounds:
                if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
                    raise ValueError(
                        f"explicit bounds need hi > lo per axis, got {self.explicit_bounds}"
                    )


def _as_points(data: np.ndarray, what: str = "points") -> np.ndarray:
    pts = np.asarray(data, dtype=float)
    if pts.size == 0:
        raise ValueError(f"{what} must be a nonempty (n, 2) array")
    pts = np.atleast_2d(pts)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"{what} must have shape (n, 2), got {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError(f"{what} must be finite")
    return pts


def make_grid(
    data: np.ndarray,
    counts: tuple[int, int],
    policy: BoundsPolicy | None = None,
) -> Grid2D:
    """Build a zero-valued grid covering ``data`` under ``policy``.

    Node 0 of each axis sits on the lower bound and node ``m - 1`` on the
    upper bound, so ``spacing = (hi - lo) / (m - 1)``.
    """
    pts = _as_points(data, "data")
    if policy is None:
        policy = BoundsPolicy()
    if policy.explicit_bounds is not None:
        (lo1, hi1), (lo2, hi2) = policy.explicit_bounds
        lo = np.array([lo1, lo2])
        hi = np.array([hi1, hi2])
    else:
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        for v in range(2):
            if hi[v] == lo[v]:
                lo[v] -= 0.5
                hi[v] += 0.5
        span = hi - lo
        lo = lo - policy.margin_fraction * span
        hi = hi + policy.margin_fraction * span
    m1, m2 = counts
    spacing = ((hi[0] - lo[0]) / (m1 - 1), (hi[1] - lo[1]) / (m2 - 1))
    return Grid2D((lo[0], lo[1]), spacing, np.zeros((m1, m2)))


def linear_bin(grid: Grid2D, points: np.ndarray) -> Grid2D:
    """Spread unit mass per point over the four surrounding nodes.

    Each point contributes bilinear weights (products of one minus the
    normalized distance per axis) to the corners of its cell, so the total
    mass and the first moment of interior points are preserved exactly.
    Points outside the rectangle are clamped to the nearest boundary node
    and still contribute unit mass.
    """
    pts = _as_points(points)
    m1, m2 = grid.counts
    out = np.zeros((m1, m2))
    u1 = np.clip((pts[:, 0] - grid.origin[0]) / grid.spacing[0], 0.0, m1 - 1.0)
    u2 = np.clip((pts[:, 1] - grid.origin[1]) / grid.spacing[1], 0.0, m2 - 1.0)
    # floor, then cap so the upper corner stays a valid node
    a = np.minimum(u1.astype(np.intp), m1 - 2)
    b = np.minimum(u2.astype(np.intp), m2 - 2)
    f = u1 - a
    g = u2 - b
    np.add.at(out, (a, b), (1.0 - f) * (1.0 - g))
    np.add.at(out, (a, b + 1), (1.0 - f) * g)
    np.add.at(out, (a + 1, b), f * (1.0 - g))
    np.add.at(out, (a + 1, b + 1), f * g)
    return grid.with_values(out)


def integrate_cells(grid: Grid2D) -> float:
    """Riemann sum of the node values: ``sum(values) * spacing1 * spacing2``."""
    return float(grid.values.sum() * grid.spacing[0] * grid.spacing[1])
