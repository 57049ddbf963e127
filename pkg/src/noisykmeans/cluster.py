"""Center-based clustering: a density-weighted variant for noisy data and
a plain Lloyd baseline on raw points.

The noisy variant alternates between assigning grid cells to their
nearest center and moving each center to the density-weighted mean of its
cells, which drives the deconvolution distortion (integrated squared
distance to the nearest center, weighted by the estimated latent density)
downhill.  Lloyd's algorithm does the same with the empirical point
masses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .density import DensityEstimate, estimate_density_fft
from .grid import BoundsPolicy, _as_points
from .spectral import Bandwidth, NoiseModel

__all__ = [
    "Codebook",
    "FitResult",
    "assign_cells",
    "assign_points",
    "deconv_distortion",
    "empirical_distortion",
    "kmeans_on_density",
    "lloyd_kmeans_fit",
    "noisy_kmeans_fit",
    "update_centers",
]


@dataclass(frozen=True)
class Codebook:
    """Ordered collection of k cluster centers in the plane."""

    centers: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.centers, dtype=float)
        c = np.atleast_2d(c)
        if c.ndim != 2 or c.shape[1] != 2 or c.shape[0] < 1:
            raise ValueError(f"centers must have shape (k, 2) with k >= 1, got {c.shape}")
        if not np.isfinite(c).all():
            raise ValueError("centers must be finite")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return int(self.centers.shape[0])


@dataclass
class FitResult:
    """Outcome of one clustering run.

    ``distortion_trace`` holds the objective value after every completed
    iteration; ``converged`` is True when the largest center displacement
    fell to the tolerance before the iteration cap.
    """

    codebook: Codebook
    iterations: int
    distortion_trace: list[float] = field(default_factory=list)
    converged: bool = False
    reseed_events: int = 0


def _axis_sq_dists(density: DensityEstimate, codebook: Codebook) -> np.ndarray:
    """Squared node-to-center distances, shape (m1, m2, k)."""
    x1, x2 = density.grid.axes()
    c = codebook.centers
    a1 = np.square(x1[:, None] - c[None, :, 0])
    a2 = np.square(x2[:, None] - c[None, :, 1])
    return a1[:, None, :] + a2[None, :, :]


def assign_cells(density: DensityEstimate, codebook: Codebook) -> np.ndarray:
    """Index of the nearest center for every grid node; ties go to the
    lowest center index."""
    return np.argmin(_axis_sq_dists(density, codebook), axis=2)


def update_centers(
    density: DensityEstimate, assignment: np.ndarray, codebook: Codebook
) -> tuple[Codebook, int]:
    """Move each center to the density-weighted mean of its assigned cells.

    A center whose cells carry zero total mass is reseeded to the
    highest-density node among nodes farther than one grid spacing from
    every other center (falling back to the global density argmax when no
    node qualifies).  Returns the new codebook and the number of reseeds.
    """
    grid = density.grid
    vals = grid.values
    if vals.min() < 0.0:
        raise ValueError("density must be clipped to nonnegative values")
    if vals.sum() <= 0.0:
        raise ValueError("density is identically zero")
    m1, m2 = grid.counts
    k = codebook.k
    if assignment.shape != (m1, m2):
        raise ValueError(f"assignment shape {assignment.shape} != grid shape {(m1, m2)}")
    x1, x2 = grid.axes()
    flat = assignment.ravel()
    w = vals.ravel()
    mass = np.bincount(flat, weights=w, minlength=k)
    s1 = np.bincount(flat, weights=w * np.repeat(x1, m2), minlength=k)
    s2 = np.bincount(flat, weights=w * np.tile(x2, m1), minlength=k)

    centers = np.array(codebook.centers, dtype=float)
    pos = mass > 0.0
    centers[pos, 0] = s1[pos] / mass[pos]
    centers[pos, 1] = s2[pos] / mass[pos]

    reseeds = 0
    if not pos.all():
        nx1 = np.repeat(x1, m2)
        nx2 = np.tile(x2, m1)
        far = max(grid.spacing)
        for j in np.flatnonzero(~pos):
            others = np.delete(np.arange(k), j)
            d2 = np.full(m1 * m2, np.inf)
            for o in others:
                d2 = np.minimum(
                    d2, np.square(nx1 - centers[o, 0]) + np.square(nx2 - centers[o, 1])
                )
            eligible = d2 > far * far
            masked = np.where(eligible, w, -np.inf)
            if not np.isfinite(masked.max()):
                masked = w
            node = int(np.argmax(masked))
            centers[j] = (nx1[node], nx2[node])
            reseeds += 1
    return Codebook(centers), reseeds


def deconv_distortion(density: DensityEstimate, codebook: Codebook) -> float:
    """Integral of the squared distance to the nearest center, weighted by
    the density values, as a Riemann sum over the grid cells."""
    d2 = _axis_sq_dists(density, codebook).min(axis=2)
    d1, dd2 = density.grid.spacing
    return float((d2 * density.grid.values).sum() * d1 * dd2)


def _max_displacement(old: Codebook, new: Codebook) -> float:
    return float(np.sqrt(np.square(new.centers - old.centers).sum(axis=1)).max())


def kmeans_on_density(
    density: DensityEstimate,
    init: Codebook,
    max_iter: int = 100,
    tol_factor: float = 1e-6,
) -> FitResult:
    """Alternate cell assignment and density-weighted center updates.

    Stops when the largest center displacement in one iteration is at most
    ``tol_factor`` times the grid diagonal, or after ``max_iter``
    iterations.  Each iteration's update can only lower the objective, so
    the recorded trace is nonincreasing.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    tol = tol_factor * density.grid.diagonal()
    codebook = init
    trace: list[float] = []
    reseeds = 0
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        assignment = assign_cells(density, codebook)
        new_codebook, r = update_centers(density, assignment, codebook)
        reseeds += r
        trace.append(deconv_distortion(density, new_codebook))
        moved = _max_displacement(codebook, new_codebook)
        codebook = new_codebook
        if moved <= tol:
            converged = True
            break
    return FitResult(codebook, iterations, trace, converged, reseeds)


def noisy_kmeans_fit(
    obs: np.ndarray,
    model: NoiseModel,
    bandwidth: Bandwidth,
    k: int,
    init: Codebook,
    counts: tuple[int, int] = (128, 128),
    policy: BoundsPolicy | None = None,
    max_iter: int = 100,
    tol_factor: float = 1e-6,
) -> FitResult:
    """Cluster noisy observations through their deconvolution density.

    Estimates the latent density on a grid covering the observations, then
    runs the density-weighted center iteration from ``init``.
    """
    if init.k != k:
        raise ValueError(f"init has {init.k} centers, expected k={k}")
    density = estimate_density_fft(obs, model, bandwidth, counts, policy)
    return kmeans_on_density(density, init, max_iter=max_iter, tol_factor=tol_factor)


def assign_points(points: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Index of the nearest center per point; ties go to the lowest index."""
    pts = _as_points(points)
    c = codebook.centers
    d2 = np.square(pts[:, None, 0] - c[None, :, 0]) + np.square(
        pts[:, None, 1] - c[None, :, 1]
    )
    return np.argmin(d2, axis=1)


def empirical_distortion(points: np.ndarray, codebook: Codebook) -> float:
    """Mean squared distance from each point to its nearest center."""
    pts = _as_points(points)
    c = codebook.centers
    d2 = np.square(pts[:, None, 0] - c[None, :, 0]) + np.square(
        pts[:, None, 1] - c[None, :, 1]
    )
    return float(d2.min(axis=1).mean())


def lloyd_kmeans_fit(
    points: np.ndarray,
    k: int,
    init: Codebook,
    max_iter: int = 100,
    tol_factor: float = 1e-6,
) -> FitResult:
    """Classical Lloyd iteration on raw points.

    Empty clusters are reseeded to the point farthest from its nearest
    center, so the empirical distortion trace stays nonincreasing.  The
    stopping tolerance is ``tol_factor`` times the diagonal of the point
    bounding box.  Requires at least ``k`` distinct points.
    """
    pts = _as_points(points)
    if init.k != k:
        raise ValueError(f"init has {init.k} centers, expected k={k}")
    if len(np.unique(pts, axis=0)) < k:
        raise ValueError(f"need at least k={k} distinct points")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    span = pts.max(axis=0) - pts.min(axis=0)
    tol = tol_factor * float(np.hypot(span[0], span[1]))

    codebook = init
    trace: list[float] = []
    reseeds = 0
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        labels = assign_points(pts, codebook)
        mass = np.bincount(labels, minlength=k).astype(float)
        s1 = np.bincount(labels, weights=pts[:, 0], minlength=k)
        s2 = np.bincount(labels, weights=pts[:, 1], minlength=k)
        centers = np.array(codebook.centers, dtype=float)
        pos = mass > 0.0
        centers[pos, 0] = s1[pos] / mass[pos]
        centers[pos, 1] = s2[pos] / mass[pos]
        for j in np.flatnonzero(~pos):
            # the stale center j is leaving the codebook, so measure
            # distances to the remaining centers only
            rest = np.delete(centers, j, axis=0)
            d2 = np.square(pts[:, None, 0] - rest[None, :, 0]) + np.square(
                pts[:, None, 1] - rest[None, :, 1]
            )
            farthest = int(np.argmax(d2.min(axis=1)))
            centers[j] = pts[farthest]
            reseeds += 1
        new_codebook = Codebook(centers)
        trace.append(empirical_distortion(pts, new_codebook))
        moved = _max_displacement(codebook, new_codebook)
        codebook = new_codebook
        if moved <= tol:
            converged = True
            break
    return FitResult(codebook, iterations, trace, converged, reseeds)
