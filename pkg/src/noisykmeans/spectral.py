"""Fourier-domain machinery for kernel deconvolution.

Holds the 2-D DFT wrappers, the Fourier transform of the smoothing
kernel, characteristic functions of the supported noise laws, and the
combined deconvolution multiplier applied to binned data in frequency
space.

Conventions: the forward transform is the unnormalized sum with kernel
``exp(-i <t, x>)`` and the inverse carries the ``1 / (m1 * m2)`` factor,
matching ``numpy.fft``.  Frequencies on a grid with spacing ``d`` are the
signed angular frequencies ``2 * pi * fftfreq(m, d)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import Grid2D

__all__ = [
    "Bandwidth",
    "NOISE_KINDS",
    "NoiseModel",
    "Spectrum2D",
    "angular_frequencies",
    "deconv_multiplier",
    "dft2_forward",
    "dft2_inverse",
    "kernel_ft",
    "noise_cf",
    "noise_cf_axis",
]

logger = logging.getLogger(__name__)

NOISE_KINDS = ("none", "gaussian_diagonal", "laplace_diagonal")


@dataclass(frozen=True)
class NoiseModel:
    """Additive measurement-error law, seen through its characteristic function.

    ``scale`` holds the per-axis standard deviations (gaussian) or scale
    parameters (laplace); it is ignored for kind ``"none"``.  Only
    symmetric diagonal laws are supported, so the characteristic function
    is real, even and strictly positive, and a zero scale on an axis
    degenerates to no noise on that axis.
    """

    kind: str = "none"
    scale: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        s1, s2 = self.scale
        if not (np.isfinite(s1) and np.isfinite(s2) and s1 >= 0.0 and s2 >= 0.0):
            raise ValueError(f"scale must be finite and >= 0 per axis, got {self.scale}")
        object.__setattr__(self, "scale", (float(s1), float(s2)))

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls("none", (0.0, 0.0))

    @classmethod
    def gaussian(cls, s1: float, s2: float) -> "NoiseModel":
        return cls("gaussian_diagonal", (s1, s2))

    @classmethod
    def laplace(cls, s1: float, s2: float) -> "NoiseModel":
        return cls("laplace_diagonal", (s1, s2))


@dataclass(frozen=True)
class Bandwidth:
    """Per-axis smoothing scale, strictly positive and finite."""

    lam1: float
    lam2: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lam1) and np.isfinite(self.lam2)):
            raise ValueError(f"bandwidth must be finite, got {(self.lam1, self.lam2)}")
        if self.lam1 <= 0.0 or self.lam2 <= 0.0:
            raise ValueError(
                f"bandwidth must be positive per axis, got {(self.lam1, self.lam2)}"
            )
        object.__setattr__(self, "lam1", float(self.lam1))
        object.__setattr__(self, "lam2", float(self.lam2))

    @property
    def pair(self) -> tuple[float, float]:
        return (self.lam1, self.lam2)


@dataclass(frozen=True)
class Spectrum2D:
    """Complex DFT coefficients on a power-of-two 2-D lattice."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        ent = np.asarray(self.entries, dtype=complex)
        if ent.ndim != 2:
            raise ValueError(f"entries must be 2-D, got shape {ent.shape}")
        m1, m2 = ent.shape
        if m1 < 4 or m2 < 4 or (m1 & (m1 - 1)) or (m2 & (m2 - 1)):
            raise ValueError(
                f"axis counts must be powers of two >= 4, got {(m1, m2)}"
            )
        object.__setattr__(self, "entries", ent)

    @property
    def counts(self) -> tuple[int, int]:
        m1, m2 = self.entries.shape
        return (int(m1), int(m2))


def angular_frequencies(
    counts: tuple[int, int], spacing: tuple[float, float]
) -> tuple[np.ndarray, np.ndarray]:
    """Signed angular frequencies represented by each DFT index.

    Index ``a`` on an axis with ``m`` nodes and spacing ``d`` stands for
    ``2 * pi * a' / (m * d)`` where ``a'`` is the signed alias of ``a`` in
    ``[-m/2, m/2)``.
    """
    w1 = 2.0 * np.pi * np.fft.fftfreq(counts[0], d=spacing[0])
    w2 = 2.0 * np.pi * np.fft.fftfreq(counts[1], d=spacing[1])
    return w1, w2


def dft2_forward(grid: Grid2D) -> Spectrum2D:
    """Unnormalized forward 2-D DFT of the grid values."""
    return Spectrum2D(np.fft.fft2(grid.values))


def dft2_inverse(spectrum: Spectrum2D) -> np.ndarray:
    """Inverse 2-D DFT, returning the real part of the node values.

    The imaginary residue of a spectrum that came from real data is pure
    rounding noise; its magnitude is logged at debug level before being
    dropped.
    """
    z = np.fft.ifft2(spectrum.entries)
    residue = float(np.abs(z.imag).max()) if z.size else 0.0
    logger.debug("dft2_inverse: dropping imaginary residue %.3e", residue)
    return np.ascontiguousarray(z.real)


def kernel_ft(t: np.ndarray | float) -> np.ndarray | float:
    """Fourier transform of the 1-D smoothing kernel: ``(1 - t^2)^3`` on [-1, 1].

    Compactly supported, equal to 1 at 0, and even.  The 2-D kernel is the
    product of this transform evaluated per axis.
    """
    base = 1.0 - np.square(np.minimum(np.abs(t), 1.0))
    return base * base * base


def noise_cf_axis(model: NoiseModel, axis: int, t: np.ndarray | float) -> np.ndarray:
    """Characteristic function factor of the noise law along one axis."""
    if axis not in (0, 1):
        raise ValueError(f"axis must be 0 or 1, got {axis}")
    s = model.scale[axis]
    t = np.asarray(t, dtype=float)
    if model.kind == "gaussian_diagonal":
        return np.exp(-0.5 * (s * s) * np.square(t))
    if model.kind == "laplace_diagonal":
        return 1.0 / (1.0 + (s * s) * np.square(t))
    return np.ones_like(t)


def noise_cf(model: NoiseModel, t1: np.ndarray | float, t2: np.ndarray | float) -> np.ndarray:
    """Characteristic function of the 2-D noise law at frequencies ``(t1, t2)``.

    Diagonal laws factorize across axes; the result broadcasts ``t1``
    against ``t2`` and is always real and strictly positive.
    """
    return noise_cf_axis(model, 0, t1) * noise_cf_axis(model, 1, t2)


def deconv_multiplier(
    model: NoiseModel,
    bandwidth: Bandwidth,
    t1: np.ndarray | float,
    t2: np.ndarray | float,
) -> np.ndarray:
    """Frequency response of deconvolution smoothing at bandwidth ``bandwidth``.

    Equals ``kernel_ft(lam1 * t1) * kernel_ft(lam2 * t2) / noise_cf(t1, t2)``,
    so it is 1 at the origin and vanishes outside the compact rectangle
    ``|lam_v * t_v| <= 1``.  The division is skipped wherever the kernel
    factor is already zero, which keeps the result finite even when the
    noise characteristic function underflows far outside the support.
    """
    k = np.asarray(
        kernel_ft(bandwidth.lam1 * np.asarray(t1, dtype=float))
        * kernel_ft(bandwidth.lam2 * np.asarray(t2, dtype=float))
    )
    cf = np.broadcast_to(np.asarray(noise_cf(model, t1, t2)), k.shape)
    out = np.zeros_like(k)
    np.divide(k, cf, out=out, where=k != 0.0)
    if out.ndim == 0:
        return float(out)
    return out
