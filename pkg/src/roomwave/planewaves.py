"""Plane-wave dictionary: near-uniform directions on the sphere and the
basis matrices used by the measurement and boundary models.

A dictionary holds P unit propagation directions and a wavenumber k; the
basis atoms are e^{i k_p . r} with k_p = k * direction_p. The spatial kernel
is paired with the e^{-i omega t} time convention, so e^{+ikd}/(4 pi d) is
the matching outgoing point-source field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryCloud, _as_points

__all__ = [
    "PlaneWaveDictionary",
    "wavenumber",
    "fibonacci_directions",
    "build_phi",
    "build_psi",
    "build_phi_tilde",
    "evaluate_field",
]

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def wavenumber(frequency_hz: float, speed_of_sound: float) -> float:
    """k = 2*pi*f / c in rad/m."""
    if frequency_hz <= 0 or speed_of_sound <= 0:
        raise ValueError("frequency and speed of sound must be positive")
    return 2.0 * np.pi * frequency_hz / speed_of_sound


def fibonacci_directions(count: int) -> np.ndarray:
    """Deterministic Fibonacci lattice of `count` unit vectors.

    Uses the half-offset variant: z_i = 1 - 2(i+0.5)/P with azimuth
    i * pi * (3 - sqrt(5)), which keeps points off the poles.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    i = np.arange(count)
    z = 1.0 - 2.0 * (i + 0.5) / count
    azimuth = i * GOLDEN_ANGLE
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.stack([rho * np.cos(azimuth), rho * np.sin(azimuth), z], axis=1)


@dataclass(frozen=True)
class PlaneWaveDictionary:
    """P plane-wave atoms: unit directions (P, 3) and a wavenumber k > 0."""

    wavenumber: float
    directions: np.ndarray

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=float).reshape(-1, 3)
        if self.wavenumber <= 0:
            raise ValueError("wavenumber must be positive")
        if len(dirs) < 1:
            raise ValueError("need at least one direction")
        if np.max(np.abs(np.linalg.norm(dirs, axis=1) - 1.0)) > 1e-12:
            raise ValueError("directions must be unit vectors")
        object.__setattr__(self, "directions", dirs)

    @classmethod
    def for_frequency(cls, frequency_hz: float, count: int,
                      speed_of_sound: float = 343.0) -> "PlaneWaveDictionary":
        return cls(wavenumber(frequency_hz, speed_of_sound),
                   fibonacci_directions(count))

    @property
    def size(self) -> int:
        return len(self.directions)

    @property
    def wave_vectors(self) -> np.ndarray:
        """k_p = k * direction_p, shape (P, 3)."""
        return self.wavenumber * self.directions

    def __len__(self) -> int:
        return self.size


def build_phi(dictionary: PlaneWaveDictionary, points) -> np.ndarray:
    """Measurement matrix, entry (m, p) = exp(i k_p . r_m). Shape (M, P)."""
    pts = _as_points(points)
    return np.exp(1j * (pts @ dictionary.wave_vectors.T))


def build_psi(dictionary: PlaneWaveDictionary, cloud: BoundaryCloud) -> np.ndarray:
    """Normal-derivative matrix at the boundary cloud.

    Entry (b, p) = i (k_p . n_b) exp(i k_p . r_b): the derivative of atom p
    along the outward normal at boundary point b. Shape (B, P).
    """
    kvecs = dictionary.wave_vectors
    phase = np.exp(1j * (cloud.points @ kvecs.T))
    return 1j * (cloud.normals @ kvecs.T) * phase


def build_phi_tilde(dictionary: PlaneWaveDictionary, cloud: BoundaryCloud) -> np.ndarray:
    """Pressure part of the impedance boundary operator.

    Entry (b, p) = i k exp(i k_p . r_b). Shape (B, P).
    """
    kvecs = dictionary.wave_vectors
    return 1j * dictionary.wavenumber * np.exp(1j * (cloud.points @ kvecs.T))


def evaluate_field(dictionary: PlaneWaveDictionary, coefficients, points) -> np.ndarray:
    """Field u(r) = sum_p alpha_p exp(i k_p . r) at the given points."""
    alpha = np.asarray(coefficients)
    if alpha.shape != (dictionary.size,):
        raise ValueError(
            f"expected {dictionary.size} coefficients, got shape {alpha.shape}")
    return build_phi(dictionary, points) @ alpha
