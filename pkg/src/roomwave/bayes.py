"""Bayesian plane-wave reconstruction: boundary-informed prior covariance,
posterior factorization, MAP coefficients and predictive mean/variance.

The coefficient prior is zero-mean complex Gaussian with covariance

    Sigma = prior_variance * (I + boundary_weight * G^H G)^{-1},
    G = impedance * Psi + PhiTilde,

i.e. fields whose impedance boundary residual is large are penalized. With
boundary_weight = 0 (or an empty cloud) the prior reduces to the isotropic
ridge/Tikhonov prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import CholeskyFactor, FactorizationError, chol_factor, hermitize
from .geometry import BoundaryCloud
from .planewaves import PlaneWaveDictionary, build_phi, build_phi_tilde, build_psi

__all__ = [
    "Hyperparameters",
    "PriorCovariance",
    "PosteriorModel",
    "build_sigma_alpha",
    "prior_covariance_from_matrices",
    "build_posterior",
    "map_coefficients",
    "predict",
    "FactorizationError",
]

# tolerated negative predictive variance, relative to the prior variance
VARIANCE_CLAMP_REL = 1e-8
VARIANCE_CLAMP_ABS = 1e-10


@dataclass(frozen=True)
class Hyperparameters:
    """Model hyperparameters.

    noise_variance   sigma^2 > 0, measurement noise power
    prior_variance   sigma_alpha^2 > 0, coefficient prior scale
    boundary_weight  mu >= 0, strength of the boundary term in the prior
    impedance        beta, complex specific impedance shared by all boundary
                     points
    """

    noise_variance: float
    prior_variance: float
    boundary_weight: float
    impedance: complex

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be > 0")
        if not self.prior_variance > 0:
            raise ValueError("prior_variance must be > 0")
        if self.boundary_weight < 0:
            raise ValueError("boundary_weight must be >= 0")


class PriorCovariance:
    """Coefficient prior covariance, held through the Cholesky factor of
    I + mu * G^H G so that products with Sigma are triangular solves."""

    def __init__(self, scale: float, factor: CholeskyFactor):
        self.scale = scale
        self.factor = factor

    @property
    def dim(self) -> int:
        return self.factor.dim

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Sigma @ x."""
        return self.scale * self.factor.solve(x)

    @property
    def matrix(self) -> np.ndarray:
        """Dense Sigma (P x P); prefer apply() for products."""
        return self.scale * self.factor.inverse()


def prior_covariance_from_matrices(psi: np.ndarray, phi_tilde: np.ndarray,
                                   hp: Hyperparameters) -> PriorCovariance:
    """Prior covariance from prebuilt boundary matrices (B x P each)."""
    if psi.shape != phi_tilde.shape:
        raise ValueError("Psi and PhiTilde must have equal shapes")
    p = psi.shape[1]
    a = np.eye(p, dtype=complex)
    if psi.shape[0] and hp.boundary_weight > 0:
        g = hp.impedance * psi + phi_tilde
        a += hp.boundary_weight * hermitize(g.conj().T @ g)
    return PriorCovariance(hp.prior_variance, chol_factor(a))


def build_sigma_alpha(dictionary: PlaneWaveDictionary, cloud: BoundaryCloud,
                      hp: Hyperparameters) -> PriorCovariance:
    """Boundary-informed prior covariance for the dictionary coefficients."""
    return prior_covariance_from_matrices(
        build_psi(dictionary, cloud), build_phi_tilde(dictionary, cloud), hp)


class PosteriorModel:
    """Posterior state: factorized Q = sigma^2 I + Phi Sigma Phi^H together
    with xi = Q^{-1} y and the cached cross-covariance Sigma Phi^H."""

    def __init__(self, dictionary: PlaneWaveDictionary, hp: Hyperparameters,
                 prior: PriorCovariance, phi: np.ndarray, y: np.ndarray,
                 cross: np.ndarray, q_factor: CholeskyFactor | None,
                 xi: np.ndarray):
        self.dictionary = dictionary
        self.hyperparameters = hp
        self.prior = prior
        self.phi = phi
        self.y = y
        self.cross = cross          # Sigma Phi^H, (P, M)
        self.q_factor = q_factor    # None only for M = 0
        self.xi = xi

    @property
    def num_measurements(self) -> int:
        return len(self.y)


def build_posterior(y, phi: np.ndarray, prior: PriorCovariance,
                    hp: Hyperparameters,
                    dictionary: PlaneWaveDictionary) -> PosteriorModel:
    """Factorize Q and precompute everything prediction needs."""
    y = np.asarray(y, dtype=complex).reshape(-1)
    if phi.shape != (len(y), prior.dim):
        raise ValueError(f"Phi shape {phi.shape} inconsistent with "
                         f"M={len(y)}, P={prior.dim}")
    cross = prior.apply(phi.conj().T)
    if len(y) == 0:
        return PosteriorModel(dictionary, hp, prior, phi, y, cross, None,
                              np.zeros(0, dtype=complex))
    q = hp.noise_variance * np.eye(len(y), dtype=complex) + hermitize(phi @ cross)
    q_factor = chol_factor(q)
    xi = q_factor.solve(y)
    return PosteriorModel(dictionary, hp, prior, phi, y, cross, q_factor, xi)


def map_coefficients(posterior: PosteriorModel) -> np.ndarray:
    """MAP coefficient vector via the dual form Sigma Phi^H Q^{-1} y."""
    return posterior.cross @ posterior.xi


def predict(posterior: PosteriorModel, points) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mean and variance of the field at the given points.

    The mean is phi(r)^T alpha_MAP; the variance is the prior variance
    phi^T Sigma phi* minus the information gained from the measurements.
    Tiny negative variances from roundoff are clamped to zero; a negative
    excursion beyond 1e-8 of the prior variance raises FactorizationError.
    """
    phi_r = build_phi(posterior.dictionary, points)
    mean = phi_r @ map_coefficients(posterior)

    sig_phi = posterior.prior.apply(phi_r.conj().T)        # Sigma phi*, (P, J)
    prior_var = np.einsum("jp,pj->j", phi_r, sig_phi).real
    if posterior.num_measurements == 0:
        return mean, prior_var

    t = phi_r @ posterior.cross                            # phi^T Sigma Phi^H, (J, M)
    reduction = np.einsum("jm,mj->j", t, posterior.q_factor.solve(t.conj().T)).real
    variance = prior_var - reduction

    tolerance = VARIANCE_CLAMP_REL * np.maximum(prior_var, 0.0) + VARIANCE_CLAMP_ABS
    if np.any(variance < -tolerance):
        worst = float(np.min(variance))
        raise FactorizationError(
            f"predictive variance {worst:.3e} below the numerical floor")
    return mean, np.maximum(variance, 0.0)
