"""Fixed-order polynomial model with a Gaussian naturalness prior.

For degree ``M`` the LECs ``a_0..a_M`` get independent ``N(0, sigma_a**2)``
priors.  With the weighted moment matrix ``A``, vector ``b`` and scalar ``C``
the augmented chi-square is ``a^T A_aug a - 2 b.a + C`` with
``A_aug = A + sigma_a**-2 I``; everything below is solved in the eigenbasis
of ``A`` so one decomposition serves the posterior, the determinant and the
quadratic-form chi-square.

Marginal likelihoods drop every constant that depends on neither ``M`` nor
``sigma_a``; only ratios and normalized weights are meaningful.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .toy_functions import Dataset

SINGULAR_RTOL = 1e-12


class SingularDesignError(ValueError):
    """Path that needs ``A^{-1}`` was called on a singular design."""


def vandermonde(x, M: int) -> np.ndarray:
    """Rows ``[1, x, x^2, ..., x^M]``."""
    return np.vander(np.atleast_1d(np.asarray(x, dtype=float)), M + 1, increasing=True)


@dataclass(frozen=True)
class DesignSystem:
    M: int
    A: np.ndarray
    b: np.ndarray
    C: float
    eigvals: np.ndarray        # Delta_i, ascending
    O: np.ndarray              # rows are eigenvectors: A = O^T diag(Delta) O
    singular: bool
    alpha0: np.ndarray | None  # unaugmented least-squares minimizer
    chi2_min: float | None
    x: np.ndarray
    d: np.ndarray
    sigma: np.ndarray

    @property
    def n_params(self) -> int:
        return self.M + 1

    @property
    def condition_number(self) -> float:
        lo = self.eigvals[0]
        return float("inf") if lo <= 0 else float(self.eigvals[-1] / lo)

    def chi2(self, a) -> np.ndarray:
        """Plain data chi-square for coefficient vector(s) ``a`` (columns)."""
        a = np.asarray(a, dtype=float)
        resid = (self.d[:, None] - vandermonde(self.x, self.M) @ a.reshape(self.n_params, -1))
        out = np.sum((resid / self.sigma[:, None]) ** 2, axis=0)
        return out if a.ndim > 1 else float(out[0])


def build_design(dataset: Dataset, M: int) -> DesignSystem:
    """Moment matrices plus the eigenbasis of ``A``.

    ``A = W^T W`` with ``W`` the noise-weighted Vandermonde matrix, so the
    eigenpairs of ``A`` come from an SVD of ``W``: squared singular values
    keep their relative accuracy where ``eigh(A)`` would not (``M = 6`` on
    ``[0, 1/pi]`` has ``cond(A) ~ 1e13``).
    """
    if M < 0:
        raise ValueError("M must be >= 0")
    x, d, s = dataset.x, dataset.d, dataset.sigma
    X = vandermonde(x, M) if x.size else np.zeros((0, M + 1))
    W = X / s[:, None]
    A = W.T @ W
    A = 0.5 * (A + A.T)
    b = W.T @ (d / s)
    C = float(np.sum((d / s) ** 2))
    if W.shape[0]:
        _, sv, Vt = np.linalg.svd(W, full_matrices=True)
    else:
        sv, Vt = np.zeros(0), np.eye(M + 1)
    w = np.zeros(M + 1)
    w[: sv.size] = sv**2
    order = np.argsort(w, kind="stable")
    w, O = w[order], Vt[order]
    sv_max = np.sqrt(w[-1])
    # threshold on singular values of W, i.e. eigenvalue ratio SINGULAR_RTOL**2
    singular = bool(sv_max <= 0 or np.sqrt(w[0]) <= SINGULAR_RTOL * sv_max)
    alpha0 = chi2_min = None
    if not singular:
        alpha0 = O.T @ ((O @ b) / w)
        resid = (d - X @ alpha0) / s
        chi2_min = float(resid @ resid)
    for arr in (A, b, w, O, x, d, s):
        if arr.flags.writeable:
            arr.setflags(write=False)
    return DesignSystem(M, A, b, C, w, O, singular, alpha0, chi2_min, x, d, s)


@dataclass(frozen=True)
class LecPosterior:
    M: int
    sigma_a: float
    mean: np.ndarray
    cov: np.ndarray
    chi2_aug_min: float
    chi2_aug_min_quadratic: float | None
    log_det_A_aug: float

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "sigma_a": self.sigma_a,
            "mean": [float(v) for v in self.mean],
            "cov": [[float(v) for v in row] for row in self.cov],
            "chi2_aug_min": self.chi2_aug_min,
            "log_det_A_aug": self.log_det_A_aug,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _check_sigma(sigma_a) -> float:
    sigma_a = float(sigma_a)
    if not sigma_a > 0 or not np.isfinite(sigma_a):
        raise ValueError(f"sigma_a must be finite and > 0, got {sigma_a!r}")
    return sigma_a


def chi2_aug(ds: DesignSystem, a, sigma_a: float):
    """Augmented chi-square evaluated directly from residuals and the prior term."""
    a = np.asarray(a, dtype=float)
    prior = np.sum(a.reshape(ds.n_params, -1) ** 2, axis=0) / sigma_a**2
    out = np.atleast_1d(ds.chi2(a.reshape(ds.n_params, -1))) + prior
    return out if a.ndim > 1 else float(out[0])


def lec_posterior(ds: DesignSystem, sigma_a: float) -> LecPosterior:
    sigma_a = _check_sigma(sigma_a)
    shifted = ds.eigvals + sigma_a**-2
    V = ds.O.T
    cov = (V / shifted) @ ds.O
    cov = 0.5 * (cov + cov.T)
    mean = V @ ((ds.O @ ds.b) / shifted)
    direct = chi2_aug(ds, mean, sigma_a)
    quad = None if ds.singular else chi2_aug_min_quadratic(ds, sigma_a)
    return LecPosterior(ds.M, sigma_a, mean, cov, direct, quad, float(np.sum(np.log(shifted))))


def chi2_aug_min_quadratic(ds: DesignSystem, sigma_a: float) -> float:
    """``chi2_min + sum_i (O alpha0)_i^2 / (1/Delta_i + sigma_a^2)``."""
    sigma_a = _check_sigma(sigma_a)
    if ds.singular:
        raise SingularDesignError("quadratic form needs a nonsingular design matrix")
    rot = ds.O @ ds.alpha0
    return float(np.sum(rot**2 / (1.0 / ds.eigvals + sigma_a**2)) + ds.chi2_min)


def predictive_at(lp: LecPosterior, x: float) -> tuple[float, float]:
    phi = vandermonde(float(x), lp.M)[0]
    mean = float(phi @ lp.mean)
    var = float(phi @ lp.cov @ phi)
    return mean, max(var, 0.0)


def log_marginal_likelihood(ds: DesignSystem, sigma_a: float) -> float:
    """``log[sigma_a^-(M+1) det(A_aug)^-1/2 exp(-chi2_aug_min/2)]``."""
    sigma_a = _check_sigma(sigma_a)
    lp = lec_posterior(ds, sigma_a)
    return -(ds.M + 1) * np.log(sigma_a) - 0.5 * lp.log_det_A_aug - 0.5 * lp.chi2_aug_min


# -- vectorized helpers over many sigma_a values ---------------------------

def chi2_aug_min_many(ds: DesignSystem, sigmas: np.ndarray) -> np.ndarray:
    """Direct ``chi2_aug_min`` at every ``sigma_a`` in ``sigmas``."""
    sigmas = np.asarray(sigmas, dtype=float)
    shifted = ds.eigvals[:, None] + sigmas[None, :] ** -2
    means = ds.O.T @ ((ds.O @ ds.b)[:, None] / shifted)
    return np.atleast_1d(ds.chi2(means)) + np.sum(means**2, axis=0) / sigmas**2


def log_marginal_likelihood_many(ds: DesignSystem, sigmas) -> np.ndarray:
    sigmas = np.asarray(sigmas, dtype=float)
    if np.any(sigmas <= 0):
        raise ValueError("sigma_a must be > 0")
    log_det = np.sum(np.log(ds.eigvals[:, None] + sigmas[None, :] ** -2), axis=0)
    return -(ds.M + 1) * np.log(sigmas) - 0.5 * log_det - 0.5 * chi2_aug_min_many(ds, sigmas)


def predictive_many(ds: DesignSystem, sigmas, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means and variances of ``f(x)`` at every ``sigma_a``."""
    sigmas = np.asarray(sigmas, dtype=float)
    shifted = ds.eigvals[:, None] + sigmas[None, :] ** -2
    p = ds.O @ vandermonde(float(x), ds.M)[0]
    q = ds.O @ ds.b
    means = (p * q) @ (1.0 / shifted)
    var = (p**2) @ (1.0 / shifted)
    return means, var
