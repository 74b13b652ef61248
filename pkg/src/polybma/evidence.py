"""Model evidence pr(M|D) over polynomial degrees 0..m_max (uniform prior on M)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .sigma_marginal import FixedOrderFit, GridConfig, SigmaPrior, fit_fixed_order
from .toy_functions import Dataset

M_MAX_WARN = 20


@dataclass(frozen=True)
class ModelWeights:
    m_max: int
    log_unnorm: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_log(cls, log_unnorm) -> "ModelWeights":
        log_unnorm = np.asarray(log_unnorm, dtype=float)
        weights = np.exp(log_unnorm - logsumexp(log_unnorm))
        weights = weights / weights.sum()
        return cls(log_unnorm.size - 1, log_unnorm, weights)

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.weights))


def log_evidence_unnorm(dataset: Dataset, M: int, prior: SigmaPrior | None = None,
                        grid_cfg: GridConfig | None = None) -> float:
    """Trapezoid estimate of ``log int dsigma pr(D|M,sigma) pr(sigma)``."""
    return fit_fixed_order(dataset, M, prior, grid_cfg).log_evidence


def fit_models(dataset: Dataset, m_max: int = 6, prior: SigmaPrior | None = None,
               grid_cfg: GridConfig | None = None) -> tuple[list[FixedOrderFit], ModelWeights]:
    """Fit every degree ``0..m_max`` on one shared sigma grid and weight them."""
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    if m_max > M_MAX_WARN:
        import warnings

        warnings.warn(f"m_max={m_max}: monomial design is badly conditioned", stacklevel=2)
    fits = [fit_fixed_order(dataset, M, prior, grid_cfg) for M in range(m_max + 1)]
    return fits, ModelWeights.from_log([f.log_evidence for f in fits])


def model_weights(dataset: Dataset, m_max: int = 6, prior: SigmaPrior | None = None,
                  grid_cfg: GridConfig | None = None) -> ModelWeights:
    return fit_models(dataset, m_max, prior, grid_cfg)[1]
