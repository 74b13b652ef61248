"""Hyperprior on the naturalness width ``sigma_a`` and its quadrature grid.

Two routes to the unnormalized ``sigma_a`` posterior are provided: the
direct one (marginal likelihood times prior) and a semi-analytic one built
from eigenbasis quantities that drops the ``sigma_a``-independent
``exp(-chi2_min/2)``.  They must differ by a constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .linear_model import (
    DesignSystem,
    SingularDesignError,
    build_design,
    log_marginal_likelihood_many,
    predictive_many,
)
from .toy_functions import Dataset

PRIOR_KINDS = ("jeffreys", "invchi2", "delta")


@dataclass(frozen=True)
class SigmaPrior:
    """Prior shape on ``sigma_a``.

    ``invchi2`` is the scaled inverse-chi-square family written as a density
    in ``sigma_a``; ``nu0 = 0`` gives the Jeffreys shape.  ``delta`` pins
    ``sigma_a`` to ``tau0`` (fixed-width analyses).
    """

    kind: str = "invchi2"
    nu0: float = 1.5
    tau0: float = 1.5

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in PRIOR_KINDS:
            raise ValueError(f"prior kind must be one of {PRIOR_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.nu0 < 0:
            raise ValueError("nu0 must be >= 0")
        if kind != "jeffreys" and not self.tau0 > 0:
            raise ValueError("tau0 must be > 0")

    @classmethod
    def jeffreys(cls) -> "SigmaPrior":
        return cls("jeffreys", 0.0, 1.0)

    @classmethod
    def delta(cls, sigma_a: float) -> "SigmaPrior":
        return cls("delta", 0.0, float(sigma_a))

    @property
    def is_delta(self) -> bool:
        return self.kind == "delta"

    @property
    def effective_nu0(self) -> float:
        return 0.0 if self.kind == "jeffreys" else self.nu0


def sigma_prior_log_density(prior: SigmaPrior, sigma_a):
    """Log of the unnormalized shape ``sigma^-(1+nu0) exp(-nu0 tau0^2 / (2 sigma^2))``."""
    if prior.is_delta:
        raise ValueError("delta prior has no density")
    s = np.asarray(sigma_a, dtype=float)
    if np.any(s <= 0):
        raise ValueError("sigma_a must be > 0")
    nu0 = prior.effective_nu0
    out = -(1.0 + nu0) * np.log(s)
    if nu0 > 0:
        out = out - nu0 * prior.tau0**2 / (2.0 * s**2)
    return float(out) if out.ndim == 0 else out


def sigma_posterior_unnorm_log(ds: DesignSystem, prior: SigmaPrior, sigma_a):
    s = np.atleast_1d(np.asarray(sigma_a, dtype=float))
    out = log_marginal_likelihood_many(ds, s) + sigma_prior_log_density(prior, s)
    return float(out[0]) if np.ndim(sigma_a) == 0 else out


def sigma_posterior_semianalytic_log(ds: DesignSystem, prior: SigmaPrior, sigma_a):
    """Eigenbasis form of the ``sigma_a`` posterior, without ``exp(-chi2_min/2)``.

    ``-(M+2+nu0) log s - 1/2 sum log(Delta_i + s^-2) - nu0 tau0^2/(2 s^2)
    - 1/2 sum (O alpha0)_i^2 / (1/Delta_i + s^2)``.
    """
    if ds.singular:
        raise SingularDesignError("semi-analytic posterior needs a nonsingular design matrix")
    s = np.atleast_1d(np.asarray(sigma_a, dtype=float))
    if np.any(s <= 0):
        raise ValueError("sigma_a must be > 0")
    nu0 = prior.effective_nu0
    rot2 = (ds.O @ ds.alpha0) ** 2
    inv_delta = 1.0 / ds.eigvals
    out = (
        -(ds.M + 2 + nu0) * np.log(s)
        - 0.5 * np.sum(np.log(ds.eigvals[:, None] + s[None, :] ** -2), axis=0)
        - 0.5 * np.sum(rot2[:, None] / (inv_delta[:, None] + s[None, :] ** 2), axis=0)
    )
    if nu0 > 0:
        out = out - nu0 * prior.tau0**2 / (2.0 * s**2)
    return float(out[0]) if np.ndim(sigma_a) == 0 else out


@dataclass(frozen=True)
class GridConfig:
    n: int = 13
    lo: float = 0.25
    hi: float = 10.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 points")
        if not (0 < self.lo < self.hi):
            raise ValueError("grid bounds need 0 < lo < hi")

    def nodes(self) -> np.ndarray:
        return np.geomspace(self.lo, self.hi, self.n)


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """Trapezoid weights for nonuniform ascending ``nodes``."""
    h = np.diff(nodes)
    w = np.zeros_like(nodes)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


@dataclass(frozen=True)
class SigmaGrid:
    nodes: np.ndarray
    trap_weights: np.ndarray
    log_post: np.ndarray          # unnormalized log posterior at each node
    posterior_mass: np.ndarray    # normalized quadrature weights, sum to 1
    log_normalizer: float         # log of the trapezoid integral of the posterior

    @property
    def n(self) -> int:
        return int(self.nodes.size)


def _grid_from_values(nodes, trap, log_post) -> SigmaGrid:
    logw = np.log(trap) + log_post
    log_norm = float(logsumexp(logw))
    mass = np.exp(logw - log_norm)
    mass = mass / mass.sum()
    return SigmaGrid(nodes, trap, log_post, mass, log_norm)


def build_sigma_grid(ds: DesignSystem, prior: SigmaPrior, n_points: int = 13,
                     lo: float = 0.25, hi: float = 10.0, nodes=None) -> SigmaGrid:
    """Quadrature grid over ``sigma_a``.

    Nodes are log-spaced on ``[lo, hi]`` unless given explicitly; weights are
    trapezoid weights in ``sigma_a`` itself.  A delta prior gives a one-node
    grid whose normalizer is the marginal likelihood at that point.
    """
    if prior.is_delta:
        node = np.array([prior.tau0])
        return SigmaGrid(node, np.ones(1), log_marginal_likelihood_many(ds, node),
                         np.ones(1), float(log_marginal_likelihood_many(ds, node)[0]))
    if nodes is None:
        nodes = GridConfig(n_points, lo, hi).nodes()
    else:
        nodes = np.asarray(nodes, dtype=float)
        if nodes.size < 3 or np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be >= 3 ascending positive values")
    trap = trapezoid_weights(nodes)
    return _grid_from_values(nodes, trap, sigma_posterior_unnorm_log(ds, prior, nodes))


@dataclass(frozen=True)
class FixedOrderFit:
    """Degree-``M`` model with ``sigma_a`` marginalized on a grid."""

    design: DesignSystem
    grid: SigmaGrid
    prior: SigmaPrior = field(default_factory=SigmaPrior)

    @property
    def M(self) -> int:
        return self.design.M

    @property
    def log_evidence(self) -> float:
        return self.grid.log_normalizer

    def predictive_components(self, x: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-node ``(weights, means, variances)`` of ``f(x)``."""
        means, var = predictive_many(self.design, self.grid.nodes, x)
        return self.grid.posterior_mass, means, np.maximum(var, 0.0)

    def predictive_moments(self, x: float) -> tuple[float, float]:
        w, mu, var = self.predictive_components(x)
        mean = float(w @ mu)
        return mean, float(w @ (var + mu**2) - mean**2)


def fit_fixed_order(dataset: Dataset, M: int, prior: SigmaPrior | None = None,
                    grid_cfg: GridConfig | None = None) -> FixedOrderFit:
    prior = prior or SigmaPrior()
    grid_cfg = grid_cfg or GridConfig()
    ds = build_design(dataset, M)
    grid = build_sigma_grid(ds, prior, grid_cfg.n, grid_cfg.lo, grid_cfg.hi)
    return FixedOrderFit(ds, grid, prior)
