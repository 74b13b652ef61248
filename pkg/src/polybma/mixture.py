"""Predictive pdfs as finite Gaussian mixtures and their HPD credibility sets.

Every predictive distribution in the package (fixed ``sigma_a``, marginalized
over ``sigma_a``, or averaged over degrees) is a weighted sum of 1-D
Gaussians, so moments are exact sums and only the HPD search needs a grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .evidence import ModelWeights, fit_models
from .linear_model import build_design, vandermonde
from .sigma_marginal import FixedOrderFit, GridConfig, SigmaGrid, SigmaPrior
from .toy_functions import Dataset

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class ResolutionError(ValueError):
    """Mixture too narrow to resolve on a floating-point grid."""


@dataclass(frozen=True)
class GaussianMixturePdf:
    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.atleast_1d(np.asarray(self.means, dtype=float))
        sd = np.atleast_1d(np.asarray(self.sds, dtype=float))
        if not (w.shape == mu.shape == sd.shape) or w.size == 0:
            raise ValueError("weights, means and sds must be equal-length and nonempty")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
            raise ValueError("weights must be finite, nonnegative, not all zero")
        if np.any(sd <= 0) or not np.all(np.isfinite(sd)) or not np.all(np.isfinite(mu)):
            raise ValueError("means must be finite and sds finite and > 0")
        w = w / w.sum()
        for arr in (w, mu, sd):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "sds", sd)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def gaussian(cls, mean: float, sd: float) -> "GaussianMixturePdf":
        return cls([1.0], [mean], [sd])

    def __len__(self) -> int:
        return int(self.weights.size)

    def component_density(self, f) -> np.ndarray:
        """Matrix of ``N(f; mu_k, s_k)`` with shape ``(len(f), K)``."""
        f = np.atleast_1d(np.asarray(f, dtype=float))
        z = (f[:, None] - self.means[None, :]) / self.sds[None, :]
        return np.exp(-0.5 * z * z) * (_INV_SQRT_2PI / self.sds[None, :])

    def density(self, f):
        out = self.component_density(f) @ self.weights
        return float(out[0]) if np.ndim(f) == 0 else out

    def cdf(self, f):
        f = np.atleast_1d(np.asarray(f, dtype=float))
        out = ndtr((f[:, None] - self.means[None, :]) / self.sds[None, :]) @ self.weights
        return float(out[0]) if out.size == 1 and np.ndim(f) == 0 else out

    def interval_mass(self, intervals) -> float:
        if len(intervals) == 0:
            return 0.0
        ends = np.asarray(intervals, dtype=float).reshape(-1, 2)
        c = np.atleast_1d(self.cdf(ends.ravel())).reshape(-1, 2)
        return float(np.sum(c[:, 1] - c[:, 0]))

    @property
    def mean(self) -> float:
        return mixture_mean(self)

    @property
    def variance(self) -> float:
        return mixture_variance(self)

    def support(self, n_sd: float = 8.0) -> tuple[float, float]:
        return float(np.min(self.means - n_sd * self.sds)), float(np.max(self.means + n_sd * self.sds))


def mixture_mean(pdf: GaussianMixturePdf) -> float:
    return float(pdf.weights @ pdf.means)


def mixture_variance(pdf: GaussianMixturePdf) -> float:
    mean = mixture_mean(pdf)
    # centered form avoids cancellation when |mean| >> spread
    return float(pdf.weights @ (pdf.sds**2 + (pdf.means - mean) ** 2))


def mixture_of(pdfs, weights, labels=None) -> GaussianMixturePdf:
    """Weighted concatenation of mixtures."""
    weights = np.asarray(weights, dtype=float)
    w = np.concatenate([wt * p.weights for wt, p in zip(weights, pdfs)])
    mu = np.concatenate([p.means for p in pdfs])
    sd = np.concatenate([p.sds for p in pdfs])
    lab = sum((p.labels for p in pdfs), ()) if labels is None else labels
    return GaussianMixturePdf(w, mu, sd, lab)


# -- building predictive mixtures -----------------------------------------

def pdf_from_fit(fit: FixedOrderFit, x_t: float) -> GaussianMixturePdf:
    w, mu, var = fit.predictive_components(x_t)
    labels = tuple((fit.M, float(s)) for s in fit.grid.nodes)
    return GaussianMixturePdf(w, mu, np.sqrt(var), labels)


def fixed_order_pdf(dataset: Dataset, M: int, grid: SigmaGrid, x_t: float) -> GaussianMixturePdf:
    """One Gaussian per ``sigma_a`` node, weighted by the node's posterior mass."""
    fit = FixedOrderFit(build_design(dataset, M), grid)
    return pdf_from_fit(fit, x_t)


def bma_from_fits(fits, weights: ModelWeights, x_t: float) -> GaussianMixturePdf:
    return mixture_of([pdf_from_fit(f, x_t) for f in fits], weights.weights)


def bma_pdf(dataset: Dataset, m_max: int, x_t: float, prior: SigmaPrior | None = None,
            grid_cfg: GridConfig | None = None) -> GaussianMixturePdf:
    fits, weights = fit_models(dataset, m_max, prior, grid_cfg)
    return bma_from_fits(fits, weights, x_t)


def bma_lec_moments(fits, weights: ModelWeights) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix of the model-averaged LEC mixture.

    Coefficients above a model's degree are identically zero in that model.
    Pushing this mixture through ``f(x) = sum a_i x^i`` reproduces the BMA
    predictive mean and variance at every ``x``.
    """
    n = max(f.M for f in fits) + 1
    mean = np.zeros(n)
    second = np.zeros((n, n))
    for fit, pm in zip(fits, weights.weights):
        ds = fit.design
        q = ds.O @ ds.b
        for s, wk in zip(fit.grid.nodes, fit.grid.posterior_mass):
            w = pm * wk
            if w == 0.0:
                continue
            shifted = ds.eigvals + s**-2
            m = ds.O.T @ (q / shifted)
            cov = (ds.O.T / shifted) @ ds.O
            k = ds.M + 1
            mean[:k] += w * m
            second[:k, :k] += w * (cov + np.outer(m, m))
    cov = second - np.outer(mean, mean)
    return mean, 0.5 * (cov + cov.T)


def bma_lec(dataset: Dataset, m_max: int, i: int, prior: SigmaPrior | None = None,
            grid_cfg: GridConfig | None = None) -> tuple[float, float]:
    """Model-averaged mean and variance of the coefficient ``a_i``."""
    if not 0 <= i <= m_max:
        raise ValueError(f"LEC index {i} outside 0..{m_max}")
    fits, weights = fit_models(dataset, m_max, prior, grid_cfg)
    mean, cov = bma_lec_moments(fits, weights)
    return float(mean[i]), float(cov[i, i])


def bma_predictive_from_lecs(mean: np.ndarray, cov: np.ndarray, x: float) -> tuple[float, float]:
    phi = vandermonde(float(x), mean.size - 1)[0]
    return float(phi @ mean), float(phi @ cov @ phi)


# -- HPD credibility sets --------------------------------------------------

@dataclass(frozen=True)
class FGridConfig:
    n_cells: int = 4096
    span_sd: float = 8.0
    local_points: int = 64
    max_doublings: int = 4
    mass_tol: float = 1e-6
    max_iter: int = 50

    def __post_init__(self):
        if self.n_cells < 16 or self.local_points < 8 or self.span_sd <= 0:
            raise ValueError("invalid f-grid configuration")


@dataclass(frozen=True)
class HpdSet:
    alpha: float
    intervals: tuple
    attained_mass: float
    threshold: float

    def contains(self, f: float) -> bool:
        return any(lo <= f <= hi for lo, hi in self.intervals)

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)

    @property
    def width(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))


def f_grid(pdf: GaussianMixturePdf, cfg: FGridConfig = FGridConfig(), n_cells: int | None = None) -> np.ndarray:
    """Uniform grid over ``mu_k +- span_sd s_k`` plus component-local nodes.

    Components narrower than a few base cells get their own local grid so a
    sharp peak is never stepped over.
    """
    n_cells = n_cells or cfg.n_cells
    lo, hi = pdf.support(cfg.span_sd)
    base = np.linspace(lo, hi, n_cells + 1)
    dx = (hi - lo) / n_cells
    narrow = pdf.sds * (2.0 * cfg.span_sd / cfg.local_points) < dx
    pieces = [base]
    if np.any(narrow):
        t = np.linspace(-cfg.span_sd, cfg.span_sd, cfg.local_points + 1)
        pieces.append((pdf.means[narrow, None] + pdf.sds[narrow, None] * t[None, :]).ravel())
    grid = np.unique(np.concatenate(pieces))
    if grid.size < 3 or not np.all(np.isfinite(grid)):
        raise ResolutionError("mixture span is not representable on a grid")
    # every component must straddle at least a few distinct nodes
    for mu, sd in zip(pdf.means, pdf.sds):
        if np.count_nonzero(np.abs(grid - mu) <= sd) < 3:
            raise ResolutionError(f"component sd {sd!r} below grid resolution at {mu!r}")
    return grid


def _superlevel_intervals(grid, dens, lam):
    above = dens >= lam
    if not above.any():
        return []
    edges = np.diff(above.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    stops = np.flatnonzero(edges == -1)
    if above[0]:
        starts = np.concatenate(([0], starts))
    if above[-1]:
        stops = np.concatenate((stops, [above.size - 1]))
    out = []
    for a, b in zip(starts, stops):
        if a > 0:
            d0, d1 = dens[a - 1], dens[a]
            lo = grid[a - 1] + (lam - d0) / (d1 - d0) * (grid[a] - grid[a - 1])
        else:
            lo = grid[0]
        if b < above.size - 1:
            d0, d1 = dens[b], dens[b + 1]
            hi = grid[b] + (d0 - lam) / (d0 - d1) * (grid[b + 1] - grid[b])
        else:
            hi = grid[-1]
        out.append((float(lo), float(hi)))
    return out


def _riemann_threshold(grid, dens, alpha):
    cell = np.empty_like(grid)
    cell[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    cell[0] = 0.5 * (grid[1] - grid[0])
    cell[-1] = 0.5 * (grid[-1] - grid[-2])
    order = np.argsort(dens)[::-1]
    cum = np.cumsum(dens[order] * cell[order])
    cum /= cum[-1]
    idx = min(int(np.searchsorted(cum, alpha)), order.size - 1)
    return float(dens[order[idx]])


def _hpd_on_grid(pdf, grid, dens, alpha, cfg):
    dmax = float(dens.max())

    def mass(lam):
        iv = _superlevel_intervals(grid, dens, lam)
        return pdf.interval_mass(iv), iv

    lam0 = _riemann_threshold(grid, dens, alpha)
    lo, hi = 0.8 * lam0, min(1.25 * lam0, dmax)
    m_lo, iv_lo = mass(lo)
    while m_lo < alpha and lo > 0:
        lo = lo * 0.25 if lo > 1e-300 else 0.0
        m_lo, iv_lo = mass(lo)
    m_hi, iv_hi = mass(hi)
    while m_hi > alpha and hi < dmax:
        hi = 0.5 * (hi + dmax) if dmax - hi > 1e-12 * dmax else dmax
        m_hi, iv_hi = mass(hi)
    best = (lo, m_lo, iv_lo)
    for _ in range(cfg.max_iter):
        if abs(best[1] - alpha) <= cfg.mass_tol:
            break
        mid = 0.5 * (lo + hi)
        m_mid, iv_mid = mass(mid)
        if m_mid >= alpha:
            lo, m_lo, iv_lo = mid, m_mid, iv_mid
            best = (lo, m_lo, iv_lo)
        else:
            hi, m_hi, iv_hi = mid, m_mid, iv_mid
            if abs(m_hi - alpha) < abs(best[1] - alpha) and abs(m_hi - alpha) <= cfg.mass_tol:
                best = (hi, m_hi, iv_hi)
    lam, m, iv = best
    return HpdSet(float(alpha), tuple(iv), float(m), float(lam))


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")


def hpd_sets_on_grid(pdf: GaussianMixturePdf, alphas, grid: np.ndarray,
                     cfg: FGridConfig = FGridConfig(), dens=None) -> list[HpdSet]:
    """HPD sets for several masses, sharing one density evaluation."""
    for a in alphas:
        _check_alpha(a)
    if dens is None:
        dens = pdf.density(grid)
    return [_hpd_on_grid(pdf, grid, dens, a, cfg) for a in alphas]


def hpd_sets(pdf: GaussianMixturePdf, alphas, cfg: FGridConfig = FGridConfig()) -> list[HpdSet]:
    """HPD sets with grid doubling until interval endpoints settle.

    Refinement stops once every endpoint moves by less than ``1e-3`` of the
    total set width between successive resolutions.
    """
    alphas = list(alphas)
    n = cfg.n_cells
    prev = hpd_sets_on_grid(pdf, alphas, f_grid(pdf, cfg, n), cfg)
    for _ in range(cfg.max_doublings):
        n *= 2
        cur = hpd_sets_on_grid(pdf, alphas, f_grid(pdf, cfg, n), cfg)
        if all(_settled(p, c) for p, c in zip(prev, cur)):
            return cur
        prev = cur
    return prev


def _settled(a: HpdSet, b: HpdSet) -> bool:
    if a.n_intervals != b.n_intervals:
        return False
    scale = max(b.width, 1e-300)
    return all(abs(x0 - y0) <= 1e-3 * scale and abs(x1 - y1) <= 1e-3 * scale
               for (x0, x1), (y0, y1) in zip(a.intervals, b.intervals))


def hpd_set(pdf: GaussianMixturePdf, alpha: float, cfg: FGridConfig = FGridConfig()) -> HpdSet:
    """Smallest-threshold region of mass ``alpha``; may be a union of intervals."""
    _check_alpha(alpha)
    return hpd_sets(pdf, [alpha], cfg)[0]
