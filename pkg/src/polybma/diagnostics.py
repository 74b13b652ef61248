"""Credibility Interval Diagnostic: hit rates of a held-out datum in HPD sets.

For each validation draw a datum ``d_t`` is sampled at ``x_t`` and held
fixed while ``n_datasets`` fresh pseudodata sets are fitted.  Every model
(each fixed degree and the model average) sees the same datasets within a
draw.  ``D[v, a]`` is the fraction of datasets whose ``CI[alpha_a]``
contains ``d_t``.

Child RNG streams derive from ``(master_seed, stream, draw, dataset)`` so
results do not depend on worker count or scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .evidence import fit_models
from .mixture import FGridConfig, GaussianMixturePdf, f_grid, hpd_sets_on_grid, mixture_of, pdf_from_fit
from .sigma_marginal import GridConfig, SigmaPrior
from .toy_functions import UnderlyingFunction, draw_validation, generate_dataset

DEFAULT_ALPHAS = (0.1974, 0.383, 0.5468, 0.6827, 0.866, 0.954, 0.987)

_STREAM_VALIDATION = 0
_STREAM_DATASET = 1
_STREAM_SELF = 2


class CidError(RuntimeError):
    pass


@dataclass(frozen=True)
class CidConfig:
    function_kind: str = "g2"
    x_t: float = 1.2 / math.pi
    alphas: tuple = DEFAULT_ALPHAS
    n_datasets: int = 100
    n_validation: int = 20
    band_fraction: float = 0.70
    m_max: int = 6
    prior: SigmaPrior = field(default_factory=SigmaPrior)
    grid: GridConfig = field(default_factory=GridConfig)
    rel_err: float = 0.05
    master_seed: int = 0
    n_points: int = 10
    x_lo: float = 0.0
    x_hi: float = 1.0 / math.pi
    fgrid: FGridConfig = field(default_factory=FGridConfig)
    # "datum": d_t ~ N(g(x_t), (rel_err g)^2); "self": d_t drawn from each model's own pdf
    validation_mode: str = "datum"

    def __post_init__(self):
        UnderlyingFunction.parse(self.function_kind)
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas or any(not 0 < a < 1 for a in alphas) or any(
                b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("alphas must be ascending values in (0, 1)")
        object.__setattr__(self, "alphas", alphas)
        if self.n_datasets < 1 or self.n_validation < 1:
            raise ValueError("n_datasets and n_validation must be >= 1")
        if not 0 < self.band_fraction <= 1:
            raise ValueError("band_fraction must lie in (0, 1]")
        if self.m_max < 0:
            raise ValueError("m_max must be >= 0")
        if not self.rel_err > 0:
            raise ValueError("rel_err must be > 0")
        if self.validation_mode not in ("datum", "self"):
            raise ValueError("validation_mode must be 'datum' or 'self'")

    @property
    def labels(self) -> list[str]:
        return [f"M={m}" for m in range(self.m_max + 1)] + ["BMA"]

    def to_json(self) -> dict:
        out = asdict(self)
        out["alphas"] = list(self.alphas)
        return out


@dataclass(frozen=True)
class Band:
    lo: np.ndarray
    median: np.ndarray
    hi: np.ndarray


@dataclass(frozen=True)
class CidReport:
    config: CidConfig
    labels: tuple
    D: dict                  # label -> array (n_validation, n_alpha)
    bands: dict              # label -> Band
    validation_data: np.ndarray

    @property
    def alphas(self) -> np.ndarray:
        return np.asarray(self.config.alphas)

    def pooled(self, label: str) -> np.ndarray:
        return self.D[label].mean(axis=0)

    def mean_abs_deviation(self, label: str) -> float:
        """Mean of ``|D - alpha|`` over every draw and every alpha."""
        return float(np.mean(np.abs(self.D[label] - self.alphas)))


def band(lines, band_fraction: float = 0.70) -> Band:
    """Central ``ceil(band_fraction * n)`` of the lines at each alpha.

    The trimmed count is split evenly; an odd extra line is trimmed from the top.
    """
    arr = np.asarray(lines, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    n = arr.shape[0]
    if n == 0:
        raise ValueError("band needs at least one line")
    if not 0 < band_fraction <= 1:
        raise ValueError("band_fraction must lie in (0, 1]")
    keep = min(n, max(1, math.ceil(round(band_fraction * n, 9))))
    trim = n - keep
    trim_lo = trim // 2
    trim_hi = trim - trim_lo
    srt = np.sort(arr, axis=0, kind="stable")
    return Band(srt[trim_lo].copy(), np.median(arr, axis=0), srt[n - 1 - trim_hi].copy())


def child_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key)))


def _sample_mixture(pdf: GaussianMixturePdf, rng: np.random.Generator) -> float:
    k = rng.choice(len(pdf), p=pdf.weights)
    return float(pdf.means[k] + pdf.sds[k] * rng.standard_normal())


def _one_dataset(cfg: CidConfig, v: int, i: int, d_t: float) -> np.ndarray:
    """Hits ``(n_models, n_alpha)`` for dataset ``i`` of draw ``v``."""
    ds = generate_dataset(cfg.function_kind, cfg.n_points, cfg.x_lo, cfg.x_hi, cfg.rel_err,
                          rng=child_rng(cfg.master_seed, _STREAM_DATASET, v, i))
    fits, weights = fit_models(ds, cfg.m_max, cfg.prior, cfg.grid)
    pdfs = [pdf_from_fit(f, cfg.x_t) for f in fits]
    bma = mixture_of(pdfs, weights.weights)
    grid = f_grid(bma, cfg.fgrid)
    comp = bma.component_density(grid)
    hits = np.zeros((len(pdfs) + 1, len(cfg.alphas)), dtype=bool)
    self_rng = child_rng(cfg.master_seed, _STREAM_SELF, v, i) if cfg.validation_mode == "self" else None
    start = 0
    for j, pdf in enumerate(pdfs + [bma]):
        if j < len(pdfs):
            cols = slice(start, start + len(pdf))
            start += len(pdf)
            dens = comp[:, cols] @ pdf.weights
        else:
            dens = comp @ bma.weights
        target = d_t if self_rng is None else _sample_mixture(pdf, self_rng)
        sets = hpd_sets_on_grid(pdf, cfg.alphas, grid, cfg.fgrid, dens=dens)
        hits[j] = [s.contains(target) for s in sets]
    return hits


def _run_draw(cfg: CidConfig, v: int) -> tuple[float, np.ndarray]:
    d_t = draw_validation(cfg.function_kind, cfg.x_t, cfg.rel_err,
                          rng=child_rng(cfg.master_seed, _STREAM_VALIDATION, v)).d_t
    counts = np.zeros((cfg.m_max + 2, len(cfg.alphas)))
    for i in range(cfg.n_datasets):
        try:
            counts += _one_dataset(cfg, v, i, d_t)
        except Exception as exc:  # abort with enough context to replay the dataset
            raise CidError(
                f"fit failed for draw {v}, dataset {i} "
                f"(SeedSequence({cfg.master_seed}, spawn_key=({_STREAM_DATASET}, {v}, {i}))): {exc}"
            ) from exc
    return d_t, counts / cfg.n_datasets


def _run_draw_star(args):
    return _run_draw(*args)


def cid_run(cfg: CidConfig, workers: int | None = 1) -> CidReport:
    """Run the full diagnostic; ``workers=None`` uses every available CPU."""
    if workers is None:
        workers = os.cpu_count() or 1
    tasks = [(cfg, v) for v in range(cfg.n_validation)]
    if workers <= 1:
        results = [_run_draw_star(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_draw_star, tasks))
    labels = tuple(cfg.labels)
    D = {lab: np.array([r[1][j] for r in results]) for j, lab in enumerate(labels)}
    bands = {lab: band(D[lab], cfg.band_fraction) for lab in labels}
    return CidReport(cfg, labels, D, bands, np.array([r[0] for r in results]))
