"""Underlying toy functions and the pseudodata generator.

Two functions are supported:

* ``G1``: ``(1/2 + tan(pi x / 2))**2``, pole at ``x = 1``; all Taylor
  coefficients positive.
* ``G2``: ``(1.3 / (1.3 + x))**2``, pole at ``x = -1.3``; alternating
  Taylor coefficients.

Pseudodata are ``n`` points on an inclusive linspace with Gaussian noise of
standard deviation ``rel_err * g(x)``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DomainError(ValueError):
    """Evaluation point outside the function's domain."""


class UnderlyingFunction(str, enum.Enum):
    G1 = "g1"
    G2 = "g2"

    @classmethod
    def parse(cls, value) -> "UnderlyingFunction":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown function {value!r}; expected g1 or g2") from None


def _check_domain(fn: UnderlyingFunction, x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{fn.value}: non-finite x")
    if fn is UnderlyingFunction.G1 and np.any(x >= 1.0):
        raise DomainError(f"g1 is evaluated only for x < 1 (pole at 1); got {np.max(x)!r}")
    if fn is UnderlyingFunction.G2 and np.any(x <= -1.3):
        raise DomainError(f"g2 is evaluated only for x > -1.3 (pole at -1.3); got {np.min(x)!r}")


def eval_underlying(fn, x):
    """Evaluate ``g(x)``. Scalars in, scalar out; arrays in, array out."""
    fn = UnderlyingFunction.parse(fn)
    arr = np.asarray(x, dtype=float)
    _check_domain(fn, arr)
    if fn is UnderlyingFunction.G1:
        out = (0.5 + np.tan(0.5 * np.pi * arr)) ** 2
    else:
        out = (1.3 / (1.3 + arr)) ** 2
    return float(out) if out.ndim == 0 else out


def _series_mul(a: list[float], b: list[float], order: int) -> list[float]:
    out = [0.0] * (order + 1)
    for i, ai in enumerate(a[: order + 1]):
        for j, bj in enumerate(b[: order + 1 - i]):
            out[i + j] += ai * bj
    return out


def _tan_series(order: int) -> list[float]:
    # tan' = 1 + tan^2, tan(0) = 0; coefficients built term by term
    t = [0.0] * (order + 1)
    for n in range(order):
        sq = _series_mul(t, t, n)
        t[n + 1] = ((1.0 if n == 0 else 0.0) + sq[n]) / (n + 1)
    return t


def taylor_coefficients(fn, order: int) -> list[float]:
    """Maclaurin coefficients ``a_0..a_order`` of ``g``.

    Computed from exact power-series algebra rather than numerical
    differentiation: ``g2`` is a binomial series, ``g1`` squares a scaled
    tangent series.
    """
    fn = UnderlyingFunction.parse(fn)
    if order < 0:
        raise ValueError("order must be >= 0")
    if fn is UnderlyingFunction.G2:
        return [(n + 1) * (-1.0 / 1.3) ** n for n in range(order + 1)]
    t = _tan_series(order)
    t = [c * (0.5 * math.pi) ** n for n, c in enumerate(t)]
    half_plus_t = [0.5 + t[0]] + t[1:]
    return _series_mul(half_plus_t, half_plus_t, order)


@dataclass(frozen=True)
class Dataset:
    """Pseudodata triples ``(x, d, sigma)`` plus provenance."""

    x: np.ndarray
    d: np.ndarray
    sigma: np.ndarray
    function: UnderlyingFunction | None = None
    seed: int | None = None
    rel_err: float | None = None
    x_lo: float | None = None
    x_hi: float | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        d = np.asarray(self.d, dtype=float).reshape(-1)
        s = np.asarray(self.sigma, dtype=float).reshape(-1)
        if not (x.shape == d.shape == s.shape):
            raise ValueError("x, d and sigma must have equal length")
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ValueError("all sigma must be finite and > 0")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(d))):
            raise ValueError("x and d must be finite")
        for arr in (x, d, s):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "sigma", s)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @classmethod
    def empty(cls) -> "Dataset":
        return cls(np.empty(0), np.empty(0), np.empty(0))

    def metadata(self) -> dict:
        return {
            "function": None if self.function is None else self.function.value,
            "seed": self.seed,
            "n": self.n,
            "rel_err": self.rel_err,
            "x_lo": self.x_lo,
            "x_hi": self.x_hi,
        }


@dataclass(frozen=True)
class ValidationDatum:
    x_t: float
    d_t: float
    sigma_t: float


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def generate_dataset(fn, n: int = 10, x_lo: float = 0.0, x_hi: float = 1.0 / math.pi,
                     rel_err: float = 0.05, rng=None, seed: int | None = None) -> Dataset:
    """Draw one pseudodata set.

    ``rng`` may be a ``numpy.random.Generator`` or anything accepted by
    ``default_rng``; if omitted, ``seed`` is used.
    """
    fn = UnderlyingFunction.parse(fn)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 <= x_lo < x_hi) and not (n == 1 and x_lo == x_hi):
        raise ValueError("need 0 <= x_lo < x_hi")
    if not rel_err > 0:
        raise ValueError("rel_err must be > 0")
    x = np.linspace(x_lo, x_hi, n) if n > 1 else np.array([float(x_lo)])
    g = eval_underlying(fn, x)
    sigma = rel_err * g
    gen = _as_rng(rng if rng is not None else seed)
    noise = gen.standard_normal(n)
    d = g + sigma * noise
    return Dataset(x, d, sigma, function=fn, seed=seed, rel_err=float(rel_err),
                   x_lo=float(x_lo), x_hi=float(x_hi))


def draw_validation(fn, x_t: float, rel_err: float = 0.05, rng=None) -> ValidationDatum:
    fn = UnderlyingFunction.parse(fn)
    if not rel_err > 0:
        raise ValueError("rel_err must be > 0")
    g = eval_underlying(fn, float(x_t))
    sigma_t = rel_err * g
    d_t = g + sigma_t * _as_rng(rng).standard_normal()
    return ValidationDatum(float(x_t), float(d_t), float(sigma_t))


# -- serialization ---------------------------------------------------------

def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "d", "sigma"])
    for row in zip(ds.x, ds.d, ds.sigma):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_dataset(ds: Dataset, path) -> tuple[Path, Path]:
    """Write ``<path>`` (CSV) and ``<path>.json`` (metadata sidecar)."""
    path = Path(path)
    path.write_text(dataset_to_csv(ds), encoding="utf-8")
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(ds.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path, side


def read_dataset(path) -> Dataset:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "d", "sigma"]:
            raise ValueError(f"{path}: expected header 'x,d,sigma', got {header!r}")
        rows = [[float(v) for v in r] for r in reader if r]
    if any(len(r) != 3 for r in rows):
        raise ValueError(f"{path}: every row needs 3 columns")
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    meta = {}
    side = path.with_name(path.name + ".json")
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
    fn = meta.get("function")
    return Dataset(
        arr[:, 0], arr[:, 1], arr[:, 2],
        function=None if fn is None else UnderlyingFunction.parse(fn),
        seed=meta.get("seed"), rel_err=meta.get("rel_err"),
        x_lo=meta.get("x_lo"), x_hi=meta.get("x_hi"),
    )
