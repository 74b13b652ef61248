import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybma.diagnostics import CidConfig, CidError, band, child_rng, cid_run
from polybma.mixture import FGridConfig


def small(**kw):
    base = dict(n_datasets=6, n_validation=3, m_max=2)
    base.update(kw)
    return CidConfig(**base)


def test_band_twenty_lines():
    lines = np.arange(20)[:, None] * 0.05
    b = band(lines)
    assert b.lo[0] == pytest.approx(0.15)
    assert b.hi[0] == pytest.approx(0.80)
    assert b.median[0] == pytest.approx(0.475)


def test_band_odd_trim_goes_to_top():
    b = band(np.arange(9.0), 0.70)   # keep 7, trim 2 -> 1 each side
    assert (b.lo[0], b.hi[0]) == (1.0, 7.0)
    b = band(np.arange(10.0), 0.75)  # keep 8, trim 2
    assert (b.lo[0], b.hi[0]) == (1.0, 8.0)
    b = band(np.arange(10.0), 0.80)  # keep 8
    assert (b.lo[0], b.hi[0]) == (1.0, 8.0)
    b = band(np.arange(10.0), 0.85)  # keep 9, trim 1 from top
    assert (b.lo[0], b.hi[0]) == (0.0, 8.0)


def test_band_single_line_and_errors():
    b = band([[0.3, 0.6]])
    np.testing.assert_array_equal(b.lo, b.hi)
    with pytest.raises(ValueError):
        band(np.empty((0, 2)))
    with pytest.raises(ValueError):
        band([[0.1]], 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.floats(0.05, 1.0))
def test_band_orders(values, frac):
    arr = np.array(values)
    b = band(arr[:, None], frac)
    assert b.lo[0] <= b.hi[0]
    inside = np.count_nonzero((arr >= b.lo[0]) & (arr <= b.hi[0]))
    assert inside >= min(arr.size, math.ceil(round(frac * arr.size, 9)))


def test_config_validation():
    with pytest.raises(ValueError):
        CidConfig(alphas=(0.5, 0.3))
    with pytest.raises(ValueError):
        CidConfig(alphas=(0.0, 0.5))
    with pytest.raises(ValueError):
        CidConfig(validation_mode="other")
    with pytest.raises(ValueError):
        CidConfig(function_kind="g3")
    assert CidConfig().labels[-1] == "BMA"
    assert len(CidConfig().labels) == 8


def test_child_streams_independent_and_stable():
    a = child_rng(7, 1, 0, 0).standard_normal(3)
    b = child_rng(7, 1, 0, 0).standard_normal(3)
    c = child_rng(7, 1, 0, 1).standard_normal(3)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_cid_shapes_and_range():
    cfg = small()
    r = cid_run(cfg)
    assert r.labels == ("M=0", "M=1", "M=2", "BMA")
    for lab in r.labels:
        D = r.D[lab]
        assert D.shape == (3, 7)
        assert np.all((D >= 0) & (D <= 1))
        # counts are multiples of 1/n_datasets
        np.testing.assert_allclose(D * 6, np.round(D * 6), atol=1e-12)
        # HPD sets nest, so hit rates never decrease in alpha
        assert np.all(np.diff(D, axis=1) >= 0)
    assert r.validation_data.shape == (3,)


def test_cid_worker_count_invariant():
    cfg = small(n_validation=2, n_datasets=3)
    a, b = cid_run(cfg, workers=1), cid_run(cfg, workers=2)
    for lab in a.labels:
        np.testing.assert_array_equal(a.D[lab], b.D[lab])
    np.testing.assert_array_equal(a.validation_data, b.validation_data)


def test_cid_seed_changes_result():
    a = cid_run(small(master_seed=1))
    b = cid_run(small(master_seed=2))
    assert not np.array_equal(a.validation_data, b.validation_data)


def test_cid_failure_names_seed():
    # an absurdly tight grid config makes narrow components unresolvable
    cfg = small(n_validation=1, n_datasets=1, rel_err=1e-14, fgrid=FGridConfig(n_cells=16, local_points=8))
    with pytest.raises(CidError, match="spawn_key"):
        cid_run(cfg)


def test_self_mode_is_roughly_calibrated():
    r = cid_run(CidConfig(validation_mode="self", n_datasets=30, n_validation=4, m_max=2))
    for lab in r.labels:
        pooled = r.pooled(lab)
        se = np.sqrt(r.alphas * (1 - r.alphas) / 120)
        assert np.all(np.abs(pooled - r.alphas) <= 4 * se + 1e-12)


def test_mean_abs_deviation():
    r = cid_run(small(n_validation=1, n_datasets=2, x_t=1.2 / math.pi))
    for lab in r.labels:
        expect = np.mean(np.abs(r.D[lab] - r.alphas))
        assert r.mean_abs_deviation(lab) == pytest.approx(expect)
