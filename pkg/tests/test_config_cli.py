import csv
import json

import pytest

from polybma.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from polybma.config import ConfigError, RunConfig, parse_override


def test_defaults_validate():
    cfg = RunConfig.load()
    assert cfg["m_max"] == 6
    assert cfg.grid.n == 13
    assert cfg.prior.nu0 == 1.5
    assert len(cfg.hash) == 64


def test_override_typing():
    assert parse_override("cid.n_datasets=50") == {"cid": {"n_datasets": 50}}
    assert parse_override("prior.kind=jeffreys") == {"prior": {"kind": "jeffreys"}}
    with pytest.raises(ConfigError):
        parse_override("novalue")


@pytest.mark.parametrize("ov", [
    "data.rel_err=0", "m_max=-1", "m_max=21", "seed=-3", "bogus=1", "prior.kind=gamma",
    "sigma_grid.lo=0", "data.x_hi=0", "cid.alphas=[0.5,0.2]", "sweep={lo: 0, hi: 1}",
    "sigma_grid.n=2.5",
])
def test_invalid_values_rejected(ov):
    with pytest.raises(ConfigError):
        RunConfig.load(overrides=[ov])


def test_g1_pole_rejected():
    with pytest.raises(ConfigError):
        RunConfig.load(overrides=["function=g1", "targets=[1.0]"])


def test_yaml_file_and_hash_sensitivity(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("function: g1\ncid:\n  n_datasets: 7\n")
    cfg = RunConfig.load(p)
    assert cfg["function"] == "g1" and cfg["cid"]["n_datasets"] == 7
    assert cfg.hash != RunConfig.load().hash
    assert RunConfig.load(p).hash == cfg.hash


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_cli_pipeline(tmp_path):
    out = str(tmp_path)
    assert main(["generate", "--function", "g2", "--seed", "4", "--out", out]) == EXIT_OK
    data = str(tmp_path / "dataset.csv")
    assert main(["fit", data, "-M", "2", "--out", out]) == EXIT_OK
    doc = json.loads((tmp_path / "fit_M2.json").read_text())
    assert len(doc["posteriors"]) == 13
    assert main(["fit", data, "-M", "1", "--sigma-a", "1.0", "--out", out]) == EXIT_OK
    assert main(["evidence", data, "--out", out]) == EXIT_OK
    ev = _rows(tmp_path / "evidence.csv")
    assert ev[0] == ["M", "weight", "log_unnorm"] and len(ev) == 8
    assert sum(float(r[1]) for r in ev[1:]) == pytest.approx(1.0)
    assert main(["sigma-posterior", data, "-M", "3", "--points", "50", "--out", out]) == EXIT_OK
    assert len(_rows(tmp_path / "sigma_posterior_M3.csv")) == 51
    assert main(["extrapolate", data, "--out", out]) == EXIT_OK
    ex = _rows(tmp_path / "extrapolate.csv")
    assert ex[0][:5] == ["x", "mean", "var", "ci68_lo_1", "ci68_hi_1"]
    assert len(ex) == 3
    man = json.loads((tmp_path / "extrapolate_manifest.json").read_text())
    assert man["config_hash"] == RunConfig.load(flat={"output": out}).hash


def test_cli_sweep(tmp_path):
    out = str(tmp_path)
    main(["generate", "--out", out])
    rc = main(["extrapolate", str(tmp_path / "dataset.csv"), "--model", "2", "--out", out,
               "--set", "sweep={lo: 0.0, hi: 0.6, n: 5}"])
    assert rc == EXIT_OK
    assert len(_rows(tmp_path / "extrapolate.csv")) == 6


def test_cli_exit_codes(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["generate", "--set", "data.rel_err=0", "--out", out]) == EXIT_CONFIG
    assert main(["evidence", str(tmp_path / "missing.csv"), "--out", out]) == EXIT_IO
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["evidence", str(bad), "--out", out]) == EXIT_IO
    main(["generate", "--out", out])
    assert main(["extrapolate", str(tmp_path / "dataset.csv"), "--model", "9", "--out", out]) == EXIT_CONFIG
    assert main(["cid", "--workers", "0", "--out", out]) == EXIT_CONFIG


def test_cid_band_csv_shape(tmp_path):
    out = str(tmp_path)
    rc = main(["cid", "--datasets", "3", "--validation-draws", "2", "--m-max", "2",
               "--workers", "1", "--out", out])
    assert rc == EXIT_OK
    bands = _rows(tmp_path / "cid_bands.csv")
    assert bands[0] == ["model", "alpha", "lo", "median", "hi"]
    assert len(bands) - 1 == (2 + 2) * 7
    assert len(_rows(tmp_path / "cid_long.csv")) - 1 == 4 * 2 * 7
