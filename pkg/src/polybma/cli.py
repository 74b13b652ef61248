"""Command-line interface.

Subcommands: ``generate``, ``fit``, ``evidence``, ``sigma-posterior``,
``extrapolate``, ``cid``.  Every command writes its data files plus a
``<command>_manifest.json`` echoing the resolved config and its hash.

Exit codes: 0 ok, 2 config error, 3 I/O error (missing file, bad schema),
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .diagnostics import CidError, cid_run
from .evidence import fit_models
from .linear_model import SingularDesignError, lec_posterior
from .mixture import FGridConfig, ResolutionError, bma_from_fits, hpd_set, pdf_from_fit
from .sigma_marginal import fit_fixed_order, sigma_posterior_unnorm_log
from .toy_functions import Dataset, DomainError, generate_dataset, read_dataset, write_dataset

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class SchemaError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write(path: Path, text: str) -> str:
    path.write_text(text, encoding="utf-8")
    return hashlib.sha256(text.encode()).hexdigest()


def _manifest(out: Path, command: str, cfg: RunConfig, files: dict, extra: dict | None = None) -> Path:
    doc = {
        "command": command,
        "version": __version__,
        "config_hash": cfg.hash,
        "config": cfg.raw,
        "outputs": {name: {"sha256": digest} for name, digest in sorted(files.items())},
    }
    if extra:
        doc.update(extra)
    path = out / f"{command.replace('-', '_')}_manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _load_dataset(path) -> Dataset:
    try:
        return read_dataset(path)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ----------------------------------------------------------------

def cmd_generate(cfg: RunConfig, args) -> None:
    d = cfg["data"]
    ds = generate_dataset(cfg.function, d["n"], d["x_lo"], d["x_hi"], d["rel_err"], seed=cfg["seed"])
    out = _out_dir(cfg)
    csv_path, side = write_dataset(ds, out / "dataset.csv")
    files = {
        csv_path.name: hashlib.sha256(csv_path.read_bytes()).hexdigest(),
        side.name: hashlib.sha256(side.read_bytes()).hexdigest(),
    }
    _manifest(out, "generate", cfg, files)


def cmd_fit(cfg: RunConfig, args) -> None:
    ds = _load_dataset(args.dataset)
    M = args.M
    if args.sigma_a is not None:
        posts = [(lec_posterior(fit_fixed_order(ds, M, cfg.prior, cfg.grid).design, args.sigma_a), 1.0)]
    else:
        fit = fit_fixed_order(ds, M, cfg.prior, cfg.grid)
        posts = [(lec_posterior(fit.design, s), float(w))
                 for s, w in zip(fit.grid.nodes, fit.grid.posterior_mass)]
    nodes = []
    for lp, w in posts:
        item = lp.to_json()
        item["posterior_mass"] = w
        nodes.append(item)
    doc = {"config_hash": cfg.hash, "M": M, "posteriors": nodes}
    out = _out_dir(cfg)
    name = f"fit_M{M}.json"
    digest = _write(out / name, json.dumps(doc, indent=2) + "\n")
    _manifest(out, "fit", cfg, {name: digest}, {"dataset": str(args.dataset)})


def cmd_evidence(cfg: RunConfig, args) -> None:
    ds = _load_dataset(args.dataset)
    _, weights = fit_models(ds, cfg["m_max"], cfg.prior, cfg.grid)
    rows = [(M, w, lu) for M, (w, lu) in enumerate(zip(weights.weights, weights.log_unnorm))]
    out = _out_dir(cfg)
    digest = _write(out / "evidence.csv", _csv_text(["M", "weight", "log_unnorm"], rows))
    _manifest(out, "evidence", cfg, {"evidence.csv": digest}, {"dataset": str(args.dataset)})


def cmd_sigma_posterior(cfg: RunConfig, args) -> None:
    ds = _load_dataset(args.dataset)
    fit = fit_fixed_order(ds, args.M, cfg.prior, cfg.grid)
    g = cfg["sigma_grid"]
    n = args.points or g["n"]
    nodes = np.geomspace(g["lo"], g["hi"], n)
    logp = np.atleast_1d(sigma_posterior_unnorm_log(fit.design, cfg.prior, nodes))
    # density normalized with the quadrature grid's integral
    post = np.exp(logp - fit.grid.log_normalizer)
    out = _out_dir(cfg)
    name = f"sigma_posterior_M{args.M}.csv"
    digest = _write(out / name, _csv_text(["sigma_a", "log_post_unnorm", "post_normalized"],
                                          zip(nodes, logp, post)))
    _manifest(out, "sigma-posterior", cfg, {name: digest}, {"dataset": str(args.dataset)})


def _targets(cfg: RunConfig, args) -> list[float]:
    if args.xt is not None:
        return [float(args.xt)]
    sweep = cfg["sweep"]
    if sweep is not None:
        return [float(v) for v in np.linspace(sweep["lo"], sweep["hi"], sweep["n"])]
    return list(cfg["targets"])


def cmd_extrapolate(cfg: RunConfig, args) -> None:
    ds = _load_dataset(args.dataset)
    fits, weights = fit_models(ds, cfg["m_max"], cfg.prior, cfg.grid)
    if args.model is not None and not 0 <= args.model <= cfg["m_max"]:
        raise ConfigError(f"--model must lie in 0..{cfg['m_max']}")
    rows, multi = [], []
    for idx, x in enumerate(_targets(cfg, args)):
        pdf = bma_from_fits(fits, weights, x) if args.model is None else pdf_from_fit(fits[args.model], x)
        hs = hpd_set(pdf, 0.68, FGridConfig())
        row = [x, pdf.mean, pdf.variance]
        for lo, hi in hs.intervals:
            row += [lo, hi]
        rows.append(row)
        if hs.n_intervals > 1:
            multi.append({"row": idx, "x": x, "n_intervals": hs.n_intervals})
    width = max(len(r) for r in rows)
    header = ["x", "mean", "var"]
    for k in range(1, (width - 3) // 2 + 1):
        header += [f"ci68_lo_{k}", f"ci68_hi_{k}"]
    out = _out_dir(cfg)
    digest = _write(out / "extrapolate.csv", _csv_text(header, rows))
    _manifest(out, "extrapolate", cfg, {"extrapolate.csv": digest}, {
        "dataset": str(args.dataset),
        "model": "BMA" if args.model is None else args.model,
        "variable_width": bool(multi),
        "disjoint_rows": multi,
    })


def cmd_cid(cfg: RunConfig, args) -> None:
    x_t = args.xt if args.xt is not None else cfg["targets"][0]
    ccfg = cfg.cid_config(x_t)
    report = cid_run(ccfg, workers=args.workers)
    long_rows = []
    for lab in report.labels:
        for v in range(ccfg.n_validation):
            for a, alpha in enumerate(ccfg.alphas):
                long_rows.append((lab, v, alpha, report.D[lab][v, a]))
    band_rows = []
    for lab in report.labels:
        b = report.bands[lab]
        for a, alpha in enumerate(ccfg.alphas):
            band_rows.append((lab, alpha, b.lo[a], b.median[a], b.hi[a]))
    out = _out_dir(cfg)
    files = {
        "cid_long.csv": _write(out / "cid_long.csv", _csv_text(["model", "draw", "alpha", "D"], long_rows)),
        "cid_bands.csv": _write(out / "cid_bands.csv",
                                _csv_text(["model", "alpha", "lo", "median", "hi"], band_rows)),
    }
    _manifest(out, "cid", cfg, files, {
        "x_t": float(x_t),
        "seeds": {
            "master_seed": ccfg.master_seed,
            "derivation": "SeedSequence(master_seed, spawn_key=(stream, draw[, dataset])); "
                          "stream 0 = validation datum, 1 = pseudodata set",
        },
        "validation_data": [float(v) for v in report.validation_data],
    })


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "evidence": cmd_evidence,
    "sigma-posterior": cmd_sigma_posterior,
    "extrapolate": cmd_extrapolate,
    "cid": cmd_cid,
}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--set", action="append", default=[], metavar="K=V",
                   help="override a config key, e.g. --set cid.n_datasets=50")
    p.add_argument("--function", choices=["g1", "g2"])
    p.add_argument("--seed", type=int)
    p.add_argument("--m-max", type=int)
    p.add_argument("--prior", choices=["jeffreys", "invchi2", "delta"])
    p.add_argument("--nu0", type=float)
    p.add_argument("--tau0", type=float)
    p.add_argument("--grid-points", type=int)
    p.add_argument("--grid-lo", type=float)
    p.add_argument("--grid-hi", type=float)
    p.add_argument("--xt", type=float, help="single target point")
    p.add_argument("--datasets", type=int)
    p.add_argument("--validation-draws", type=int)
    p.add_argument("--workers", type=int, default=None, help="CID worker processes (default: all CPUs)")
    p.add_argument("--out", help="output directory")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polybma", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    sub.add_parser("generate", parents=[common], help="draw a pseudodata set")
    p = sub.add_parser("fit", parents=[common], help="LEC posterior(s) for one degree")
    p.add_argument("dataset")
    p.add_argument("-M", "--degree", dest="M", type=int, required=True)
    p.add_argument("--sigma-a", type=float, help="single sigma_a instead of the grid")
    p = sub.add_parser("evidence", parents=[common], help="pr(M|D) for M = 0..m_max")
    p.add_argument("dataset")
    p = sub.add_parser("sigma-posterior", parents=[common], help="sigma_a posterior curve")
    p.add_argument("dataset")
    p.add_argument("-M", "--degree", dest="M", type=int, required=True)
    p.add_argument("--points", type=int, help="number of sigma_a values (default: grid size)")
    p = sub.add_parser("extrapolate", parents=[common], help="mean, variance and 68%% HPD bands")
    p.add_argument("dataset")
    p.add_argument("--model", type=int, help="fixed degree instead of the model average")
    sub.add_parser("cid", parents=[common], help="credibility interval diagnostic")
    return parser


def _flat_overrides(args) -> dict:
    flat: dict = {}

    def put(path, value):
        if value is None:
            return
        node = flat
        *head, last = path.split(".")
        for h in head:
            node = node.setdefault(h, {})
        node[last] = value

    put("function", args.function)
    put("seed", args.seed)
    put("m_max", args.m_max)
    put("prior.kind", args.prior)
    put("prior.nu0", args.nu0)
    put("prior.tau0", args.tau0)
    put("sigma_grid.n", args.grid_points)
    put("sigma_grid.lo", args.grid_lo)
    put("sigma_grid.hi", args.grid_hi)
    put("cid.n_datasets", args.datasets)
    put("cid.n_validation", args.validation_draws)
    put("output", args.out)
    return flat


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, args.set, _flat_overrides(args))
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CidError, ResolutionError, SingularDesignError, DomainError,
            np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
