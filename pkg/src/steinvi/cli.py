"""Benchmark command line: particle inference runs with CSV reports.

Commands
--------
blr-bench       Bayesian logistic regression benchmark (accuracy vs iteration)
sphere-demo     vMF-mixture target on a hypersphere (RKSD vs iteration)
product-demo    product-vMF target on a product of spheres
gaussian-sanity standard-normal sanity run (KSD vs iteration)

Configuration is resolved as: built-in defaults, overridden by a flat
``key=value`` config file (``--config``), overridden by explicit flags.  The
resolved configuration is embedded in the report header, and every report is
byte-reproducible from that header: the ``wall_ms`` column is written as 0.0
(wall-clock timing is inherently irreproducible and goes to stderr instead).
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .data import load_sparse_dataset, make_synthetic_logistic, split_standardize
from .engine import (AdagradMomentum, ParticleCloud, VanillaStep, run)
from .kernels import Gaussian, VmfProduct
from .manifolds import Euclidean, ProductSphere, Sphere, uniform_sphere
from .discrepancy import ksd_euclidean, rksd_sphere
from .reports import RunReport
from .targets import BlrModel, GaussianTarget, VmfMixture, blr_predict


def _bool(text):
    if isinstance(text, bool):
        return text
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# per-command configuration schema: key -> (caster, default)
_COMMON = {
    "method": (str, "rsvgd"),
    "particles": (int, 100),
    "iters": (int, 500),
    "seed": (int, 0),
    "step": (float, 0.05),
    "kernel": (str, "summed"),
    "kappa": (float, 0.0),          # 0 means "default to the block dimension"
    "cadence": (int, 10),
    "out": (str, ""),
    "kernel_freeze": (_bool, False),
}

_SCHEMAS = {
    "blr-bench": {
        **_COMMON,
        "data": (str, "synthetic"),
        "split": (float, 0.8),
        "standardize": (_bool, False),
        "alpha": (float, 0.01),
        "synth_rows": (int, 200),
        "synth_features": (int, 5),
        "data_seed": (int, 0),
    },
    "sphere-demo": {
        **_COMMON,
        "method": (str, "rsvgd"),
        "particles": (int, 30),
        "step": (float, 0.001),
        "kernel": (str, "vmf"),
        "sphere_dim": (int, 3),
        "components": (str, ""),     # "kappa:weight:mu,mu,..|..."; default vMF(e_n, 10)
    },
    "product-demo": {
        **_COMMON,
        "method": (str, "rsvgd"),
        "particles": (int, 20),
        "iters": (int, 200),
        "step": (float, 0.0001),
        "kernel": (str, "vmf"),
        "block_count": (int, 2),
        "block_dim": (int, 3),
        "target_kappa": (float, 10.0),
    },
    "gaussian-sanity": {
        **_COMMON,
        "method": (str, "svgd"),
        "particles": (int, 50),
        "kernel": (str, "median"),
        "dim": (int, 2),
    },
}


def parse_config_file(path):
    """Flat key=value file; blank lines and '#' comments ignored."""
    out = {}
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{line_no}: expected key=value")
            key, value = stripped.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def resolve_config(command, args):
    schema = _SCHEMAS[command]
    resolved = {key: default for key, (_, default) in schema.items()}
    if args.config:
        for key, value in parse_config_file(args.config).items():
            if key not in schema:
                raise ValueError(f"unknown config key {key!r} for {command}")
            caster = schema[key][0]
            resolved[key] = caster(value)
    for key in schema:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = schema[key][0](flag_value)
    if resolved["particles"] < 1:
        raise ValueError("particles must be >= 1")
    if resolved["iters"] < 0:
        raise ValueError("iters must be >= 0")
    if resolved["cadence"] < 1:
        raise ValueError("cadence must be >= 1")
    if "split" in resolved and not 0.0 < resolved["split"] < 1.0:
        raise ValueError("split must be in (0, 1)")
    if not resolved["out"]:
        resolved["out"] = f"{command}.csv"
    return resolved


def _resolve_update_kernel(cfg, ambient_block_dim=None, n_blocks=1):
    kern = cfg["kernel"]
    if kern in ("median", "summed"):
        return kern
    if kern.startswith("fixed:"):
        return Gaussian(float(kern.split(":", 1)[1]))
    if kern == "vmf":
        kappa = cfg["kappa"] if cfg["kappa"] > 0 else float(ambient_block_dim)
        return VmfProduct(kappa, n_blocks, ambient_block_dim)
    raise ValueError(f"unknown kernel setting {kern!r}")


def _optimizer_for(cfg):
    if cfg["method"] == "svgd":
        return AdagradMomentum(step_size=cfg["step"])
    return VanillaStep(step_size=cfg["step"])


def _header(command, cfg):
    header = {"command": command, "version": __version__}
    for key in sorted(cfg):
        header[key] = cfg[key]
    return header


def _emit(report, result, extra_metrics, out_path):
    for row in result.rows:
        csv_row = {"iteration": row["iteration"], "wall_ms": 0.0}
        for name in extra_metrics:
            csv_row[name] = row[name]
        csv_row["mean_step_norm"] = row["mean_step_norm"]
        report.add_row(csv_row)
    report.write(out_path)


def _parse_components(text, dim):
    if not text:
        mu = np.zeros(dim)
        mu[-1] = 1.0
        return VmfMixture.single(mu, 10.0)
    means, kappas, weights = [], [], []
    for chunk in text.split("|"):
        kappa_s, weight_s, mu_s = chunk.split(":")
        mu = np.array([float(v) for v in mu_s.split(",")])
        if mu.shape[0] != dim:
            raise ValueError(f"component mean has dimension {mu.shape[0]}, "
                             f"expected {dim}")
        means.append(mu / np.linalg.norm(mu))
        kappas.append(float(kappa_s))
        weights.append(float(weight_s))
    weights = np.array(weights)
    return VmfMixture(means=np.array(means), kappas=np.array(kappas),
                      weights=weights / weights.sum())


def cmd_blr_bench(args):
    cfg = resolve_config("blr-bench", args)
    if cfg["data"] == "synthetic":
        X, y, _ = make_synthetic_logistic(cfg["synth_rows"],
                                          cfg["synth_features"],
                                          seed=cfg["data_seed"])
    else:
        X, y = load_sparse_dataset(cfg["data"])
    seeds = np.random.SeedSequence(cfg["seed"]).spawn(2)
    X_tr, y_tr, X_te, y_te = split_standardize(
        X, y, cfg["split"], seeds[0], standardize=cfg["standardize"])
    model = BlrModel(X=X_tr, y=y_tr, alpha=cfg["alpha"])
    rng = np.random.default_rng(seeds[1])
    init = np.sqrt(cfg["alpha"]) * rng.standard_normal(
        (cfg["particles"], model.n_features))
    cloud = ParticleCloud(init, Euclidean(model.n_features))
    metrics = {"test_accuracy": lambda c: blr_predict(c.points, X_te, y_te)}
    result = run(cloud, model, cfg["method"], _resolve_update_kernel(cfg),
                 _optimizer_for(cfg), cfg["iters"], metrics=metrics,
                 metric_every=cfg["cadence"],
                 bandwidth_freeze=cfg["kernel_freeze"])
    report_columns = ["iteration", "wall_ms", "test_accuracy", "mean_step_norm"]
    report = RunReport(header=_header("blr-bench", cfg), columns=report_columns)
    _emit(report, result, ["test_accuracy"], cfg["out"])
    return cfg, result


def cmd_sphere_demo(args):
    cfg = resolve_config("sphere-demo", args)
    if cfg["method"] != "rsvgd":
        raise ValueError("sphere-demo supports the rsvgd method only")
    dim = cfg["sphere_dim"]
    target = _parse_components(cfg["components"], dim)
    kernel = _resolve_update_kernel(cfg, ambient_block_dim=dim)
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]))
    cloud = ParticleCloud(uniform_sphere(rng, cfg["particles"], dim),
                          Sphere(dim))
    metrics = {"rksd": lambda c: rksd_sphere(c.points, target, kernel).value}
    result = run(cloud, target, "rsvgd", kernel, _optimizer_for(cfg),
                 cfg["iters"], metrics=metrics, metric_every=cfg["cadence"])
    report = RunReport(header=_header("sphere-demo", cfg),
                       columns=["iteration", "wall_ms", "rksd",
                                "mean_step_norm"])
    _emit(report, result, ["rksd"], cfg["out"])
    return cfg, result


class _ProductVmfTarget:
    """Independent vMF per block, all blocks sharing one concentration."""

    def __init__(self, means, kappa):
        self.means = means          # (P, n) unit rows
        self.kappa = kappa

    def grad_log(self, Y):
        Y = np.atleast_2d(Y)
        flat = (self.kappa * self.means).reshape(-1)
        return np.tile(flat, (Y.shape[0], 1))


def cmd_product_demo(args):
    cfg = resolve_config("product-demo", args)
    if cfg["method"] != "rsvgd":
        raise ValueError("product-demo supports the rsvgd method only")
    p, bd = cfg["block_count"], cfg["block_dim"]
    means = np.zeros((p, bd))
    means[:, -1] = 1.0
    target = _ProductVmfTarget(means, cfg["target_kappa"])
    kernel = _resolve_update_kernel(cfg, ambient_block_dim=bd, n_blocks=p)
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]))
    cloud = ParticleCloud(uniform_sphere(rng, cfg["particles"], bd, n_blocks=p),
                          ProductSphere(p, bd))
    result = run(cloud, target, "rsvgd", kernel, _optimizer_for(cfg),
                 cfg["iters"], metrics={}, metric_every=cfg["cadence"])
    report = RunReport(header=_header("product-demo", cfg),
                       columns=["iteration", "wall_ms", "mean_step_norm"])
    _emit(report, result, [], cfg["out"])
    return cfg, result


def cmd_gaussian_sanity(args):
    cfg = resolve_config("gaussian-sanity", args)
    dim = cfg["dim"]
    target = GaussianTarget(mean=np.zeros(dim))
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]))
    cloud = ParticleCloud(rng.standard_normal((cfg["particles"], dim)),
                          Euclidean(dim))
    ksd_kernel = Gaussian(1.0)
    metrics = {"ksd": lambda c: ksd_euclidean(c.points, target, ksd_kernel).value}
    result = run(cloud, target, cfg["method"], _resolve_update_kernel(cfg),
                 _optimizer_for(cfg), cfg["iters"], metrics=metrics,
                 metric_every=cfg["cadence"],
                 bandwidth_freeze=cfg["kernel_freeze"])
    report = RunReport(header=_header("gaussian-sanity", cfg),
                       columns=["iteration", "wall_ms", "ksd",
                                "mean_step_norm"])
    _emit(report, result, ["ksd"], cfg["out"])
    return cfg, result


_COMMANDS = {
    "blr-bench": cmd_blr_bench,
    "sphere-demo": cmd_sphere_demo,
    "product-demo": cmd_product_demo,
    "gaussian-sanity": cmd_gaussian_sanity,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="steinvi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--method", choices=["svgd", "rsvgd"])
        p.add_argument("--particles", type=int)
        p.add_argument("--iters", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--step", type=float)
        p.add_argument("--kernel")
        p.add_argument("--kappa", type=float)
        p.add_argument("--data")
        p.add_argument("--split", type=float)
        p.add_argument("--standardize", action="store_true", default=None)
        p.add_argument("--cadence", type=int)
        p.add_argument("--out")
        p.add_argument("--config")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg, result = _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    print(f"{args.command}: {cfg['iters']} iterations, "
          f"{result.n_clipped} clipped steps, {elapsed_ms:.1f} ms "
          f"-> {cfg['out']}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
