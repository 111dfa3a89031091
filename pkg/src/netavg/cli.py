"""Command-line front end: ``netavg run|spectrum|bound <config.yaml>``.

Exit codes: 0 success, 1 invalid config (the message names the key), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import experiments as ex
from .algorithms import (
    dmasg_schedule,
    dmasg_single_stage,
    run_dmasg,
    run_dsg,
    run_sda,
    theorem1_params,
    SdaParams,
)
from .bounds import compute_k_star, dsg_upper_bound, sda_upper_bound
from .export import run_result_csv, summary_rows_csv, write_text
from .gossip import matrix_to_csv
from .observation import ObservationModel, ProblemInstance, uniform_means_instance
from .topology import Kind

log = logging.getLogger("netavg")

_NUM_LIST = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}
_INT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}
_STR_OR_LIST = lambda enum: {"anyOf": [
    {"type": "string", "enum": enum},
    {"type": "array", "items": {"type": "string", "enum": enum}, "minItems": 1},
]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "topology": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": _STR_OR_LIST([k.value for k in Kind]),
                "n": {"type": "integer", "minimum": 1},
                "p": {"type": ["number", "null"], "exclusiveMinimum": 0, "maximum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "b": {"type": "number", "minimum": 0},
                "sigma": {"type": "number", "minimum": 0},
                "dim": {"type": "integer", "minimum": 1},
                "means": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "std_devs": {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": 0}}},
            },
        },
        "algorithm": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": _STR_OR_LIST(["sda", "dsg", "dmasg"]),
                "params": {"anyOf": [
                    {"type": "string", "enum": ["theorem1", "theorem2", "dmasg-schedule"]},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "eta": {"type": "number", "exclusiveMinimum": 0},
                            "zeta": {"type": "number", "minimum": 0},
                            "t_burn": {"type": "integer", "minimum": 0},
                            "n_stages": {"type": "integer", "minimum": 1},
                        },
                    },
                ]},
            },
        },
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"type": "string", "enum": ["single", "convergence", "sample_complexity",
                                                      "non_asymptotic"]},
                "T": {"type": "integer", "minimum": 1},
                "replication": {"type": "integer", "minimum": 0},
                "n_reps": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "t_grid": _INT_LIST,
                "stage_counts": _INT_LIST,
                "eps_grid": _NUM_LIST,
                "n_grid": _INT_LIST,
                "t_cap": {"type": "integer", "minimum": 1},
                "t_stride": {"type": ["number", "null"], "exclusiveMinimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string", "minLength": 1},
                "stride": {"type": ["integer", "null"], "minimum": 1},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def _key(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def _as_list(v):
    return list(v) if isinstance(v, list) else [v]


def load_config(path) -> dict:
    """Read and validate a YAML run config; raises :class:`ConfigError`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    try:
        cfg = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    errors = sorted(jsonschema.Draft7Validator(CONFIG_SCHEMA).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        raise ConfigError(f"invalid config key '{_key(err.path)}': {err.message}")
    topo_cfg = cfg.get("topology")
    if topo_cfg is not None:
        kinds = _as_list(topo_cfg["kind"])
        n = topo_cfg.get("n")
        if n is None:
            raise ConfigError("invalid config key 'topology.n': required")
        if "grid" in kinds and math.isqrt(n) ** 2 != n:
            raise ConfigError(f"invalid config key 'topology.n': grid needs a perfect square, got {n}")
        if "erdos_renyi" not in kinds and topo_cfg.get("p") is not None:
            raise ConfigError("invalid config key 'topology.p': only meaningful for erdos_renyi")
    model = cfg.get("model", {})
    if "means" in model:
        means = np.asarray(model["means"], dtype=float)
        if means.ndim != 2:
            raise ConfigError("invalid config key 'model.means': must be an N x n table")
        if topo_cfg is not None and means.shape[0] != topo_cfg["n"]:
            raise ConfigError(f"invalid config key 'model.means': {means.shape[0]} rows for {topo_cfg['n']} nodes")
        if "std_devs" in model and np.shape(model["std_devs"]) != means.shape:
            raise ConfigError("invalid config key 'model.std_devs': shape differs from model.means")
    return cfg


def _seed(cfg) -> int:
    return int(cfg.get("experiment", {}).get("seed", cfg.get("seed", 0)))


def _topology_specs(cfg) -> tuple[ex.TopologySpec, ...]:
    t = cfg["topology"]
    return tuple(ex.TopologySpec(k, t["n"], t.get("p"), t.get("seed", _seed(cfg))) for k in _as_list(t["kind"]))


def _require(cfg, section):
    if section not in cfg:
        raise ConfigError(f"invalid config key '{section}': required for this command")
    return cfg[section]


def _instance(cfg, n_nodes) -> ProblemInstance:
    model = cfg.get("model", {})
    if "means" in model:
        means = np.asarray(model["means"], dtype=float)
        stds = np.asarray(model.get("std_devs", np.full_like(means, model.get("sigma", 1.0))), dtype=float)
        return ProblemInstance(ObservationModel(means, stds, master_seed=_seed(cfg)))
    return uniform_means_instance(n_nodes, model.get("dim", 1), model.get("b", 1.0),
                                  model.get("sigma", 1.0), _seed(cfg))


def _experiment_config(cfg, family, paper_scale) -> ex.ExperimentConfig:
    exp = cfg.get("experiment", {})
    model = cfg.get("model", {})
    overrides = {k: exp[k] for k in ("n_reps", "t_cap", "t_stride") if k in exp}
    for k in ("t_grid", "stage_counts", "eps_grid", "n_grid"):
        if k in exp:
            overrides[k] = tuple(exp[k])
    overrides.update({k: model[k] for k in ("b", "sigma", "dim") if k in model})
    overrides["seed"] = _seed(cfg)
    if "topology" in cfg:
        overrides["topologies"] = _topology_specs(cfg)
    if "algorithm" in cfg:
        overrides["algorithms"] = tuple(_as_list(cfg["algorithm"]["name"]))
    factory = ex.full_scale_config if paper_scale else ex.desk_config
    try:
        return factory(family, **overrides)
    except ValueError as exc:
        raise ConfigError(f"invalid config key 'experiment': {exc}") from exc


def _single_run(cfg, net, instance, t_total, stride):
    alg = _as_list(_require(cfg, "algorithm")["name"])
    if len(alg) != 1:
        raise ConfigError("invalid config key 'algorithm.name': a single run takes one algorithm")
    alg = alg[0]
    params = cfg["algorithm"].get("params")
    rep = cfg.get("experiment", {}).get("replication", 0)
    model = instance.model
    if alg == "sda":
        if isinstance(params, dict):
            p = SdaParams(t_total, params.get("t_burn", t_total // 2),
                          params.get("eta", 1.0 / net.gossip.lambda_max), params.get("zeta", 0.0))
        else:
            p = theorem1_params(net.gossip, t_total)
        return run_sda(net.gossip, model, p, rep, stride)
    if alg == "dsg":
        return run_dsg(net.weights, model, t_total, rep, stride)
    if isinstance(params, dict) and "n_stages" in params:
        p = dmasg_schedule(net.shifted, params["n_stages"])
    else:
        p = dmasg_single_stage(net.shifted, t_total)
    return run_dmasg(net.shifted, model, p, rep, stride)


def cmd_run(cfg, out_dir: Path, threads: int, paper_scale: bool = False) -> Path:
    exp = cfg.get("experiment", {})
    family = exp.get("family", "single")
    out_name = cfg.get("output", {}).get("path", f"{family}.csv")
    seed = _seed(cfg)
    if family == "single":
        specs = _topology_specs({**cfg, "topology": _require(cfg, "topology")})
        if len(specs) != 1:
            raise ConfigError("invalid config key 'topology.kind': a single run takes one topology")
        if "T" not in exp:
            raise ConfigError("invalid config key 'experiment.T': required for a single run")
        net = ex.network(specs[0])
        instance = _instance(cfg, specs[0].n)
        result = _single_run(cfg, net, instance, exp["T"], cfg.get("output", {}).get("stride"))
        text = run_result_csv(result, cfg, seed)
    else:
        config = _experiment_config(cfg, family, paper_scale)
        rows = ex.run_experiment(config, threads)
        text = summary_rows_csv(rows, config.echo(), config.seed)
    return write_text(out_dir / out_name, text)


def cmd_spectrum(cfg, out_dir: Path | None = None) -> str:
    lines = []
    for spec in _topology_specs({**cfg, "topology": _require(cfg, "topology")}):
        net = ex.network(spec)
        g = net.gossip
        k_star = compute_k_star(g.kappa_l)
        lines.append(
            f"{spec.kind} N={spec.n}: kappa(L)={g.kappa_l:.10g} kappa(W)={net.weights.kappa_w:.10g} "
            f"lambda_1={g.lambda_max:.10g} lambda_N-1={g.lambda_min_nonzero:.10g} k*={k_star.value}"
        )
        if out_dir is not None:
            write_text(out_dir / f"{spec.kind}_W.csv", matrix_to_csv(net.weights.w))
            write_text(out_dir / f"{spec.kind}_L.csv", matrix_to_csv(g.l))
            write_text(out_dir / f"{spec.kind}_edges.txt", net.topology.to_edge_list())
    return "\n".join(lines)


def cmd_bound(cfg) -> str:
    t_total = cfg.get("experiment", {}).get("T")
    if t_total is None:
        raise ConfigError("invalid config key 'experiment.T': required for bound")
    algs = _as_list(_require(cfg, "algorithm")["name"])
    out = []
    for spec in _topology_specs({**cfg, "topology": _require(cfg, "topology")}):
        net = ex.network(spec)
        instance = _instance(cfg, spec.n)
        for alg in algs:
            if alg == "sda":
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    report = sda_upper_bound(net.gossip, instance, t_total)
                for w in caught:
                    out.append(f"# warning: {w.message}")
            elif alg == "dsg":
                report = dsg_upper_bound(net.weights, instance, t_total)
            else:
                raise ConfigError("invalid config key 'algorithm.name': no closed-form bound for dmasg")
            out.append(f"# {spec.kind} N={spec.n}")
            out.append(report.to_csv().rstrip("\n"))
    return "\n".join(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netavg", description="Stochastic distributed averaging simulations.")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    parser.add_argument("--paper-scale", action="store_true", help="use full-size experiment defaults")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default: current directory; spectrum writes matrices only when given)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run one algorithm or an experiment family"),
                       ("spectrum", "print spectral quantities of the network"),
                       ("bound", "print the finite-time upper bound")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            path = cmd_run(cfg, args.out or Path("."), args.threads, args.paper_scale)
            print(f"wrote {path}")
        elif args.command == "spectrum":
            print(cmd_spectrum(cfg, args.out))
        else:
            print(cmd_bound(cfg))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
