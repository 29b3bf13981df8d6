"""``srgmm`` command-line front end.

Exit codes: 0 verdict pass, 1 verdict fail, 2 usage or config error,
3 unreadable or malformed instance file.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys

import jsonschema
from threadpoolctl import threadpool_limits

from . import conditions as cond
from .adversary import Identity, spec_from_json
from .errors import FormatError, InvalidInput, InvalidParams, InvalidSpec
from .evaluation import evaluate, planted_clustering, misclassification_bound
from .generate import generate, make_params
from .io import load_instance, save_instance, write_json
from .lloyd import DEFAULT_DRIFT_TOL, DEFAULT_MAX_ITERS, run_lloyd
from .lowerbound import build_lowerbound, certify, lloyd_from_planted
from .model import Clustering, EvalReport, separation
from .rng import SeedTree
from .seeding import choose_method, init_centers

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_FORMAT = 0, 1, 2, 3

_U64 = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}
_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["k", "d", "N", "delta"],
            "properties": {
                "k": _POS_INT,
                "d": _POS_INT,
                "N": _POS_INT,
                "delta": {"oneOf": [_POS_NUM, {"type": "array", "items": _POS_NUM, "minItems": 1}]},
                "sigma": _POS_NUM,
                "sizes": {"type": "array", "items": _POS_INT},
                "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "covariance": {"enum": ["spherical", "diagonal"]},
            },
        },
        "adversary": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["identity", "uniform_shrink", "core_collapse",
                                  "halfspace_collapse", "mean_shift"]},
                "dist": {"enum": ["constant", "uniform"]},
                "lam": {"type": "number"},
                "low": {"type": "number"},
                "high": {"type": "number"},
                "p": {"type": "number"},
                "directions": {"oneOf": [{"const": "random"},
                                         {"type": "array", "items": {"type": "array"}}]},
                "clusters": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            },
        },
        "seeding": {"enum": ["weak", "strong", "auto"]},
        "seeds": {"type": "array", "items": _U64, "minItems": 1},
        "lloyd": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iters": _POS_INT,
                "drift_tol": {"type": "number", "minimum": 0},
                "empty": {"enum": ["retain", "farthest"]},
            },
        },
        "lowerbound": {
            "type": "object",
            "additionalProperties": False,
            "required": ["d", "k", "N", "Delta", "m"],
            "properties": {
                "d": _POS_INT,
                "k": _POS_INT,
                "N": _POS_INT,
                "Delta": _POS_NUM,
                "m": {"type": "integer", "minimum": 0},
                "M_factor": _POS_NUM,
                "sigma": _POS_NUM,
            },
        },
        "conditions": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"lambda": _POS_NUM},
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": "string"}},
        },
    },
}

SWEEP_COLUMNS = ("seed", "k", "d", "N", "delta", "adversary", "seeding", "iterations",
                 "converged") + EvalReport.CSV_COLUMNS + ("bound",)


class UsageError(Exception):
    pass


def _describe_error(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return f"unknown key(s) {extra} at {where}"
    if err.validator == "required":
        return f"{err.message} at {where}"
    return f"invalid value for '{where}': {err.message}"


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    errors = sorted(jsonschema.Draft7Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise UsageError("config error: " + _describe_error(errors[0]))
    if "adversary" in cfg:
        try:
            spec_from_json(cfg["adversary"])
        except InvalidSpec as exc:
            raise UsageError(f"config error: adversary: {exc}") from None


def _adversary(cfg):
    return spec_from_json(cfg["adversary"]) if "adversary" in cfg else Identity()


def _seed(args, cfg, default=0):
    if args.seed is not None:
        return args.seed
    if cfg and cfg.get("seeds"):
        return cfg["seeds"][0]
    return default


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _lloyd_opts(cfg):
    opts = (cfg or {}).get("lloyd", {})
    return (opts.get("max_iters", DEFAULT_MAX_ITERS), opts.get("drift_tol", DEFAULT_DRIFT_TOL),
            opts.get("empty", "retain"))


def _make_instance(model, adversary, seed, delta=None):
    root = SeedTree(seed)
    params = make_params(model["k"], model["d"], model["N"],
                         model["delta"] if delta is None else delta,
                         sigma=model.get("sigma", 1.0), sizes=model.get("sizes"),
                         weights=model.get("weights"),
                         covariance=model.get("covariance", "spherical"),
                         stream=root.child("params"))
    return generate(params, adversary, root.child("instance"))


def _cluster(inst, seed, seeding, cfg):
    max_iters, drift_tol, empty = _lloyd_opts(cfg)
    method = choose_method(inst, seeding)
    centers = init_centers(inst, inst.k, SeedTree(seed).child("cluster"), method)
    clustering, trace = run_lloyd(inst, centers, max_iters, drift_tol, empty)
    return clustering, trace, method


def cmd_generate(args):
    if not args.config:
        raise UsageError("generate needs --config")
    cfg = load_config(args.config)
    if "model" not in cfg:
        raise UsageError("config error: generate needs a 'model' section")
    model = cfg["model"]
    if isinstance(model["delta"], list):
        raise UsageError("config error: generate needs a single 'delta'")
    inst = _make_instance(model, _adversary(cfg), _seed(args, cfg))
    out = _out_dir(args)
    save_instance(inst, os.path.join(out, "instance.srgmm"))
    delta = separation(inst.params) if inst.k >= 2 else float("inf")
    print(f"realized_delta {delta!r}")
    print(f"w_min {inst.params.w_min!r}")
    return EXIT_OK


def cmd_cluster(args):
    cfg = load_config(args.config) if args.config else {}
    inst = load_instance(args.instance)
    seeding = args.seeding or cfg.get("seeding", "auto")
    clustering, trace, method = _cluster(inst, _seed(args, cfg, inst.seed), seeding, cfg)
    out = _out_dir(args)
    payload = clustering.to_json()
    payload["seeding"] = method
    write_json(os.path.join(out, "clustering.json"), payload)
    with open(os.path.join(out, "trace.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(trace.to_jsonl())
    return EXIT_OK


def _load_clustering(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return Clustering.from_json(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read clustering {path}: {exc}") from None


def cmd_evaluate(args):
    inst = load_instance(args.instance)
    clustering = _load_clustering(args.clustering) if args.clustering else planted_clustering(inst)
    report = evaluate(inst, clustering)
    write_json(os.path.join(_out_dir(args), "eval.json"), report.to_json())
    return EXIT_OK if report.total_misclassified <= args.max_misclassified else EXIT_FAIL


def cmd_check_conditions(args):
    cfg = load_config(args.config) if args.config else {}
    inst = load_instance(args.instance)
    lam = args.lam if args.lam is not None else cfg.get("conditions", {}).get("lambda")
    stream = SeedTree(_seed(args, cfg, inst.seed)).child("conditions")
    report = cond.check_all(inst, lam=lam, stream=stream)
    write_json(os.path.join(_out_dir(args), "conditions.json"), report.to_json())
    return EXIT_OK if report.all_pass else EXIT_FAIL


def cmd_lowerbound(args):
    if not args.config:
        raise UsageError("lowerbound needs --config")
    cfg = load_config(args.config)
    if "lowerbound" not in cfg:
        raise UsageError("config error: lowerbound needs a 'lowerbound' section")
    p = cfg["lowerbound"]
    lb = build_lowerbound(p["d"], p["k"], p["N"], p["Delta"], p["m"], p.get("M_factor", 100.0),
                          p.get("sigma", 1.0), SeedTree(_seed(args, cfg)))
    max_iters, drift_tol, _ = _lloyd_opts(cfg)
    clustering, trace = lloyd_from_planted(lb, max(max_iters, 1), drift_tol)
    cert = certify(lb, clustering)
    out = _out_dir(args)
    save_instance(lb.instance, os.path.join(out, "instance.srgmm"))
    write_json(os.path.join(out, "clustering.json"), clustering.to_json())
    with open(os.path.join(out, "trace.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(trace.to_jsonl())
    payload = cert.to_json()
    payload["construction"] = lb.to_json()
    write_json(os.path.join(out, "certificate.json"), payload)
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_experiment(args):
    if not args.config:
        raise UsageError("experiment needs --config")
    cfg = load_config(args.config)
    if "model" not in cfg:
        raise UsageError("config error: experiment needs a 'model' section")
    model = cfg["model"]
    deltas = model["delta"] if isinstance(model["delta"], list) else [model["delta"]]
    seeds = [args.seed] if args.seed is not None else cfg.get("seeds", [0])
    seeding = args.seeding or cfg.get("seeding", "auto")
    adversary = _adversary(cfg)
    out = _out_dir(args)
    path = os.path.join(out, cfg.get("outputs", {}).get("csv", "results.csv"))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for delta in deltas:
            for seed in seeds:
                inst = _make_instance(model, adversary, seed, delta)
                clustering, _, method = _cluster(inst, seed, seeding, cfg)
                report = evaluate(inst, clustering)
                row = {"seed": seed, "k": inst.k, "d": inst.d, "N": inst.N, "delta": repr(float(delta)),
                       "adversary": inst.adversary, "seeding": method,
                       "iterations": clustering.iteration_count,
                       "converged": int(clustering.converged),
                       "bound": repr(misclassification_bound(inst.k, inst.d, inst.N, delta))}
                row.update(report.csv_row())
                writer.writerow(row)
    return EXIT_OK


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srgmm", description="Semi-random mixture k-means tools.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--seed", type=_u64, help="root seed (overrides the config's first seed)")
    common.add_argument("--threads", type=int, help="BLAS thread limit")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="sample an instance").set_defaults(func=cmd_generate)

    p = sub.add_parser("cluster", parents=[common], help="seed and run Lloyd")
    p.add_argument("--instance", required=True)
    p.add_argument("--seeding", choices=("weak", "strong", "auto"))
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", parents=[common], help="compare a clustering with the planted one")
    p.add_argument("--instance", required=True)
    p.add_argument("--clustering", help="clustering.json (default: the planted clustering)")
    p.add_argument("--max-misclassified", type=int, default=0,
                   help="largest total symmetric difference that still passes (default 0)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("check-conditions", parents=[common], help="measure the concentration conditions")
    p.add_argument("--instance", required=True)
    p.add_argument("--lambda", dest="lam", type=float, help="bad-direction threshold in sigma units")
    p.set_defaults(func=cmd_check_conditions)

    sub.add_parser("lowerbound", parents=[common],
                   help="build and certify the paired construction").set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("experiment", parents=[common], help="generate/cluster/evaluate sweep to CSV")
    p.add_argument("--seeding", choices=("weak", "strong", "auto"))
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    limit = threadpool_limits(args.threads) if args.threads else contextlib.nullcontext()
    try:
        with limit:
            return args.func(args)
    except UsageError as exc:
        print(f"srgmm: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"srgmm: malformed instance: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (InvalidParams, InvalidSpec, InvalidInput) as exc:
        print(f"srgmm: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
