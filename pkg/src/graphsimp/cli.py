"""Command line entry point: ``graphsimp {simplify,register,stats,compare,gen}``."""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from graphsimp import io
from graphsimp.baseline import uniform_voxel
from graphsimp.core import PointCloud, RigidTransform, SelectionMask, select
from graphsimp.graph import build_knn_graph
from graphsimp.metrics import feature_mass_retained, output_degree_variance
from graphsimp.objective import feature_vector
from graphsimp.partition import SimplifyParams, audit, simplify_detailed
from graphsimp.registration import METHODS, IcpConfig, registration_experiment, simplify_with
from graphsimp.solver import SolverConfig
from graphsimp.synth import SHAPES, generate

log = logging.getLogger("graphsimp")

DEFAULTS = {
    "method": "proposed",
    "rate": 0.1,
    "lambda": 1e-3,
    "k": 10,
    "sigma": None,
    "cube_min": 3000,
    "cube_max": 8000,
    "seed": 0,
    "max_iters": 500,
    "tol": None,
    "shape": "cube",
    "count": 60000,
    "lambdas": "1e-5,1e-3,1e-1",
    "methods": "original,uniform,proposed",
    "trials": 1,
    "max_angle": 10.0,
    "max_shift": 0.05,
    "transform": None,
    "stats": None,
}

_TYPES = {
    "rate": float, "lambda": float, "k": int, "sigma": float, "cube_min": int, "cube_max": int,
    "seed": int, "max_iters": int, "tol": float, "count": int, "trials": int,
    "max_angle": float, "max_shift": float,
}


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [graphsimp] section; flags override it")
    common.add_argument("--input")
    common.add_argument("--output")
    common.add_argument("--stats", help="stats report path (simplify); default <output>.stats.txt")
    common.add_argument("--method", choices=["proposed", "uniform", "contour"])
    common.add_argument("--rate", type=float)
    common.add_argument("--lambda", dest="lambda", type=float)
    common.add_argument("--k", type=int)
    common.add_argument("--sigma", type=float)
    common.add_argument("--cube-min", dest="cube_min", type=int)
    common.add_argument("--cube-max", dest="cube_max", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--shape", choices=SHAPES)
    common.add_argument("--count", type=int)
    common.add_argument("--lambdas", help="comma separated lambda values")
    common.add_argument("--methods", help="comma separated registration methods")
    common.add_argument("--trials", type=int)
    common.add_argument("--max-angle", dest="max_angle", type=float, help="degrees")
    common.add_argument("--max-shift", dest="max_shift", type=float, help="fraction of bbox diagonal")
    common.add_argument("--transform", help="explicit 'ax,ay,az,angle_deg,tx,ty,tz'")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="graphsimp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("simplify", "simplify a cloud"),
        ("register", "shift-and-rotate registration experiment"),
        ("stats", "describe a cloud"),
        ("compare", "lambda sweep table"),
        ("gen", "write a synthetic labelled cloud"),
    ]:
        sub.add_parser(name, parents=[common], help=helptext)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        ini = configparser.ConfigParser()
        if not ini.read(args.config):
            raise UsageError(f"cannot read config file {args.config}")
        section = ini["graphsimp"] if ini.has_section("graphsimp") else ini[ini.default_section]
        for key, raw in section.items():
            key = key.replace("-", "_")
            if key not in cfg and key not in ("input", "output"):
                raise UsageError(f"unknown config key {key!r}")
            cfg[key] = _TYPES.get(key, str)(raw)
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "verbose", "command"):
            cfg[key] = value
    cfg["command"] = args.command

    if not 0.0 < cfg["rate"] <= 1.0:
        raise UsageError(f"--rate must lie in (0, 1], got {cfg['rate']}")
    if cfg["lambda"] < 0:
        raise UsageError("--lambda must be nonnegative")
    if cfg["k"] < 1:
        raise UsageError("--k must be at least 1")
    if not 1 <= cfg["cube_min"] <= cfg["cube_max"]:
        raise UsageError("need 1 <= --cube-min <= --cube-max")
    return cfg


def _params(cfg, lam=None) -> SimplifyParams:
    return SimplifyParams(
        alpha=cfg["rate"],
        lam=cfg["lambda"] if lam is None else lam,
        k=cfg["k"],
        sigma=cfg["sigma"],
        size_limits=(cfg["cube_min"], cfg["cube_max"]),
        solver=SolverConfig(max_iters=cfg["max_iters"], kkt_tol=cfg["tol"]),
    )


def _need(cfg, key):
    if not cfg.get(key):
        raise UsageError(f"--{key} is required for '{cfg['command']}'")
    return cfg[key]


def _emit(report: dict, path) -> None:
    if path:
        io.write_stats(report, path)
    else:
        for key in sorted(report):
            print(f"{key} {io._fmt_value(report[key])}")


def cmd_simplify(cfg) -> int:
    cloud = io.read_cloud(_need(cfg, "input"))
    out = _need(cfg, "output")
    params = _params(cfg)
    start = time.perf_counter()
    audits = {}
    if cfg["method"] == "uniform":
        mask = uniform_voxel(cloud, params.alpha)
        f = feature_vector(build_knn_graph(cloud, params.k, params.sigma), cloud)
    else:
        if cfg["method"] == "contour":
            params = _params(cfg, lam=0.0)
        result = simplify_detailed(cloud, params)
        mask, f = result.mask, result.f
        audits = audit(result, cloud)
    elapsed = time.perf_counter() - start
    simplified = select(cloud, mask)
    io.write_cloud(simplified, out)
    report = {
        "input_count": len(cloud),
        "output_count": len(simplified),
        "feature_mass_retained": feature_mass_retained(f, mask.kept),
        "degree_variance": output_degree_variance(simplified, params.k),
        "wall_time_s": elapsed,
        **{f"audit_{k}": v for k, v in audits.items()},
    }
    io.write_stats(report, cfg["stats"] or f"{out}.stats.txt")
    failed = [k for k, v in audits.items() if not v]
    if failed:
        log.error("audit failed: %s", ", ".join(failed))
        return 1
    return 0


def _parse_transform(text: str) -> RigidTransform:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 7:
        raise UsageError("--transform expects 7 comma separated numbers")
    axis, angle, shift = vals[:3], math.radians(vals[3]), vals[4:]
    if angle == 0.0:
        return RigidTransform(np.eye(3), shift)
    return RigidTransform.from_axis_angle(axis, angle, shift)


def cmd_register(cfg) -> int:
    cloud = io.read_cloud(_need(cfg, "input"))
    methods = [m.strip() for m in cfg["methods"].split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; expected one of {METHODS}")
    params = _params(cfg)
    rng = np.random.default_rng(cfg["seed"])
    diag = cloud.bbox_diagonal()
    if cfg["transform"]:
        transforms = [_parse_transform(cfg["transform"])] * cfg["trials"]
    else:
        transforms = [
            RigidTransform.random(rng, math.radians(cfg["max_angle"]), cfg["max_shift"] * diag)
            for _ in range(cfg["trials"])
        ]
    report = {}
    for m in methods:
        base_mask = simplify_with(m, cloud, params)
        errors = [
            registration_experiment(cloud, t, m, params=params, icp_config=IcpConfig(), original_mask=base_mask)
            for t in transforms
        ]
        report[f"rmse_{m}"] = float(np.median(errors))
        if len(errors) > 1:
            report[f"rmse_{m}_max"] = float(np.max(errors))
    _emit(report, cfg.get("output"))
    return 0


def cmd_stats(cfg) -> int:
    cloud = io.read_cloud(_need(cfg, "input"))
    report = {"count": len(cloud), "bbox_diagonal": cloud.bbox_diagonal()}
    if len(cloud) > cfg["k"]:
        g = build_knn_graph(cloud, cfg["k"], cfg["sigma"])
        f = feature_vector(g, cloud)
        report.update(
            sigma=g.sigma,
            mean_knn_distance=float(g.distances.mean()),
            feature_mass=float(f.sum()),
            degree_variance=float(np.var(g.degrees)),
        )
    _emit(report, cfg.get("output"))
    return 0


def _nonincreasing(values) -> bool:
    return all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def cmd_compare(cfg) -> int:
    cloud = io.read_cloud(_need(cfg, "input"))
    lambdas = sorted(float(v) for v in cfg["lambdas"].split(",") if v.strip())
    if not lambdas:
        raise UsageError("--lambdas must list at least one value")
    rows = []
    for lam in lambdas:
        start = time.perf_counter()
        result = simplify_detailed(cloud, _params(cfg, lam=lam))
        elapsed = time.perf_counter() - start
        rows.append((
            lam,
            feature_mass_retained(result.f, result.mask.kept),
            output_degree_variance(select(cloud, result.mask), cfg["k"]),
            elapsed,
        ))
    dv_ok = _nonincreasing([r[2] for r in rows])
    fm_ok = _nonincreasing([r[1] for r in rows])
    lines = ["lambda feature_mass_retained degree_variance runtime_s"]
    lines += [f"{lam:g} {fm:.6f} {dv:.6f} {t:.3f}" for lam, fm, dv, t in rows]
    lines.append(f"# degree_variance_nonincreasing {str(dv_ok).lower()}")
    lines.append(f"# feature_mass_nonincreasing {str(fm_ok).lower()}")
    text = "\n".join(lines) + "\n"
    if cfg.get("output"):
        Path(cfg["output"]).write_text(text)
    else:
        sys.stdout.write(text)
    if not dv_ok:
        log.warning("degree variance is not non-increasing in lambda")
    return 0


def cmd_gen(cfg) -> int:
    out = _need(cfg, "output")
    cloud, labels = generate(cfg["shape"], cfg["count"], seed=cfg["seed"])
    io.write_cloud(cloud, out)
    io.write_labels(labels, f"{out}.labels")
    return 0


COMMANDS = {
    "simplify": cmd_simplify,
    "register": cmd_register,
    "stats": cmd_stats,
    "compare": cmd_compare,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        parser.error(str(exc))
    try:
        return COMMANDS[cfg["command"]](cfg)
    except UsageError as exc:
        parser.error(str(exc))
    except (OSError, ValueError, FloatingPointError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
