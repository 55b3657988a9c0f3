"""Resolve configurations, run scenarios, write manifests, run convergence sweeps."""

from __future__ import annotations

import math
import os
import platform
import time
from pathlib import Path

import numpy as np
import scipy

from .. import __version__, io
from ..errors import ConfigError
from .config import apply_override, load_file, validate
from .scenarios import SCENARIOS, RunContext, constraint_config

OUTPUT_ROOT_ENV = "IBFSI_OUTPUT_ROOT"


def output_root():
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "ibfsi_runs"))


def resolve(source, overrides=()):
    """``(scenario, RunConfig)`` from a scenario name or TOML path plus overrides.

    Every check that can fail without computing happens here.
    """
    if source in SCENARIOS:
        data = {"scenario": source}
    elif Path(source).suffix == ".toml" or Path(source).exists():
        data = load_file(source)
    else:
        raise ConfigError(f"unknown scenario {source!r}; available: {', '.join(SCENARIOS)}")
    for o in overrides:
        apply_override(data, o)
    name = data.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; available: {', '.join(SCENARIOS)}")
    sc = SCENARIOS[name]
    cfg = validate(data, sc.defaults)
    cfg.grid.build()
    constraint_config(cfg)
    for key, b in cfg.body.items():
        if b.spacing <= 0:
            raise ConfigError(f"body.{key}.spacing must be positive")
    return sc, cfg


def _json_metrics(metrics):
    out = {}
    for k, v in metrics.items():
        a = np.asarray(v) if not isinstance(v, list) else None
        if a is not None and a.ndim == 0:
            x = a.item()
            out[k] = x if not (isinstance(x, float) and not math.isfinite(x)) else str(x)
        else:
            out[k] = v
    return out


def run_scenario(source, overrides=(), out_dir=None, write=True):
    """Run one configuration; returns ``(result, output directory or None)``."""
    sc, cfg = resolve(source, overrides)
    if write:
        out_dir = Path(out_dir) if out_dir is not None else output_root() / (cfg.output.dir or sc.name)
        out_dir.mkdir(parents=True, exist_ok=True)
    else:
        out_dir = None
    ctx = RunContext(out_dir)
    t0 = time.perf_counter()
    result = sc.runner(cfg, ctx)
    wall = time.perf_counter() - t0
    if out_dir is not None:
        manifest = {
            "scenario": sc.name,
            "config": cfg.model_dump(mode="json"),
            "code_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "wall_time_s": wall,
            "metrics": _json_metrics(result.metrics),
            "files": sorted(ctx.files),
        }
        io.write_json(out_dir / "manifest.json", manifest)
    return result, out_dir


def observed_orders(hs, errors):
    """Successive-ratio orders ``log2``-style, ``None`` where undefined."""
    orders = [None]
    for k in range(1, len(hs)):
        e0, e1 = errors[k - 1], errors[k]
        if e0 is None or e1 is None or e0 <= 0 or e1 <= 0:
            orders.append(None)
        else:
            orders.append(math.log(e0 / e1) / math.log(hs[k - 1] / hs[k]))
    return orders


def convergence_harness(source, grids, overrides=(), out_dir=None):
    """Observed-order table over ``grids`` (values of ``grid.nx``).

    Scenarios with an analytic error use it directly; the others compare
    their observable against the finest grid.
    """
    grids = sorted({int(n) for n in grids})
    if len(grids) < 2:
        raise ConfigError("a convergence sweep needs at least two grids")
    results, hs = [], []
    for n in grids:
        _, cfg = resolve(source, list(overrides) + [f"grid.nx={n}"])
        res, _ = run_scenario(source, list(overrides) + [f"grid.nx={n}"], write=False)
        results.append(res)
        hs.append(cfg.grid.build().h)
    if all(r.error is not None for r in results):
        errors = [r.error for r in results]
        kind = "analytic"
    elif all(r.observable is not None for r in results):
        ref = results[-1].observable
        errors = [abs(r.observable - ref) for r in results[:-1]] + [None]
        kind = "finest_grid"
    else:
        raise ConfigError("scenario exposes no error metric for a convergence sweep")
    orders = observed_orders(hs, errors)
    rows = [
        {"nx": n, "h": h, "error": e, "order": o, "reference": kind}
        for n, h, e, o in zip(grids, hs, errors, orders)
    ]
    if out_dir is not None:
        fmt = lambda v: "n/a" if v is None else v  # noqa: E731
        io.write_csv(Path(out_dir) / "convergence.csv", ["nx", "h", "error", "order", "reference"],
                     [[r["nx"], r["h"], fmt(r["error"]), fmt(r["order"]), r["reference"]] for r in rows])
    return rows


def list_scenarios():
    """Registry dump: name, description and default configuration."""
    return [{"name": s.name, "description": s.description, "defaults": s.defaults} for s in SCENARIOS.values()]
