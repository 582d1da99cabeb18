"""Command-line entry points: run and validate experiment configs.

``wfduality run config.json [--out DIR] [--workers K] [--seed S]`` executes
the configured experiment and writes ``result.json`` (deterministic payload:
config echo, build id, metrics, verdicts) plus data CSVs into the output
directory.  Wall-clock timing goes to ``run_meta.json``, which is excluded
from the determinism contract.  Exit codes: 0 success, 2 a statistical
verdict failed, 1 error.

``wfduality validate config.json`` dry-runs schema and model validation
without simulating.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
import time

import click
import numpy as np

from . import bcre, bridge, duality, fvwrs, thresholds
from .config import (build_finite_params, build_limit_params, load_config)
from .errors import SigmaNotZero, WfdualityError
from .rngstreams import batches, parallel_map, stream
from .wf_graph import EnvSequence

BUILD_ID = "wfduality-0.1.0"
DEFAULT_Z_THRESHOLD = 4.0


def _resolve_workers(cli_value: int | None, cfg: dict) -> int:
    if cli_value is not None:
        return cli_value
    if "workers" in cfg:
        return int(cfg["workers"])
    env = os.environ.get("WFDUALITY_WORKERS")
    if env:
        return int(env)
    return 1


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Experiment dispatch
# ---------------------------------------------------------------------------


def _run_thresholds(cfg: dict, workers: int):
    limit = build_limit_params(cfg["limit"])
    report = thresholds.classify(limit)
    return report.to_dict(), {}, {}


def _run_duality_moment(cfg: dict, workers: int):
    limit = build_limit_params(cfg["limit"])
    rep = duality.moment_check(
        limit, float(cfg["x"]), int(cfg["n"]), float(cfg["t"]),
        int(cfg.get("replicates", 100000)), float(cfg.get("dt", 1e-3)),
        int(cfg["seed"]), workers,
    )
    thr = float(cfg.get("z_threshold", DEFAULT_Z_THRESHOLD))
    verdicts = {"z_within_threshold": abs(rep.z) < thr}
    csvs = {"duality.csv": (
        ["check", "lhs", "lhs_se", "rhs", "rhs_se", "z"],
        [("moment", rep.lhs, rep.lhs_se, rep.rhs, rep.rhs_se, rep.z)],
    )}
    return rep.to_dict(), verdicts, csvs


def _run_duality_quenched(cfg: dict, workers: int):
    finite = build_finite_params(cfg["finite"])
    env = EnvSequence(np.asarray(cfg["env"], dtype=float))
    rep = duality.quenched_check(
        finite, env, float(cfg["x"]), int(cfg["n"]),
        int(cfg.get("replicates", 100000)), int(cfg["seed"]), workers,
    )
    thr = float(cfg.get("z_threshold", DEFAULT_Z_THRESHOLD))
    verdicts = {"z_within_threshold": abs(rep.z) < thr}
    csvs = {"duality.csv": (
        ["check", "lhs", "lhs_se", "rhs", "rhs_se", "z"],
        [("quenched", rep.lhs, rep.lhs_se, rep.rhs, rep.rhs_se, rep.z)],
    )}
    return rep.to_dict(), verdicts, csvs


def _run_duality_annealed(cfg: dict, workers: int):
    finite = build_finite_params(cfg["finite"])
    rep = duality.annealed_check(
        finite, int(cfg["horizon"]), float(cfg["x"]), int(cfg["n"]),
        int(cfg.get("replicates", 100000)), int(cfg["seed"]), workers,
    )
    thr = float(cfg.get("z_threshold", DEFAULT_Z_THRESHOLD))
    verdicts = {"z_within_threshold": abs(rep.z) < thr}
    csvs = {"duality.csv": (
        ["check", "lhs", "lhs_se", "rhs", "rhs_se", "z"],
        [("annealed", rep.lhs, rep.lhs_se, rep.rhs, rep.rhs_se, rep.z)],
    )}
    return rep.to_dict(), verdicts, csvs


def _run_simulate_x(cfg: dict, workers: int):
    limit = build_limit_params(cfg["limit"])
    x0 = float(cfg["x0"])
    T = float(cfg["T"])
    dt = float(cfg.get("dt", 1e-3))
    M = int(cfg.get("replicates", 10000))
    seed = int(cfg["seed"])
    finals = fvwrs.ensemble_states(limit, x0, [T], dt, M, seed, workers)[0]
    eps0 = float(cfg.get("eps0", 1e-4))
    results = {
        "mean": float(finals.mean()),
        "se": float(finals.std(ddof=1) / np.sqrt(M)) if M > 1 else 0.0,
        "fraction_at_0": float((finals <= eps0).mean()),
        "fraction_at_1": float((finals >= 1.0 - eps0).mean()),
        "T": T, "dt": dt, "replicates": M,
    }
    csvs = {"finals.csv": (
        ["replicate", "value"],
        [(i, float(v)) for i, v in enumerate(finals)],
    )}
    return results, {}, csvs


def _run_simulate_z(cfg: dict, workers: int):
    limit = build_limit_params(cfg["limit"])
    n0 = int(cfg.get("n0", 1))
    T = float(cfg["T"])
    M = int(cfg.get("replicates", 10000))
    seed = int(cfg["seed"])

    def run(batch):
        idx, size = batch
        rng = stream(seed, idx)
        cache = bcre.RateCache(limit)
        return [bcre.final_state(limit, n0, T, rng, cache)
                for _ in range(size)]

    parts = parallel_map(run, batches(M), workers)
    finals = np.array([v for part in parts for v in part])
    results = {
        "mean": float(finals.mean()),
        "se": float(finals.std(ddof=1) / np.sqrt(M)) if M > 1 else 0.0,
        "max": int(finals.max()),
        "T": T, "n0": n0, "replicates": M,
    }
    csvs = {"finals.csv": (
        ["replicate", "value"],
        [(i, int(v)) for i, v in enumerate(finals)],
    )}
    return results, {}, csvs


def _run_simulate_finite(cfg: dict, workers: int):
    finite = build_finite_params(cfg["finite"])
    est, se = duality.finite_moment(
        finite, float(cfg["x0"]), int(cfg.get("n", 1)),
        int(cfg["generations"]), int(cfg.get("replicates", 10000)),
        int(cfg["seed"]), workers,
    )
    return {"moment": est, "se": se}, {}, {}


def _run_fixation(cfg: dict, workers: int):
    limit = build_limit_params(cfg["limit"])
    rep = bridge.fixation_via_duality(
        limit, cfg["x_grid"], int(cfg["seed"]),
        M=int(cfg.get("replicates", 20000)),
        T=float(cfg.get("T", 8.0)), dt=float(cfg.get("dt", 1e-3)),
        burn_in=float(cfg.get("burn_in", 50.0)),
        T_stat=float(cfg.get("T_stat", 5000.0)), workers=workers,
    )
    thr = float(cfg.get("z_threshold", DEFAULT_Z_THRESHOLD))
    verdicts = {
        f"z_within_threshold_x{x}": bool(abs(z) < thr)
        for x, z in zip(rep.x_grid, rep.z_scores)
    }
    csvs = {"fixation.csv": (
        ["x", "predicted", "simulated", "simulated_se", "z"],
        list(zip(rep.x_grid.tolist(), rep.predicted.tolist(),
                 rep.simulated.tolist(), rep.simulated_se.tolist(),
                 rep.z_scores.tolist())),
    )}
    return rep.to_dict(), verdicts, csvs


def _run_convergence(cfg: dict, workers: int):
    limit = build_limit_params(cfg["limit"])
    scheme = duality.ScalingScheme(limit)
    rows = duality.convergence_experiment(
        limit, [int(N) for N in cfg["N_list"]], scheme, float(cfg["x"]),
        int(cfg["n"]), float(cfg["t"]), int(cfg.get("replicates", 100000)),
        float(cfg.get("dt", 1e-3)), int(cfg["seed"]), workers,
    )
    first, last = rows[0], rows[-1]
    margin = 2.0 * math.hypot(first.gap_se, last.gap_se)
    verdicts = {"gap_shrinks": bool(last.gap < first.gap - margin)}
    results = {"rows": [
        {"N": r.N, "generations": r.generations,
         "finite_moment": r.finite_moment, "finite_se": r.finite_se,
         "limit_moment": r.limit_moment, "limit_se": r.limit_se,
         "gap": r.gap}
        for r in rows
    ]}
    csvs = {"convergence.csv": (
        ["N", "generations", "finite_moment", "finite_se",
         "limit_moment", "limit_se", "gap"],
        [(r.N, r.generations, r.finite_moment, r.finite_se,
          r.limit_moment, r.limit_se, r.gap) for r in rows],
    )}
    return results, verdicts, csvs


_DISPATCH = {
    "thresholds": _run_thresholds,
    "duality-moment": _run_duality_moment,
    "duality-quenched": _run_duality_quenched,
    "duality-annealed": _run_duality_annealed,
    "simulate-x": _run_simulate_x,
    "simulate-z": _run_simulate_z,
    "simulate-finite": _run_simulate_finite,
    "fixation": _run_fixation,
    "convergence": _run_convergence,
}


def _semantic_validate(cfg: dict) -> list[str]:
    """Model-level checks beyond the JSON schema; returns report lines."""
    lines = [f"experiment: {cfg['experiment']}"]
    kind = cfg["experiment"]
    if "limit" in cfg:
        limit = build_limit_params(cfg["limit"])
        lines.append(f"selection admissible, Lambda_s mass {limit.alpha_s!r}")
        lines.append(f"selection jump rate {limit.mu_mass!r}")
        lines.append(f"coalescence jump rate {limit.coalescence_rate!r}")
        if kind in ("thresholds", "fixation") and limit.sigma > 0:
            raise SigmaNotZero("classification requires sigma = 0")
        if kind == "convergence":
            scheme = duality.ScalingScheme(limit)
            for N in cfg.get("N_list", []):
                scheme.finite_params(int(N))
            lines.append("scaling scheme valid for all N")
    if "finite" in cfg:
        finite = build_finite_params(cfg["finite"])
        lines.append(f"finite model valid, N={finite.N}")
    lines.append("OK")
    return lines


# ---------------------------------------------------------------------------
# Click commands
# ---------------------------------------------------------------------------


@click.group()
def main():
    """Simulation and duality-verification toolkit for two-type
    Wright-Fisher models with selection in random environment."""


@main.command()
@click.argument("config_path", type=click.Path(exists=False))
@click.option("--out", default=".", type=click.Path(), help="output directory")
@click.option("--workers", default=None, type=int, help="worker threads")
@click.option("--seed", default=None, type=int, help="override config seed")
def run(config_path, out, workers, seed):
    """Execute the experiment described by CONFIG_PATH."""
    t_start = time.monotonic()
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg["seed"] = seed
        n_workers = _resolve_workers(workers, cfg)
        _semantic_validate(cfg)
        results, verdicts, csvs = _DISPATCH[cfg["experiment"]](cfg, n_workers)
    except WfdualityError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)
    os.makedirs(out, exist_ok=True)
    envelope = {
        "build": BUILD_ID,
        "config": cfg,
        "results": results,
        "verdicts": verdicts,
    }
    with open(os.path.join(out, "result.json"), "w") as fh:
        json.dump(envelope, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for name, (header, rows) in csvs.items():
        _write_csv(os.path.join(out, name), header, rows)
    meta = {
        "wall_time_s": time.monotonic() - t_start,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "workers": n_workers,
    }
    with open(os.path.join(out, "run_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    for key, ok in verdicts.items():
        click.echo(f"{'PASS' if ok else 'FAIL'} {key}")
    if verdicts and not all(verdicts.values()):
        sys.exit(2)
    sys.exit(0)


@main.command()
@click.argument("config_path", type=click.Path(exists=False))
def validate(config_path):
    """Validate CONFIG_PATH without running any simulation."""
    try:
        cfg = load_config(config_path)
        lines = _semantic_validate(cfg)
    except WfdualityError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)
    for line in lines:
        click.echo(line)
    sys.exit(0)


if __name__ == "__main__":
    main()
