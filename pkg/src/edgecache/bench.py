"""Experiment runner and metrics: regret, the theoretical regret ceiling,
multi-seed sweeps, and CSV/JSON reporting.

A sweep varies one axis (cost ratio, capacity M, window W, or noise weight
R) while every policy sees the same per-seed trace.  Outputs per report
directory: ``summary.json``, ``costs_<axis>.csv``, ``runtimes.csv`` and
``effective_config.json``.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import baselines
from .model import ArrivalTrace, CostModel, RunRecord
from .rosc import RoscConfig, run_rosc
from .workloads import (PoissonParams, PredictionOracle, ReplacementParams,
                        SqrtChurnParams, gen_poisson, gen_replacement,
                        gen_sqrt_churn)

SORT_ALGORITHM = "numpy stable (radix/timsort) argsort"  # fills the HeapSort role


def regret(policy_cost: float, reference_cost: float) -> float:
    """Signed cost gap to a reference; negative is possible when the
    reference is itself an approximation."""
    return float(policy_cost - reference_cost)


def regret_bound(cost: CostModel, N: int, T: int, U: float, K: int, W: int,
                 H_T: float) -> float:
    """Theoretical ceiling on the expected dynamic regret of the randomized
    policy, at gamma = sqrt(H_T / T) and eta = gamma / (12 b*):

        (6 sqrt(2M) b* (a + 3 b*) / (a W) + 3 b* N) sqrt(H_T T)
        + (a U + 6 b* N) T / K  +  2 b* H_T
    """
    if W < 1:
        raise ValueError("the bound needs a window of at least one slot")
    a, bs, M = cost.alpha, cost.beta_star, cost.M
    tracking = (6.0 * math.sqrt(2.0 * M) * bs * (a + 3.0 * bs) / (a * W)
                + 3.0 * bs * N) * math.sqrt(H_T * T)
    rounding = (a * U + 6.0 * bs * N) * T / K
    churn = 2.0 * bs * H_T
    return tracking + rounding + churn


def regret_bound_terms(cost: CostModel, N: int, T: int, U: float, K: int,
                       W: int, H_T: float) -> dict:
    if W < 1:
        raise ValueError("the bound needs a window of at least one slot")
    a, bs, M = cost.alpha, cost.beta_star, cost.M
    tracking = (6.0 * math.sqrt(2.0 * M) * bs * (a + 3.0 * bs) / (a * W)
                + 3.0 * bs * N) * math.sqrt(H_T * T)
    rounding = (a * U + 6.0 * bs * N) * T / K
    churn = 2.0 * bs * H_T
    return {"tracking": tracking, "rounding": rounding, "churn": churn,
            "total": tracking + rounding + churn}


# ---------------------------------------------------------------------------
# Sweep harness
# ---------------------------------------------------------------------------

PAPER_DEFAULTS = {
    "alpha": 0.05,
    "ratio": 200.0,   # beta_star / alpha
    "M": 10,
    "W": 10,
    "K": 100,
    "gamma": 0.05,
    "R": 0.0,
}

SWEEP_AXES = ("ratio", "M", "W", "R")


@dataclass
class ExperimentSpec:
    """One sweep: a workload, seeds, policies, and a single varied axis."""

    workload: str                       # replacement | poisson | sqrt_churn
    workload_params: dict
    seeds: list
    policies: list                      # subset of {rosc, rhc, chc, sopt, pseudo-opt, opt-dp}
    axis: str = "W"
    values: list = field(default_factory=lambda: [10])
    base: dict = field(default_factory=lambda: dict(PAPER_DEFAULTS))
    noisy_baselines: bool = False       # horizon-control policies default to exact forecasts
    measure_runtime: bool = False       # discard one warm run before timing
    jobs: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES}")
        if not self.values:
            raise ValueError("at least one sweep value is required")


def make_trace(workload: str, params: dict, seed: int) -> ArrivalTrace:
    if workload == "replacement":
        return gen_replacement(ReplacementParams(**params), seed)
    if workload == "poisson":
        p = dict(params)
        if "groups" in p:
            p["groups"] = tuple(tuple(g) for g in p["groups"])
        return gen_poisson(PoissonParams(**p), seed)
    if workload == "sqrt_churn":
        return gen_sqrt_churn(SqrtChurnParams(**params), seed)
    raise ValueError(f"unknown workload '{workload}'")


def _settings_for(base: dict, axis: str, value) -> dict:
    s = dict(base)
    s[axis] = value
    return s


def run_policy(name: str, trace: ArrivalTrace, settings: dict, seed: int,
               noisy_baselines: bool = False) -> RunRecord:
    """Dispatch one policy run under the given sweep settings."""
    alpha = settings["alpha"]
    beta_star = settings["ratio"] * alpha
    cost = CostModel.uniform(alpha, beta_star, trace.N, int(settings["M"]),
                             gamma=settings["gamma"])
    W = int(settings["W"])
    R = float(settings.get("R", 0.0))
    if name == "rosc":
        oracle = PredictionOracle(trace, R=R, seed=seed) if R > 0 else None
        cfg = RoscConfig(cost=cost, W=W, K=int(settings["K"]), seed=seed)
        return run_rosc(trace, cfg, predictions=oracle)
    baseline_oracle = (PredictionOracle(trace, R=R, seed=seed)
                       if (noisy_baselines and R > 0) else None)
    if name == "rhc":
        return baselines.rhc_policy(trace, cost, W, predictions=baseline_oracle)
    if name == "chc":
        return baselines.chc_policy(trace, cost, W, predictions=baseline_oracle)
    if name == "sopt":
        return baselines.sopt_policy(trace, cost)
    if name == "pseudo-opt":
        return baselines.pseudo_opt(trace, cost)
    if name == "opt-dp":
        return baselines.exact_opt_dp(trace, cost)
    raise ValueError(f"unknown policy '{name}'")


def _run_point(task: dict) -> dict:
    """Worker body: one (axis value, seed, policy) cell; returns plain data."""
    trace = make_trace(task["workload"], task["workload_params"], task["seed"])
    settings = task["settings"]
    t_start = time.perf_counter()
    if task["measure_runtime"]:
        run_policy(task["policy"], trace, settings, task["seed"],
                   task["noisy_baselines"])  # warm run, discarded
    rec = run_policy(task["policy"], trace, settings, task["seed"],
                     task["noisy_baselines"])
    return {
        "axis_value": task["axis_value"],
        "seed": task["seed"],
        "policy": task["policy"],
        "total_cost": rec.total_cost,
        "cost_per_slot": rec.total_cost / trace.T,
        "runtime_ms": rec.runtime_ms,
        "runtime_ms_per_slot": rec.runtime_ms / trace.T,
        "wall_ms": (time.perf_counter() - t_start) * 1e3,
    }


def run_experiment(spec: ExperimentSpec, out_dir) -> dict:
    """Execute the sweep, write the report files, return the report dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    for value in spec.values:
        settings = _settings_for(spec.base, spec.axis, value)
        for seed in spec.seeds:
            for policy in spec.policies:
                tasks.append({
                    "workload": spec.workload,
                    "workload_params": spec.workload_params,
                    "seed": seed,
                    "policy": policy,
                    "settings": settings,
                    "axis_value": value,
                    "measure_runtime": spec.measure_runtime,
                    "noisy_baselines": spec.noisy_baselines,
                })

    cells, failures = [], []
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            for task, outcome in zip(tasks, pool.map(_run_point_safe, tasks)):
                (cells if "error" not in outcome else failures).append(outcome)
    else:
        for task in tasks:
            outcome = _run_point_safe(task)
            (cells if "error" not in outcome else failures).append(outcome)

    report = _aggregate(spec, cells, failures)
    _write_report(spec, report, out)
    return report


def _run_point_safe(task: dict) -> dict:
    try:
        return _run_point(task)
    except Exception as exc:  # noqa: BLE001 - sweep points fail independently
        return {"axis_value": task["axis_value"], "seed": task["seed"],
                "policy": task["policy"], "error": f"{type(exc).__name__}: {exc}"}


def _aggregate(spec: ExperimentSpec, cells: list, failures: list) -> dict:
    table: dict = {}
    for c in cells:
        table.setdefault((c["axis_value"], c["policy"]), []).append(c)
    points = []
    for value in spec.values:
        row = {"axis_value": value, "policies": {}}
        for policy in spec.policies:
            got = table.get((value, policy), [])
            if not got:
                continue
            costs = np.array([g["cost_per_slot"] for g in got])
            runtimes = np.array([g["runtime_ms"] for g in got])
            row["policies"][policy] = {
                "seeds": len(got),
                "cost_per_slot_mean": float(costs.mean()),
                "cost_per_slot_std": float(costs.std(ddof=0)),
                "total_cost_mean": float(np.mean([g["total_cost"] for g in got])),
                "runtime_ms_mean": float(runtimes.mean()),
                "runtime_ms_per_slot_mean": float(np.mean(
                    [g["runtime_ms_per_slot"] for g in got])),
            }
        points.append(row)
    return {
        "axis": spec.axis,
        "values": list(spec.values),
        "policies": list(spec.policies),
        "seeds": list(spec.seeds),
        "points": points,
        "failures": failures,
        "sort_algorithm": SORT_ALGORITHM,
        "ok": not failures,
    }


def _write_report(spec: ExperimentSpec, report: dict, out: Path) -> None:
    with open(out / "summary.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / f"costs_{spec.axis}.csv", "w") as fh:
        fh.write(spec.axis + ","
                 + ",".join(f"{p}_mean,{p}_std" for p in spec.policies) + "\n")
        for point in report["points"]:
            cols = [str(point["axis_value"])]
            for p in spec.policies:
                stats = point["policies"].get(p)
                if stats is None:
                    cols += ["", ""]
                else:
                    cols += [repr(stats["cost_per_slot_mean"]),
                             repr(stats["cost_per_slot_std"])]
            fh.write(",".join(cols) + "\n")
    with open(out / "runtimes.csv", "w") as fh:
        fh.write(spec.axis + "," + ",".join(spec.policies) + "\n")
        for point in report["points"]:
            cols = [str(point["axis_value"])]
            for p in spec.policies:
                stats = point["policies"].get(p)
                cols.append("" if stats is None else repr(stats["runtime_ms_mean"]))
            fh.write(",".join(cols) + "\n")
    config = {"spec": asdict(spec), "sort_algorithm": SORT_ALGORITHM}
    with open(out / "effective_config.json", "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
