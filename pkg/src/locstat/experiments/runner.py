"""Replica fan-out and report output shared by the scenarios."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..chains import run_chain
from ..diagnostics import plateau_index, stability_probe, summarize


def _run(job: dict):
    return run_chain(**job)


def run_replicas(jobs: list, workers: int = 1) -> list:
    """Run ``run_chain(**job)`` for every job; results keep job order.

    Each job carries its own seed and replica index, so the outcome does not
    depend on ``workers``.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_run, jobs))


def statistic(traj, name: str, mode: str) -> float:
    """Uniform-time average over the recorded points, or the end state."""
    if mode == "end-state":
        return traj.final(name)
    return float(np.mean(traj.series[name]))


def trajectory_record(traj, name: str, burn_in: float, step_scale: float) -> dict:
    """Per-replica report entry: summary, end value and post-hoc diagnostics."""
    summ = summarize(traj, burn_in)[name]
    rec = {
        "replica": traj.replica,
        "seed": traj.seed,
        "steps": traj.step_count,
        "accepted": traj.accepted,
        "summary": summ,
        "final": traj.final(name),
    }
    size = traj.series[name].size
    if size >= 40:
        window = max(20, size // 20)
        est, hw = stability_probe(traj, name, window)
        rec["stability_probe"] = {"window": window, "estimate": est, "ci_half_width": hw}
        # plateau: drift per update below 1% of the largest possible one-step change
        idx = plateau_index(traj, name, window, 0.01 * step_scale)
        rec["plateau_step"] = None if idx is None else int(traj.steps[idx])
    return rec


def check(name: str, value: float, threshold: float, op: str) -> dict:
    ok = value >= threshold if op == ">=" else value <= threshold
    return {"name": name, "value": value, "threshold": threshold, "op": op, "pass": bool(ok)}


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def write_outputs(report: dict, trajectories: dict, out, fmt: str) -> list:
    """Write ``report.json`` and, for ``csv``, one CSV per trajectory.

    ``trajectories`` maps a file stem to a :class:`Trajectory`. Returns the
    written paths.
    """
    if out is None:
        return []
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    paths = [root / "report.json"]
    paths[0].write_text(dumps(report))
    if fmt == "csv":
        for stem, traj in sorted(trajectories.items()):
            p = root / f"{stem}.csv"
            traj.write_csv(p)
            paths.append(p)
    return paths
