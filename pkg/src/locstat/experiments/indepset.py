"""Large independent sets in triangle-free graphs via hardcore Glauber."""

from __future__ import annotations

import math

import numpy as np

from .. import exact
from ..models import find_triangle, gen_bipartite_regular, read_edge_list
from .config import ExperimentConfig
from .runner import check, run_replicas, statistic, trajectory_record


class TriangleFound(ValueError):
    pass


def load_graph(cfg: ExperimentConfig):
    if cfg.graph is not None:
        return read_edge_list(cfg.graph)
    return gen_bipartite_regular(int(cfg.n), int(cfg.d), cfg.seed)


def exp_indepset(cfg: ExperimentConfig):
    """Returns ``(report, trajectories)``."""
    cfg = cfg.resolved()
    graph = load_graph(cfg)
    tri = find_triangle(graph)
    if tri is not None:
        raise TriangleFound(f"triangle found: {tuple(int(v) for v in tri)}")
    n, d = graph.n, graph.max_degree
    jobs = [dict(target=graph, steps=cfg.steps, time=cfg.time, seed=cfg.seed, replica=r,
                 observables=["set_size", "score_average"], stride=cfg.stride) for r in range(cfg.replicas)]
    trajs = run_replicas(jobs, cfg.workers)

    per = [trajectory_record(t, "set_size", cfg.burn_in, 1.0) for t in trajs]
    stats = np.array([statistic(t, "set_size", cfg.mode) for t in trajs])
    # score-sum bound: (1/n) sum_v phi_v(x) <= (2d/n) |x| at every recorded state
    slack = min(float(np.min(2.0 * d / n * t.series["set_size"] - t.series["score_average"])) for t in trajs)

    results = {
        "n": n,
        "max_degree": d,
        "mean_size": float(stats.mean()),
        "per_replica_statistic": stats.tolist(),
        "mean_final_size": float(np.mean([t.final("set_size") for t in trajs])),
        "bound_quarter": 0.25 * n * math.log(d) / d if d > 1 else None,
        "greedy_baseline": n / (d + 1),
        "score_inequality_min_slack": slack,
        "replicas": per,
    }
    th = cfg.thresholds
    # equality holds exactly on regular graphs, so allow round-off
    checks = [check("score_inequality", slack, -1e-9 * max(1.0, 2.0 * d), ">=")]
    # the size thresholds are calibrated at desk scale; small graphs get the exact comparison
    if d > 1 and n > exact.MAX_N:
        checks.append(check("size_vs_log_bound", results["mean_size"],
                            th["bound_fraction"] * n * math.log(d) / d, ">="))
        checks.append(check("size_vs_greedy", results["mean_size"], th["greedy_multiple"] * n / (d + 1), ">="))
    if n <= exact.MAX_N:
        ref = exact.uniform_indepset_expected_size(graph)
        results["exact_expected_size"] = ref
        checks.append(check("exact_relative_error", abs(results["mean_size"] - ref) / ref,
                            th["exact_rel_err"], "<="))
    report = {"scenario": "indepset", "seed": cfg.seed, "config": cfg.to_dict(),
              "results": results, "checks": checks, "pass": all(c["pass"] for c in checks)}
    return report, {f"indepset_r{t.replica}": t for t in trajs}
