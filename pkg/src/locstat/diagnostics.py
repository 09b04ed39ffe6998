"""Observables and statistical probes for trajectories.

Every registered observable is a linear form of the state (spins in
{-1,+1}^n or occupation indicators in {0,1}^n), optionally followed by an
absolute value and a normalisation. That keeps the chain loops generic: they
only maintain ``<w, x>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

KINDS = ("set_size", "abs_correlation", "overlap", "score_average", "custom_linear")
NORMALIZATIONS = {"raw": lambda n: 1.0, "per_sqrt_n": lambda n: 1.0 / math.sqrt(n), "per_n": lambda n: 1.0 / n}


class UnknownObservable(KeyError):
    pass


@dataclass(frozen=True)
class ObservableSpec:
    name: str
    kind: str
    vector: np.ndarray | None = None
    normalization: str = "raw"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownObservable(self.kind)
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.kind in ("abs_correlation", "overlap", "custom_linear") and self.vector is None:
            raise ValueError(f"{self.kind} needs a vector")

    @property
    def takes_abs(self) -> bool:
        return self.kind in ("abs_correlation", "overlap")

    def weights(self, n: int, graph=None) -> np.ndarray:
        if self.kind == "set_size":
            return np.ones(n)
        if self.kind == "score_average":
            if graph is None:
                raise ValueError("score_average needs a graph")
            # (1/n) sum_v phi_v(x) = (1/n) sum_u (d + deg u) x_u
            return (graph.max_degree + graph.degrees) / n
        w = np.asarray(self.vector, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"observable {self.name!r} has dimension {w.size}, expected {n}")
        return w

    def finalize(self, raw: np.ndarray, n: int) -> np.ndarray:
        out = np.abs(raw) if self.takes_abs else np.asarray(raw, dtype=float)
        return out * NORMALIZATIONS[self.normalization](n)


def set_size() -> ObservableSpec:
    return ObservableSpec("set_size", "set_size")


def score_average() -> ObservableSpec:
    return ObservableSpec("score_average", "score_average")


def abs_correlation(v, normalization: str = "per_sqrt_n", name: str = "abs_corr") -> ObservableSpec:
    return ObservableSpec(name, "abs_correlation", np.asarray(v, dtype=float), normalization)


def overlap(sigma, normalization: str = "per_n", name: str = "overlap") -> ObservableSpec:
    return ObservableSpec(name, "overlap", np.asarray(sigma, dtype=float), normalization)


def custom_linear(w, name: str, normalization: str = "raw") -> ObservableSpec:
    return ObservableSpec(name, "custom_linear", np.asarray(w, dtype=float), normalization)


def resolve(spec) -> ObservableSpec:
    """Accept a spec or the name of a vector-free observable."""
    if isinstance(spec, ObservableSpec):
        return spec
    if spec == "set_size":
        return set_size()
    if spec == "score_average":
        return score_average()
    raise UnknownObservable(spec)


# --------------------------------------------------------------------------
# Independent-set score


def score_phi(graph, v: int, x) -> float:
    """``d x_v + sum_{u in N(v)} x_u`` with ``d`` the maximum degree."""
    x = np.asarray(x)
    return float(graph.max_degree * x[v] + x[graph.neighbors(v)].sum())


def conditional_score_expectation(k: int, d: float) -> float:
    """Conditional mean of the score at a vertex with ``k`` unblocked neighbours
    under the uniform independent-set measure: ``d/(2^k+1) + (k/2) 2^k/(2^k+1)``."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    if d < 1:
        raise ValueError("d must be >= 1")
    inv = 2.0 ** -k  # underflows to 0 for huge k, never overflows
    return d * inv / (1.0 + inv) + 0.5 * k / (1.0 + inv)


# --------------------------------------------------------------------------
# Batch means and summaries


def batch_means(series, batches: int = 20, confidence: float = 0.95):
    """Mean and confidence half-width from non-overlapping batch means.

    Uses ``min(batches, len(series))`` equal batches (trailing remainder
    dropped) and a Student-t quantile. Half-width is NaN with fewer than two
    batches.
    """
    y = np.asarray(series, dtype=float)
    if y.size == 0:
        raise ValueError("empty series")
    b = min(batches, y.size)
    if b < 2:
        return float(y.mean()), math.nan
    size = y.size // b
    means = y[: b * size].reshape(b, size).mean(axis=1)
    se = means.std(ddof=1) / math.sqrt(b)
    return float(y.mean()), float(stats.t.ppf(0.5 + confidence / 2, b - 1) * se)


def summarize(trajectory, burn_in_fraction: float = 0.0, batches: int = 20) -> dict:
    """Per-observable post-burn-in statistics plus the uniform-time average."""
    if not 0 <= burn_in_fraction < 1:
        raise ValueError("burn_in_fraction must lie in [0, 1)")
    out = {}
    for name, series in trajectory.series.items():
        y = np.asarray(series, dtype=float)
        start = int(math.floor(burn_in_fraction * y.size))
        post = y[start:]
        if post.size == 0:
            raise ValueError("empty post-burn-in window")
        mean, hw = batch_means(post, batches)
        out[name] = {
            "observable": name,
            "mean": mean,
            "var": float(post.var()),
            "ci_half_width": hw,
            "n_samples": int(post.size),
            "burn_in": int(start),
            "uniform_time_mean": float(y.mean()),
        }
    return out


def stability_probe(trajectory, observable: str, window: int, batches: int = 20):
    """Per-update drift ``|E_nu phi - E_{P nu} phi|`` estimated from lag-1
    differences over the last ``window`` recorded points.

    Returns ``(estimate, ci_half_width)``.
    """
    y = np.asarray(trajectory.series[observable], dtype=float)
    if window < 2:
        raise ValueError("window must contain at least two points")
    if window > y.size:
        raise ValueError("window exceeds series length")
    diffs = np.diff(y[-window:]) / trajectory.stride
    mean, hw = batch_means(diffs, batches)
    return abs(mean), hw


def plateau_index(trajectory, observable: str, window: int, threshold: float, consecutive: int = 3):
    """First recorded index at which the probe stays below ``threshold`` for
    ``consecutive`` successive windows, or ``None``."""
    y = np.asarray(trajectory.series[observable], dtype=float)
    run = 0
    for end in range(window, y.size + 1, window):
        diffs = np.diff(y[end - window : end]) / trajectory.stride
        run = run + 1 if abs(diffs.mean()) < threshold else 0
        if run >= consecutive:
            return end - consecutive * window
    return None
