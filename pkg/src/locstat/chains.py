"""Single-site Markov chains: hardcore Glauber, Ising Glauber and restricted
Gaussian dynamics.

The loops live in :mod:`locstat._kernels`; this module owns the states, the
random streams and the bookkeeping around them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels, diagnostics
from .models import Graph, InstanceError, InteractionOperator, IsingModel, SpikedInstance
from .rng import stream

CHUNK = 100_000  # caches and observables are recomputed from scratch at every chunk boundary
_NEVER = np.int64(1) << np.int64(62)


# --------------------------------------------------------------------------
# Hardcore


@dataclass
class HardcoreState:
    occ: np.ndarray  # int8 indicator of the independent set
    blocked: np.ndarray  # int32 count of occupied neighbours

    @classmethod
    def empty(cls, graph: Graph) -> "HardcoreState":
        return cls(np.zeros(graph.n, dtype=np.int8), np.zeros(graph.n, dtype=np.int32))

    @classmethod
    def from_set(cls, graph: Graph, members) -> "HardcoreState":
        occ = np.zeros(graph.n, dtype=np.int8)
        occ[np.asarray(list(members), dtype=np.int64)] = 1
        state = cls(occ, np.zeros(graph.n, dtype=np.int32))
        state.refresh(graph)
        state.check(graph)
        return state

    @property
    def size(self) -> int:
        return int(self.occ.sum())

    @property
    def independent_set(self) -> np.ndarray:
        return np.flatnonzero(self.occ)

    def refresh(self, graph: Graph) -> None:
        self.blocked = (graph.adjacency() @ self.occ.astype(float)).astype(np.int32)

    def check(self, graph: Graph) -> None:
        if np.any(self.occ & (self.blocked > 0)):
            raise InstanceError("state is not an independent set")
        expect = (graph.adjacency() @ self.occ.astype(float)).astype(np.int32)
        if not np.array_equal(expect, self.blocked):
            raise InstanceError("blocked counts out of sync")


def hardcore_step(graph: Graph, state: HardcoreState, rng: np.random.Generator) -> HardcoreState:
    """One transition: pick ``v`` uniformly; if ``I + v`` is independent
    resample ``v``'s membership by a fair coin, otherwise drop ``v``."""
    sites = rng.integers(0, graph.n, size=1)
    unif = rng.random(1)
    obs_w = np.zeros((0, graph.n))
    _kernels.hardcore_run(state.occ, state.blocked, graph.indptr, graph.indices, sites, unif,
                          obs_w, np.zeros(0), _NEVER, np.int64(0), np.zeros((0, 0)),
                          np.zeros(1, dtype=np.int64))
    return state


# --------------------------------------------------------------------------
# Ising


@dataclass(frozen=True)
class CompiledIsing:
    """Array form of an :class:`IsingModel` for the compiled loop.

    The sparse and dense parts have their diagonals removed; rank-one terms
    are kept as ``(coefs, U)`` and their diagonal is excluded inside the loop.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    dense: np.ndarray
    coefs: np.ndarray
    U: np.ndarray
    h: np.ndarray

    @classmethod
    def build(cls, model: IsingModel) -> "CompiledIsing":
        J, n = model.J, model.n
        s = sp.csr_matrix((n, n)) if J.sparse is None else J.sparse.copy()
        s.setdiag(0.0)
        s.eliminate_zeros()
        s = sp.csr_matrix(s)
        s.sort_indices()
        if J.dense is None:
            dense = np.zeros((0, 0))
        else:
            dense = np.array(J.dense)
            np.fill_diagonal(dense, 0.0)
        coefs = np.array([c for c, _ in J.rank_one_terms], dtype=float)
        U = np.array([u for _, u in J.rank_one_terms], dtype=float).reshape(len(coefs), n)
        return cls(n, s.indptr.astype(np.int64), s.indices.astype(np.int64), s.data.astype(float),
                   np.ascontiguousarray(dense), coefs, np.ascontiguousarray(U),
                   np.array(model.h, dtype=float))

    def with_field(self, h) -> "CompiledIsing":
        return CompiledIsing(self.n, self.indptr, self.indices, self.data, self.dense, self.coefs,
                             self.U, np.asarray(h, dtype=float))

    def partial_field(self, x) -> np.ndarray:
        """Sparse plus dense contribution to ``m``, without the rank-one terms."""
        out = np.zeros(self.n)
        if self.data.size:
            out += sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n)) @ x
        if self.dense.size:
            out += self.dense @ x
        return out

    def local_field(self, x) -> np.ndarray:
        """``m_i = sum_{j != i} J_ij x_j`` from scratch."""
        m = self.partial_field(x)
        for c, u in zip(self.coefs, self.U):
            m += c * u * (u @ x - u * x)
        return m


@dataclass
class IsingState:
    x: np.ndarray
    field: np.ndarray  # sparse + dense part of the local field
    r: np.ndarray  # <u_k, x> per rank-one term

    @classmethod
    def from_spins(cls, compiled: CompiledIsing, x) -> "IsingState":
        x = np.array(x, dtype=float)
        if x.shape != (compiled.n,) or not np.all(np.abs(x) == 1):
            raise InstanceError("spin configuration must lie in {-1,+1}^n")
        state = cls(x, np.zeros(compiled.n), np.zeros(compiled.coefs.size))
        state.refresh(compiled)
        return state

    @property
    def rank_one_cache(self) -> np.ndarray:
        return self.r

    def local_field(self, compiled: CompiledIsing) -> np.ndarray:
        m = self.field.copy()
        for k in range(compiled.coefs.size):
            u = compiled.U[k]
            m += compiled.coefs[k] * u * (self.r[k] - u * self.x)
        return m

    def refresh(self, compiled: CompiledIsing) -> None:
        self.field = compiled.partial_field(self.x)
        self.r = compiled.U @ self.x

    def drift(self, compiled: CompiledIsing) -> float:
        """Largest gap between cached and recomputed local fields."""
        return float(np.max(np.abs(self.local_field(compiled) - compiled.local_field(self.x)), initial=0.0))


def _as_compiled(model) -> CompiledIsing:
    return model if isinstance(model, CompiledIsing) else CompiledIsing.build(model)


def glauber_step_ising(model, state: IsingState, rng: np.random.Generator) -> IsingState:
    """Pick ``i`` uniformly and flip it with probability
    ``1 / (1 + exp(2 x_i (m_i + h_i)))``."""
    c = _as_compiled(model)
    sites = rng.integers(0, c.n, size=1)
    unif = rng.random(1)
    _kernels.ising_run(state.x, state.field, state.r, c.indptr, c.indices, c.data, c.dense,
                       c.coefs, c.U, c.h, sites, unif, np.zeros((0, c.n)), np.zeros(0),
                       _NEVER, np.int64(0), np.zeros((0, 0)), np.zeros(1, dtype=np.int64))
    return state


# --------------------------------------------------------------------------
# Trajectories


@dataclass
class Trajectory:
    seed: int
    replica: int
    step_count: int
    stride: int
    steps: np.ndarray
    series: dict
    final_state: np.ndarray
    accepted: int = 0
    requested_time: float | None = None
    label: str = ""

    @property
    def summary(self) -> dict:
        return diagnostics.summarize(self)

    def final(self, name: str) -> float:
        return float(self.series[name][-1])

    def write_csv(self, path) -> None:
        names = list(self.series)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", *names])
            for row in range(self.steps.size):
                w.writerow([int(self.steps[row]), *(repr(float(self.series[k][row])) for k in names)])


def _step_budget(steps, time, seed, label, replica) -> tuple[int, float | None]:
    if (steps is None) == (time is None):
        raise ValueError("give exactly one of steps or time")
    if time is not None:
        if time < 0:
            raise ValueError("time must be nonnegative")
        # continuous time t of the unit-rate kernel = Poisson(t) applications of P
        return int(stream(seed, "poisson", label, replica).poisson(time)), float(time)
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    return int(steps), None


def run_chain(target, steps: int | None = None, time: float | None = None, seed: int = 0,
              observables=(), stride: int = 1, init=None, replica: int = 0,
              graph: Graph | None = None, label: str = "") -> Trajectory:
    """Run hardcore Glauber (``target`` a :class:`Graph`) or Ising Glauber
    (``target`` an :class:`IsingModel`) and record observables every
    ``stride`` updates, starting with the initial state at step 0.

    Hardcore chains start from the empty set and Ising chains from a uniform
    random configuration unless ``init`` is given. ``graph`` supplies the
    degree sequence for ``score_average`` when ``target`` is an Ising model.
    Random streams are keyed by ``(seed, label, replica)``.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    specs = [diagnostics.resolve(o) for o in observables]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("observable names must be unique")
    total, requested = _step_budget(steps, time, seed, label, replica)
    hardcore = isinstance(target, Graph)
    n = target.n
    W = np.array([s.weights(n, target if hardcore else graph) for s in specs], dtype=float).reshape(len(specs), n)

    if hardcore:
        state = HardcoreState.empty(target) if init is None else HardcoreState.from_set(target, np.flatnonzero(init))
        point = lambda: state.occ.astype(float)
    else:
        comp = _as_compiled(target)
        if init is None:
            init = stream(seed, "init", label, replica).choice([-1.0, 1.0], size=n)
        state = IsingState.from_spins(comp, init)
        point = lambda: state.x

    rec = np.empty((total // stride + 1, len(specs)))
    rec[0] = W @ point()
    rec_pos = np.ones(1, dtype=np.int64)
    rng = stream(seed, "chain", label, replica)
    accepted = 0
    done = 0
    while done < total:
        size = min(CHUNK, total - done)
        sites = rng.integers(0, n, size=size)
        unif = rng.random(size)
        obs = W @ point()
        if hardcore:
            accepted += _kernels.hardcore_run(state.occ, state.blocked, target.indptr, target.indices,
                                              sites, unif, W, obs, np.int64(stride), np.int64(done),
                                              rec, rec_pos)
        else:
            accepted += _kernels.ising_run(state.x, state.field, state.r, comp.indptr, comp.indices,
                                           comp.data, comp.dense, comp.coefs, comp.U, comp.h, sites,
                                           unif, W, obs, np.int64(stride), np.int64(done), rec, rec_pos)
            state.refresh(comp)
        done += size
    assert rec_pos[0] == rec.shape[0]

    series = {s.name: s.finalize(rec[:, k], n) for k, s in enumerate(specs)}
    final = state.occ.copy() if hardcore else state.x.copy()
    return Trajectory(int(seed), int(replica), total, int(stride), np.arange(rec.shape[0], dtype=np.int64) * stride,
                      series, final, int(accepted), requested, label)


# --------------------------------------------------------------------------
# Restricted Gaussian dynamics


@dataclass(frozen=True)
class RgdStep:
    g: float
    z_scalar: float
    inner_updates: int

    def field(self, v) -> np.ndarray:
        return self.z_scalar * np.asarray(v, dtype=float)


def default_inner_updates(n: int) -> int:
    return max(1, math.ceil(20 * n * math.log(max(n, 2))))


def _rgd_parts(instance):
    if isinstance(instance, SpikedInstance):
        return instance.W, np.asarray(instance.v, dtype=float), float(instance.lam)
    W, v, lam = instance
    if not isinstance(W, InteractionOperator):
        W = InteractionOperator(len(v), dense=np.asarray(W, dtype=float))
    return W, np.asarray(v, dtype=float), float(lam)


def rgd_step(x, instance, inner_updates: int | None = None, rng: np.random.Generator | None = None,
             exact: bool = False):
    """One RGD transition ``x -> x'``.

    Draws ``g ~ N(0,1)``, sets ``z = (lam <v,x> + sqrt(lam) g) v`` and samples
    ``x'`` from ``mu_{W,z}``: approximately by ``inner_updates`` Glauber
    updates started at ``x``, or exactly by enumeration when ``exact``.
    """
    if rng is None:
        raise ValueError("an explicit generator is required")
    W, v, lam = _rgd_parts(instance)
    n = v.size
    x = np.array(x, dtype=float)
    if inner_updates is None:
        inner_updates = default_inner_updates(n)
    if inner_updates < 1:
        raise ValueError("inner_updates must be >= 1")
    g = float(rng.standard_normal())
    s = lam * float(v @ x) + math.sqrt(lam) * g
    model = IsingModel(W, s * v)
    if exact:
        from .exact import enumerate_measure

        table = enumerate_measure(model)
        pick = rng.choice(table.size, p=table.probs)
        bits = (int(table.states[pick]) >> np.arange(n)) & 1
        return RgdStep(g, s, 0), 2.0 * bits - 1.0
    comp = CompiledIsing.build(model)
    state = IsingState.from_spins(comp, x)
    done = 0
    while done < inner_updates:
        size = min(CHUNK, inner_updates - done)
        sites = rng.integers(0, n, size=size)
        unif = rng.random(size)
        _kernels.ising_run(state.x, state.field, state.r, comp.indptr, comp.indices, comp.data,
                           comp.dense, comp.coefs, comp.U, comp.h, sites, unif, np.zeros((0, n)),
                           np.zeros(0), _NEVER, np.int64(0), np.zeros((0, 0)), np.zeros(1, dtype=np.int64))
        state.refresh(comp)
        done += size
    return RgdStep(g, s, int(inner_updates)), state.x.copy()
