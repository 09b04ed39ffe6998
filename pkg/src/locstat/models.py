"""Problem instances: graphs, Ising models, spiked Wigner matrices and
two-community stochastic block models.

Instances are immutable after construction. Generators are pure functions
of their parameters and a 64-bit seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .rng import stream


class InstanceError(ValueError):
    """Invalid parameters or malformed instance data."""


class RejectionBudgetExhausted(RuntimeError):
    """The random graph generator gave up; retry with another seed."""


# --------------------------------------------------------------------------
# Graph


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph stored as sorted adjacency lists (CSR)."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if indptr.shape != (self.n + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise InstanceError("malformed CSR adjacency")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build a graph from ``(u, v)`` pairs; rejects loops and duplicates."""
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise InstanceError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise InstanceError("self-loop")
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            raise InstanceError("duplicate edge")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return cls(n, np.cumsum(indptr), dst)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @property
    def num_edges(self) -> int:
        return self.indices.size // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def edges(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` array with ``u < v``, lexicographically sorted."""
        src = np.repeat(np.arange(self.n), self.degrees)
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def neighbor_masks(self) -> np.ndarray:
        """Bitmask of each vertex's neighbourhood (requires n <= 62)."""
        if self.n > 62:
            raise InstanceError("bitmask encoding needs n <= 62")
        masks = np.zeros(self.n, dtype=np.int64)
        for v in range(self.n):
            for u in self.neighbors(v):
                masks[v] |= np.int64(1) << np.int64(u)
        return masks

    def check(self) -> None:
        """Raise :class:`InstanceError` unless the adjacency is a simple graph."""
        for v in range(self.n):
            nb = self.neighbors(v)
            if np.any(nb == v):
                raise InstanceError(f"self-loop at {v}")
            if np.any(np.diff(nb) <= 0):
                raise InstanceError(f"unsorted or duplicate neighbours at {v}")
        a = self.adjacency()
        if (a != a.T).nnz:
            raise InstanceError("adjacency not symmetric")


def validate_triangle_free(graph: Graph) -> bool:
    """True iff no three vertices are mutually adjacent."""
    return find_triangle(graph) is None


def find_triangle(graph: Graph):
    """Return some triangle ``(a, b, c)`` or ``None``."""
    for u in range(graph.n):
        nu = graph.neighbors(u)
        for v in nu[nu > u]:
            common = np.intersect1d(nu, graph.neighbors(v), assume_unique=True)
            common = common[common > v]
            if common.size:
                return int(u), int(v), int(common[0])
    return None


def gen_bipartite_regular(n: int, d: int, seed: int, max_attempts: int = 200) -> Graph:
    """Random bipartite d-regular graph on two parts of size n/2.

    Left vertex ``u`` picks ``d`` distinct right vertices, sampled without
    replacement with weights proportional to their remaining stub counts; an
    attempt is rejected when fewer than ``d`` right vertices still have
    free stubs.
    """
    if n % 2 or n <= 0:
        raise InstanceError("n must be a positive even integer")
    half = n // 2
    if d < 0 or d > half:
        raise InstanceError("need 0 <= d <= n/2")
    for attempt in range(max_attempts):
        rng = stream(seed, "bipartite_regular", n, d, attempt)
        cap = np.full(half, d, dtype=np.int64)
        edges = np.empty((half * d, 2), dtype=np.int64)
        ok = True
        for u in rng.permutation(half):
            live = np.flatnonzero(cap)
            if live.size < d:
                ok = False
                break
            w = cap[live].astype(float)
            pick = live[rng.choice(live.size, size=d, replace=False, p=w / w.sum())]
            cap[pick] -= 1
            k = u * d
            edges[k : k + d, 0] = u
            edges[k : k + d, 1] = half + pick
        if ok:
            return Graph.from_edges(n, edges)
    raise RejectionBudgetExhausted(f"no bipartite {d}-regular graph after {max_attempts} attempts")


def gen_triangle_free(n: int, p: float, seed: int) -> Graph:
    """Random triangle-free graph: visit vertex pairs in random order and keep
    each with probability ``p`` unless it would close a triangle."""
    rng = stream(seed, "triangle_free", n)
    adj = [set() for _ in range(n)]
    iu, ju = np.triu_indices(n, 1)
    order = rng.permutation(iu.size)
    keep = rng.random(iu.size) < p
    edges = []
    for k in order:
        if not keep[k]:
            continue
        a, b = int(iu[k]), int(ju[k])
        if adj[a] & adj[b]:
            continue
        adj[a].add(b)
        adj[b].add(a)
        edges.append((a, b))
    return Graph.from_edges(n, edges)


def read_edge_list(path) -> Graph:
    """Read a whitespace-separated ``u v`` edge list (0-indexed).

    Blank lines and ``#`` comments are skipped. The vertex count is one more
    than the largest endpoint unless a ``# n=<count>`` header is present.
    """
    n = None
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            if s[1:].strip().startswith("n="):
                n = int(s[1:].strip()[2:])
            continue
        parts = s.split()
        if len(parts) != 2:
            raise InstanceError(f"{path}:{lineno}: expected 'u v'")
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return Graph.from_edges(n, edges)


def write_edge_list(graph: Graph, path) -> None:
    lines = [f"# n={graph.n}"] + [f"{u} {v}" for u, v in graph.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def star_graph(leaves: int) -> Graph:
    """Star with centre 0 and leaves 1..leaves."""
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph.from_edges(10, outer + spokes + inner)


# --------------------------------------------------------------------------
# Interaction operators and Ising models


@dataclass(frozen=True)
class InteractionOperator:
    """Symmetric operator ``J = sparse + sum_k c_k u_k u_k^T + dense``.

    Diagonal entries are kept (they matter for :meth:`quadratic`) but the
    Glauber local field ignores them, since ``x_i**2 == 1`` on the cube.
    """

    n: int
    sparse: sp.csr_matrix | None = None
    rank_one_terms: tuple = ()
    dense: np.ndarray | None = None

    def __post_init__(self):
        if self.sparse is not None:
            s = sp.csr_matrix(self.sparse, dtype=float)
            s.sum_duplicates()
            s.sort_indices()
            if s.shape != (self.n, self.n):
                raise InstanceError("sparse part has wrong shape")
            if s.nnz and abs(s - s.T).max() > 1e-12 * max(1.0, abs(s).max()):
                raise InstanceError("sparse part not symmetric")
            object.__setattr__(self, "sparse", s)
        terms = []
        for c, u in self.rank_one_terms:
            u = np.array(u, dtype=float)
            if u.shape != (self.n,):
                raise InstanceError("rank-one vector has wrong length")
            u.setflags(write=False)
            terms.append((float(c), u))
        object.__setattr__(self, "rank_one_terms", tuple(terms))
        if self.dense is not None:
            dmat = np.array(self.dense, dtype=float)
            if dmat.shape != (self.n, self.n):
                raise InstanceError("dense part has wrong shape")
            if not np.allclose(dmat, dmat.T, rtol=0, atol=1e-12 * max(1.0, np.abs(dmat).max())):
                raise InstanceError("dense part not symmetric")
            dmat = 0.5 * (dmat + dmat.T)
            dmat.setflags(write=False)
            object.__setattr__(self, "dense", dmat)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.n)
        if self.sparse is not None:
            out += self.sparse @ x
        for c, u in self.rank_one_terms:
            out += c * (u @ x) * u
        if self.dense is not None:
            out += self.dense @ x
        return out

    def quadratic(self, x) -> float:
        """``x^T J x``."""
        x = np.asarray(x, dtype=float)
        return float(x @ self.apply(x))

    def diagonal(self) -> np.ndarray:
        diag = np.zeros(self.n)
        if self.sparse is not None:
            diag += self.sparse.diagonal()
        for c, u in self.rank_one_terms:
            diag += c * u * u
        if self.dense is not None:
            diag += np.diag(self.dense)
        return diag

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        if self.sparse is not None:
            out += self.sparse.toarray()
        for c, u in self.rank_one_terms:
            out += c * np.outer(u, u)
        if self.dense is not None:
            out += self.dense
        return out

    def scaled(self, factor: float) -> "InteractionOperator":
        return InteractionOperator(
            self.n,
            None if self.sparse is None else self.sparse * factor,
            tuple((c * factor, u) for c, u in self.rank_one_terms),
            None if self.dense is None else self.dense * factor,
        )

    def with_rank_one(self, coef: float, u) -> "InteractionOperator":
        return InteractionOperator(self.n, self.sparse, self.rank_one_terms + ((coef, u),), self.dense)

    def to_json(self) -> dict:
        out = {"n": self.n, "rank_one_terms": [[c, u.tolist()] for c, u in self.rank_one_terms]}
        if self.sparse is not None:
            coo = self.sparse.tocoo()
            out["sparse"] = {"row": coo.row.tolist(), "col": coo.col.tolist(), "data": coo.data.tolist()}
        if self.dense is not None:
            out["dense"] = self.dense.tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "InteractionOperator":
        n = int(obj["n"])
        sparse = None
        if obj.get("sparse") is not None:
            s = obj["sparse"]
            sparse = sp.csr_matrix((s["data"], (s["row"], s["col"])), shape=(n, n))
        dense = None if obj.get("dense") is None else np.array(obj["dense"], dtype=float)
        terms = tuple((c, np.array(u, dtype=float)) for c, u in obj.get("rank_one_terms", []))
        return cls(n, sparse, terms, dense)


@dataclass(frozen=True)
class IsingModel:
    """``mu_{J,h}(x) ∝ exp(x^T J x / 2 + <h, x>)`` on ``{-1, +1}^n``."""

    J: InteractionOperator
    h: np.ndarray = None

    def __post_init__(self):
        h = np.zeros(self.J.n) if self.h is None else np.array(self.h, dtype=float)
        if h.shape != (self.J.n,):
            raise InstanceError("field length does not match J")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.J.n

    def log_weight(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * self.J.quadratic(x) + float(self.h @ x)

    def local_field(self, x) -> np.ndarray:
        """``m_i = sum_{j != i} J_ij x_j``."""
        x = np.asarray(x, dtype=float)
        return self.J.apply(x) - self.J.diagonal() * x

    def with_field(self, h) -> "IsingModel":
        return IsingModel(self.J, h)

    def to_json(self) -> dict:
        return {"J": self.J.to_json(), "h": self.h.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "IsingModel":
        return cls(InteractionOperator.from_json(obj["J"]), np.array(obj["h"], dtype=float))


def random_sparse_ising(n: int, seed: int, density: float = 0.5, scale: float = 0.5,
                        field_scale: float = 0.3) -> IsingModel:
    """Small random Ising model with Gaussian couplings on a random edge set."""
    rng = stream(seed, "random_sparse_ising", n)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < density
    w = scale * rng.standard_normal(iu.size)
    rows = np.concatenate([iu[keep], ju[keep]])
    cols = np.concatenate([ju[keep], iu[keep]])
    data = np.concatenate([w[keep], w[keep]])
    J = InteractionOperator(n, sp.csr_matrix((data, (rows, cols)), shape=(n, n)))
    return IsingModel(J, field_scale * rng.standard_normal(n))


def curie_weiss(n: int, beta: float) -> IsingModel:
    if n < 1:
        raise InstanceError("n >= 1 required")
    return IsingModel(InteractionOperator(n, rank_one_terms=((beta / n, np.ones(n)),)))


# --------------------------------------------------------------------------
# Spiked Wigner


@dataclass(frozen=True)
class SpikedInstance:
    v: np.ndarray
    lam: float
    kappa: float
    W: InteractionOperator
    M: InteractionOperator

    @property
    def n(self) -> int:
        return self.v.size

    def model(self) -> IsingModel:
        return IsingModel(self.M)

    def null_model(self) -> IsingModel:
        return IsingModel(self.W)

    def to_json(self) -> dict:
        return {"v": self.v.tolist(), "lambda": self.lam, "kappa": self.kappa, "W": self.W.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "SpikedInstance":
        W = InteractionOperator.from_json(obj["W"])
        return spiked_from_matrix(W, np.array(obj["v"], dtype=float), obj["lambda"], obj["kappa"])


def spiked_from_matrix(W: InteractionOperator, v, lam: float, kappa: float) -> SpikedInstance:
    v = np.array(v, dtype=float)
    v.setflags(write=False)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise InstanceError("spike vector must have unit norm")
    return SpikedInstance(v, float(lam), float(kappa), W, W.with_rank_one(lam, v))


def gen_spiked_wigner(n: int, lam: float, kappa: float, seed: int) -> SpikedInstance:
    """``M = W + lam v v^T`` with ``spec(W)`` remapped affinely onto ``[kappa, 1 - kappa]``."""
    if not 0 < kappa < 0.5:
        raise InstanceError("need 0 < kappa < 1/2")
    if lam < 0:
        raise InstanceError("need lambda >= 0")
    rng = stream(seed, "spiked_wigner", n)
    v = rng.choice([-1.0, 1.0], size=n) / math.sqrt(n)
    g = rng.standard_normal((n, n))
    evals, evecs = np.linalg.eigh((g + g.T) / math.sqrt(2 * n))
    lo, hi = evals[0], evals[-1]
    if n == 1 or hi - lo < 1e-12:
        remapped = np.full(n, 0.5)
    else:
        remapped = kappa + (evals - lo) * (1.0 - 2.0 * kappa) / (hi - lo)
    W = (evecs * remapped) @ evecs.T
    return spiked_from_matrix(InteractionOperator(n, dense=0.5 * (W + W.T)), v, lam, kappa)


# --------------------------------------------------------------------------
# Stochastic block model


@dataclass(frozen=True)
class SbmInstance:
    sigma: np.ndarray
    graph: Graph
    d: float
    lam: float

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def spike(self) -> np.ndarray:
        return self.sigma / math.sqrt(self.n)

    def to_json(self) -> dict:
        return {"sigma": self.sigma.astype(int).tolist(), "edges": self.graph.edges().tolist(),
                "n": self.n, "d": self.d, "lambda": self.lam}

    @classmethod
    def from_json(cls, obj: dict) -> "SbmInstance":
        g = Graph.from_edges(int(obj["n"]), obj["edges"])
        return cls(np.array(obj["sigma"], dtype=float), g, float(obj["d"]), float(obj["lambda"]))


def sample_sbm(n: int, d: float, lam: float, seed: int) -> SbmInstance:
    """Two-community SBM: uniform ``sigma``; pairs connect with probability
    ``(d + lam sqrt d)/n`` inside a community and ``(d - lam sqrt d)/n`` across."""
    if lam * lam > d + 1e-12:
        raise InstanceError("need lambda^2 <= d")
    if not 0 < d < n:
        raise InstanceError("need 0 < d < n")
    p_in = (d + lam * math.sqrt(d)) / n
    p_out = max(0.0, (d - lam * math.sqrt(d)) / n)
    if p_in > 1:
        raise InstanceError("within-community probability exceeds 1")
    rng = stream(seed, "sbm", n)
    sigma = rng.choice([-1.0, 1.0], size=n)
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(sigma[iu] == sigma[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    graph = Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))
    sigma.setflags(write=False)
    return SbmInstance(sigma, graph, float(d), float(lam))


def centered_adjacency(instance: SbmInstance) -> InteractionOperator:
    """``A_G - (d/n) 1 1^T``; scale by ``beta / sqrt(d)`` for the Glauber target."""
    n = instance.n
    return InteractionOperator(n, instance.graph.adjacency(), ((-instance.d / n, np.ones(n)),))


# --------------------------------------------------------------------------
# JSON dump / load


def dump_instance(obj, path) -> None:
    kind = {Graph: "graph", IsingModel: "ising", SpikedInstance: "spiked", SbmInstance: "sbm"}[type(obj)]
    payload = obj.to_json() if kind != "graph" else {"n": obj.n, "edges": obj.edges().tolist()}
    Path(path).write_text(json.dumps({"kind": kind, "instance": payload}))


def load_instance(path):
    obj = json.loads(Path(path).read_text())
    kind, payload = obj["kind"], obj["instance"]
    if kind == "graph":
        return Graph.from_edges(payload["n"], payload["edges"])
    return {"ising": IsingModel, "spiked": SpikedInstance, "sbm": SbmInstance}[kind].from_json(payload)
