"""Brute-force oracle on enumerable state spaces.

States are bit-encoded integers: bit ``i`` set means spin ``+1`` (Ising) or
vertex ``i`` occupied (hardcore). Tables for the hardcore model store only
the independent sets.

The Dirichlet form is ``E(f, g) = E_{x~pi} E_{y~P(x,.)} (f(x)-f(y))(g(x)-g(y))``
with no factor 1/2. Under the unit-rate semigroup ``exp(-t(I-P))`` this makes
``d/dt KL(nu_t || pi) = -E(f_t, log f_t) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import logsumexp
from scipy.stats import poisson

from .models import Graph, IsingModel, SpikedInstance

MAX_N = 20
MAX_KERNEL_N = 16
MAX_RGD_N = 12


class StateSpaceTooLarge(ValueError):
    pass


class ZeroMassPinning(ValueError):
    pass


def _bits(states: np.ndarray, n: int) -> np.ndarray:
    return ((states[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(np.int8)


# --------------------------------------------------------------------------
# Tables


@dataclass(frozen=True)
class ExactTable:
    """Probability vector over an enumerated support.

    ``kind`` is ``"spin"`` (points in {-1,+1}^n) or ``"indicator"`` (points in
    {0,1}^n). ``reference`` is an optional second table over the same support,
    used for densities.
    """

    n: int
    states: np.ndarray
    probs: np.ndarray
    kind: str = "spin"
    reference: "ExactTable | None" = None
    log_probs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        states = np.ascontiguousarray(self.states, dtype=np.int64)
        probs = np.ascontiguousarray(self.probs, dtype=float)
        if states.shape != probs.shape:
            raise ValueError("support size mismatch")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        if self.kind not in ("spin", "indicator"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.reference is not None and not np.array_equal(self.reference.states, states):
            raise ValueError("reference table has a different support")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", probs)
        if self.log_probs is None:
            with np.errstate(divide="ignore"):
                object.__setattr__(self, "log_probs", np.log(probs))

    @property
    def size(self) -> int:
        return self.states.size

    def points(self) -> np.ndarray:
        b = _bits(self.states, self.n).astype(float)
        return 2.0 * b - 1.0 if self.kind == "spin" else b

    def with_probs(self, probs, reference: "ExactTable | None" = None) -> "ExactTable":
        probs = np.asarray(probs, dtype=float)
        return ExactTable(self.n, self.states, probs / probs.sum(), self.kind, reference)

    def relative_to(self, reference: "ExactTable") -> "ExactTable":
        return ExactTable(self.n, self.states, self.probs, self.kind, reference, self.log_probs)

    def density(self) -> np.ndarray:
        """``d nu / d reference`` on the support (``inf`` where the reference vanishes)."""
        if self.reference is None:
            raise ValueError("table has no reference measure")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.probs > 0, self.probs / self.reference.probs, 0.0)

    def expect(self, values) -> float:
        return float(self.probs @ np.asarray(values, dtype=float))

    def mean(self) -> np.ndarray:
        return self.probs @ self.points()

    def index_map(self) -> np.ndarray:
        idx = np.full(1 << self.n, -1, dtype=np.int64)
        idx[self.states] = np.arange(self.size)
        return idx


def table_from_log_weights(n: int, states, logw, kind: str = "spin") -> ExactTable:
    logw = np.asarray(logw, dtype=float)
    lp = logw - logsumexp(logw)
    return ExactTable(n, states, np.exp(lp), kind, None, lp)


def ising_log_weights(model: IsingModel, states: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    n = model.n
    if states is None:
        states = np.arange(1 << n, dtype=np.int64)
    J = model.J.to_dense()
    out = np.empty(states.size)
    chunk = 1 << 15
    for s in range(0, states.size, chunk):
        x = 2.0 * _bits(states[s : s + chunk], n) - 1.0
        out[s : s + chunk] = 0.5 * np.einsum("si,si->s", x @ J, x) + x @ model.h
    return states, out


def independent_set_codes(graph: Graph) -> np.ndarray:
    n = graph.n
    if n > MAX_N:
        raise StateSpaceTooLarge(f"n={n} exceeds {MAX_N}")
    codes = np.arange(1 << n, dtype=np.int64)
    bad = np.zeros(codes.size, dtype=bool)
    for i, mask in enumerate(graph.neighbor_masks()):
        bad |= ((codes >> i) & 1).astype(bool) & ((codes & mask) != 0)
    return codes[~bad]


def enumerate_measure(model) -> ExactTable:
    """Exact Gibbs table for an :class:`IsingModel`, or the uniform measure
    over independent sets of a :class:`Graph`."""
    if isinstance(model, Graph):
        codes = independent_set_codes(model)
        return table_from_log_weights(model.n, codes, np.zeros(codes.size), "indicator")
    if model.n > MAX_N:
        raise StateSpaceTooLarge(f"n={model.n} exceeds {MAX_N}")
    states, logw = ising_log_weights(model)
    return table_from_log_weights(model.n, states, logw, "spin")


# --------------------------------------------------------------------------
# Kernels


@dataclass(frozen=True)
class KernelMatrix:
    """Row-stochastic matrix over the support of ``stationary``."""

    matrix: object
    stationary: ExactTable
    reversible: bool = True

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.asarray(self.matrix)

    def step(self, nu) -> np.ndarray:
        """One step of the chain applied to a distribution: ``nu P``."""
        nu = np.asarray(nu, dtype=float)
        return np.asarray(self.matrix.T @ nu).ravel()

    def apply(self, f) -> np.ndarray:
        """``(P f)(x) = sum_y P[x,y] f(y)``."""
        return np.asarray(self.matrix @ np.asarray(f, dtype=float)).ravel()

    def row_sum_residual(self) -> float:
        return float(np.abs(np.asarray(self.matrix.sum(axis=1)).ravel() - 1.0).max())

    def detailed_balance_residual(self) -> float:
        pi = self.stationary.probs
        if sp.issparse(self.matrix):
            flow = sp.diags(pi) @ self.matrix
            diff = flow - flow.T
            return float(abs(diff).max()) if diff.nnz else 0.0
        flow = pi[:, None] * self.dense()
        return float(np.abs(flow - flow.T).max())

    def stationarity_residual(self) -> float:
        pi = self.stationary.probs
        return float(np.abs(self.step(pi) - pi).max())

    def check(self, tol: float = 1e-12) -> None:
        if self.row_sum_residual() > tol:
            raise ValueError("rows do not sum to 1")
        if self.reversible and self.detailed_balance_residual() > tol:
            raise ValueError("detailed balance violated")


def _glauber_from_table(table: ExactTable) -> KernelMatrix:
    n, size = table.n, table.size
    idx = table.index_map()
    lp = table.log_probs
    rows, cols, vals = [], [], []
    stay = np.ones(size)
    src = np.arange(size)
    for i in range(n):
        tgt = idx[table.states ^ (np.int64(1) << np.int64(i))]
        ok = tgt >= 0
        a, b = src[ok], tgt[ok]
        # pi(y) / (pi(x) + pi(y)) as a logistic in the log-ratio
        p = 1.0 / (1.0 + np.exp(lp[a] - lp[b])) / n
        rows.append(a)
        cols.append(b)
        vals.append(p)
        np.subtract.at(stay, a, p)
    rows.append(src)
    cols.append(src)
    vals.append(stay)
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )
    return KernelMatrix(mat, table, True)


def glauber_kernel(model) -> KernelMatrix:
    """Exact single-site heat-bath kernel for an Ising model, a hardcore graph
    or an arbitrary table on the cube."""
    table = model if isinstance(model, ExactTable) else None
    n = table.n if table is not None else model.n
    if n > MAX_KERNEL_N:
        raise StateSpaceTooLarge(f"n={n} exceeds {MAX_KERNEL_N}")
    if table is None:
        table = enumerate_measure(model)
    return _glauber_from_table(table)


def conditional_given_field(W_table_logw: np.ndarray, corr: np.ndarray, s: float) -> np.ndarray:
    """``mu_{W, s v}`` from the log-weights of ``mu_{W,0}`` and ``<v, y>``."""
    lw = W_table_logw + s * corr
    p = np.exp(lw - lw.max())
    return p / p.sum()


def rgd_kernel(instance, quadrature_order: int = 64) -> KernelMatrix:
    """Restricted Gaussian dynamics kernel, integrated by Gauss-Hermite quadrature.

    ``K[x, y] = E_g mu_{W, z}(y)`` with ``z = (lam <v,x> + sqrt(lam) g) v``.
    ``instance`` is a :class:`SpikedInstance` or a ``(W, v, lam)`` triple.
    """
    if isinstance(instance, SpikedInstance):
        W, v, lam = instance.W, instance.v, instance.lam
    else:
        W, v, lam = instance
    v = np.asarray(v, dtype=float)
    n = W.n
    if n > MAX_RGD_N:
        raise StateSpaceTooLarge(f"n={n} exceeds {MAX_RGD_N}")
    if quadrature_order < 8:
        raise ValueError("quadrature order must be >= 8")
    states, logw0 = ising_log_weights(IsingModel(W))
    x = 2.0 * _bits(states, n) - 1.0
    corr = x @ v
    nodes, weights = hermegauss(quadrature_order)
    weights = weights / weights.sum()
    # rows depend on x only through <v, x>
    keys = np.round(corr, 12)
    uniq, inverse = np.unique(keys, return_inverse=True)
    rows = np.empty((uniq.size, states.size))
    for k, c in enumerate(uniq):
        acc = np.zeros(states.size)
        for g, w in zip(nodes, weights):
            acc += w * conditional_given_field(logw0, corr, lam * c + math.sqrt(lam) * g)
        rows[k] = acc / acc.sum()
    _, logw_m = ising_log_weights(IsingModel(W.with_rank_one(lam, v)))
    target = table_from_log_weights(n, states, logw_m)
    return KernelMatrix(rows[inverse], target, True)


# --------------------------------------------------------------------------
# Functionals


def _edge_terms(kernel: KernelMatrix):
    """Yield ``(rows, cols, P[rows, cols])`` blocks covering all nonzero entries."""
    m = kernel.matrix
    if sp.issparse(m):
        coo = m.tocoo()
        yield coo.row, coo.col, coo.data
        return
    m = np.asarray(m)
    size = m.shape[0]
    block = max(1, (1 << 20) // max(size, 1))
    cols = np.arange(size)
    for s in range(0, size, block):
        r = np.arange(s, min(size, s + block))
        yield np.repeat(r, size), np.tile(cols, r.size), m[r].ravel()


def dirichlet_form(kernel: KernelMatrix, pi, f, g) -> float:
    """``E_{x~pi} E_{y~P(x,.)} (f(x) - f(y)) (g(x) - g(y))``."""
    pi = pi.probs if isinstance(pi, ExactTable) else np.asarray(pi, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    total = 0.0
    for r, c, p in _edge_terms(kernel):
        total += float(np.sum(pi[r] * p * (f[r] - f[c]) * (g[r] - g[c])))
    return total


def entropy_dissipation(kernel: KernelMatrix, pi, f) -> float:
    """``E(f, log f)``; requires ``f > 0``."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("f must be strictly positive for E(f, log f)")
    return dirichlet_form(kernel, pi, f, np.log(f))


def entropy_functional(pi, f) -> float:
    """``Ent[f] = E_pi[f log f] - E_pi f log E_pi f``."""
    pi = pi.probs if isinstance(pi, ExactTable) else np.asarray(pi, dtype=float)
    f = np.asarray(f, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        flogf = np.where(f > 0, f * np.log(np.where(f > 0, f, 1.0)), 0.0)
    mean = float(pi @ f)
    return float(pi @ flogf) - (mean * math.log(mean) if mean > 0 else 0.0)


@dataclass(frozen=True)
class Divergences:
    kl: float
    skl: float
    tv: float
    hellinger: float
    ent: float
    kl_infinite: bool


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def divergences(nu, pi) -> Divergences:
    """KL(nu||pi), SKL, TV, Hellinger (``1 - BC^2``, i.e. half the mean squared
    difference of sqrt-densities over independent pi-pairs) and Ent of the density."""
    p = nu.probs if isinstance(nu, ExactTable) else np.asarray(nu, dtype=float)
    q = pi.probs if isinstance(pi, ExactTable) else np.asarray(pi, dtype=float)
    kl = _kl(p, q)
    skl = kl + _kl(q, p)
    tv = 0.5 * float(np.abs(p - q).sum())
    bc = float(np.sum(np.sqrt(p * q)))
    hel = max(0.0, 1.0 - bc * bc)
    if math.isinf(kl):
        ent = math.inf
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(q > 0, p / np.where(q > 0, q, 1.0), 0.0)
        ent = entropy_functional(q, f)
    return Divergences(kl, skl, tv, hel, ent, math.isinf(kl))


# --------------------------------------------------------------------------
# Evolution


def _poisson_weights(h: float) -> np.ndarray:
    # tail beyond h + 12 sqrt(h) + 40 is far below 1e-16
    kmax = int(math.ceil(h + 12.0 * math.sqrt(h) + 40))
    return poisson.pmf(np.arange(kmax + 1), h)


UNIFORMIZATION_CHUNK = 4.0


def propagator(kernel: KernelMatrix, t: float) -> np.ndarray:
    """Dense ``exp(-t (I - P))`` by uniformization, chunked so that each
    Poisson series is short and well scaled."""
    P = kernel.dense()
    size = P.shape[0]
    if t == 0:
        return np.eye(size)
    m = max(1, int(math.ceil(t / UNIFORMIZATION_CHUNK)))
    h = t / m
    w = _poisson_weights(h)
    E = w[0] * np.eye(size)
    term = np.eye(size)
    for k in range(1, w.size):
        term = term @ P
        E += w[k] * term
    return np.linalg.matrix_power(E, m)


def evolve(kernel: KernelMatrix, nu0, t: float, mode: str = "continuous") -> ExactTable:
    """``nu_t`` for the discrete chain (``nu0 P^t``) or the unit-rate
    continuous-time chain (``nu0 exp(-t(I-P))``)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    pi = kernel.stationary
    nu = nu0.probs if isinstance(nu0, ExactTable) else np.asarray(nu0, dtype=float)
    if mode == "discrete":
        steps = int(t)
        if steps != t:
            raise ValueError("discrete evolution needs an integer t")
        for _ in range(steps):
            nu = kernel.step(nu)
    elif mode == "continuous":
        if t > 0:
            m = max(1, int(math.ceil(t / UNIFORMIZATION_CHUNK)))
            w = _poisson_weights(t / m)
            for _ in range(m):
                term = nu
                acc = w[0] * term
                for k in range(1, w.size):
                    term = kernel.step(term)
                    acc = acc + w[k] * term
                nu = acc
    else:
        raise ValueError(f"unknown mode {mode!r}")
    nu = np.clip(nu, 0.0, None)
    return ExactTable(pi.n, pi.states, nu / nu.sum(), pi.kind, pi)


def evolve_grid(kernel: KernelMatrix, nu0, times) -> np.ndarray:
    """Distributions at increasing ``times`` as rows of an array."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise ValueError("times must be nonnegative and sorted")
    nu = nu0.probs if isinstance(nu0, ExactTable) else np.asarray(nu0, dtype=float)
    out = np.empty((times.size, nu.size))
    cache = {}
    prev = 0.0
    for k, t in enumerate(times):
        gap = float(t - prev)
        key = round(gap, 12)
        if key not in cache:
            cache[key] = propagator(kernel, gap)
        nu = cache[key].T @ nu
        nu = np.clip(nu, 0.0, None)
        nu /= nu.sum()
        out[k] = nu
        prev = t
    return out


# --------------------------------------------------------------------------
# Tilts, certificates, local stationarity


def tilt(pi: ExactTable, w) -> tuple[ExactTable, np.ndarray]:
    """``T_w pi`` (density ∝ ``exp(<w, x>)``) and its mean."""
    w = np.asarray(w, dtype=float)
    lw = pi.log_probs + pi.points() @ w
    lp = lw - logsumexp(lw)
    t = ExactTable(pi.n, pi.states, np.exp(lp), pi.kind, None, lp)
    return t, t.mean()


@dataclass(frozen=True)
class MlsiCertificate:
    bound: float
    gap: float
    pi_star: float
    vacuous: bool


def spectral_gap(kernel: KernelMatrix) -> float:
    """``1 - lambda_2`` of a reversible kernel, via the symmetrised matrix."""
    pi = kernel.stationary.probs
    size = kernel.size
    if size == 1:
        return 0.0
    root = np.sqrt(pi)
    if size <= 4096:
        S = root[:, None] * kernel.dense() / root[None, :]
        ev = np.linalg.eigvalsh(0.5 * (S + S.T))
        return float(1.0 - ev[-2])
    from scipy.sparse.linalg import eigsh

    D = sp.diags(root)
    Dinv = sp.diags(1.0 / root)
    S = D @ sp.csr_matrix(kernel.matrix) @ Dinv
    ev = eigsh(0.5 * (S + S.T), k=2, which="LA", return_eigenvectors=False)
    return float(1.0 - np.sort(ev)[0])


def mlsi_lower_bound(pi: ExactTable, kernel: KernelMatrix) -> MlsiCertificate:
    """Certified MLSI lower bound ``(1 - 2 pi*) / log(1/pi* - 1) * gap``.

    At ``pi* = 1/2`` the prefactor takes its limiting value 1/2. A
    one-point support gives a vacuous certificate.
    """
    if kernel.size > (1 << 16):
        raise StateSpaceTooLarge("support exceeds 2^16")
    pos = pi.probs[pi.probs > 0]
    pi_star = float(pos.min())
    gap = spectral_gap(kernel)
    if pos.size == 1 or pi_star > 0.5 + 1e-12:
        return MlsiCertificate(0.0, gap, pi_star, True)
    if abs(pi_star - 0.5) <= 1e-12:
        factor = 0.5
    else:
        factor = (1.0 - 2.0 * pi_star) / math.log(1.0 / pi_star - 1.0)
    return MlsiCertificate(factor * gap, gap, pi_star, False)


def ls_profile(kernel: KernelMatrix, nu0, T: float, grid: int = 100):
    """Entropy dissipation ``E(f_t, log f_t)`` at the midpoints of a uniform
    grid on ``[0, T]``. Returns ``(times, values)``."""
    if grid < 100:
        raise ValueError("grid resolution must be at least 100")
    times = (np.arange(grid) + 0.5) * (T / grid)
    pi = kernel.stationary.probs
    nus = evolve_grid(kernel, nu0, times)
    vals = np.array([entropy_dissipation(kernel, pi, nu / pi) for nu in nus])
    return times, vals


def ls_fraction(kernel: KernelMatrix, nu0, T: float, eps: float, grid: int = 100) -> float:
    """Fraction of grid times at which ``nu_t`` is ``eps``-locally stationary."""
    _, vals = ls_profile(kernel, nu0, T, grid)
    return float(np.mean(vals <= eps))


def conditional_restriction(nu: ExactTable, pi: ExactTable, pinned, assignment):
    """Condition both tables on ``x_pinned = assignment``; results live on the
    free coordinates, re-encoded in increasing order."""
    if not np.array_equal(nu.states, pi.states):
        raise ValueError("tables must share a support")
    pinned = [int(i) for i in pinned]
    n = pi.n
    free = [i for i in range(n) if i not in set(pinned)]
    bits = _bits(pi.states, n)
    want = [(1 if a > 0 else 0) for a in assignment]
    mask = np.ones(pi.size, dtype=bool)
    for i, a in zip(pinned, want):
        mask &= bits[:, i] == a
    mnu, mpi = nu.probs[mask].sum(), pi.probs[mask].sum()
    if mnu <= 0 or mpi <= 0:
        raise ZeroMassPinning("pinning has zero mass")
    codes = (bits[mask][:, free].astype(np.int64) << np.arange(len(free), dtype=np.int64)).sum(axis=1)
    order = np.argsort(codes)
    codes = codes[order]
    pi_c = ExactTable(len(free), codes, pi.probs[mask][order] / mpi, pi.kind)
    nu_c = ExactTable(len(free), codes, nu.probs[mask][order] / mnu, nu.kind, pi_c)
    return nu_c, pi_c


def uniform_indepset_expected_size(graph: Graph) -> float:
    codes = independent_set_codes(graph)
    sizes = _bits(codes, graph.n).sum(axis=1)
    return float(sizes.mean())


# --------------------------------------------------------------------------
# Spiked-model constants and tilted curves


@dataclass(frozen=True)
class DecompositionConstants:
    c_var: float
    alpha_ent: float
    gamma: float

    def __post_init__(self):
        if not (0 <= self.c_var <= 1 and self.alpha_ent > 0 and 0 <= self.gamma <= 1):
            raise ValueError("invalid decomposition constants")

    @classmethod
    def from_spectral_margin(cls, kappa: float) -> "DecompositionConstants":
        """Constants of the product-mixture decomposition for ``kappa <= W <= 1 - kappa``."""
        return cls(math.exp(-1.0 / kappa), 1.0 / kappa, 0.0)

    def correlation_floor(self, s: float, n: int) -> float:
        """Lower bound on ``E_{mu_{W, s v}} |<x, v>|`` at tilt ``s``."""
        cap = 2.0 * math.sqrt(n / (self.c_var * self.alpha_ent))
        return (1.0 - self.gamma) * self.c_var / 2.0 * min(s, cap)

    def rgd_floor(self, r: float, lam: float, n: int) -> float:
        """Lower bound on ``E|<y, v>|`` after one RGD step from ``|<x, v>| = r``."""
        from scipy.integrate import quad

        cap = 2.0 * math.sqrt(n / (self.c_var * self.alpha_ent))
        a, b = lam * r, math.sqrt(lam)

        def integrand(g):
            return min(abs(a + b * g), cap) * math.exp(-0.5 * g * g) / math.sqrt(2 * math.pi)

        pts = [-a / b] if b > 0 else None
        val, _ = quad(integrand, -40, 40, points=pts, limit=200, epsabs=1e-13, epsrel=1e-12)
        return (1.0 - self.gamma) * self.c_var / 2.0 * val


@dataclass(frozen=True)
class TiltedMeanCurve:
    s: np.ndarray
    mean_corr: np.ndarray
    mean_abs_corr: np.ndarray
    var_corr: np.ndarray
    fd_derivative: np.ndarray
    floor: np.ndarray

    @property
    def derivative_error(self) -> float:
        return float(np.abs(self.fd_derivative - self.var_corr).max())

    @property
    def floor_holds(self) -> bool:
        return bool(np.all(self.mean_abs_corr >= self.floor - 1e-12))

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.mean_corr) >= -1e-12))


def tilted_mean_curve(model: IsingModel, v, s_max: float, grid: int = 50,
                      constants: DecompositionConstants | None = None, h: float = 1e-4) -> TiltedMeanCurve:
    """``E_{mu_{W, s v}} <x, v>`` on ``s in [0, s_max]`` with its variance and a
    central finite-difference derivative; ``model`` supplies ``W`` (its field is ignored)."""
    n = model.n
    if n > 14:
        raise StateSpaceTooLarge("tilted curves need n <= 14")
    states, logw0 = ising_log_weights(IsingModel(model.J))
    corr = (2.0 * _bits(states, n) - 1.0) @ np.asarray(v, dtype=float)
    s = np.linspace(0.0, s_max, grid)

    def moments(t):
        p = conditional_given_field(logw0, corr, t)
        m = float(p @ corr)
        return m, float(p @ np.abs(corr)), float(p @ (corr - m) ** 2)

    mean, mabs, var, fd = (np.empty(grid) for _ in range(4))
    for k, t in enumerate(s):
        mean[k], mabs[k], var[k] = moments(t)
        fd[k] = (moments(t + h)[0] - moments(t - h)[0]) / (2 * h)
    if constants is None:
        floor = np.zeros(grid)
    else:
        floor = np.array([constants.correlation_floor(t, n) for t in s])
    return TiltedMeanCurve(s, mean, mabs, var, fd, floor)
