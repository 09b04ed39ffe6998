"""Exact-enumeration oracle suite.

Each check draws its own seeded random instances and reports the worst
residual. For inequalities the residual is the amount of violation (zero when
the inequality holds), so every check has the form ``residual <= tolerance``.

Two identities are checked twice. The ``*_as_stated`` variants use the
Dirichlet form exactly as defined here (no factor 1/2 in front of the double
expectation), under which the entropy decays at rate ``E/2``; they are
expected to fail. The ``*_half_form`` variants carry the 1/2.
"""

from __future__ import annotations

import math
from itertools import combinations, product

import numpy as np
from numpy.polynomial.legendre import leggauss

from .. import exact
from ..models import Graph, IsingModel, InteractionOperator, gen_spiked_wigner, random_sparse_ising
from ..rng import stream
from .config import ExperimentConfig

TOL_EXACT = 1e-12

# --------------------------------------------------------------------------
# Random instances


def random_model(rng, n_min=2, n_max=6, hardcore_share=0.25):
    """A random small Ising model or, with probability ``hardcore_share``, a
    random graph for the uniform hardcore measure."""
    if rng.random() < hardcore_share:
        n = int(rng.integers(n_min, n_max + 3))
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(iu.size) < rng.uniform(0.2, 0.6)
        return Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))
    n = int(rng.integers(n_min, n_max + 1))
    return random_sparse_ising(n, int(rng.integers(1 << 62)), density=rng.uniform(0.3, 1.0),
                               scale=rng.uniform(0.1, 1.5), field_scale=rng.uniform(0.0, 1.0))


def random_density(rng, pi: np.ndarray) -> np.ndarray:
    """Relative density of a random strictly positive ``nu``."""
    nu = rng.dirichlet(np.full(pi.size, rng.choice([0.5, 1.0, 3.0])))
    nu = np.maximum(nu, 1e-12)
    nu /= nu.sum()
    return nu


def random_spiked(rng, n_min=3, n_max=8):
    n = int(rng.integers(n_min, n_max + 1))
    return gen_spiked_wigner(n, float(rng.uniform(0.5, 10.0)), float(rng.uniform(0.1, 0.45)),
                             int(rng.integers(1 << 62)))


def _kl(p, q) -> float:
    return exact.divergences(p, q).kl


# --------------------------------------------------------------------------
# Spectral route for reversible kernels (independent of uniformization)


class SpectralFlow:
    """``nu_t = nu_0 exp(-t (I - P))`` through the eigendecomposition of the
    symmetrised kernel."""

    def __init__(self, kernel):
        pi = kernel.stationary.probs
        self.pi = pi
        root = np.sqrt(pi)
        S = root[:, None] * kernel.dense() / root[None, :]
        lam, U = np.linalg.eigh(0.5 * (S + S.T))
        self.rate = 1.0 - lam
        self.U = U
        self.root = root

    def at(self, nu0, t) -> np.ndarray:
        coef = self.U.T @ (nu0 / self.root)
        nu = self.root * (self.U @ (np.exp(-t * self.rate) * coef))
        nu = np.maximum(nu, 0.0)
        return nu / nu.sum()


def _gauss_legendre(T: float, panels: int = 24, order: int = 10):
    x, w = leggauss(order)
    edges = np.linspace(0.0, T, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w[None, :]).ravel()
    return nodes, weights


# --------------------------------------------------------------------------
# Checks. Each takes a generator and returns {check_name: residual}.


def chk_kernel_identities(rng):
    model = random_model(rng, n_max=8)
    K = exact.glauber_kernel(model)
    out = {"detailed_balance": K.detailed_balance_residual(),
           "stationarity": max(K.stationarity_residual(), K.row_sum_residual())}
    if rng.random() < 0.2:
        # quadrature over g makes RGD reversible only up to the truncation error
        R = exact.rgd_kernel(random_spiked(rng, 2, 5))
        out["rgd_reversibility_quadrature"] = max(R.detailed_balance_residual(), R.stationarity_residual(),
                                                  R.row_sum_residual())
    return out


def chk_negative_control(rng):
    """A kernel with one row scaled by 1.01 must be caught; residual 0 means caught."""
    K = exact.glauber_kernel(random_model(rng))
    M = K.dense().copy()
    M[int(rng.integers(M.shape[0]))] *= 1.01
    bad = exact.KernelMatrix(M, K.stationary)
    caught = bad.detailed_balance_residual() > TOL_EXACT or bad.row_sum_residual() > TOL_EXACT
    return {"negative_control_corrupted_kernel": 0.0 if caught else 1.0}


def chk_time_average(rng):
    """Time-averaged entropy dissipation against ``KL(nu_0 || pi) / T``."""
    K = exact.glauber_kernel(random_model(rng))
    pi = K.stationary.probs
    nu0 = random_density(rng, pi)
    T = float(rng.uniform(0.5, 5.0))
    flow = SpectralFlow(K)
    nodes, weights = _gauss_legendre(T)
    F = np.array([flow.at(nu0, t) for t in nodes]) / pi
    coo = K.matrix.tocoo()
    # E(f_t, log f_t) at every node at once; same sum as exact.entropy_dissipation
    dF = F[:, coo.row] - F[:, coo.col]
    dL = np.log(F[:, coo.row]) - np.log(F[:, coo.col])
    vals = (dF * dL) @ (pi[coo.row] * coo.data)
    avg = float(weights @ vals) / T
    kl0 = _kl(nu0, pi)
    return {"time_average_dissipation_as_stated": max(0.0, avg - kl0 / T),
            "time_average_dissipation_half_form": max(0.0, 0.5 * avg - kl0 / T)}


def chk_kl_derivative(rng, dt: float = 1e-4):
    K = exact.glauber_kernel(random_model(rng))
    pi = K.stationary.probs
    nu0 = random_density(rng, pi)
    t = float(rng.uniform(0.05, 2.0))
    a = exact.evolve(K, nu0, t).probs
    b = exact.evolve(K, nu0, t + dt).probs
    rate = (_kl(b, pi) - _kl(a, pi)) / dt
    e = exact.entropy_dissipation(K, pi, a / pi)
    return {"kl_derivative_as_stated": abs(rate + e), "kl_derivative_half_form": abs(rate + 0.5 * e)}


def chk_dirichlet_kl_tv(rng):
    K = exact.glauber_kernel(random_model(rng))
    pi = K.stationary.probs
    nu = random_density(rng, pi)
    e = exact.entropy_dissipation(K, pi, nu / pi)
    pnu = K.step(nu)
    kl = _kl(pnu, nu)
    tv = 0.5 * float(np.abs(pnu - nu).sum())
    return {"dirichlet_kl_tv_chain": max(0.0, 2 * kl - e, 4 * tv * tv - 2 * kl)}


def chk_divergence_pairs(rng, pairs: int = 10):
    """SKL against ``(6 + 12 tau) KL`` and Hellinger against KL on random pairs."""
    worst_skl, worst_hel = 0.0, 0.0
    for _ in range(pairs):
        size = int(rng.integers(2, 65))
        pi = rng.dirichlet(np.ones(size))
        pi = np.maximum(pi, 1e-9)
        pi /= pi.sum()
        nu = random_density(rng, pi)
        d = exact.divergences(nu, pi)
        tau = float(np.max(np.abs(np.log(nu / pi))))
        worst_skl = max(worst_skl, d.skl - (6 + 12 * tau) * d.kl)
        worst_hel = max(worst_hel, d.hellinger - d.kl)
    return {"skl_bound": worst_skl, "hellinger_le_kl": worst_hel}


def chk_mixture_dominance(rng):
    """``E_pi(f, log f) >= sum_a pi(x_i = a) E_{pi_a}(f, log f)`` for the
    decomposition by the value of one coordinate (Glauber forms on the cube)."""
    model = random_model(rng, hardcore_share=0.0)
    table = exact.enumerate_measure(model)
    K = exact.glauber_kernel(table)
    pi = table.probs
    f = random_density(rng, pi) / pi
    lhs = exact.entropy_dissipation(K, pi, f)
    i = int(rng.integers(table.n))
    bit = (table.states >> i) & 1
    rhs = 0.0
    for a in (0, 1):
        mask = bit == a
        rho = float(pi[mask].sum())
        comp = exact.ExactTable(table.n, table.states[mask], pi[mask] / rho, table.kind)
        Kc = exact.glauber_kernel(comp)
        rhs += rho * exact.entropy_dissipation(Kc, comp.probs, f[mask])
    return {"mixture_dirichlet_dominance": max(0.0, rhs - lhs)}


def chk_one_step(rng):
    """One-step drift bound and density-ratio concentration on one random (kernel, nu)."""
    K = exact.glauber_kernel(random_model(rng))
    pi = K.stationary.probs
    nu = random_density(rng, pi)
    f = nu / pi
    eps = exact.entropy_dissipation(K, pi, f)
    phi = rng.uniform(-1, 1, size=pi.size)
    drift = abs(float(nu @ phi) - float(K.step(nu) @ phi))
    drift_gap = max(0.0, drift - float(np.abs(phi).max()) * math.sqrt(eps))

    coo = K.matrix.tocoo()
    mass = nu[coo.row] * coo.data
    dev = np.abs(f[coo.row] / f[coo.col] - 1.0)
    lem34 = 0.0
    for delta in np.linspace(2 * eps, 1.0, 12)[1:]:
        if delta <= 2 * eps:
            continue
        prob = float(mass[dev > 2.0 * math.sqrt(eps / delta)].sum())
        lem34 = max(lem34, prob - delta)
    return {"one_step_drift": drift_gap, "density_ratio_concentration": lem34}


def patch_constant(table) -> float:
    """Smallest certified MLSI constant over all conditional Glauber chains."""
    n = table.n
    best = math.inf
    for k in range(n):
        for pinned in combinations(range(n), k):
            for assignment in product((-1, 1), repeat=k):
                try:
                    _, pc = exact.conditional_restriction(table, table, pinned, assignment)
                except exact.ZeroMassPinning:
                    continue
                cert = exact.mlsi_lower_bound(pc, exact.glauber_kernel(pc))
                if not cert.vacuous:
                    best = min(best, cert.bound)
    return best


def local_patch_gap(nu_table, pi_table, eps: float, C: float) -> float:
    """Worst violation of ``E_{x_out ~ nu} TV(nu | x_out, pi | x_out) <= sqrt(eps) / C``
    over all free sets ``W``."""
    n = pi_table.n
    worst = 0.0
    for k in range(n):
        for pinned in combinations(range(n), k):
            total = 0.0
            for assignment in product((-1, 1), repeat=k):
                try:
                    nc, pc = exact.conditional_restriction(nu_table, pi_table, pinned, assignment)
                except exact.ZeroMassPinning:
                    continue
                mask = np.ones(pi_table.size, dtype=bool)
                for i, a in zip(pinned, assignment):
                    mask &= ((pi_table.states >> i) & 1) == (1 if a > 0 else 0)
                total += float(nu_table.probs[mask].sum()) * 0.5 * float(np.abs(nc.probs - pc.probs).sum())
            worst = max(worst, total - math.sqrt(eps) / C)
    return worst


def chk_local_patches(rng):
    model = random_model(rng, n_min=3, n_max=4, hardcore_share=0.0)
    pi_t = exact.enumerate_measure(model)
    K = exact.glauber_kernel(pi_t)
    nu = random_density(rng, pi_t.probs)
    eps = exact.entropy_dissipation(K, pi_t.probs, nu / pi_t.probs)
    nu_t = pi_t.with_probs(nu, pi_t)
    return {"local_patches": max(0.0, local_patch_gap(nu_t, pi_t, eps, patch_constant(pi_t)))}


def chk_rgd_floor(rng):
    """One exact RGD step from every state dominates the correlation floor."""
    inst = random_spiked(rng, 3, 8)
    R = exact.rgd_kernel(inst)
    pts = R.stationary.points()
    corr = np.abs(pts @ inst.v)
    after = R.dense() @ corr
    consts = exact.DecompositionConstants.from_spectral_margin(inst.kappa)
    floors = {}
    worst = 0.0
    for k, r in enumerate(np.round(corr, 12)):
        if r not in floors:
            floors[r] = consts.rgd_floor(float(r), inst.lam, inst.n)
        worst = max(worst, floors[r] - after[k])
    return {"rgd_step_correlation_floor": worst}


def chk_tilted_curve(rng):
    inst = random_spiked(rng, 3, 10)
    consts = exact.DecompositionConstants.from_spectral_margin(inst.kappa)
    curve = exact.tilted_mean_curve(IsingModel(inst.W), inst.v, float(rng.uniform(1.0, 20.0)),
                                    grid=25, constants=consts)
    floor = float(np.max(curve.floor - curve.mean_abs_corr))
    mono = float(max(0.0, -np.min(np.diff(curve.mean_corr))))
    return {"tilted_correlation_floor": max(0.0, floor, mono),
            "tilt_derivative_is_variance": curve.derivative_error}


def local_stationarity_fraction(rng, eps: float, delta: float, n: int = 6, grid: int = 100) -> float:
    """Fraction of midpoint grid times on ``[0, T]`` at which the chain started
    from a random point mass is ``eps``-locally stationary,
    ``T = log(1/pi_min) / (delta eps)``."""
    model = random_sparse_ising(n, int(rng.integers(1 << 62)), density=rng.uniform(0.3, 1.0),
                                scale=rng.uniform(0.1, 1.5), field_scale=rng.uniform(0.0, 1.0))
    K = exact.glauber_kernel(model)
    pi = K.stationary.probs
    nu0 = np.zeros(pi.size)
    nu0[int(rng.integers(pi.size))] = 1.0
    T = math.log(1.0 / float(pi.min())) / (delta * eps)
    return exact.ls_fraction(K, nu0, T, eps, grid)


def chk_local_stationarity(rng):
    out = {}
    for eps, delta in LOCAL_STATIONARITY_PAIRS:
        frac = local_stationarity_fraction(rng, eps, delta)
        out[f"local_stationarity_eps{eps:g}_delta{delta:g}"] = max(0.0, (1.0 - delta) - frac)
    return out


LOCAL_STATIONARITY_PAIRS = ((0.1, 0.2), (0.01, 0.5))


def info_rgd_ratio(rng):
    """Ratio of RGD to Glauber entropy dissipation for a random density."""
    inst = random_spiked(rng, 3, 6)
    R = exact.rgd_kernel(inst)
    G = exact.glauber_kernel(IsingModel(inst.M))
    pi = R.stationary.probs
    f = random_density(rng, pi) / pi
    return exact.entropy_dissipation(R, pi, f) / exact.entropy_dissipation(G, pi, f)


# name -> tolerance; order is the report order
CHECKS = {
    "detailed_balance": TOL_EXACT,
    "stationarity": TOL_EXACT,
    "rgd_reversibility_quadrature": 1e-6,
    "negative_control_corrupted_kernel": 0.0,
    "time_average_dissipation_as_stated": 1e-10,
    "time_average_dissipation_half_form": 1e-10,
    "kl_derivative_as_stated": 1e-3,
    "kl_derivative_half_form": 1e-3,
    "dirichlet_kl_tv_chain": TOL_EXACT,
    "skl_bound": TOL_EXACT,
    "hellinger_le_kl": TOL_EXACT,
    "mixture_dirichlet_dominance": TOL_EXACT,
    "one_step_drift": TOL_EXACT,
    "density_ratio_concentration": TOL_EXACT,
    "local_patches": TOL_EXACT,
    "rgd_step_correlation_floor": 1e-9,
    "tilted_correlation_floor": 1e-12,
    "tilt_derivative_is_variance": 1e-6,
    "local_stationarity_eps0.1_delta0.2": 0.0,
    "local_stationarity_eps0.01_delta0.5": 0.0,
}

# checks that are known to fail because of the missing factor 1/2
EXPECTED_FAILURES = ("time_average_dissipation_as_stated", "kl_derivative_as_stated")

SUITE = (chk_kernel_identities, chk_negative_control, chk_time_average, chk_kl_derivative,
         chk_dirichlet_kl_tv, chk_divergence_pairs, chk_mixture_dominance, chk_one_step,
         chk_local_patches, chk_rgd_floor, chk_tilted_curve, chk_local_stationarity)


def run_suite(seed: int, instances: int, suite=SUITE) -> list:
    worst = {}
    counts = {}
    for fn in suite:
        for k in range(instances):
            res = fn(stream(seed, "oracle", fn.__name__, k))
            for name, value in res.items():
                worst[name] = max(worst.get(name, 0.0), float(value))
                counts[name] = counts.get(name, 0) + 1
    rows = []
    for name, tol in CHECKS.items():
        if name not in worst:
            continue
        rows.append({"check": name, "instances": counts[name], "worst_residual": worst[name],
                     "tolerance": tol, "pass": bool(worst[name] <= tol),
                     "expected_failure": name in EXPECTED_FAILURES})
    return rows


def exp_oracle(cfg: ExperimentConfig):
    cfg = cfg.resolved()
    rows = run_suite(cfg.seed, int(cfg.instances))
    ratios = [info_rgd_ratio(stream(cfg.seed, "oracle", "info_rgd_ratio", k))
              for k in range(min(int(cfg.instances), 50))]
    info = {"rgd_to_glauber_dirichlet_ratio": {"min": float(np.min(ratios)),
                                               "median": float(np.median(ratios)),
                                               "max": float(np.max(ratios)),
                                               "instances": len(ratios)}}
    checks = [{"name": r["check"], "value": r["worst_residual"], "threshold": r["tolerance"],
               "op": "<=", "pass": r["pass"]} for r in rows]
    report = {"scenario": "oracle", "seed": cfg.seed, "config": cfg.to_dict(),
              "results": {"suite": rows, "info": info}, "checks": checks,
              "pass": all(r["pass"] for r in rows)}
    return report, {}
