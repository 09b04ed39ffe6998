import math

import numpy as np
import pytest
from scipy import stats

from locstat import _kernels, chains, diagnostics, exact, models
from locstat.chains import HardcoreState, IsingState, CompiledIsing
from locstat.models import Graph, IsingModel, InteractionOperator


def state_code_spec(n):
    # custom_linear with weights 2^i over +-1 spins: code = (obs + 2^n - 1) / 2
    return diagnostics.custom_linear(2.0 ** np.arange(n), "code")


def codes_from_series(series, n):
    return np.rint((series + 2**n - 1) / 2).astype(np.int64)


def binomial_ok(hits, trials, p):
    return abs(hits - trials * p) <= 4 * math.sqrt(trials * p * (1 - p))


# --- hardcore -----------------------------------------------------------------


def test_isolated_vertex_enters_half_the_time():
    g = Graph.from_edges(1, [])
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(20000):
        s = chains.hardcore_step(g, HardcoreState.empty(g), rng)
        hits += s.size
    assert binomial_ok(hits, 20000, 0.5)


def test_blocked_vertex_never_enters():
    g = models.star_graph(3)  # centre 0
    rng = np.random.default_rng(1)
    for _ in range(5000):
        s = HardcoreState.from_set(g, [1])
        chains.hardcore_step(g, s, rng)
        assert s.occ[0] == 0
        s.check(g)


def test_independence_kept_after_every_step():
    g = models.gen_triangle_free(30, 0.2, seed=4)
    s = HardcoreState.empty(g)
    rng = np.random.default_rng(2)
    for _ in range(3000):
        chains.hardcore_step(g, s, rng)
        s.check(g)


def test_k2_long_run_uniform():
    g = models.complete_graph(2)
    spec = diagnostics.custom_linear([1.0, 2.0], "code")
    traj = chains.run_chain(g, steps=200_000, seed=3, observables=[spec])
    freq = np.bincount(traj.series["code"].astype(int), minlength=4)[:3] / traj.steps.size
    assert 0.5 * np.abs(freq - 1 / 3).sum() <= 0.01


def test_hardcore_chain_matches_exact_measure():
    g = Graph.from_edges(8, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (6, 7)])
    traj = chains.run_chain(g, steps=1_000_000, seed=5, observables=["set_size"], stride=4)
    ref = exact.uniform_indepset_expected_size(g)
    assert abs(traj.series["set_size"].mean() - ref) / ref < 0.01


# --- Ising --------------------------------------------------------------------


def test_flip_probability_values():
    assert _kernels.flip_probability(0.0) == 0.5
    assert _kernels.flip_probability(1e6) == 0.0
    assert _kernels.flip_probability(-1e6) == 1.0
    # argument is 2 x_i (m_i + h_i)
    for a in (-3.0, -0.2, 0.7, 5.0):
        assert abs(_kernels.flip_probability(2 * a) - 1 / (1 + math.exp(2 * a))) < 1e-15


def test_zero_model_flips_half_the_time():
    n = 5
    model = IsingModel(InteractionOperator(n))
    rng = np.random.default_rng(6)
    comp = CompiledIsing.build(model)
    x0 = np.ones(n)
    flips = 0
    for _ in range(20000):
        s = IsingState.from_spins(comp, x0)
        chains.glauber_step_ising(comp, s, rng)
        flips += int(np.any(s.x != x0))
    assert binomial_ok(flips, 20000, 0.5)


def test_strong_field_drives_spin_up():
    model = IsingModel(InteractionOperator(1), np.array([50.0]))
    s = IsingState.from_spins(CompiledIsing.build(model), [-1.0])
    chains.glauber_step_ising(model, s, np.random.default_rng(0))
    assert s.x[0] == 1.0


def test_ising_chain_matches_exact_measure():
    n = 10
    model = models.random_sparse_ising(n, seed=2)
    table = exact.enumerate_measure(model)
    traj = chains.run_chain(model, steps=5_000_000, seed=7, observables=[state_code_spec(n)], stride=5)
    codes = codes_from_series(traj.series["code"][traj.steps.size // 10:], n)
    emp = np.bincount(codes, minlength=2**n) / codes.size
    ref = np.zeros(2**n)
    ref[table.states] = table.probs
    assert 0.5 * np.abs(emp - ref).sum() <= 0.02


@pytest.mark.parametrize("kind", ["ising", "hardcore"])
def test_one_step_matches_exact_row(kind):
    trials = 100_000
    rng = np.random.default_rng(11)
    if kind == "ising":
        n = 6
        model = models.random_sparse_ising(n, seed=3)
        K = exact.glauber_kernel(model)
        table = K.stationary
        start = 0b101100
        comp = CompiledIsing.build(model)
        x0 = 2.0 * ((start >> np.arange(n)) & 1) - 1.0
        counts = np.zeros(table.size)
        index = table.index_map()
        for _ in range(trials):
            s = IsingState.from_spins(comp, x0)
            chains.glauber_step_ising(comp, s, rng)
            counts[index[int(((s.x > 0) * 2 ** np.arange(n)).sum())]] += 1
    else:
        g = models.cycle_graph(6)
        K = exact.glauber_kernel(g)
        table = K.stationary
        n = 6
        start = 0b000101
        index = table.index_map()
        counts = np.zeros(table.size)
        for _ in range(trials):
            s = HardcoreState.from_set(g, np.flatnonzero((start >> np.arange(n)) & 1))
            chains.hardcore_step(g, s, rng)
            counts[index[int((s.occ * 2 ** np.arange(n)).sum())]] += 1
    row = K.dense()[index[start]]
    sd = np.sqrt(trials * row * (1 - row))
    assert np.all(np.abs(counts - trials * row) <= 3 * sd + 1e-9)


def test_cache_drift_after_long_run():
    n = 40
    inst = models.gen_spiked_wigner(n, 4.0, 0.25, seed=1)
    model = inst.model()
    comp = CompiledIsing.build(model.with_field(np.random.default_rng(0).normal(size=n)))
    s = IsingState.from_spins(comp, np.ones(n))
    rng = np.random.default_rng(8)
    sites = rng.integers(0, n, size=1_000_000)
    unif = rng.random(1_000_000)
    _kernels.ising_run(s.x, s.field, s.r, comp.indptr, comp.indices, comp.data, comp.dense, comp.coefs,
                       comp.U, comp.h, sites, unif, np.zeros((0, n)), np.zeros(0), chains._NEVER,
                       np.int64(0), np.zeros((0, 0)), np.zeros(1, dtype=np.int64))
    assert s.drift(comp) <= 1e-6


def test_poisson_step_counts():
    T = 30.0
    counts = np.array([chains.run_chain(models.cycle_graph(4), time=T, seed=s).step_count for s in range(400)])
    edges = np.arange(int(T - 3 * math.sqrt(T)), int(T + 3 * math.sqrt(T)) + 1)
    cdf = stats.poisson.cdf(edges, T)
    probs = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    obs = np.bincount(np.searchsorted(edges, counts, side="left"), minlength=probs.size)
    chi2 = ((obs - 400 * probs) ** 2 / (400 * probs)).sum()
    assert stats.chi2.sf(chi2, probs.size - 1) > 1e-3
    assert abs(counts.mean() - T) <= 4 * math.sqrt(T / 400)


# --- run_chain contract -------------------------------------------------------------


def test_zero_steps_records_only_initial_state():
    g = models.cycle_graph(5)
    traj = chains.run_chain(g, steps=0, observables=["set_size"])
    assert traj.steps.tolist() == [0] and traj.series["set_size"].tolist() == [0.0]


def test_recording_grid():
    traj = chains.run_chain(models.cycle_graph(5), steps=1001, stride=10, observables=["set_size"])
    assert traj.steps.size == 101 and traj.steps[-1] == 1000


def test_same_seed_same_series():
    model = models.random_sparse_ising(12, seed=4)
    spec = diagnostics.abs_correlation(np.ones(12))
    a = chains.run_chain(model, steps=250_000, seed=9, observables=[spec], stride=3)
    b = chains.run_chain(model, steps=250_000, seed=9, observables=[spec], stride=3)
    c = chains.run_chain(model, steps=250_000, seed=10, observables=[spec], stride=3)
    assert np.array_equal(a.series["abs_corr"], b.series["abs_corr"])
    assert np.array_equal(a.final_state, b.final_state)
    assert not np.array_equal(a.series["abs_corr"], c.series["abs_corr"])


def test_recorded_observable_matches_final_state():
    model = models.random_sparse_ising(15, seed=5)
    v = np.random.default_rng(1).normal(size=15)
    traj = chains.run_chain(model, steps=123_457, stride=1, observables=[diagnostics.custom_linear(v, "lin")])
    assert abs(traj.final("lin") - v @ traj.final_state) < 1e-9


def test_bad_arguments():
    g = models.cycle_graph(4)
    with pytest.raises(diagnostics.UnknownObservable):
        chains.run_chain(g, steps=10, observables=["magnetisation"])
    with pytest.raises(ValueError):
        chains.run_chain(g, steps=10, time=1.0)
    with pytest.raises(ValueError):
        chains.run_chain(g)
    with pytest.raises(ValueError):
        chains.run_chain(g, steps=-1)


def test_write_csv(tmp_path):
    traj = chains.run_chain(models.cycle_graph(6), steps=20, stride=5, observables=["set_size", "score_average"])
    path = tmp_path / "t.csv"
    traj.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,set_size,score_average"
    assert len(lines) == 6 and lines[-1].startswith("20,")


# --- RGD ----------------------------------------------------------------------


def test_rgd_zero_signal_gives_zero_field():
    inst = models.gen_spiked_wigner(8, 0.0, 0.25, seed=0)
    step, x = chains.rgd_step(np.ones(8), inst, inner_updates=50, rng=np.random.default_rng(0))
    assert step.z_scalar == 0.0
    assert np.all(step.field(inst.v) == 0.0)
    assert set(np.unique(x)) <= {-1.0, 1.0}


def test_rgd_field_parallel_to_spike():
    inst = models.gen_spiked_wigner(10, 3.0, 0.25, seed=1)
    rng = np.random.default_rng(2)
    x = rng.choice([-1.0, 1.0], 10)
    for _ in range(20):
        step, x = chains.rgd_step(x, inst, inner_updates=30, rng=rng)
        z = step.field(inst.v)
        assert np.linalg.matrix_rank(np.stack([z, inst.v])) <= 1
        assert math.isfinite(step.z_scalar)


def test_rgd_scalar_formula():
    inst = models.gen_spiked_wigner(6, 2.0, 0.3, seed=3)
    x = np.array([1.0, -1.0, 1.0, 1.0, -1.0, 1.0])
    step, _ = chains.rgd_step(x, inst, inner_updates=1, rng=np.random.default_rng(4))
    assert abs(step.z_scalar - (2.0 * inst.v @ x + math.sqrt(2.0) * step.g)) < 1e-14


def test_rgd_default_inner_updates():
    assert chains.default_inner_updates(100) == math.ceil(2000 * math.log(100))
    inst = models.gen_spiked_wigner(5, 1.0, 0.25, seed=0)
    step, _ = chains.rgd_step(np.ones(5), inst, rng=np.random.default_rng(0))
    assert step.inner_updates == chains.default_inner_updates(5)
    with pytest.raises(ValueError):
        chains.rgd_step(np.ones(5), inst, inner_updates=0, rng=np.random.default_rng(0))


def test_rgd_exact_mode_matches_kernel_row():
    n = 4
    inst = models.gen_spiked_wigner(n, 2.0, 0.25, seed=5)
    K = exact.rgd_kernel(inst)
    index = K.stationary.index_map()
    start = 0b0110
    x0 = 2.0 * ((start >> np.arange(n)) & 1) - 1.0
    rng = np.random.default_rng(6)
    trials = 40_000
    counts = np.zeros(K.size)
    for _ in range(trials):
        _, x = chains.rgd_step(x0, inst, rng=rng, exact=True)
        counts[index[int(((x > 0) * 2 ** np.arange(n)).sum())]] += 1
    row = K.dense()[index[start]]
    assert np.all(np.abs(counts - trials * row) <= 4 * np.sqrt(trials * row * (1 - row)) + 1e-9)
