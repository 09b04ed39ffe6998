import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from locstat import exact, models
from locstat.models import Graph, InstanceError, InteractionOperator


def brute_triangle_free(graph: Graph) -> bool:
    a = graph.adjacency().toarray()
    return np.trace(a @ a @ a) == 0


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


# --- graphs -----------------------------------------------------------------


def test_triangle_free_examples():
    assert models.validate_triangle_free(Graph.from_edges(5, []))
    assert not models.validate_triangle_free(models.complete_graph(3))
    assert models.validate_triangle_free(models.cycle_graph(5))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 14), st.floats(0.0, 1.0), st.integers(0, 2**32))
def test_triangle_free_matches_trace(n, p, seed):
    g = random_graph(n, p, seed)
    assert models.validate_triangle_free(g) == brute_triangle_free(g)
    tri = models.find_triangle(g)
    if tri is not None:
        a, b, c = tri
        adj = g.adjacency().toarray()
        assert adj[a, b] and adj[b, c] and adj[a, c]


def test_graph_rejects_loops_and_duplicates():
    with pytest.raises(InstanceError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(InstanceError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(InstanceError):
        Graph.from_edges(3, [(0, 5)])


def test_graph_invariants_on_random_graphs():
    for seed in range(20):
        g = random_graph(30, 0.2, seed)
        g.check()
        a = g.adjacency().toarray()
        assert np.array_equal(a, a.T)
        assert g.max_degree == int(a.sum(axis=1).max())


def test_bipartite_regular_matching():
    g = models.gen_bipartite_regular(4, 1, seed=3)
    assert g.num_edges == 2
    assert np.all(g.degrees == 1)
    assert models.validate_triangle_free(g)


def test_bipartite_regular_degrees_and_sides():
    g = models.gen_bipartite_regular(200, 16, seed=11)
    g.check()
    assert np.all(g.degrees == 16)
    assert brute_triangle_free(g)
    e = g.edges()
    assert np.all((e[:, 0] < 100) != (e[:, 1] < 100))


def test_bipartite_regular_deterministic():
    a = models.gen_bipartite_regular(60, 5, seed=9)
    b = models.gen_bipartite_regular(60, 5, seed=9)
    c = models.gen_bipartite_regular(60, 5, seed=10)
    assert np.array_equal(a.edges(), b.edges())
    assert not np.array_equal(a.edges(), c.edges())


@pytest.mark.parametrize("n,d", [(5, 1), (10, 6), (0, 1)])
def test_bipartite_regular_rejects_bad_params(n, d):
    with pytest.raises(InstanceError):
        models.gen_bipartite_regular(n, d, seed=0)


def test_triangle_free_generator():
    for seed in range(10):
        g = models.gen_triangle_free(16, 0.4, seed)
        assert brute_triangle_free(g)


def test_edge_list_round_trip(tmp_path):
    g = models.gen_bipartite_regular(20, 3, seed=1)
    path = tmp_path / "g.edges"
    models.write_edge_list(g, path)
    h = models.read_edge_list(path)
    assert h.n == g.n and np.array_equal(h.edges(), g.edges())
    path.write_text("# n=6\n# comment\n0 1\n\n2 3\n")
    h = models.read_edge_list(path)
    assert h.n == 6 and h.num_edges == 2
    path.write_text("0 1 2\n")
    with pytest.raises(InstanceError):
        models.read_edge_list(path)


# --- SBM ----------------------------------------------------------------------


def test_sbm_null_mean_degree():
    n, d = 400, 10.0
    means = [2 * models.sample_sbm(n, d, 0.0, s).graph.num_edges / n for s in range(50)]
    pairs = n * (n - 1) / 2
    p = d / n
    expected = 2 * pairs * p / n
    sd = 2 * math.sqrt(pairs * p * (1 - p)) / n / math.sqrt(50)
    assert abs(np.mean(means) - expected) <= 3 * sd


def test_sbm_no_cross_edges_at_max_signal():
    inst = models.sample_sbm(300, 9.0, 3.0, seed=2)
    e = inst.graph.edges()
    assert np.all(inst.sigma[e[:, 0]] == inst.sigma[e[:, 1]])


def test_sbm_within_frequency():
    n, d, lam = 2000, 40.0, 4.0
    inst = models.sample_sbm(n, d, lam, seed=5)
    e = inst.graph.edges()
    same = inst.sigma[e[:, 0]] == inst.sigma[e[:, 1]]
    k = int((inst.sigma > 0).sum())
    pairs = k * (k - 1) / 2 + (n - k) * (n - k - 1) / 2
    p = (d + lam * math.sqrt(d)) / n
    sd = math.sqrt(pairs * p * (1 - p))
    assert abs(same.sum() - pairs * p) <= 3 * sd
    cross = k * (n - k)
    q = (d - lam * math.sqrt(d)) / n
    assert abs((~same).sum() - cross * q) <= 3 * math.sqrt(cross * q * (1 - q))


def test_sbm_rejects_bad_params():
    with pytest.raises(InstanceError):
        models.sample_sbm(100, 4.0, 3.0, seed=0)
    with pytest.raises(InstanceError):
        models.sample_sbm(10, 20.0, 0.0, seed=0)


def test_sbm_spike_vector():
    inst = models.sample_sbm(50, 5.0, 1.0, seed=0)
    assert np.allclose(inst.spike, inst.sigma / math.sqrt(50))
    assert abs(np.linalg.norm(inst.spike) - 1) < 1e-12


def test_centered_adjacency_regular_rows_vanish():
    g = models.gen_bipartite_regular(40, 6, seed=4)
    inst = models.SbmInstance(np.ones(40), g, 6.0, 0.0)
    J = models.centered_adjacency(inst)
    assert np.allclose(J.apply(np.ones(40)), 0.0, atol=1e-12)


def test_centered_adjacency_applied_to_ones():
    inst = models.sample_sbm(80, 6.0, 1.0, seed=3)
    J = models.centered_adjacency(inst)
    assert np.allclose(J.apply(np.ones(80)), inst.graph.degrees - 6.0, atol=1e-12)


def test_centered_adjacency_quadratic_vs_dense():
    inst = models.sample_sbm(50, 5.0, 1.0, seed=7)
    J = models.centered_adjacency(inst)
    dense = inst.graph.adjacency().toarray() - 5.0 / 50 * np.ones((50, 50))
    x = np.random.default_rng(0).choice([-1.0, 1.0], 50)
    ref = x @ dense @ x
    assert abs(J.quadratic(x) - ref) <= 1e-12 * max(1.0, abs(ref))


# --- operators ----------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2**32), st.integers(0, 3), st.booleans())
def test_operator_apply_matches_dense(n, seed, k, with_dense):
    rng = np.random.default_rng(seed)
    a = sp.random(n, n, density=min(1.0, 5 / n), random_state=rng)
    terms = tuple((float(rng.normal()), rng.normal(size=n)) for _ in range(k))
    dense = None
    if with_dense:
        b = rng.normal(size=(n, n))
        dense = b + b.T
    J = InteractionOperator(n, a + a.T, terms, dense)
    ref = (a + a.T).toarray() + sum(c * np.outer(u, u) for c, u in terms) + (0 if dense is None else dense)
    x = rng.normal(size=n)
    got = J.apply(x)
    want = ref @ x
    assert np.linalg.norm(got - want) <= 1e-12 * max(1.0, np.linalg.norm(want))
    assert np.allclose(J.to_dense(), ref, atol=1e-12)
    assert np.allclose(J.diagonal(), np.diag(ref), atol=1e-12)


def test_operator_rejects_asymmetric():
    with pytest.raises(InstanceError):
        InteractionOperator(2, sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]])))
    with pytest.raises(InstanceError):
        InteractionOperator(2, dense=np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_local_field_ignores_diagonal():
    rng = np.random.default_rng(1)
    b = rng.normal(size=(6, 6))
    J = InteractionOperator(6, dense=b + b.T)
    m = models.IsingModel(J)
    x = rng.choice([-1.0, 1.0], 6)
    off = (b + b.T) - np.diag(np.diag(b + b.T))
    assert np.allclose(m.local_field(x), off @ x)


def test_operator_json_round_trip():
    rng = np.random.default_rng(2)
    a = sp.random(8, 8, density=0.3, random_state=rng)
    J = InteractionOperator(8, a + a.T, ((0.5, rng.normal(size=8)),), np.eye(8))
    K = InteractionOperator.from_json(J.to_json())
    assert np.allclose(J.to_dense(), K.to_dense())


# --- spiked Wigner --------------------------------------------------------------


def test_spiked_spectrum_and_spike():
    inst = models.gen_spiked_wigner(120, 5.0, 0.2, seed=3)
    ev = np.linalg.eigvalsh(inst.W.to_dense())
    assert ev.min() >= 0.2 - 1e-9 and ev.max() <= 0.8 + 1e-9
    assert np.allclose(np.abs(inst.v), 1 / math.sqrt(120))
    assert abs(np.linalg.norm(inst.v) - 1) < 1e-12
    diff = inst.M.to_dense() - 5.0 * np.outer(inst.v, inst.v) - inst.W.to_dense()
    assert np.abs(diff).max() <= 1e-12


@pytest.mark.parametrize("kappa", [0.0, 0.5, 0.7])
def test_spiked_rejects_bad_kappa(kappa):
    with pytest.raises(InstanceError):
        models.gen_spiked_wigner(10, 1.0, kappa, seed=0)


# --- Curie-Weiss ------------------------------------------------------------------


def test_curie_weiss_single_spin_uniform():
    t = exact.enumerate_measure(models.curie_weiss(1, 2.0))
    assert np.allclose(t.probs, 0.5)


def test_curie_weiss_beta_zero_uniform():
    t = exact.enumerate_measure(models.curie_weiss(6, 0.0))
    assert np.allclose(t.probs, 1 / 64)


def test_curie_weiss_magnetization():
    t = exact.enumerate_measure(models.curie_weiss(10, 3.0))
    mag = t.points().sum(axis=1)
    assert abs(t.expect(mag)) < 1e-12
    assert t.expect(np.abs(mag)) / 10 > 0.8


# --- instance files ---------------------------------------------------------------


@pytest.mark.parametrize("make", [
    lambda: models.gen_bipartite_regular(10, 2, seed=0),
    lambda: models.random_sparse_ising(5, seed=1),
    lambda: models.gen_spiked_wigner(6, 2.0, 0.3, seed=2),
    lambda: models.sample_sbm(30, 4.0, 1.0, seed=3),
])
def test_dump_load_round_trip(tmp_path, make):
    obj = make()
    path = tmp_path / "inst.json"
    models.dump_instance(obj, path)
    back = models.load_instance(path)
    assert type(back) is type(obj)
    if isinstance(obj, Graph):
        assert np.array_equal(back.edges(), obj.edges())
    elif isinstance(obj, models.IsingModel):
        assert np.allclose(back.J.to_dense(), obj.J.to_dense()) and np.allclose(back.h, obj.h)
    elif isinstance(obj, models.SpikedInstance):
        assert np.allclose(back.M.to_dense(), obj.M.to_dense())
    else:
        assert np.array_equal(back.graph.edges(), obj.graph.edges())
        assert np.array_equal(back.sigma, obj.sigma)
