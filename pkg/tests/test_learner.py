import numpy as np
import pytest

from reslearn.graphs import (
    WeightedGraph,
    build_laplacian,
    grid_graph,
    is_connected,
)
from reslearn.learner import (
    LearnConfig,
    edge_scale,
    init_graph,
    learn,
    perturbation_estimate,
    score_candidates,
)
from reslearn.measurements import (
    generate_currents,
    generate_measurement_set,
    simulate_voltages,
    subsample_nodes,
)
from reslearn.metrics import resistance_correlation
from reslearn.spectral import SpectralBasis, build_embedding, eigensolve_smallest

from _oracles import dense_eigenpairs, random_connected_graph


class TestInitGraph:
    def test_three_point_line(self):
        # rows at mutual squared distances 1, 4, 9 on a line
        X = np.array([[0.0], [1.0], [3.0]])
        g_o, tree = init_graph(X, k=1)
        assert [(s, t) for s, t, _ in g_o.edge_list()] == [(0, 1), (1, 2)]
        assert tree.edge_list() == g_o.edge_list()

    def test_weight_formula(self):
        # z_data = 4 with M = 50 columns gives weight 12.5
        X = np.zeros((2, 50))
        X[1, 0] = 2.0
        g_o, _ = init_graph(X, k=1)
        assert g_o.edge_list() == [(0, 1, 12.5)]

    def test_two_node_truth(self):
        g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
        ms = generate_measurement_set(g, 5, seed=0)
        g_o, tree = init_graph(ms.X, k=5)
        assert g_o.edge_count == 1
        assert tree.edge_list() == g_o.edge_list()

    def test_degenerate_rows_rejected(self):
        with pytest.raises(ValueError):
            init_graph(np.ones((5, 3)), k=2)

    def test_connectivity_repair_bridges_closest_pair(self):
        # two tight clusters far apart; k=1 keeps each cluster internal
        X = np.array([[0.0], [0.1], [10.0], [10.12]])
        g_o, tree = init_graph(X, k=1)
        assert is_connected(g_o)[0]
        # the bridge must be the closest inter-cluster pair (1, 2)
        assert (1, 2) in {(s, t) for s, t, _ in g_o.edge_list()}
        assert tree.edge_count == 3

    def test_duplicate_rows_get_floored_weight(self):
        X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        g_o, _ = init_graph(X, k=2)
        assert np.all(np.isfinite(g_o.weights))
        assert all(w > 0 for _, _, w in g_o.edge_list())


class TestScoreCandidates:
    def test_fixed_point_zero_sensitivity(self):
        # weight equal to M / z_data makes the edge's sensitivity vanish
        m = 4
        z_data = 0.8
        w = m / z_data
        g = WeightedGraph.from_edges(2, [(0, 1, w)])
        a = np.sqrt(z_data / (4 * m))
        X = np.tile([[a], [-a]], (1, m))  # each column [a, -a]
        basis = build_embedding(
            eigensolve_smallest(build_laplacian(g), 1), 0.0)
        cand = score_candidates(basis, X, [(0, 1)])[0]
        assert cand.z_data == pytest.approx(z_data)
        assert cand.z_emb == pytest.approx(1.0 / w)
        assert cand.sensitivity == pytest.approx(0.0, abs=1e-12)
        assert cand.distortion == pytest.approx(1.0)

    def test_arithmetic_from_definitions(self):
        # z_emb = 0.5, z_data = 10, M = 50 -> sensitivity 0.3, distortion 2.5
        emb = np.array([[np.sqrt(0.5)], [0.0]])
        basis = SpectralBasis(eigenvalues=np.array([1.0]),
                              eigenvectors=emb / np.linalg.norm(emb, axis=0),
                              inverse_variance=0.0, embedding=emb)
        X = np.zeros((2, 50))
        X[0, 0] = np.sqrt(10.0)
        cand = score_candidates(basis, X, [(0, 1)])[0]
        assert cand.sensitivity == pytest.approx(0.3)
        assert cand.distortion == pytest.approx(2.5)

    def test_consistency_invariant(self):
        g = random_connected_graph(12, 14, seed=0)
        ms = generate_measurement_set(g, 8, seed=1)
        basis = build_embedding(
            eigensolve_smallest(build_laplacian(g), 4), 0.0)
        pairs = [(0, 5), (2, 9), (3, 4)]
        for cand in score_candidates(basis, ms.X, pairs):
            if cand.z_data > 0:
                assert cand.sensitivity == pytest.approx(
                    (cand.z_data / ms.X.shape[1]) * (cand.distortion - 1.0),
                    rel=1e-12)

    def test_sensitivity_underestimates_with_fewer_modes(self):
        g = random_connected_graph(20, 25, seed=3)
        ms = generate_measurement_set(g, 8, seed=3)
        lap = build_laplacian(g)
        pairs = [(0, 11), (4, 17), (2, 9)]
        prev = np.full(len(pairs), -np.inf)
        for modes in (2, 5, 10, 19):  # 19 = full spectrum
            basis = build_embedding(eigensolve_smallest(lap, modes), 0.0)
            scored = {(c.s, c.t): c.sensitivity
                      for c in score_candidates(basis, ms.X, pairs)}
            sens = np.asarray([scored[p] for p in pairs])
            assert np.all(sens >= prev - 1e-12)
            prev = sens

    def test_sorted_descending_with_tie_break(self):
        g = random_connected_graph(10, 10, seed=2)
        ms = generate_measurement_set(g, 5, seed=2)
        basis = build_embedding(
            eigensolve_smallest(build_laplacian(g), 3), 0.0)
        pairs = [(s, t) for s in range(10) for t in range(s + 1, 10)]
        scored = score_candidates(basis, ms.X, pairs)
        sens = [c.sensitivity for c in scored]
        assert sens == sorted(sens, reverse=True)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_finite_difference_gradient(self, seed):
        # full-spectrum sensitivity of a zero-weight candidate equals the
        # derivative of the objective at w -> 0+
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 16))
        g = random_connected_graph(n, 3, seed=seed)
        existing = set(zip(g.sources.tolist(), g.targets.tolist()))
        candidates = [(s, t) for s in range(n) for t in range(s + 1, n)
                      if (s, t) not in existing]
        s, t = candidates[int(rng.integers(len(candidates)))]
        m = 6
        Y = generate_currents(n, m, seed=seed)
        X = simulate_voltages(g, Y)
        basis = build_embedding(
            eigensolve_smallest(build_laplacian(g), n - 1, method="dense"),
            0.0)
        cand = score_candidates(basis, X, [(s, t)])[0]

        vals, _ = dense_eigenpairs(g)
        e = np.zeros(n)
        e[s], e[t] = 1.0, -1.0
        h = 1e-6

        def objective(delta):
            L = build_laplacian(g).matrix.toarray() + delta * np.outer(e, e)
            lam = np.linalg.eigvalsh(L)[1:]
            return float(np.log(lam).sum()
                         - np.einsum("ij,ij->", L @ X, X) / m)

        fd = (objective(h) - objective(-h)) / (2 * h)
        assert cand.sensitivity == pytest.approx(fd, rel=1e-4)


class TestPerturbationEstimate:
    def test_constant_on_endpoints(self):
        u = np.full(4, 0.5)
        assert perturbation_estimate(u, 1.0, 0.3, 0, 2) == 0.0

    def test_two_node_exact(self):
        u = np.array([1.0, -1.0]) / np.sqrt(2)
        est = perturbation_estimate(u, 2.0, 0.1, 0, 1)
        assert est == pytest.approx(0.2)
        # the rank-one update scales the whole Laplacian: new eigenvalue 2.2
        g = WeightedGraph.from_edges(2, [(0, 1, 1.1)])
        lam = eigensolve_smallest(build_laplacian(g), 1).eigenvalues[0]
        assert lam == pytest.approx(2.0 + est)

    def test_matches_dense_reeigensolve(self):
        g = random_connected_graph(50, 101, seed=0)
        vals, vecs = dense_eigenpairs(g)
        rng = np.random.default_rng(0)
        existing = set(zip(g.sources.tolist(), g.targets.tolist()))
        while True:
            s, t = (int(v) for v in rng.integers(0, 50, 2))
            if s != t and (min(s, t), max(s, t)) not in existing:
                s, t = min(s, t), max(s, t)
                break
        dw = 1e-4
        e = np.zeros(50)
        e[s], e[t] = 1.0, -1.0
        vals_after = np.linalg.eigvalsh(
            build_laplacian(g).matrix.toarray() + dw * np.outer(e, e))
        for i in range(1, 6):
            exact = vals_after[i] - vals[i]
            est = perturbation_estimate(vecs[:, i], vals[i], dw, s, t)
            assert est == pytest.approx(exact, rel=0.05)


class TestEdgeScale:
    def test_identity_at_truth(self):
        g = random_connected_graph(12, 10, seed=1)
        ms = generate_measurement_set(g, 6, seed=1)
        scaled = edge_scale(g, ms.X, ms.Y)
        np.testing.assert_allclose(scaled.weights, g.weights, rtol=1e-9)

    def test_restores_doubled_weights(self):
        g = random_connected_graph(10, 8, seed=2)
        ms = generate_measurement_set(g, 5, seed=2)
        restored = edge_scale(g.scaled(2.0), ms.X, ms.Y)
        np.testing.assert_allclose(restored.weights, g.weights, rtol=1e-9)

    @pytest.mark.parametrize("c", [0.1, 0.5, 2.0, 10.0])
    def test_restores_tree_scale(self, c):
        g = random_connected_graph(15, 0, seed=3)  # a tree
        ms = generate_measurement_set(g, 10, seed=3)
        restored = edge_scale(g.scaled(c), ms.X, ms.Y)
        np.testing.assert_allclose(restored.weights, g.weights, rtol=1e-8)

    def test_zero_voltage_column_rejected(self):
        g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
        X = np.zeros((2, 1))
        Y = np.array([[1.0], [-1.0]])
        with pytest.raises(ValueError):
            edge_scale(g, X, Y)


class TestLearn:
    def test_two_node_truth_recovered(self):
        g = WeightedGraph.from_edges(2, [(0, 1, 1.3)])
        ms = generate_measurement_set(g, 5, seed=0)
        learned, trace = learn(ms.X, ms.Y)
        assert learned.edge_count == 1
        s, t, w = learned.edge_list()[0]
        assert (s, t) == (0, 1)
        assert w == pytest.approx(1.3, rel=1e-6)
        assert trace.status == "candidate_pool_exhausted"

    def test_huge_tolerance_keeps_tree(self):
        g = grid_graph(5, 5)
        ms = generate_measurement_set(g, 20, seed=1)
        learned, trace = learn(ms.X, None, LearnConfig(tol=1e6))
        assert trace.status == "converged"
        assert trace.iterations == 1
        assert learned.edge_count == g.node_count - 1

    def test_max_iterations_status(self):
        g = grid_graph(6, 6)
        ms = generate_measurement_set(g, 20, seed=2)
        learned, trace = learn(ms.X, None, LearnConfig(max_iterations=2))
        assert trace.status == "max_iterations"
        assert trace.iterations == 2

    def test_grid_end_to_end_quality(self):
        # 8x8 grid protocol: converged, near-tree density, resistances
        # correlated with the truth (frozen floor from the dense oracle)
        g = grid_graph(8, 8)
        ms = generate_measurement_set(g, 50, seed=0)
        learned, trace = learn(ms.X, ms.Y)
        assert trace.status == "converged"
        assert trace.records[-1].s_max <= 1e-12
        assert learned.edge_count <= 2 * g.node_count
        _, _, _, corr = resistance_correlation(g, learned, 5000, seed=0)
        assert corr >= 0.85

    def test_trace_monotonic_edge_counts(self):
        g = grid_graph(7, 7)
        ms = generate_measurement_set(g, 30, seed=3)
        _, trace = learn(ms.X, ms.Y)
        counts = [r.edge_count for r in trace.records]
        assert counts == sorted(counts)
        assert [r.iteration for r in trace.records] == list(
            range(1, len(counts) + 1))

    def test_determinism(self):
        g = grid_graph(6, 6)
        ms = generate_measurement_set(g, 25, seed=4)
        g1, t1 = learn(ms.X, ms.Y)
        g2, t2 = learn(ms.X, ms.Y)
        assert g1.edge_list() == g2.edge_list()
        assert t1.s_max_history.tolist() == t2.s_max_history.tolist()

    def test_scale_equivariant_topology(self):
        g = grid_graph(6, 6)
        ms = generate_measurement_set(g, 25, seed=5)
        g1, _ = learn(ms.X, None)
        g2, _ = learn(100.0 * ms.X, None)
        assert [(s, t) for s, t, _ in g1.edge_list()] == \
               [(s, t) for s, t, _ in g2.edge_list()]
        np.testing.assert_allclose(g2.weights, g1.weights / 100.0 ** 2,
                                   rtol=1e-9)

    def test_reduced_learning_without_currents(self):
        g = grid_graph(8, 8)
        ms = generate_measurement_set(g, 50, seed=6)
        Xr, kept = subsample_nodes(ms.X, 0.25, seed=6)
        learned, trace = learn(Xr, None)
        assert learned.node_count == 16
        assert is_connected(learned)[0]
        assert trace.status in ("converged", "candidate_pool_exhausted")

    def test_converged_distortion_bound(self):
        # at convergence every remaining candidate has eta bounded via the
        # sensitivity identity
        g = grid_graph(7, 7)
        n = g.node_count
        ms = generate_measurement_set(g, 30, seed=7)
        cfg = LearnConfig()
        learned_scaled, trace = learn(ms.X, ms.Y, cfg)
        assert trace.status == "converged"
        unscaled, _ = learn(ms.X, None, cfg)
        g_o, _ = init_graph(ms.X, cfg.k)
        in_graph = set(zip(unscaled.sources.tolist(),
                           unscaled.targets.tolist()))
        remaining = [(s, t) for s, t, _ in g_o.edge_list()
                     if (s, t) not in in_graph]
        basis = build_embedding(
            eigensolve_smallest(build_laplacian(unscaled), cfg.r - 1), 0.0)
        m = ms.X.shape[1]
        for cand in score_candidates(basis, ms.X, remaining):
            assert cand.distortion <= 1.0 + cfg.tol * m / cand.z_data + 1e-9

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            LearnConfig(k=0)
        with pytest.raises(ValueError):
            LearnConfig(r=1)
        with pytest.raises(ValueError):
            LearnConfig(tol=0.0)
        with pytest.raises(ValueError):
            LearnConfig(beta_sample=0.0)
        with pytest.raises(ValueError):
            LearnConfig(beta_sample=1.5)

    def test_rejects_mismatched_currents(self):
        g = grid_graph(4, 4)
        ms = generate_measurement_set(g, 5, seed=8)
        with pytest.raises(ValueError):
            learn(ms.X, ms.Y[:, :3])
        with pytest.raises(ValueError):
            learn(ms.X, np.ones_like(ms.Y))

    def test_mode_count_capped_at_small_graphs(self):
        # default r = 5 still works on a 3-node truth (modes cap at N - 1)
        g = WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
        ms = generate_measurement_set(g, 4, seed=9)
        learned, trace = learn(ms.X, None, LearnConfig(r=5))
        assert learned.node_count == 3
        assert trace.status in ("converged", "candidate_pool_exhausted")

    def test_objective_recording(self):
        g = grid_graph(5, 5)
        ms = generate_measurement_set(g, 20, seed=10)
        _, trace = learn(ms.X, None,
                         LearnConfig(record_objective=True, objective_k=10))
        assert all(r.objective is not None for r in trace.records)
