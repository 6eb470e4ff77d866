"""Solver step functions: the two-matrix tracking method, the three
baselines, the conservation law, degenerate single-agent reductions, and
the run() driver. Limits (Perron rows, mass vectors, optima) are compared
against the oracles from the weights/objectives modules."""

import numpy as np
import pytest

from digrad.graphs import Digraph, random_strongly_connected, symmetrized
from digrad.objectives import (
    QuadraticObjective,
    centralized_optimum,
    make_classification_data,
    random_quadratics,
    smoothness_constants,
    stacked_gradients,
)
from digrad.solvers import (
    DivergenceError,
    ab_init,
    ab_step,
    doubly_stochastic_step,
    push_sum_init,
    push_sum_step,
    row_stochastic_init,
    row_stochastic_step,
    run,
)
from digrad.weights import (
    column_stochastic,
    metropolis,
    perron_left,
    perron_right,
    row_stochastic,
)

LOOP1 = Digraph.from_edges(1, [(0, 0)])


def scalar_quadratic(n, beta=1.0, target=3.0):
    """n copies of f(x) = beta/2 (x - target)^2."""
    P = np.full((n, 1, 1), beta)
    q = np.full((n, 1), -beta * target)
    return QuadraticObjective(P=P, q=q)


def identity_weights(kind):
    g = LOOP1
    return row_stochastic(g) if kind == "row" else column_stochastic(g)


# ----------------------------------------------------- single-agent exact


def test_single_agent_matches_centralized_gradient_descent():
    # f = (x-3)^2/2, eta = 1/2: iterates are exactly 3 - 3 * 0.5^k
    obj = scalar_quadratic(1)
    A, B = identity_weights("row"), identity_weights("col")
    st = ab_init(obj, np.zeros((1, 1)))
    assert st.y[0, 0] == -3.0
    for k in range(1, 51):
        st = ab_step(st, A, B, 0.5, obj)
        want = 3.0 - 3.0 * 0.5 ** k
        assert abs(st.x[0, 0] - want) <= 1e-14


def test_single_agent_rowstoch_is_gradient_descent():
    obj = scalar_quadratic(1)
    A = identity_weights("row")
    st = row_stochastic_init(obj, np.zeros((1, 1)))
    for k in range(1, 31):
        st = row_stochastic_step(st, A, 0.5, obj)
        assert st.yvec[0, 0] == 1.0
        assert abs(st.x[0, 0] - (3.0 - 3.0 * 0.5 ** k)) <= 1e-14


def test_single_agent_pushsum_is_diminishing_step_descent():
    obj = scalar_quadratic(1)
    B = identity_weights("col")
    st = push_sum_init(obj, np.zeros((1, 1)))
    x = 0.0
    for k in range(30):
        st = push_sum_step(st, B, 1.0, obj)
        eta_k = 1.0 / np.sqrt(k + 1.0)
        x = x - eta_k * (x - 3.0)
        assert st.s[0] == 1.0
        assert st.z[0, 0] == pytest.approx(x, abs=1e-13)


def test_single_agent_doubly_stochastic_is_gradient_descent():
    obj = scalar_quadratic(1)
    W = metropolis(LOOP1)
    st = ab_init(obj, np.zeros((1, 1)))
    for k in range(1, 31):
        st = doubly_stochastic_step(st, W, 0.5, obj)
        assert abs(st.x[0, 0] - (3.0 - 3.0 * 0.5 ** k)) <= 1e-14


# -------------------------------------------------------- initialization


def test_tracker_initialized_to_gradients():
    rng = np.random.default_rng(0)
    obj = random_quadratics(4, 3, seed=rng)
    X0 = rng.standard_normal((4, 3))
    st = ab_init(obj, X0)
    assert np.array_equal(st.y, stacked_gradients(obj, X0))
    assert st.k == 0
    # conservation holds exactly at k = 0 by construction
    assert np.array_equal(st.y.sum(axis=0), st.grads_prev.sum(axis=0))


def test_identical_agents_at_common_optimum_is_fixed_point():
    c = np.array([1.5, -2.0])
    P = np.stack([np.eye(2)] * 3)
    obj = QuadraticObjective(P=P, q=np.stack([-c] * 3))
    g = random_strongly_connected(3, 2, seed=6)
    A, B = row_stochastic(g), column_stochastic(g)
    st = ab_init(obj, np.tile(c, (3, 1)))
    assert np.all(st.y == 0)
    for _ in range(5):
        st = ab_step(st, A, B, 0.3, obj)
        assert np.allclose(st.x, c, atol=1e-15)
        assert np.all(st.y == 0)


# ----------------------------------------------------------- conservation


def test_tracker_column_sums_equal_gradient_sums():
    rng = np.random.default_rng(42)
    for n in (3, 8):
        g = random_strongly_connected(n, n // 2, seed=int(rng.integers(1 << 30)))
        A, B = row_stochastic(g), column_stochastic(g)
        obj = random_quadratics(n, 4, seed=rng)
        st = ab_init(obj, rng.standard_normal((n, 4)))
        for _ in range(200):
            st = ab_step(st, A, B, 0.01, obj)
            lhs = st.y.sum(axis=0)
            rhs = st.grads_prev.sum(axis=0)
            denom = max(np.max(np.abs(rhs)), 1.0)
            assert np.max(np.abs(lhs - rhs)) / denom <= 1e-9


# ------------------------------------------------- doubly-stochastic link


def test_ab_equals_single_matrix_baseline_when_gradients_stay_aligned():
    # With identical local objectives and a consensus start, gradient
    # increments lie in the consensus subspace, where mixing-inside and
    # mixing-outside tracker updates coincide; trajectories match exactly.
    g = Digraph.from_edges(2, [(0, 0), (0, 1), (1, 0), (1, 1)])
    W = metropolis(g)
    c = np.array([0.7, -1.1, 0.4])
    P = np.stack([np.eye(3)] * 2)
    obj = QuadraticObjective(P=P, q=np.stack([-c] * 2))
    x0 = np.tile(np.array([2.0, 0.0, -1.0]), (2, 1))
    sa = ab_init(obj, x0)
    sb = ab_init(obj, x0)
    for _ in range(60):
        sa = ab_step(sa, W, metropolis_as_column(W), 0.2, obj)
        sb = doubly_stochastic_step(sb, W, 0.2, obj)
        assert np.max(np.abs(sa.x - sb.x)) <= 1e-12
        assert np.max(np.abs(sa.y - sb.y)) <= 1e-12


def metropolis_as_column(W):
    # a doubly stochastic matrix is valid under either normalization
    from digrad.weights import WeightKind, WeightMatrix

    return WeightMatrix(WeightKind.COLUMN_STOCHASTIC, W.entries.copy(), W.graph)


def test_doubly_stochastic_converges_on_undirected_ring():
    ring = Digraph.from_edges(
        4,
        [(i, i) for i in range(4)]
        + [(i, (i + 1) % 4) for i in range(4)]
        + [((i + 1) % 4, i) for i in range(4)],
    )
    W = metropolis(ring)
    rng = np.random.default_rng(3)
    obj = random_quadratics(4, 3, seed=rng, spread=5.0)
    xstar = centralized_optimum(obj)
    st = ab_init(obj, np.zeros((4, 3)))
    for _ in range(2000):
        st = doubly_stochastic_step(st, W, 0.05, obj)
    assert np.mean(np.linalg.norm(st.x - xstar, axis=1)) < 1e-10


def test_symmetric_two_node_mean_follows_centralized_descent():
    # W = [[.5,.5],[.5,.5]] preserves means, and for identical unit
    # quadratics the tracker means equal the gradient of the average, so
    # the agent mean is EXACTLY a centralized descent sequence while the
    # consensus gap contracts to zero.
    g = Digraph.from_edges(2, [(0, 0), (0, 1), (1, 0), (1, 1)])
    W = metropolis(g)
    c = np.array([1.0])
    obj = QuadraticObjective(P=np.stack([np.eye(1)] * 2), q=np.stack([-c] * 2))
    st = ab_init(obj, np.array([[4.0], [-2.0]]))
    mean = 1.0  # (4 - 2) / 2
    for _ in range(40):
        st = doubly_stochastic_step(st, W, 0.1, obj)
        mean = mean - 0.1 * (mean - 1.0)
        assert st.x.mean() == pytest.approx(mean, abs=1e-14)
    assert abs(st.x[0, 0] - st.x[1, 0]) < 1e-10  # gap is gone


# ------------------------------------------------- row-stochastic baseline


def test_rowstoch_learns_perron_rows():
    g = random_strongly_connected(5, 4, seed=31)
    A = row_stochastic(g)
    pi = perron_left(A)
    obj = random_quadratics(5, 2, seed=1)
    st = row_stochastic_init(obj, np.zeros((5, 2)))
    for k in range(250):
        st = row_stochastic_step(st, A, 1e-3, obj)
        if st.k >= 200:
            assert np.max(np.abs(st.yvec - pi[None, :])) <= 1e-8


def test_rowstoch_converges_on_seeded_digraph():
    g = random_strongly_connected(8, 6, seed=14)
    A = row_stochastic(g)
    rng = np.random.default_rng(14)
    obj = random_quadratics(8, 3, seed=rng, spread=4.0)
    xstar = centralized_optimum(obj)
    st = row_stochastic_init(obj, np.zeros((8, 3)))
    for _ in range(4000):
        st = row_stochastic_step(st, A, 0.005, obj)
    assert np.mean(np.linalg.norm(st.x - xstar, axis=1)) < 1e-8


# ------------------------------------------------------ push-sum baseline


def test_pushsum_mass_vector_converges_to_scaled_perron():
    g = random_strongly_connected(6, 5, seed=9)
    B = column_stochastic(g)
    pc = perron_right(B)
    obj = random_quadratics(6, 2, seed=2)
    st = push_sum_init(obj, np.zeros((6, 2)))
    for _ in range(400):
        st = push_sum_step(st, B, 1e-6, obj)
    assert np.max(np.abs(st.s - 6 * pc)) <= 1e-8


def test_pushsum_decays_sublinearly_and_slower_than_tracking():
    g = random_strongly_connected(8, 4, seed=20)
    A, B = row_stochastic(g), column_stochastic(g)
    obj = random_quadratics(8, 3, seed=20, spread=5.0)
    xstar = centralized_optimum(obj)

    res_ps = []
    st = push_sum_init(obj, np.zeros((8, 3)))
    for k in range(1, 1501):
        st = push_sum_step(st, B, 1.0, obj)
        res_ps.append(np.mean(np.linalg.norm(st.z - xstar, axis=1)))

    sab = ab_init(obj, np.zeros((8, 3)))
    for _ in range(1500):
        sab = ab_step(sab, A, B, 0.05, obj)
    res_ab = np.mean(np.linalg.norm(sab.x - xstar, axis=1))

    # log-log slope in the sublinear O(1/sqrt k) regime, nowhere near geometric
    ks = np.arange(1, 1501)
    tail = slice(300, None)
    slope = np.polyfit(np.log(ks[tail]), np.log(res_ps)[tail], 1)[0]
    assert -1.2 < slope < -0.2
    assert res_ps[-1] > 100 * res_ab  # visibly slower at equal budget


# ------------------------------------------------------- divergence guard


def test_divergence_guard_reports_iteration_and_eta():
    g = random_strongly_connected(4, 3, seed=77)
    A, B = row_stochastic(g), column_stochastic(g)
    obj = random_quadratics(4, 2, seed=0, spread=10.0)
    st = ab_init(obj, np.zeros((4, 2)))
    with pytest.raises(DivergenceError) as ei, np.errstate(over="ignore", invalid="ignore"):
        for _ in range(4000):
            st = ab_step(st, A, B, 5.0, obj)  # grossly oversized step
    assert ei.value.k >= 1
    assert ei.value.eta == 5.0


def test_step_rejects_nonpositive_eta():
    obj = scalar_quadratic(1)
    A, B = identity_weights("row"), identity_weights("col")
    st = ab_init(obj, np.zeros((1, 1)))
    with pytest.raises(ValueError):
        ab_step(st, A, B, 0.0, obj)


def test_step_rejects_swapped_kinds():
    g = random_strongly_connected(3, 1, seed=5)
    A, B = row_stochastic(g), column_stochastic(g)
    obj = random_quadratics(3, 2, seed=5)
    st = ab_init(obj, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        ab_step(st, B, A, 0.1, obj)


# ------------------------------------------------------------- run driver


def test_run_rejects_zero_iters():
    obj = scalar_quadratic(1)
    A, B = identity_weights("row"), identity_weights("col")
    st = ab_init(obj, np.zeros((1, 1)))
    with pytest.raises(ValueError):
        run(lambda s: ab_step(s, A, B, 0.5, obj), st, 0, np.array([3.0]))


def test_run_trace_length_includes_k0():
    obj = scalar_quadratic(1)
    A, B = identity_weights("row"), identity_weights("col")
    st = ab_init(obj, np.zeros((1, 1)))
    tr = run(lambda s: ab_step(s, A, B, 0.5, obj), st, 25, np.array([3.0]))
    assert len(tr.residual) == 26
    assert tr.k[0] == 0 and tr.k[-1] == 25


def test_run_is_bit_for_bit_reproducible():
    g = random_strongly_connected(5, 3, seed=50)
    A, B = row_stochastic(g), column_stochastic(g)
    obj = make_classification_data(5, 3, 6, xi=1.0, regularize_bias=True, seed=50)
    xstar = centralized_optimum(obj)

    def simulate():
        st = ab_init(obj, np.zeros((5, obj.dim)))
        return run(lambda s: ab_step(s, A, B, 0.02, obj), st, 300, xstar)

    t1, t2 = simulate(), simulate()
    assert np.array_equal(np.asarray(t1.residual), np.asarray(t2.residual))


def test_run_attaches_partial_trace_on_divergence():
    g = random_strongly_connected(4, 2, seed=3)
    A, B = row_stochastic(g), column_stochastic(g)
    obj = random_quadratics(4, 2, seed=3, spread=10.0)
    st = ab_init(obj, np.zeros((4, 2)))
    with pytest.raises(DivergenceError) as ei, np.errstate(over="ignore", invalid="ignore"):
        run(lambda s: ab_step(s, A, B, 5.0, obj), st, 4000, np.zeros(2))
    partial = ei.value.partial
    assert partial is not None
    assert len(partial.residual) >= 1
