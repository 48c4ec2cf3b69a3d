import math

import numpy as np
import pytest

from mascope.algorithms import (AgentStates, OptimumReference, Problem, RunConfig, StepSchedule, algo1_argmin_form,
                                algo1_iterate, centralized_solve, cumulative_step, dual_avg_iterate,
                                initial_points, logged_iterations, prox_noavg_iterate, prox_step,
                                run, running_average_update, step_size)
from mascope.errors import DimensionError, ParameterError
from mascope.network import MixingSchedule, metropolis_weights, path_graph, uniform_mixing
from mascope.objectives import AbsResidualFn, QuadraticFn, total, value
from mascope.scenarios import (LOCAL_OPT_1, LOCAL_OPT_2, Q1, Q2, Q_TWO_AGENT, R1, R2,
                               get_scenario, robust_regression_data, two_agent_problem)
from mascope.sets import BallSet, ball, box, contains, project

UNIT = box([-1, -1], [1, 1])
ZERO = QuadraticFn(np.zeros((2, 2)), [0, 0])
GRID = np.arange(-1.0, 1.0 + 5e-4, 1e-3)


def grid_argmin(objective, lo=-1.0, hi=1.0):
    """Brute-force minimizer of ``objective(X, Y)`` on a 1e-3 grid over a square."""
    g = GRID * (hi - lo) / 2 + (hi + lo) / 2
    Xg, Yg = np.meshgrid(g, g, indexing="ij")
    vals = objective(Xg, Yg)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    return np.array([Xg[i, j], Yg[i, j]])


def test_step_size_examples():
    assert step_size(StepSchedule("inv_sqrt", 1), 3) == 0.5
    assert step_size(StepSchedule("harmonic", 0.2), 0) == 0.2
    assert all(step_size(StepSchedule("constant", 0.1), k) == 0.1 for k in (0, 7, 10 ** 6))
    with pytest.raises(ParameterError):
        StepSchedule("cubic", 1)
    with pytest.raises(ParameterError):
        StepSchedule("harmonic", 0)


def test_running_average_examples():
    const = StepSchedule("constant", 0.3)
    xs = [np.array([1.0, 4.0]), np.array([3.0, -2.0]), np.array([8.0, 0.5])]
    xhat = np.zeros(2)
    for k, x in enumerate(xs):
        xhat = running_average_update(xhat, x, const, k)
        np.testing.assert_allclose(xhat, np.mean(xs[:k + 1], axis=0), atol=1e-14)
    np.testing.assert_array_equal(running_average_update(np.array([9.0]), np.array([2.0]), const, 0), [2.0])

    s = StepSchedule("inv_sqrt", 1)
    xhat = np.zeros(1)
    for k, x in enumerate([1.0, 2.0, 3.0]):
        xhat = running_average_update(xhat, np.array([x]), s, k)
    c = [1 / math.sqrt(r + 1) for r in (1, 2, 3)]
    assert xhat[0] == pytest.approx((c[0] * 1 + c[1] * 2 + c[2] * 3) / sum(c), abs=1e-15)


@pytest.mark.parametrize("kind", ["harmonic", "inv_sqrt", "constant"])
def test_running_average_recursion_matches_direct_sum(kind, rng):
    s = StepSchedule(kind, 0.7)
    xs = rng.normal(size=(1000, 3))
    xhat, s_k = np.zeros(3), 0.0
    weighted = np.zeros(3)
    for k in range(1000):
        xhat = running_average_update(xhat, xs[k], s, k, s_k)
        s_k += step_size(s, k + 1)
        weighted += step_size(s, k + 1) * xs[k]
    assert s_k == pytest.approx(cumulative_step(s, 1000), rel=1e-13)
    np.testing.assert_allclose(xhat, weighted / cumulative_step(s, 1000), atol=1e-10)


def test_algo1_single_agent_is_projected_subgradient():
    f = QuadraticFn(Q_TWO_AGENT, Q1, R1)
    p = Problem([f], [box([-5, -5], [5, 5])])
    x = np.array([[0.3, -0.2]])
    new = algo1_iterate(AgentStates.initial(x), np.eye(1), 0.1, p)
    expected = project(p.sets[0], x[0] - 0.1 * (2 * Q_TWO_AGENT @ x[0] + Q1))
    np.testing.assert_allclose(new.x[0], expected, atol=1e-15)


def test_algo1_zero_objectives_reach_consensus_in_one_step():
    p = Problem([ZERO] * 3, [box([-2, -2], [2, 2])] * 3)
    x = np.array([[1.0, 0.0], [-1.0, 1.5], [0.5, -1.0]])
    new = algo1_iterate(AgentStates.initial(x), uniform_mixing(3), 0.5, p)
    np.testing.assert_allclose(new.x, np.tile(x.mean(axis=0), (3, 1)), atol=1e-15)


def test_algo1_two_agent_first_step_matches_hand_evaluation():
    p = two_agent_problem()
    x0 = np.array([LOCAL_OPT_1, LOCAL_OPT_2])
    new = algo1_iterate(AgentStates.initial(x0), uniform_mixing(2), 1.0, p)
    # straight-line evaluation of one averaging round
    z = [(-1.0 + 0.5) / 2, (1.0 + 2.5) / 2]
    Qz = [1.2 * z[0] + 0.4 * z[1], 0.4 * z[0] + 1.8 * z[1]]
    g1 = [2 * Qz[0] + 8.0, 2 * Qz[1] - 4.0]
    g2 = [2 * Qz[0] + 2.93, 2 * Qz[1] - 11.46]
    d = [(g1[0] + g2[0]) / 2, (g1[1] + g2[1]) / 2]
    raw = [z[0] - d[0], z[1] - d[1]]
    x1 = [min(max(v, -1.0), 1.0) for v in raw]
    x2 = [min(max(v, 0.5), 2.5) for v in raw]
    np.testing.assert_allclose(new.z, [z, z], atol=1e-15)
    np.testing.assert_allclose(new.d, [d, d], atol=1e-14)
    np.testing.assert_allclose(new.x, [x1, x2], atol=1e-14)
    np.testing.assert_array_equal(new.x, [[-1.0, 1.0], [0.5, 2.5]])


def test_algo1_rejects_bad_shapes():
    p = two_agent_problem()
    with pytest.raises(DimensionError):
        algo1_iterate(AgentStates.initial(np.zeros((2, 2))), uniform_mixing(3), 1.0, p)


def test_argmin_form_examples():
    z = np.array([0.2, -0.4])
    np.testing.assert_array_equal(algo1_argmin_form([0, 0], [3, -2], 0.5, UNIT), project(UNIT, [3, -2]))
    np.testing.assert_allclose(algo1_argmin_form([1, -1], z, 0.1, UNIT), z - 0.1 * np.array([1, -1]))
    with pytest.raises(ParameterError):
        algo1_argmin_form([1, 1], z, 0.0, UNIT)


def test_argmin_form_matches_grid_oracle(rng):
    for _ in range(12):
        d, z = rng.normal(scale=2, size=(2, 2))
        c = rng.uniform(0.05, 1.5)
        x = algo1_argmin_form(d, z, c, UNIT)
        np.testing.assert_array_equal(x, project(UNIT, z - c * d))
        ref = grid_argmin(lambda X, Y: d[0] * X + d[1] * Y + ((X - z[0]) ** 2 + (Y - z[1]) ** 2) / (2 * c))
        assert np.max(np.abs(x - ref)) <= 1e-3


def test_dual_avg_linear_first_step():
    q = np.array([[1.0, -3.0], [-0.5, 0.25]])
    p = Problem([QuadraticFn(np.zeros((2, 2)), qi) for qi in q], [UNIT, box([0, 0], [2, 2])])
    new = dual_avg_iterate(AgentStates.initial(np.zeros((2, 2))), uniform_mixing(2), 0.8, p)
    expected = [project(S, -0.4 * qi) for S, qi in zip(p.sets, q)]
    np.testing.assert_allclose(new.x, expected, atol=1e-15)


def test_dual_avg_argmin_matches_grid_oracle(rng):
    p = Problem([ZERO, ZERO], [UNIT, UNIT])
    for _ in range(8):
        dual = rng.normal(scale=3, size=(2, 2))
        c = rng.uniform(0.1, 1.0)
        states = AgentStates.initial(np.zeros((2, 2)), dual)
        new = dual_avg_iterate(states, np.eye(2), c, p)
        for i in range(2):
            u = dual[i]
            ref = grid_argmin(lambda X, Y: u[0] * X + u[1] * Y + (X ** 2 + Y ** 2) / c)
            assert np.max(np.abs(new.x[i] - ref)) <= 1e-3


def test_dual_avg_two_agent_first_step_matches_hand_evaluation():
    p = two_agent_problem()
    x0 = np.array([LOCAL_OPT_1, LOCAL_OPT_2])
    states = AgentStates.initial(x0, p.stack.subgrads(x0))
    new = dual_avg_iterate(states, uniform_mixing(2), 1.0, p)
    g1, g2 = [6.4, -1.2], [6.13, -2.06]
    avg = [(g1[0] + g2[0]) / 2, (g1[1] + g2[1]) / 2]
    dual1 = [avg[0] + g1[0], avg[1] + g1[1]]
    dual2 = [avg[0] + g2[0], avg[1] + g2[1]]
    np.testing.assert_allclose(new.dual_z, [dual1, dual2], atol=1e-13)
    x1 = [min(max(-v / 2, -1.0), 1.0) for v in dual1]
    x2 = [min(max(-v / 2, 0.5), 2.5) for v in dual2]
    np.testing.assert_allclose(new.x, [x1, x2], atol=1e-13)
    np.testing.assert_allclose(new.x[1], [0.5, 1.845], atol=1e-13)


def test_prox_of_zero_and_linear():
    Z = np.array([[2.0, -0.3], [0.1, 0.2]])
    p = Problem([ZERO, ZERO], [UNIT, UNIT])
    new, stuck = prox_noavg_iterate(AgentStates.initial(Z), np.eye(2), 0.5, p)
    np.testing.assert_allclose(new.x, [project(UNIT, z) for z in Z], atol=1e-12)
    assert stuck == 0
    q = np.array([0.7, -1.1])
    lin = QuadraticFn(np.zeros((2, 2)), q)
    xi, mask = prox_step(Z, 0.5, Problem([lin, lin], [UNIT, UNIT]))
    np.testing.assert_allclose(xi, [project(UNIT, z - 0.5 * q) for z in Z], atol=1e-9)
    assert not mask.any()


def test_prox_quadratic_matches_grid_oracle():
    f1 = QuadraticFn(Q_TWO_AGENT, Q1, R1)
    xi, mask = prox_step(np.zeros((2, 2)), 1.0, Problem([f1, f1], [UNIT, UNIT]))
    Q, q = Q_TWO_AGENT, Q1
    ref = grid_argmin(lambda X, Y: Q[0, 0] * X * X + 2 * Q[0, 1] * X * Y + Q[1, 1] * Y * Y
                      + q[0] * X + q[1] * Y + 0.5 * (X * X + Y * Y))
    assert not mask.any()
    assert np.max(np.abs(xi[0] - ref)) <= 1e-3


def test_centralized_two_agent():
    f = total([QuadraticFn(Q_TWO_AGENT, Q1, R1), QuadraticFn(Q_TWO_AGENT, Q2, R2)])
    ref = centralized_solve(f, box([0.5, 0.5], [1, 1]), 5000, restarts=8)
    np.testing.assert_allclose(ref.x_star, [0.5, 1.0], atol=1e-4)


def test_centralized_norm_squared():
    f = QuadraticFn(np.eye(2), [0, 0])
    ref = centralized_solve(f, UNIT, 5000, restarts=8)
    np.testing.assert_allclose(ref.x_star, [0, 0], atol=1e-6)
    assert ref.f_star == pytest.approx(0, abs=1e-6)


def test_centralized_robust_instance_multistart():
    config = get_scenario("robust_complete").build(iters=0)
    ref = config.reference
    assert ref.f_star == pytest.approx(20.8836791081355, rel=1e-9)
    f = total(config.problem.oracles)
    X = config.problem.feasible_set()
    r = np.random.default_rng(5)
    for _ in range(10):
        start = project(X, r.uniform(-5, 5, 4))
        other = centralized_solve(f, X, 2000, x0=start, restarts=8)
        assert abs(other.f_star - ref.f_star) <= 1e-4
        assert value(f, other.x_star) == pytest.approx(other.f_star)


def test_logged_iterations():
    assert logged_iterations(0) == [0]
    assert logged_iterations(10) == [0, 1, 2, 4, 8, 10]
    assert logged_iterations(10, 3) == [0, 3, 6, 9, 10]
    assert logged_iterations(10, "5") == [0, 5, 10]
    assert logged_iterations(1000, "log:1") == [0, 1, 10, 100, 1000]
    assert 100 in logged_iterations(10 ** 4, "log:10")
    with pytest.raises(ParameterError):
        logged_iterations(10, "sometimes")


def _small_config(engine, iters=60, sets=None):
    y, B = robust_regression_data(4, 2, 3)
    oracles = [AbsResidualFn(B[i], y[i]) for i in range(4)]
    sets = sets or [box([-1, -1], [1, 1]), box([-0.5, -2], [2, 1]), ball([0, 0], 1.5), box([-1, -1], [0.8, 1])]
    p = Problem(oracles, sets)
    return RunConfig(engine=engine, problem=p,
                     schedule=MixingSchedule([metropolis_weights(path_graph(4))]),
                     steps=StepSchedule("harmonic", 0.5), iters=iters, stride=1, seed=2,
                     reference=OptimumReference(np.zeros(2), 1.0))


@pytest.mark.parametrize("engine", ["algo1", "dual_avg", "prox"])
def test_iterates_stay_feasible(engine):
    config = _small_config(engine)
    trace = run(config, keep_snapshots=True)
    assert len(trace.snapshots) == config.iters + 1
    for states in trace.snapshots.values():
        for x, S in zip(states.x, config.problem.sets):
            assert contains(S, x, 1e-9)


def test_run_with_zero_iterations():
    trace = run(get_scenario("two_agent").build(iters=0))
    assert [r.k for r in trace.rows] == [0]
    assert trace.rows[0].dist_to_opt == pytest.approx(1.5 * math.sqrt(2), abs=1e-4)


def test_run_is_deterministic():
    a = run(get_scenario("robust_line").build(iters=300, seed=4))
    b = run(get_scenario("robust_line").build(iters=300, seed=4))
    assert a.rows == b.rows
    np.testing.assert_array_equal(a.final_states.x, b.final_states.x)


def test_running_average_closed_form_along_trace():
    config = get_scenario("two_agent").build(iters=200, stride=1)
    trace = run(config, keep_snapshots=True)
    weighted, total_c = np.zeros((2, 2)), 0.0
    for k in range(1, 201):
        c = step_size(config.steps, k)
        weighted += c * trace.snapshots[k].x
        total_c += c
        np.testing.assert_allclose(trace.snapshots[k].xhat, weighted / total_c, atol=1e-10)


def test_consensus_contracts_under_zero_objectives():
    m = 5
    p = Problem([ZERO] * m, [box([-3, -3], [3, 3])] * m)
    A = metropolis_weights(path_graph(m))
    states = AgentStates.initial(initial_points(p, 9))
    spread = []
    for _ in range(80):
        states = algo1_iterate(states, A, 0.1, p)
        diff = states.x[:, None, :] - states.x[None, :, :]
        spread.append(np.sqrt((diff ** 2).sum(axis=2)).max())
    assert all(b <= a + 1e-15 for a, b in zip(spread, spread[1:]))
    assert spread[-1] < 1e-3 * spread[0]


def test_run_config_validation():
    p = two_agent_problem()
    sched = MixingSchedule([uniform_mixing(2)])
    with pytest.raises(ParameterError):
        RunConfig("gossip", p, sched, StepSchedule(), 10)
    with pytest.raises(ParameterError):
        RunConfig("algo1", p, sched, StepSchedule(), -1)
    with pytest.raises(DimensionError):
        RunConfig("algo1", p, MixingSchedule([uniform_mixing(3)]), StepSchedule(), 10)


def test_initial_points_are_feasible_and_seeded():
    p = Problem([ZERO] * 3, [UNIT, ball([2, 2], 0.5), box([0, 0], [3, 1])])
    a, b = initial_points(p, 4), initial_points(p, 4)
    np.testing.assert_array_equal(a, b)
    for x, S in zip(a, p.sets):
        assert contains(S, x, 1e-12)
    assert not np.array_equal(a, initial_points(p, 5))


@pytest.mark.parametrize("name", ["robust_desk", "l2l1_desk"])
def test_references_match_conic_solver(name):
    cp = pytest.importorskip("cvxpy")
    config = get_scenario(name).build(iters=0)
    p = config.problem
    st = p.stack
    x = cp.Variable(p.n)
    terms = []
    for i in range(p.m):
        if st.has_abs:
            terms.append(cp.sum(cp.abs(st.abs_y[i] - st.abs_b[i] @ x)))
        if st.has_sq:
            terms.append(cp.sum_squares(st.sq_y[i] - st.sq_b[i] @ x))
        if st.has_l1:
            terms.append(st.l1[i] * cp.norm1(x))
    X = p.feasible_set()
    if isinstance(X, BallSet):
        cons = [cp.norm2(x - X.center) <= X.radius]
    else:
        cons = [x >= X.lower, x <= X.upper]
    prob = cp.Problem(cp.Minimize(cp.sum(terms)), cons)
    prob.solve()
    assert config.reference.f_star == pytest.approx(prob.value, rel=1e-6)
    assert config.reference.f_star >= prob.value - 1e-6
    np.testing.assert_allclose(config.reference.x_star, x.value, atol=1e-4)
