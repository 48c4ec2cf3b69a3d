"""Packaged scenarios and their seeded data generators."""

from dataclasses import dataclass
import numpy as np

from .algorithms import Problem, RunConfig, StepSchedule, centralized_solve
from .errors import ParameterError, UsageError
from .network import (MixingSchedule, complete_graph, metropolis_weights, path_graph,
                      random_sparse, uniform_mixing)
from .objectives import AbsResidualFn, L1RegFn, QuadraticFn, SquaredResidualFn, SumFn, total
from .rng import SplitMix64
from .sets import BoxSet, ball, box

# two-agent counterexample data
Q_TWO_AGENT = np.array([[1.2, 0.4], [0.4, 1.8]])
Q1 = np.array([8.0, -4.0])
Q2 = np.array([2.93, -11.46])
R1, R2 = 20.0, 25.0
X1 = box([-1.0, -1.0], [1.0, 1.0])
X2 = box([0.5, 0.5], [2.5, 2.5])
LOCAL_OPT_1 = np.array([-1.0, 1.0])
LOCAL_OPT_2 = np.array([0.5, 2.5])

ROBUST_RADIUS = 5.0
L2L1_DEFAULT_LAMBDA = 0.1
L2L1_SLACK = 0.5
SPARSE_CONFIGS = 4
SPARSE_CONFIG_DEGREE = 0.3

REFERENCE_BUDGET = 5000
REFERENCE_RESTARTS = 8


@dataclass(frozen=True)
class Scenario:
    """A named problem instance plus its default engine, steps and network.

    ``build`` returns a RunConfig; the keyword overrides mirror the config-file
    keys (``step_kind``, ``step_scale``, ``network_kind``, ``network_d``,
    ``stride``). ``with_reference=False`` skips the centralized reference
    solve, leaving ``run`` to compute one if the config is executed.
    """

    name: str
    doc: str
    builder: object
    engine: str
    iters: int
    steps: StepSchedule
    network: str = ""
    engines: tuple = ()

    def build(self, seed=0, engine=None, iters=None, stride="geometric", step_kind=None,
              step_scale=None, network_kind=None, network_d=None, with_reference=True):
        steps = StepSchedule(step_kind or self.steps.kind,
                             self.steps.scale if step_scale is None else float(step_scale))
        return self.builder(seed=seed, engine=engine or self.engine,
                            iters=self.iters if iters is None else int(iters), name=self.name,
                            stride=stride, steps=steps, network=network_kind or self.network,
                            network_d=network_d, with_reference=with_reference)


def two_agent_problem():
    oracles = [QuadraticFn(Q_TWO_AGENT, Q1, R1), QuadraticFn(Q_TWO_AGENT, Q2, R2)]
    return Problem(oracles, [X1, X2])


_REFERENCES = {}


def reference_for(key, builder):
    """Centralized reference, cached per scenario data key."""
    if key not in _REFERENCES:
        problem = builder()
        _REFERENCES[key] = centralized_solve(total(problem.oracles), problem.feasible_set(),
                                             REFERENCE_BUDGET, restarts=REFERENCE_RESTARTS)
    return _REFERENCES[key]


def _static(A, label):
    return MixingSchedule([A], label=label)


def _two_agent_builder(seed, engine, iters, name, stride, steps, network, network_d, with_reference=True):
    if network not in ("", "complete") or network_d is not None:
        raise UsageError("the two-agent scenarios only use the complete two-node network")
    problem = two_agent_problem()
    return RunConfig(
        engine=engine, problem=problem, schedule=_static(uniform_mixing(2), "complete(2)"),
        steps=steps, iters=iters, stride=stride, seed=seed,
        x0=np.array([LOCAL_OPT_1, LOCAL_OPT_2]),
        reference=reference_for(("two_agent",), two_agent_problem) if with_reference else None,
        name=name)


def scenario_prop1():
    return Scenario("prop1", "two-agent counterexample under dual averaging, started at the local optima",
                    _two_agent_builder, engine="dual_avg", iters=500,
                    steps=StepSchedule("inv_sqrt", 1.0), engines=("dual_avg", "algo1"))


def scenario_two_agent_algo1(step_kind="inv_sqrt"):
    if step_kind not in ("harmonic", "inv_sqrt"):
        raise ParameterError("two-agent scenario supports harmonic or inv_sqrt steps")
    name = "two_agent" if step_kind == "inv_sqrt" else "two_agent_harmonic"
    return Scenario(name, f"two-agent problem under subgradient averaging, {step_kind} steps",
                    _two_agent_builder, engine="algo1", iters=10000,
                    steps=StepSchedule(step_kind, 1.0), engines=("algo1", "dual_avg", "prox"))


def robust_regression_data(m, n, seed):
    """``y`` (m standard normals) then ``B`` (m x n uniforms on [0, 1], row-major)."""
    rng = SplitMix64(seed)
    y = rng.normal_array((m,))
    B = rng.uniform_array((m, n))
    return y, B


def network_matrix(kind, m, seed, d=None):
    if kind == "complete":
        return metropolis_weights(complete_graph(m))
    if kind == "line":
        return metropolis_weights(path_graph(m))
    if kind.startswith("sparse"):
        if d is None:
            d = float(kind[len("sparse"):] or SPARSE_CONFIG_DEGREE)
        return metropolis_weights(random_sparse(m, float(d), seed))
    raise UsageError(f"unknown network kind {kind!r}")


def _robust_problem(m, n, seed):
    y, B = robust_regression_data(m, n, seed)
    common = ball(np.zeros(n), ROBUST_RADIUS)
    return Problem([AbsResidualFn(B[i], y[i]) for i in range(m)], [common] * m)


def scenario_robust_regression(m=30, n=4, network_kind="complete", name=None, iters=5000, step_scale=1.0):
    if network_kind not in ("complete", "line", "sparse0.3", "sparse0.8"):
        raise ParameterError(f"unsupported network kind {network_kind!r}")

    def builder(seed, engine, iters, name, stride, steps, network, network_d, with_reference=True):
        problem = _robust_problem(m, n, seed)
        A = network_matrix(network, m, seed + 1, network_d)
        label = network if network_d is None else f"{network}{network_d}"
        return RunConfig(
            engine=engine, problem=problem, schedule=_static(A, f"{label}({m})"),
            steps=steps, iters=iters, stride=stride, seed=seed,
            reference=(reference_for(("robust", m, n, seed), lambda: _robust_problem(m, n, seed))
                       if with_reference else None),
            name=name)
    label = name or f"robust_{network_kind.replace('.', '')}"
    return Scenario(label, f"robust l1 regression, m={m}, n={n}, {network_kind} network",
                    builder, engine="algo1", iters=iters, steps=StepSchedule("inv_sqrt", step_scale),
                    network=network_kind, engines=("algo1", "dual_avg"))


def l2l1_data(m, n, seed, slack=L2L1_SLACK):
    """Measurements, regressors and per-agent boxes for the regularized problem.

    Draw order: ``y`` (m normals), ``B`` (m x n uniforms, row-major), lower
    slacks then upper slacks (m x n uniforms on [0, slack] each), then for
    every coordinate one anchor agent for the lower face and one for the upper
    face whose slack is reset to zero, so the boxes intersect in exactly
    ``[-1, 1]^n``.
    """
    rng = SplitMix64(seed)
    y = rng.normal_array((m,))
    B = rng.uniform_array((m, n))
    lower_slack = rng.uniform_array((m, n), 0.0, slack)
    upper_slack = rng.uniform_array((m, n), 0.0, slack)
    for j in range(n):
        lower_slack[rng.randbelow(m), j] = 0.0
        upper_slack[rng.randbelow(m), j] = 0.0
    boxes = [BoxSet(-1.0 - lower_slack[i], 1.0 + upper_slack[i]) for i in range(m)]
    return y, B, boxes


def _l2l1_problem(m, n, lam, seed):
    y, B, boxes = l2l1_data(m, n, seed)
    oracles = [SumFn((SquaredResidualFn(B[i], y[i]), L1RegFn(lam / m))) for i in range(m)]
    return Problem(oracles, boxes)


def l2l1_schedule(m, seed, configs=SPARSE_CONFIGS, degree=SPARSE_CONFIG_DEGREE):
    """``configs`` Metropolis matrices on random sparse graphs, cycled in order."""
    rng = SplitMix64(seed ^ 0x5CED)
    mats = [metropolis_weights(random_sparse(m, degree, rng.next_u64())) for _ in range(configs)]
    return MixingSchedule(mats, label=f"cyclic[{configs}] sparse{degree:g}({m})")


def scenario_l2l1(m=30, n=5, lam=L2L1_DEFAULT_LAMBDA, name=None, iters=10000):
    if m <= n:
        raise ParameterError("the regularized regression scenario needs m > n")

    def builder(seed, engine, iters, name, stride, steps, network, network_d, with_reference=True):
        if network != "sparse":
            raise UsageError("the regularized regression scenario uses a cyclic sparse network")
        problem = _l2l1_problem(m, n, lam, seed)
        degree = SPARSE_CONFIG_DEGREE if network_d is None else float(network_d)
        return RunConfig(
            engine=engine, problem=problem, schedule=l2l1_schedule(m, seed, degree=degree),
            steps=steps, iters=iters, stride=stride, seed=seed,
            reference=(reference_for(("l2l1", m, n, lam, seed), lambda: _l2l1_problem(m, n, lam, seed))
                       if with_reference else None),
            name=name)
    label = name or f"l2l1_m{m}_n{n}"
    return Scenario(label, f"l2 regression with l1 penalty {lam:g}, m={m}, n={n}, 4-matrix cyclic network",
                    builder, engine="algo1", iters=iters, steps=StepSchedule("harmonic", 0.2),
                    network="sparse", engines=("algo1", "prox"))


def _registry():
    scenarios = [
        scenario_prop1(),
        scenario_two_agent_algo1("inv_sqrt"),
        scenario_two_agent_algo1("harmonic"),
        scenario_robust_regression(30, 4, "complete"),
        scenario_robust_regression(30, 4, "line"),
        scenario_robust_regression(30, 4, "sparse0.3"),
        scenario_robust_regression(30, 4, "sparse0.8"),
        # step scale tied to the ball radius
        scenario_robust_regression(10, 4, "complete", name="robust_desk", iters=100000,
                                   step_scale=ROBUST_RADIUS),
        scenario_l2l1(30, 5, name="l2l1_desk"),
        scenario_l2l1(300, 10, name="l2l1_full"),
    ]
    return {s.name: s for s in scenarios}


SCENARIOS = _registry()


def get_scenario(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        raise UsageError(f"unknown scenario {name!r}; try one of: {', '.join(SCENARIOS)}") from None
