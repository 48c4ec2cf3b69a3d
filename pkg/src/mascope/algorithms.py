"""Distributed engines, step schedules, running averages and the reference solver.

Three engines share one driver (:func:`run`):

``algo1``
    subgradient averaging: mix the iterates, evaluate subgradients at the mixed
    points, mix the subgradients, then take a projected step.
``dual_avg``
    dual averaging with per-agent sets: mix the accumulated subgradients and
    project ``-(c/2)`` times the accumulator.
``prox``
    no subgradient exchange: mix the iterates, then a local proximal step.

Agent data are stored as (m, n) arrays; row ``i`` belongs to agent ``i``.
Mixing is a dense matrix product, so reductions happen in a fixed order and
traces are reproducible bit for bit.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .errors import DimensionError, ParameterError
from .objectives import OracleStack
from .rng import SplitMix64
from .sets import BallSet, BoxSet, SetStack, bounding_box, chebyshev_interior, intersect_boxes, project

ENGINES = ("algo1", "dual_avg", "prox")
STEP_KINDS = ("harmonic", "inv_sqrt", "constant")

PROX_TOL = 1e-10
PROX_MAX_ITER = 500
# keeps starting points off the stream that generated the problem data
X0_STREAM = 0xA5A5A5A5


@dataclass(frozen=True)
class StepSchedule:
    kind: str = "inv_sqrt"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ParameterError(f"unknown step kind {self.kind!r}; expected one of {STEP_KINDS}")
        if not self.scale > 0:
            raise ParameterError("step scale must be positive")

    def describe(self):
        return f"{self.kind}({self.scale:g})"


def step_size(s, k):
    if k < 0:
        raise ParameterError("iteration index must be non-negative")
    if s.kind == "harmonic":
        return s.scale / (k + 1)
    if s.kind == "inv_sqrt":
        return s.scale / math.sqrt(k + 1)
    return s.scale


def cumulative_step(s, k):
    """``S(k) = c(1) + ... + c(k)``, with ``S(0) = 0``."""
    return math.fsum(step_size(s, r) for r in range(1, k + 1))


def running_average_update(xhat, x_new, sched, k, s_k=None):
    """Step-weighted running average from iteration ``k`` to ``k + 1``.

    ``xhat(k+1) = (c(k+1) x(k+1) + S(k) xhat(k)) / S(k+1)``. Pass ``s_k`` to
    avoid re-summing the step sizes.
    """
    if s_k is None:
        s_k = cumulative_step(sched, k)
    c_next = step_size(sched, k + 1)
    return (c_next * np.asarray(x_new) + s_k * np.asarray(xhat)) / (s_k + c_next)


@dataclass
class AgentStates:
    """Stacked per-agent iterates; row ``i`` of every array is agent ``i``."""

    x: np.ndarray
    z: np.ndarray
    g: np.ndarray
    d: np.ndarray
    xhat: np.ndarray
    dual_z: np.ndarray

    @classmethod
    def initial(cls, x0, dual_z=None):
        x0 = np.array(x0, dtype=float)
        zeros = np.zeros_like(x0)
        return cls(x=x0, z=x0.copy(), g=zeros.copy(), d=zeros.copy(), xhat=x0.copy(),
                   dual_z=zeros.copy() if dual_z is None else np.array(dual_z, dtype=float))

    @property
    def m(self):
        return self.x.shape[0]

    def agent(self, i):
        return {name: getattr(self, name)[i].copy() for name in ("x", "z", "g", "d", "xhat", "dual_z")}

    def copy(self):
        return AgentStates(*(getattr(self, name).copy() for name in ("x", "z", "g", "d", "xhat", "dual_z")))


class Problem:
    """One (oracle, set) pair per agent, plus vectorized views of both."""

    def __init__(self, oracles, sets):
        self.oracles = list(oracles)
        self.sets = list(sets)
        if len(self.oracles) != len(self.sets):
            raise DimensionError("need exactly one constraint set per oracle")
        self.set_stack = SetStack(self.sets)
        self.n = self.set_stack.dim
        self.m = len(self.sets)
        self.stack = OracleStack(self.oracles, self.n)

    def feasible_set(self):
        """Materialized intersection: a box, or the common ball."""
        if all(isinstance(S, BoxSet) for S in self.sets):
            return intersect_boxes(self.sets)
        if all(S == self.sets[0] for S in self.sets) and isinstance(self.sets[0], BallSet):
            return self.sets[0]
        return None

    def interior_ball(self):
        """An interior point and radius of a ball inside the intersection, or None."""
        X = self.feasible_set()
        if isinstance(X, BoxSet):
            return chebyshev_interior(X)
        if isinstance(X, BallSet):
            return X.center.copy(), X.radius
        return None


def _matrix(A):
    return A.entries if hasattr(A, "entries") else np.asarray(A, dtype=float)


def _check(problem, states, W):
    if W.shape != (problem.m, problem.m) or states.x.shape != (problem.m, problem.n):
        raise DimensionError(
            f"mixing matrix {W.shape} / states {states.x.shape} do not match {problem.m} agents in R^{problem.n}")


def algo1_iterate(states, A, c, problem):
    """One round of subgradient averaging; returns the new states."""
    W = _matrix(A)
    _check(problem, states, W)
    Z = W @ states.x
    G = problem.stack.subgrads(Z)
    D = W @ G
    X = problem.set_stack.project(Z - c * D)
    return replace(states, x=X, z=Z, g=G, d=D)


def algo1_argmin_form(d, z, c, X):
    """Minimizer of ``d'xi + |z - xi|^2 / (2c)`` over ``X``, i.e. ``P_X(z - c d)``."""
    if not c > 0:
        raise ParameterError("step must be positive")
    return project(X, np.asarray(z) - c * np.asarray(d))


def dual_avg_iterate(states, A, c, problem):
    W = _matrix(A)
    _check(problem, states, W)
    G = problem.stack.subgrads(states.x)
    dual = W @ states.dual_z + G
    X = problem.set_stack.project(-(c / 2.0) * dual)
    return replace(states, x=X, g=G, dual_z=dual)


def prox_step(Z, c, problem, tol=PROX_TOL, max_iter=PROX_MAX_ITER):
    """Per-agent ``argmin_{xi in X_i} f_i(xi) + |xi - z_i|^2 / (2c)``.

    Inner loop is a projected gradient method on the smooth pieces. The l1
    pieces are handled by soft-thresholding before the projection, which is
    the exact prox of ``l1 + indicator`` for boxes (both are separable).
    Absolute-residual pieces fall back to subgradient steps of size ``c/2``.
    Returns the points and a mask of agents that hit the iteration cap.
    """
    stack = problem.stack
    if stack.has_abs:
        step = np.full(problem.m, 0.5 * c)
    else:
        step = 1.0 / (2.0 * stack.curvature() + 1.0 / c)
    xi = problem.set_stack.project(Z)
    active = np.ones(problem.m, dtype=bool)
    for _ in range(max_iter):
        grad = stack.smooth_grads(xi) + (xi - Z) / c
        if stack.has_abs:
            grad += stack.abs_subgrads(xi)
        trial = xi - step[:, None] * grad
        if stack.has_l1:
            thresh = (step * stack.l1)[:, None]
            trial = np.sign(trial) * np.maximum(np.abs(trial) - thresh, 0.0)
        trial = problem.set_stack.project(trial)
        moved = np.sqrt(np.sum((trial - xi) ** 2, axis=1))
        xi = np.where(active[:, None], trial, xi)
        active &= moved > tol
        if not np.any(active):
            break
    return xi, active


def prox_noavg_iterate(states, A, c, problem):
    """Mix the iterates, then a local proximal step; no subgradient exchange.

    Returns ``(states, unconverged)`` where ``unconverged`` counts agents whose
    inner solve hit the iteration cap.
    """
    W = _matrix(A)
    _check(problem, states, W)
    Z = W @ states.x
    X, stuck = prox_step(Z, c, problem)
    return replace(states, x=X, z=Z), int(np.sum(stuck))


@dataclass(frozen=True)
class OptimumReference:
    x_star: np.ndarray
    f_star: float
    method: str = "centralized_subgradient"


class _CentralOracle:
    """Value and subgradient of a single flattened oracle on one point."""

    def __init__(self, f_total, n):
        st = OracleStack([f_total], n)
        self.Q, self.q, self.r = st.Q[0], st.q[0], float(st.r[0])
        self.abs_b, self.abs_y = st.abs_b[0], st.abs_y[0]
        self.sq_b, self.sq_y = st.sq_b[0], st.sq_y[0]
        self.l1 = float(st.l1[0])
        self.flags = (st.has_quad, st.has_abs, st.has_sq, st.has_l1)

    def __call__(self, x):
        has_quad, has_abs, has_sq, has_l1 = self.flags
        f, g = self.r, np.zeros_like(x)
        if has_quad:
            Qx = self.Q @ x
            f += float(x @ Qx + self.q @ x)
            g += 2.0 * Qx + self.q
        if has_abs:
            res = self.abs_y - self.abs_b @ x
            f += float(np.abs(res).sum())
            g -= np.sign(res) @ self.abs_b
        if has_sq:
            res = self.sq_y - self.sq_b @ x
            f += float(res @ res)
            g -= 2.0 * (res @ self.sq_b)
        if has_l1:
            f += self.l1 * float(np.abs(x).sum())
            g += self.l1 * np.sign(x)
        return f, g


def _projector(S):
    if isinstance(S, BoxSet):
        lo, hi = np.asarray(S.lower, dtype=float), np.asarray(S.upper, dtype=float)
        return lambda x: np.minimum(np.maximum(x, lo), hi)
    return lambda x: project(S, x)


def centralized_solve(f_total, X_feasible, budget, sched=None, x0=None, restarts=0, shrink=0.1):
    """Best-iterate projected subgradient method on the centralized problem.

    Runs ``budget`` iterations with ``c(k) = scale / sqrt(k + 1)`` and keeps the
    best feasible point visited. With ``restarts > 0`` the method is restarted
    from the incumbent with the scale multiplied by ``shrink`` each time.
    """
    oracle = _CentralOracle(f_total, X_feasible.dim)
    proj = _projector(X_feasible)
    lo, hi = bounding_box(X_feasible)
    if x0 is None:
        x = project(X_feasible, (lo + hi) / 2.0)
    else:
        x = project(X_feasible, np.asarray(x0, dtype=float))
    best_f, g0 = oracle(x)
    best_x = x.copy()
    if sched is None:
        gnorm = float(np.sqrt(g0 @ g0))
        span = float(np.sqrt(np.sum((hi - lo) ** 2)))
        sched = StepSchedule("inv_sqrt", span / gnorm if gnorm > 0 else span)
    scale = sched.scale
    steps = 1.0 / np.sqrt(np.arange(1, budget + 1, dtype=float))
    for _ in range(restarts + 1):
        x = best_x.copy()
        _, g = oracle(x)
        for k in range(budget):
            x = proj(x - (scale * steps[k]) * g)
            fx, g = oracle(x)
            if fx < best_f:
                best_f, best_x = fx, x
        scale *= shrink
    return OptimumReference(best_x, best_f)


def logged_iterations(K, stride="geometric"):
    """Iterations at which metric rows are recorded; always includes 0 and K.

    ``stride`` is ``"geometric"`` (powers of two), a positive integer (every
    ``stride`` iterations) or ``"log:N"`` (``N`` log-spaced points per decade).
    """
    ks = {0, K}
    if isinstance(stride, str) and stride.isdigit():
        stride = int(stride)
    if stride == "geometric":
        p = 1
        while p <= K:
            ks.add(p)
            p *= 2
    elif isinstance(stride, int) and not isinstance(stride, bool):
        if stride < 1:
            raise ParameterError("stride must be >= 1")
        ks.update(range(stride, K + 1, stride))
    elif isinstance(stride, str) and stride.startswith("log:"):
        per_decade = int(stride[4:])
        if per_decade < 1:
            raise ParameterError("log stride needs at least one point per decade")
        if K >= 1:
            top = math.log10(K) * per_decade
            for j in range(int(math.floor(top)) + 1):
                ks.add(int(round(10 ** (j / per_decade))))
    else:
        raise ParameterError(f"unrecognized stride {stride!r}")
    return sorted(k for k in ks if 0 <= k <= K)


@dataclass
class RunConfig:
    engine: str
    problem: Problem
    schedule: object
    steps: StepSchedule
    iters: int
    stride: object = "geometric"
    seed: int = 0
    x0: np.ndarray = None
    reference: OptimumReference = None
    name: str = ""

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ParameterError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        if self.problem.m < 2:
            raise ParameterError("need at least two agents")
        if self.iters < 0:
            raise ParameterError("iteration budget must be non-negative")
        if self.schedule.m != self.problem.m:
            raise DimensionError("schedule size does not match the number of agents")


@dataclass
class RunTrace:
    header: dict
    rows: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    final_states: AgentStates = None
    snapshots: dict = field(default_factory=dict)


def initial_points(problem, seed):
    """Seeded starting points: uniform in each set's bounding box, projected onto the set."""
    rng = SplitMix64(seed ^ X0_STREAM)
    rows = []
    for S in problem.sets:
        lo, hi = bounding_box(S)
        rows.append(project(S, np.array([rng.uniform(a, b) for a, b in zip(lo, hi)])))
    return np.array(rows)


def _metric_row(k, states, problem, ref, err_norms, cum_err, surrogate):
    v = metrics.average_point(states)
    eps = float(np.sum(problem.set_stack.distances(v)))
    if surrogate is not None:
        metrics.feasible_surrogate(v, problem.sets, *surrogate)
    gap_x = metrics.objective_gap(states, problem.stack, ref.f_star)
    gap_avg = metrics.objective_gap(states, problem.stack, ref.f_star, use_running_avg=True)
    row = metrics.MetricRow(
        k=k,
        consensus_residual=metrics.consensus_residual(states),
        dist_to_opt=metrics.distance_to_optimum(states, ref.x_star),
        rel_obj_gap_iterates=gap_x.relative,
        rel_obj_gap_running_avg=gap_avg.relative,
        epsilon_k=eps,
        max_error_norm=float(np.max(err_norms)) if err_norms is not None else 0.0,
        consensus_residual_running_avg=metrics.consensus_residual(states, use_running_avg=True),
        abs_gap_running_avg=gap_avg.absolute,
        cumulative_error_sq=cum_err,
    )
    return row, gap_x.fell_back


def default_reference(problem, budget=20000, restarts=6):
    X = problem.feasible_set()
    if X is None:
        raise ParameterError("cannot build a centralized reference for mixed constraint sets")
    from .objectives import total
    return centralized_solve(total(problem.oracles), X, budget, restarts=restarts)


def run(config, keep_snapshots=False):
    """Iterate the configured engine and record metric rows at the logged iterations."""
    problem = config.problem
    ref = config.reference or default_reference(problem)
    x0 = initial_points(problem, config.seed) if config.x0 is None else np.array(config.x0, dtype=float)
    if x0.shape != (problem.m, problem.n):
        raise DimensionError(f"initial points have shape {x0.shape}, expected {(problem.m, problem.n)}")
    dual0 = problem.stack.subgrads(x0) if config.engine == "dual_avg" else None
    states = AgentStates.initial(x0, dual0)

    logged = set(logged_iterations(config.iters, config.stride))
    surrogate = problem.interior_ball()
    trace = RunTrace(header={
        "scenario": config.name,
        "engine": config.engine,
        "seed": config.seed,
        "schedule": config.schedule.describe(),
        "steps": config.steps.describe(),
        "iters": config.iters,
        "stride": str(config.stride),
    })
    fallback = False
    stuck_total = 0
    cum_err = 0.0
    s_k = 0.0
    row, fb = _metric_row(0, states, problem, ref, None, cum_err, surrogate)
    trace.rows.append(row)
    fallback |= fb
    if keep_snapshots:
        trace.snapshots[0] = states.copy()

    for k in range(config.iters):
        A = config.schedule.at(k)
        c = step_size(config.steps, k)
        mixed = A.entries @ states.x
        if config.engine == "algo1":
            new = algo1_iterate(states, A, c, problem)
        elif config.engine == "dual_avg":
            new = dual_avg_iterate(states, A, c, problem)
        else:
            new, stuck = prox_noavg_iterate(states, A, c, problem)
            stuck_total += stuck
        err = new.x - mixed
        err_sq = np.sum(err * err, axis=1)
        cum_err += float(np.sum(err_sq))
        new.xhat = running_average_update(states.xhat, new.x, config.steps, k, s_k)
        s_k += step_size(config.steps, k + 1)
        states = new
        if k + 1 in logged:
            row, fb = _metric_row(k + 1, states, problem, ref, np.sqrt(err_sq), cum_err, surrogate)
            trace.rows.append(row)
            fallback |= fb
            if keep_snapshots:
                trace.snapshots[k + 1] = states.copy()

    trace.flags = {"relative_gap_fallback": fallback, "prox_inner_unconverged": stuck_total,
                   "prox_tol": PROX_TOL, "prox_max_iter": PROX_MAX_ITER}
    trace.final_states = states
    return trace
