"""Runtime checks of the standing assumptions for a configured run."""

from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import MascopeError
from .network import certify_schedule, validate_mixing
from .objectives import QuadraticFn, SumFn, lipschitz_estimate, total
from .sets import BallSet, BoxSet


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""


def _quadratics(f):
    if isinstance(f, QuadraticFn):
        yield f
    elif isinstance(f, SumFn):
        for t in f.terms:
            yield from _quadratics(t)


def validate_config(config, lipschitz_samples=200):
    problem = config.problem
    checks = []

    compact = all(isinstance(S, (BoxSet, BallSet)) for S in problem.sets)
    checks.append(Check("sets compact and convex", compact, f"{len(problem.sets)} boxes/balls"))

    interior = None
    try:
        interior = problem.interior_ball()
    except MascopeError as exc:
        checks.append(Check("intersection has nonempty interior", False, str(exc)))
    else:
        ok = interior is not None and interior[1] > 0
        detail = f"inscribed ball radius {interior[1]:.6g}" if interior else "no materialized intersection"
        checks.append(Check("intersection has nonempty interior", ok, detail))

    worst = min((float(np.min(np.linalg.eigvalsh(q.Q))) for f in problem.oracles for q in _quadratics(f)),
                default=0.0)
    checks.append(Check("objectives convex", worst >= -1e-12, f"min quadratic eigenvalue {worst:.6g}"))

    X = problem.feasible_set()
    if X is not None:
        L = lipschitz_estimate(total(problem.oracles), X, lipschitz_samples, config.seed)
        checks.append(Check("subgradients bounded", np.isfinite(L), f"sampled L >= {L:.6g}"))

    eta = config.schedule.eta
    for idx, A in enumerate(config.schedule.matrices):
        report = validate_mixing(A, eta)
        checks.append(Check(f"mixing matrix {idx} (eta={eta:.6g})", report.ok,
                            ", ".join(report.failures()) or "symmetric, doubly stochastic, eta bounds"))

    T = None
    try:
        T = certify_schedule(config.schedule)
        checks.append(Check("schedule union connectivity", True, f"T = {T}"))
    except MascopeError as exc:
        checks.append(Check("schedule union connectivity", False, str(exc)))

    if T is not None and interior is not None and 0 < eta < 1:
        consts = metrics.theoretical_constants(eta, problem.m, T, interior[1], problem.sets)
        checks.append(Check("consensus constants", 0 < consts.q <= 1,
                            f"lambda={consts.lam:.6g} q={consts.q:.6g} mu={consts.mu:.6g} D={consts.diameter:.6g}"))
    return checks
