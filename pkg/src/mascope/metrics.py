"""Convergence and assumption diagnostics computed from agent snapshots."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DiagnosticsError, ParameterError
from .sets import BallSet, BoxSet, contains, distance

REL_GAP_FLOOR = 1e-9


@dataclass(frozen=True)
class MetricRow:
    k: int
    consensus_residual: float
    dist_to_opt: float
    rel_obj_gap_iterates: float
    rel_obj_gap_running_avg: float
    epsilon_k: float
    max_error_norm: float
    # kept in memory for diagnostics, not written to CSV
    consensus_residual_running_avg: float = 0.0
    abs_gap_running_avg: float = 0.0
    cumulative_error_sq: float = 0.0


@dataclass(frozen=True)
class TheoreticalConstants:
    lam: float
    q: float
    mu: float
    diameter: float


@dataclass(frozen=True)
class Gap:
    absolute: float
    relative: float
    fell_back: bool


def _points(states, use_running_avg=False):
    if hasattr(states, "x"):
        return states.xhat if use_running_avg else states.x
    return np.asarray(states, dtype=float)


def average_point(states):
    X = _points(states)
    return X.sum(axis=0) / X.shape[0]


def feasible_surrogate(v, sets, xbar, rho, tol=1e-9):
    """Pull ``v`` towards the interior point ``xbar`` until it is feasible.

    Returns the convex combination ``rho/(eps+rho) v + eps/(eps+rho) xbar``
    where ``eps`` is the summed distance of ``v`` to the sets.
    """
    v = np.asarray(v, dtype=float)
    eps = float(sum(distance(S, v) for S in sets))
    vbar = (rho / (eps + rho)) * v + (eps / (eps + rho)) * np.asarray(xbar, dtype=float)
    for i, S in enumerate(sets):
        if not contains(S, vbar, tol):
            raise DiagnosticsError(
                f"surrogate point is {distance(S, vbar):.3e} outside set {i}; "
                "the interior ball (xbar, rho) is not inside the intersection")
    return vbar


def consensus_residual(states, use_running_avg=False):
    """Largest pairwise Euclidean distance between agent points."""
    X = _points(states, use_running_avg)
    diff = X[:, None, :] - X[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))


def objective_gap(states, oracles, f_star, use_running_avg=False):
    """``|sum_i f_i(point_i) - f*|`` and its relative version.

    ``oracles`` is an OracleStack. The relative gap falls back to the absolute
    one (with ``fell_back`` set) when ``|f*|`` is below 1e-9.
    """
    X = _points(states, use_running_avg)
    absolute = abs(float(np.sum(oracles.values(X))) - f_star)
    if abs(f_star) < REL_GAP_FLOOR:
        return Gap(absolute, absolute, True)
    return Gap(absolute, absolute / abs(f_star), False)


def distance_to_optimum(states, x_star):
    X = _points(states)
    diff = X - np.asarray(x_star)[None, :]
    return float(np.sqrt(np.sum(diff * diff)))


def rate_envelope(trace, burn_in):
    """Max of ``gap(k) sqrt(k) / ln k`` over the first and last logged decades.

    ``trace`` is a RunTrace (the running-average absolute gap is used) or a
    sequence of ``(k, gap)`` pairs. The first decade is ``[burn_in,
    10 burn_in]`` and the last is ``[k_max / 10, k_max]``.
    """
    if hasattr(trace, "rows"):
        pairs = [(row.k, row.abs_gap_running_avg) for row in trace.rows]
    else:
        pairs = list(trace)
    if burn_in <= 1:
        raise ParameterError("burn_in must exceed 1 so that ln k > 0")
    k_max = max(k for k, _ in pairs)
    if k_max < 100 * burn_in:
        raise ParameterError(f"trace ends at k={k_max}, less than two decades past burn-in {burn_in}")

    def scaled_max(lo, hi):
        vals = [gap * math.sqrt(k) / math.log(k) for k, gap in pairs if lo <= k <= hi]
        if not vals:
            raise ParameterError(f"no logged iterations in [{lo}, {hi}]")
        return max(vals)

    return scaled_max(burn_in, 10 * burn_in), scaled_max(k_max / 10, k_max)


def _farthest_offsets(S, T):
    """Per-coordinate or radial data giving the max distance between points of S and T."""
    if isinstance(S, BoxSet) and isinstance(T, BoxSet):
        span = np.maximum(np.abs(S.upper - T.lower), np.abs(T.upper - S.lower))
        return float(np.sqrt(span @ span))
    if isinstance(S, BallSet) and isinstance(T, BallSet):
        gap = S.center - T.center
        return float(np.sqrt(gap @ gap)) + S.radius + T.radius
    if isinstance(S, BallSet):
        S, T = T, S
    # S is a box, T a ball: farthest box point from the ball's centre, plus radius
    reach = np.maximum(np.abs(S.lower - T.center), np.abs(S.upper - T.center))
    return float(np.sqrt(reach @ reach)) + T.radius


def union_diameter(sets):
    """Exact diameter of a union of boxes and balls."""
    sets = list(sets)
    best = 0.0
    for a in range(len(sets)):
        for b in range(a, len(sets)):
            best = max(best, _farthest_offsets(sets[a], sets[b]))
    return best


def theoretical_constants(eta, m, T, rho, sets):
    """Consensus-contraction constants ``lambda``, ``q`` and the surrogate factor ``mu``."""
    if not 0 < eta < 1:
        raise ParameterError("eta must lie in (0, 1)")
    if T < 1 or m < 2:
        raise ParameterError("need T >= 1 and m >= 2")
    if rho <= 0:
        raise ParameterError("rho must be positive")
    power = (m - 1) * T
    log_eta_pow = power * math.log(eta)
    eta_pow = math.exp(log_eta_pow)
    # eta**(-power) overflows for large networks; lambda is then reported as inf
    inv_pow = math.exp(-log_eta_pow) if -log_eta_pow < 700 else math.inf
    lam = 2.0 * (1.0 + inv_pow) / (1.0 - eta_pow)
    q = math.exp(math.log1p(-eta_pow) / power)
    D = union_diameter(sets)
    mu = (2.0 / rho) * m * D + 1.0
    return TheoreticalConstants(lam=lam, q=q, mu=mu, diameter=D)
