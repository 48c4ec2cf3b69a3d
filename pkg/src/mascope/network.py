"""Communication graphs, Metropolis mixing matrices and cyclic schedules."""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ValidationError
from .rng import SplitMix64

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class Topology:
    m: int
    edges: frozenset

    def __post_init__(self):
        normalized = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError("self-loops are implicit and must not be listed")
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise ValueError(f"edge ({i}, {j}) out of range for {self.m} agents")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))

    def degrees(self):
        deg = [0] * self.m
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def is_connected(self):
        return _connected(self.m, self.edges)


def _connected(m, edges):
    if m <= 1:
        return True
    adj = [[] for _ in range(m)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == m


def complete_graph(m):
    if m < 2:
        raise ParameterError("need at least 2 agents")
    return Topology(m, frozenset((i, j) for i in range(m) for j in range(i + 1, m)))


def path_graph(m):
    if m < 2:
        raise ParameterError("need at least 2 agents")
    return Topology(m, frozenset((i, i + 1) for i in range(m - 1)))


def sparse_edge_budget(m, d):
    """Undirected edge count for sparsity degree ``d``: ``floor((d m^2 - m) / 2)``.

    The ``d m^2`` connection count includes both orientations of every link
    plus the ``m`` self-connections of the complete graph.
    """
    return math.floor((d * m * m - m) / 2 + 1e-9)


def random_sparse(m, d, seed):
    """Connected random graph: a random spanning tree plus random extra edges."""
    if not 0 < d <= 1:
        raise ParameterError("sparsity degree must lie in (0, 1]")
    if m < 2:
        raise ParameterError("need at least 2 agents")
    budget = sparse_edge_budget(m, d)
    if budget < m - 1:
        raise ParameterError(f"edge budget {budget} cannot hold a spanning tree on {m} nodes")
    target = min(budget, m * (m - 1) // 2)
    rng = SplitMix64(seed)
    order = rng.shuffle(list(range(m)))
    edges = set()
    for pos in range(1, m):
        a, b = order[pos], order[rng.randbelow(pos)]
        edges.add((min(a, b), max(a, b)))
    rest = [(i, j) for i in range(m) for j in range(i + 1, m) if (i, j) not in edges]
    rng.shuffle(rest)
    edges.update(rest[:target - len(edges)])
    return Topology(m, frozenset(edges))


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    entries: np.ndarray
    eta_bound: float = None

    def __post_init__(self):
        W = np.array(self.entries, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError(f"mixing matrix must be square, got {W.shape}")
        W.setflags(write=False)
        object.__setattr__(self, "entries", W)
        if self.eta_bound is None:
            positive = W[W > 0]
            object.__setattr__(self, "eta_bound", float(positive.min()) if positive.size else 0.0)

    @property
    def m(self):
        return self.entries.shape[0]

    def support_edges(self):
        W = self.entries
        return frozenset((i, j) for i in range(self.m) for j in range(i + 1, self.m)
                         if W[i, j] > 0 or W[j, i] > 0)


def metropolis_weights(t):
    if not t.is_connected():
        raise ValidationError("Metropolis weights need a connected topology")
    deg = t.degrees()
    W = np.zeros((t.m, t.m))
    for i, j in sorted(t.edges):
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    for i in range(t.m):
        W[i, i] = 1.0 - (np.sum(W[i]) - W[i, i])
    return MixingMatrix(W)


def uniform_mixing(m):
    """``(1/m) 1 1'``, the complete-graph averaging matrix."""
    return MixingMatrix(np.full((m, m), 1.0 / m))


@dataclass(frozen=True)
class ValidationReport:
    symmetric: bool
    nonnegative: bool
    row_stochastic: bool
    column_stochastic: bool
    diagonal_bound: bool
    positive_entry_bound: bool

    @property
    def ok(self):
        return all((self.symmetric, self.nonnegative, self.row_stochastic,
                    self.column_stochastic, self.diagonal_bound, self.positive_entry_bound))

    def failures(self):
        return [name for name, passed in vars(self).items() if not passed]


def validate_mixing(A, eta, tol=STOCHASTIC_TOL):
    W = A.entries if isinstance(A, MixingMatrix) else np.asarray(A, dtype=float)
    positive = W[W > 0]
    return ValidationReport(
        symmetric=bool(np.array_equal(W, W.T)),
        nonnegative=bool(np.all(W >= 0)),
        row_stochastic=bool(np.all(np.abs(W.sum(axis=1) - 1.0) <= tol)),
        column_stochastic=bool(np.all(np.abs(W.sum(axis=0) - 1.0) <= tol)),
        diagonal_bound=bool(np.all(np.diag(W) >= eta)),
        positive_entry_bound=bool(np.all(positive >= eta)),
    )


class MixingSchedule:
    """Cyclic sequence of mixing matrices; iteration ``k`` uses ``k mod P``."""

    def __init__(self, matrices, label=""):
        self.matrices = tuple(matrices)
        if not self.matrices:
            raise ValueError("schedule needs at least one matrix")
        sizes = {A.m for A in self.matrices}
        if len(sizes) != 1:
            raise ValueError(f"schedule matrices have mixed sizes {sorted(sizes)}")
        self.m = sizes.pop()
        self.label = label

    @property
    def period(self):
        return len(self.matrices)

    @property
    def eta(self):
        return min(A.eta_bound for A in self.matrices)

    def at(self, k):
        return self.matrices[k % self.period]

    def describe(self):
        return self.label or f"cyclic[{self.period}]"


def certify_schedule(s):
    """Smallest window length ``T`` whose every cyclic window has a connected union."""
    supports = [A.support_edges() for A in s.matrices]
    P = len(supports)
    for T in range(1, P + 1):
        if all(_connected(s.m, frozenset().union(*(supports[(start + off) % P] for off in range(T))))
               for start in range(P)):
            return T
    raise ValidationError("union graph over one full period is disconnected")
