"""Objective oracles: function value plus one subgradient.

At kinks the zero-sign convention ``sign(0) = 0`` picks the minimal-norm
element of the subdifferential for the absolute-value terms.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import as_matrix, as_vector
from .rng import SplitMix64
from .sets import bounding_box, project


@dataclass(frozen=True, eq=False)
class QuadraticFn:
    """``x'Qx + q'x + r`` with symmetric ``Q``."""

    Q: np.ndarray
    q: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        Q = as_matrix(self.Q)
        q = as_vector(self.q)
        if Q.shape != (q.shape[0], q.shape[0]):
            raise DimensionError(f"Q has shape {Q.shape} but q has length {q.shape[0]}")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12:
            raise ValueError("Q must be symmetric")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", float(self.r))

    @property
    def dim(self):
        return self.q.shape[0]


@dataclass(frozen=True, eq=False)
class AbsResidualFn:
    """``|y - b'x|``"""

    b: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "b", as_vector(self.b))
        object.__setattr__(self, "y", float(self.y))

    @property
    def dim(self):
        return self.b.shape[0]


@dataclass(frozen=True, eq=False)
class SquaredResidualFn:
    """``(y - b'x)**2``"""

    b: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "b", as_vector(self.b))
        object.__setattr__(self, "y", float(self.y))

    @property
    def dim(self):
        return self.b.shape[0]


@dataclass(frozen=True)
class L1RegFn:
    """``weight * ||x||_1``; works in any dimension."""

    weight: float

    def __post_init__(self):
        if not self.weight >= 0:
            raise ValueError("L1 weight must be non-negative")

    dim = None


@dataclass(frozen=True)
class SumFn:
    terms: tuple

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("SumFn needs at least one term")
        dims = {t.dim for t in terms if t.dim is not None}
        if len(dims) > 1:
            raise DimensionError(f"SumFn terms have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self):
        for t in self.terms:
            if t.dim is not None:
                return t.dim
        return None


def _arg(f, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (f.dim is not None and x.shape[0] != f.dim):
        raise DimensionError(f"point of shape {x.shape} does not match oracle dimension {f.dim}")
    return x


def value(f, x):
    x = _arg(f, x)
    if isinstance(f, QuadraticFn):
        return float(x @ (f.Q @ x) + f.q @ x + f.r)
    if isinstance(f, AbsResidualFn):
        return abs(f.y - f.b @ x)
    if isinstance(f, SquaredResidualFn):
        res = f.y - f.b @ x
        return float(res * res)
    if isinstance(f, L1RegFn):
        return f.weight * float(np.sum(np.abs(x)))
    if isinstance(f, SumFn):
        return float(sum(value(t, x) for t in f.terms))
    raise TypeError(f"unsupported oracle {type(f).__name__}")


def subgrad(f, x):
    x = _arg(f, x)
    if isinstance(f, QuadraticFn):
        return 2.0 * (f.Q @ x) + f.q
    if isinstance(f, AbsResidualFn):
        return -np.sign(f.y - f.b @ x) * f.b
    if isinstance(f, SquaredResidualFn):
        return -2.0 * (f.y - f.b @ x) * f.b
    if isinstance(f, L1RegFn):
        return f.weight * np.sign(x)
    if isinstance(f, SumFn):
        total = np.zeros_like(x)
        for t in f.terms:
            total = total + subgrad(t, x)
        return total
    raise TypeError(f"unsupported oracle {type(f).__name__}")


def total(oracles):
    """Centralized objective ``sum_i f_i``."""
    return SumFn(tuple(oracles))


def lipschitz_estimate(f, S, samples, seed):
    """Largest subgradient norm over ``samples`` random points of ``S``.

    Points are drawn uniformly in the bounding box of ``S`` and projected onto
    it, so this is a lower estimate of the true bound.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = SplitMix64(seed)
    lo, hi = bounding_box(S)
    best = 0.0
    for _ in range(samples):
        point = np.array([rng.uniform(a, b) for a, b in zip(lo, hi)])
        g = subgrad(f, project(S, point))
        best = max(best, float(np.sqrt(g @ g)))
    return best


def _flatten(f):
    if isinstance(f, SumFn):
        out = []
        for t in f.terms:
            out.extend(_flatten(t))
        return out
    return [f]


class OracleStack:
    """Vectorized evaluation of one oracle per agent on an (m, n) array.

    Each oracle is flattened into quadratic, absolute-residual,
    squared-residual and l1 pieces; agents with fewer pieces are padded with
    zero terms, which contribute nothing to values or subgradients.
    """

    def __init__(self, oracles, dim):
        self.oracles = list(oracles)
        m, n = len(self.oracles), dim
        self.m, self.n = m, n
        pieces = [_flatten(f) for f in self.oracles]
        for f in self.oracles:
            if f.dim is not None and f.dim != n:
                raise DimensionError(f"oracle dimension {f.dim} does not match {n}")
        self.has_quad = any(isinstance(p, QuadraticFn) for ps in pieces for p in ps)
        self.Q = np.zeros((m, n, n))
        self.q = np.zeros((m, n))
        self.r = np.zeros(m)
        self.l1 = np.zeros(m)
        n_abs = max(sum(isinstance(p, AbsResidualFn) for p in ps) for ps in pieces)
        n_sq = max(sum(isinstance(p, SquaredResidualFn) for p in ps) for ps in pieces)
        self.abs_b = np.zeros((m, n_abs, n))
        self.abs_y = np.zeros((m, n_abs))
        self.sq_b = np.zeros((m, n_sq, n))
        self.sq_y = np.zeros((m, n_sq))
        for i, ps in enumerate(pieces):
            ia = isq = 0
            for p in ps:
                if isinstance(p, QuadraticFn):
                    self.Q[i] += p.Q
                    self.q[i] += p.q
                    self.r[i] += p.r
                elif isinstance(p, AbsResidualFn):
                    self.abs_b[i, ia], self.abs_y[i, ia] = p.b, p.y
                    ia += 1
                elif isinstance(p, SquaredResidualFn):
                    self.sq_b[i, isq], self.sq_y[i, isq] = p.b, p.y
                    isq += 1
                elif isinstance(p, L1RegFn):
                    self.l1[i] += p.weight
                else:
                    raise TypeError(f"unsupported oracle {type(p).__name__}")
        self.has_abs = n_abs > 0
        self.has_sq = n_sq > 0
        self.has_l1 = bool(np.any(self.l1 > 0))

    def values(self, X):
        out = self.r.copy()
        if self.has_quad:
            out += np.einsum("ki,kij,kj->k", X, self.Q, X) + np.einsum("ki,ki->k", self.q, X)
        if self.has_abs:
            res = self.abs_y - np.einsum("ktj,kj->kt", self.abs_b, X)
            out += np.abs(res).sum(axis=1)
        if self.has_sq:
            res = self.sq_y - np.einsum("ktj,kj->kt", self.sq_b, X)
            out += (res * res).sum(axis=1)
        if self.has_l1:
            out += self.l1 * np.abs(X).sum(axis=1)
        return out

    def smooth_grads(self, X):
        """Gradient of the quadratic and squared-residual pieces."""
        G = np.zeros_like(X)
        if self.has_quad:
            G += 2.0 * np.einsum("kij,kj->ki", self.Q, X) + self.q
        if self.has_sq:
            res = self.sq_y - np.einsum("ktj,kj->kt", self.sq_b, X)
            G -= 2.0 * np.einsum("kt,ktj->kj", res, self.sq_b)
        return G

    def abs_subgrads(self, X):
        G = np.zeros_like(X)
        if self.has_abs:
            res = self.abs_y - np.einsum("ktj,kj->kt", self.abs_b, X)
            G -= np.einsum("kt,ktj->kj", np.sign(res), self.abs_b)
        return G

    def subgrads(self, X):
        G = self.smooth_grads(X)
        if self.has_abs:
            G += self.abs_subgrads(X)
        if self.has_l1:
            G += self.l1[:, None] * np.sign(X)
        return G

    def curvature(self):
        """``||Q_i||_F`` of each agent's combined quadratic part."""
        H = self.Q + np.einsum("kti,ktj->kij", self.sq_b, self.sq_b)
        return np.sqrt(np.einsum("kij,kij->k", H, H))
