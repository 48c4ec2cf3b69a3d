"""Per-agent constraint sets: boxes and Euclidean balls.

Every set supports exact Euclidean projection, so the engines never need an
iterative projection routine.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSetError, DimensionError, InfeasibleError, PreconditionError
from .linalg import as_vector

VI_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BoxSet:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = as_vector(self.lower)
        upper = as_vector(self.upper)
        if lower.shape != upper.shape:
            raise DimensionError("box bounds must have the same length")
        if np.any(lower > upper):
            raise ValueError("box needs lower <= upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return self.lower.shape[0]

    def __eq__(self, other):
        return (isinstance(other, BoxSet) and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))

    def __repr__(self):
        return f"BoxSet(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(frozen=True, eq=False)
class BallSet:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        radius = float(self.radius)
        if not radius > 0 or not np.isfinite(radius):
            raise ValueError("ball radius must be a positive finite number")
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self):
        return self.center.shape[0]

    def __eq__(self, other):
        return (isinstance(other, BallSet) and np.array_equal(self.center, other.center)
                and self.radius == other.radius)

    def __repr__(self):
        return f"BallSet(center={self.center.tolist()}, radius={self.radius})"


def box(lower, upper):
    return BoxSet(lower, upper)


def ball(center, radius):
    return BallSet(center, radius)


def _point(S, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (S.dim,):
        raise DimensionError(f"point of shape {x.shape} does not match set dimension {S.dim}")
    return x


def project(S, x):
    x = _point(S, x)
    if isinstance(S, BoxSet):
        return np.minimum(np.maximum(x, S.lower), S.upper)
    if isinstance(S, BallSet):
        offset = x - S.center
        r = np.sqrt(offset @ offset)
        if r <= S.radius:
            return x.copy()
        return S.center + (S.radius / r) * offset
    raise TypeError(f"unsupported constraint set {type(S).__name__}")


def distance(S, x):
    x = _point(S, x)
    diff = x - project(S, x)
    return float(np.sqrt(diff @ diff))


def contains(S, x, tol=0.0):
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return distance(S, x) <= tol


def box_vi_holds(g, x, B, tol=VI_TOL):
    """Decide ``g.(xi - x) >= -tol`` for every ``xi`` in the box ``B``.

    The check is coordinate-wise: a coordinate sitting on its lower bound
    needs ``g_j >= -tol``, one on its upper bound needs ``g_j <= tol`` and an
    interior coordinate needs ``|g_j| <= tol``.
    """
    g = _point(B, g)
    x = _point(B, x)
    if np.any(x < B.lower - tol) or np.any(x > B.upper + tol):
        raise PreconditionError("box_vi_holds needs x inside the box")
    at_lower = np.abs(x - B.lower) <= tol
    at_upper = np.abs(x - B.upper) <= tol
    for j in range(B.dim):
        if at_lower[j] and at_upper[j]:
            continue
        if at_lower[j]:
            ok = g[j] >= -tol
        elif at_upper[j]:
            ok = g[j] <= tol
        else:
            ok = abs(g[j]) <= tol
        if not ok:
            return False
    return True


def intersect_boxes(boxes):
    boxes = list(boxes)
    if not boxes:
        raise ValueError("need at least one box")
    dims = {b.dim for b in boxes}
    if len(dims) != 1:
        raise DimensionError(f"boxes have mixed dimensions {sorted(dims)}")
    lower = np.max([b.lower for b in boxes], axis=0)
    upper = np.min([b.upper for b in boxes], axis=0)
    if np.any(lower > upper):
        bad = int(np.argmax(lower - upper))
        raise InfeasibleError(f"empty intersection in coordinate {bad}: {lower[bad]} > {upper[bad]}")
    return BoxSet(lower, upper)


def chebyshev_interior(B):
    """Midpoint of the box and the radius of the largest inscribed ball."""
    widths = B.upper - B.lower
    if np.any(widths <= 0):
        raise DegenerateSetError("box has zero width in some coordinate")
    return (B.lower + B.upper) / 2.0, float(np.min(widths) / 2.0)


def bounding_box(S):
    if isinstance(S, BoxSet):
        return S.lower, S.upper
    return S.center - S.radius, S.center + S.radius


class SetStack:
    """Row-wise projection of an (m, n) array onto m agent sets.

    Homogeneous stacks (all boxes or all balls) are handled with array
    operations; mixed stacks fall back to a per-row loop.
    """

    def __init__(self, sets):
        self.sets = list(sets)
        if not self.sets:
            raise ValueError("empty set stack")
        dims = {S.dim for S in self.sets}
        if len(dims) != 1:
            raise DimensionError(f"agent sets have mixed dimensions {sorted(dims)}")
        self.dim = dims.pop()
        self.kind = "mixed"
        if all(isinstance(S, BoxSet) for S in self.sets):
            self.kind = "box"
            self.lower = np.array([S.lower for S in self.sets])
            self.upper = np.array([S.upper for S in self.sets])
        elif all(isinstance(S, BallSet) for S in self.sets):
            self.kind = "ball"
            self.center = np.array([S.center for S in self.sets])
            self.radius = np.array([S.radius for S in self.sets])

    def __len__(self):
        return len(self.sets)

    def project(self, X):
        if self.kind == "box":
            return np.minimum(np.maximum(X, self.lower), self.upper)
        if self.kind == "ball":
            offset = X - self.center
            r = np.sqrt(np.einsum("ij,ij->i", offset, offset))
            out = X.copy()
            outside = r > self.radius
            if np.any(outside):
                scale = self.radius[outside] / r[outside]
                out[outside] = self.center[outside] + scale[:, None] * offset[outside]
            return out
        return np.array([project(S, x) for S, x in zip(self.sets, X)])

    def distances(self, v):
        """Distance from one point ``v`` to every set."""
        return np.array([distance(S, v) for S in self.sets])
