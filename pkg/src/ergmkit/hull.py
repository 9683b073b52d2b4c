"""Dense linear programming and convex-hull geometry.

A two-phase primal simplex over the standard form (nonnegative
variables, rows with <=, =, >= senses) using Bland's anti-cycling rule,
which guarantees termination.  On top of it, the exact boundary
multiplier: the largest t >= 0 such that center + t * (x - center)
stays inside the convex hull of a point cloud, found by one LP.  The
multiplier is at least 1 exactly when x itself is in the hull, and it
drives both the step-length scaling of the likelihood update and the
hull membership test.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = ["LinearProgram", "LpResult", "simplex_solve",
           "boundary_multiplier", "scale_into_hull", "in_hull"]

_TOL = 1e-9
_BOUNDARY_BAND = 1e-7


@dataclass
class LinearProgram:
    """max/min c'x subject to A x (<=, =, >=) b and x >= 0."""

    objective: np.ndarray
    A: np.ndarray
    senses: list
    b: np.ndarray
    sense: str = "max"

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        m, n = self.A.shape
        if self.objective.shape != (n,):
            raise DataError("objective length must match the column count")
        if self.b.shape != (m,) or len(self.senses) != m:
            raise DataError("need one rhs value and one sense per row")
        if any(s not in ("<=", "=", ">=") for s in self.senses):
            raise DataError("row senses must be <=, = or >=")
        if self.sense not in ("max", "min"):
            raise DataError("sense must be max or min")


@dataclass
class LpResult:
    status: str                      # optimal | infeasible | unbounded
    x: np.ndarray = field(default=None)
    objective: float = float("nan")


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    piv = T[row]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * piv
    basis[row] = col


def _bland_iterate(T, basis, ncols):
    """Run simplex iterations on tableau T (last row = reduced costs,
    last column = rhs), entering by Bland's smallest-index rule."""
    m = T.shape[0] - 1
    while True:
        cost = T[-1, :ncols]
        enter = -1
        for jcol in range(ncols):
            if cost[jcol] > _TOL:
                enter = jcol
                break
        if enter < 0:
            return "optimal"
        col = T[:m, enter]
        best = -1
        best_ratio = math.inf
        for r in range(m):
            if col[r] > _TOL:
                ratio = T[r, -1] / col[r]
                if ratio < best_ratio - _TOL or \
                        (ratio < best_ratio + _TOL and
                         (best < 0 or basis[r] < basis[best])):
                    best = r
                    best_ratio = ratio
        if best < 0:
            return "unbounded"
        _pivot(T, basis, best, enter)


def simplex_solve(lp):
    """Solve a LinearProgram; returns LpResult.

    Phase 1 drives artificial variables out; a positive phase-1
    optimum means infeasible.  Phase 2 then optimizes the objective,
    reporting unbounded when no leaving row exists.
    """
    A = lp.A.copy()
    b = lp.b.copy()
    senses = list(lp.senses)
    m, n = A.shape
    c = lp.objective if lp.sense == "max" else -lp.objective

    # normalize to nonnegative rhs
    for r in range(m):
        if b[r] < 0:
            A[r] = -A[r]
            b[r] = -b[r]
            senses[r] = {"<=": ">=", ">=": "<=", "=": "="}[senses[r]]

    slack_cols = sum(1 for s in senses if s != "=")
    art_cols = sum(1 for s in senses if s != "<=")
    total = n + slack_cols + art_cols
    T = np.zeros((m + 1, total + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = [-1] * m
    sk = n
    ak = n + slack_cols
    art_index = []
    for r, s in enumerate(senses):
        if s == "<=":
            T[r, sk] = 1.0
            basis[r] = sk
            sk += 1
        elif s == ">=":
            T[r, sk] = -1.0
            sk += 1
            T[r, ak] = 1.0
            basis[r] = ak
            art_index.append(ak)
            ak += 1
        else:
            T[r, ak] = 1.0
            basis[r] = ak
            art_index.append(ak)
            ak += 1

    if art_index:
        # phase 1: maximize -(sum of artificials)
        for r in range(m):
            if basis[r] in art_index:
                T[-1, :total] += T[r, :total]
                T[-1, -1] += T[r, -1]
        for a in art_index:
            T[-1, a] = 0.0
        status = _bland_iterate(T, basis, total)
        if status != "optimal" or T[-1, -1] > 1e-7 * max(1.0, abs(b).max()):
            return LpResult(status="infeasible")
        # drive lingering artificials out of the basis where possible
        for r in range(m):
            if basis[r] in art_index:
                for jcol in range(n + slack_cols):
                    if abs(T[r, jcol]) > _TOL:
                        _pivot(T, basis, r, jcol)
                        break
        for a in art_index:
            T[:, a] = 0.0

    # phase 2
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r in range(m):
        col = basis[r]
        if T[-1, col] != 0.0:
            T[-1] -= T[-1, col] * T[r]
    status = _bland_iterate(T, basis, n + slack_cols)
    if status == "unbounded":
        return LpResult(status="unbounded")
    x = np.zeros(n)
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = T[r, -1]
    value = float(lp.objective @ x)
    return LpResult(status="optimal", x=x, objective=value)


def _prepare_cloud(points, x, center):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    x = np.asarray(x, dtype=float).ravel()
    if center is None:
        center = points.mean(axis=0)
    else:
        center = np.asarray(center, dtype=float).ravel()
    if points.shape[1] != x.size or center.size != x.size:
        raise DataError("point cloud, query and center dimensions disagree")
    return points, x, center


def boundary_multiplier(points, x, center=None):
    """The exact multiplier gamma putting center + gamma (x - center)
    on the hull boundary.

    gamma >= 1 iff x is in the hull; +inf when x equals the center; 0
    when even the center is outside the hull (degenerate input).  One
    LP: maximize t subject to center + t (x - center) being a convex
    combination of the points.
    """
    points, x, center = _prepare_cloud(points, x, center)
    S, p = points.shape
    d = x - center
    if float(np.abs(d).max()) < 1e-14 * max(1.0, float(np.abs(x).max())):
        return math.inf
    # columns: [t, lambda_1 .. lambda_S]
    A = np.zeros((p + 1, S + 1))
    A[:p, 0] = -d
    A[:p, 1:] = points.T
    A[p, 1:] = 1.0
    b = np.concatenate([center, [1.0]])
    obj = np.zeros(S + 1)
    obj[0] = 1.0
    lp = LinearProgram(obj, A, ["="] * (p + 1), b, sense="max")
    res = simplex_solve(lp)
    if res.status == "unbounded":
        return math.inf
    if res.status == "infeasible":
        return 0.0
    return float(res.x[0])


def in_hull(points, x, center=None):
    """Membership via the boundary multiplier, with a boundary band."""
    return boundary_multiplier(points, x, center) >= 1.0 - _BOUNDARY_BAND


def scale_into_hull(points, x, center=None, depth=0.95):
    """Pull x toward the cloud center until it sits depth-deep inside.

    Points with multiplier at least 1/depth are returned unchanged;
    otherwise the scaled point lands exactly at depth of the boundary
    distance, strictly inside the hull.  Idempotent.
    """
    if not (0.0 < depth <= 1.0):
        raise DataError("depth must lie in (0, 1]")
    points, x, center = _prepare_cloud(points, x, center)
    gamma = boundary_multiplier(points, x, center)
    if gamma >= (1.0 / depth) * (1.0 - 1e-9):
        return x.copy()
    return center + depth * gamma * (x - center)
