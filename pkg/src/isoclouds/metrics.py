"""Distances between invariants.

``m_inf`` compares two ORDs (or two OCDs): minimise over basis permutations the
larger of the L-infinity gap between basis distance matrices and the bottleneck
distance between the columns viewed as points ``(distances..., s * sigma / c_n)``
under the Chebyshev norm.  Distributions are then compared either by linear
assignment of the uncollapsed lists (LAC) or by the Earth Mover's Distance on
the collapsed, weighted form (EMD).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import scipy.optimize
import scipy.sparse
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import IncomparableInputError, InvalidInputError
from .geometry import DEFAULT_TOL, Tolerance, as_cloud
from .invariants import WeightedDistribution, build_osd, build_scd, mirror

__all__ = [
    "linf",
    "chebyshev_costs",
    "bottleneck",
    "bottleneck_from_costs",
    "m_inf",
    "m_inf_ord",
    "m_inf_ocd",
    "cost_matrix",
    "lac",
    "emd",
    "distribution_distance",
    "osd_distance",
    "scd_distance",
    "METHODS",
    "MODES",
]

METHODS = ("lac", "emd")
MODES = ("rigid", "isometry")
WEIGHT_SUM_ATOL = 1e-12


def linf(a, b) -> float:
    """Largest absolute entrywise difference of two equal-shape arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def chebyshev_costs(a, b) -> np.ndarray:
    """``(k, l)`` matrix of Chebyshev (max-coordinate) distances between rows."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise InvalidInputError(f"need (k, d) and (l, d) arrays, got {a.shape} and {b.shape}")
    return np.abs(a[:, None, :] - b[None, :, :]).max(axis=-1, initial=0.0)


SMALL_MATCHING = 12


def _perfect_small(allowed: np.ndarray) -> bool:
    """Perfect matching test by augmenting paths over row bitmasks; fast for tiny graphs."""
    k = allowed.shape[0]
    adj = [int(sum(1 << j for j in np.flatnonzero(row))) for row in allowed]
    owner = [-1] * k

    def augment(i: int, seen: int) -> int:
        cand = adj[i] & ~seen
        while cand:
            low = cand & -cand
            j = low.bit_length() - 1
            seen |= low
            if owner[j] < 0:
                owner[j] = i
                return -1
            seen = augment(owner[j], seen)
            if seen < 0:
                owner[j] = i
                return -1
            cand = adj[i] & ~seen
        return seen

    return all(augment(i, 0) < 0 for i in range(k))


def _perfect_at(costs: np.ndarray, t: float) -> bool:
    allowed = costs <= t
    if not (allowed.any(axis=0).all() and allowed.any(axis=1).all()):
        return False
    if costs.shape[0] <= SMALL_MATCHING:
        return _perfect_small(allowed)
    # build the CSR arrays directly; converting from a dense matrix is much slower
    rows, cols = np.nonzero(allowed)
    indptr = np.zeros(costs.shape[0] + 1, dtype=np.int32)
    np.cumsum(np.bincount(rows, minlength=costs.shape[0]), out=indptr[1:])
    graph = scipy.sparse.csr_matrix((np.ones(rows.size, dtype=bool), cols.astype(np.int32), indptr),
                                    shape=costs.shape)
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck_from_costs(costs, cutoff: float = math.inf) -> float:
    """Min over bijections of the max cost, for a square cost matrix.

    Binary search over the distinct entries with a maximum-matching feasibility
    test.  When ``cutoff`` is finite and no bijection beats it, ``inf`` is
    returned (the caller only needs to know the value is not an improvement).
    """
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidInputError(f"bottleneck needs a square cost matrix, got {c.shape}")
    k = c.shape[0]
    if k == 0:
        return 0.0
    # every row and every column has to be matched somewhere
    lb = max(c.min(axis=1).max(), c.min(axis=0).max())
    if lb >= cutoff:
        return math.inf
    cand = np.unique(c[(c >= lb) & (c < cutoff)])
    if cand.size == 0:
        return math.inf
    if _perfect_at(c, cand[0]):
        return float(cand[0])
    if not _perfect_at(c, cand[-1]):
        return math.inf
    lo, hi = 0, cand.size - 1  # cand[lo] infeasible, cand[hi] feasible
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _perfect_at(c, cand[mid]):
            hi = mid
        else:
            lo = mid
    return float(cand[hi])


def bottleneck(a, b) -> float:
    """Bottleneck distance between two equal-size unlabelled point sets (Chebyshev norm)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"point sets must have equal size and dimension, got {a.shape} vs {b.shape}")
    return bottleneck_from_costs(chebyshev_costs(a, b))


def _check_pair(x, y):
    if type(x) is not type(y):
        raise IncomparableInputError(f"cannot compare {type(x).__name__} with {type(y).__name__}")
    if x.h != y.h or x.n_columns != y.n_columns:
        raise IncomparableInputError(
            f"sizes differ: basis {x.h} vs {y.h}, columns {x.n_columns} vs {y.n_columns}"
        )


def m_inf(x, y, cutoff: float = math.inf) -> float:
    """M-infinity distance between two ORDs or two OCDs of equal size."""
    _check_pair(x, y)
    dy, py = y.permuted_views()[0]
    best = cutoff
    for dx, px in x.permuted_views():
        dpart = float(np.max(np.abs(dx - dy), initial=0.0))
        if dpart >= best:
            continue
        w = bottleneck_from_costs(np.abs(px[:, None, :] - py[None, :, :]).max(axis=-1, initial=0.0), cutoff=best)
        best = min(best, max(dpart, w))
    return best


def m_inf_ord(x, y) -> float:
    return m_inf(x, y)


def m_inf_ocd(x, y) -> float:
    return m_inf(x, y)


def cost_matrix(xs, ys) -> np.ndarray:
    """Pairwise ``m_inf`` between two sequences of invariants."""
    out = np.empty((len(xs), len(ys)))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            out[i, j] = m_inf(x, y)
    return out


def lac(costs) -> float:
    """Linear assignment cost: mean cost of an optimal bijection of a square matrix."""
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
        raise InvalidInputError(f"LAC needs a non-empty square cost matrix, got {c.shape}")
    rows, cols = scipy.optimize.linear_sum_assignment(c)
    return float(c[rows, cols].sum() / c.shape[0])


def _as_masses(weights) -> list[Fraction]:
    fr = [w if isinstance(w, Fraction) else Fraction(w) for w in weights]
    if not fr:
        raise InvalidInputError("weights must be non-empty")
    if any(w < 0 for w in fr):
        raise InvalidInputError("weights must be non-negative")
    total = sum(fr)
    if abs(float(total) - 1.0) > WEIGHT_SUM_ATOL:
        raise InvalidInputError(f"weights must sum to 1, got {float(total)!r}")
    # absorb rounding in float input so both sides carry exactly unit mass
    return [w / total for w in fr]


def emd(wx, wy, costs, return_flow: bool = False):
    """Earth Mover's Distance between weighted sets, by successive shortest paths.

    Weights are converted to exact rationals and scaled to integers, so the
    flow is exactly feasible; costs stay floats.  Each round runs Dijkstra on
    reduced costs from all sources with spare supply, then pushes as much as the
    path allows into the first reached sink with spare demand.
    """
    c = np.asarray(costs, dtype=float)
    a, b = _as_masses(wx), _as_masses(wy)
    k, l = len(a), len(b)
    if c.shape != (k, l):
        raise InvalidInputError(f"cost matrix shape {c.shape} does not match weights ({k}, {l})")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise InvalidInputError("costs must be finite and non-negative")
    denom = math.lcm(*(w.denominator for w in a + b))
    sup = [int(w * denom) for w in a]
    dem = [int(w * denom) for w in b]
    flow = [[0] * l for _ in range(k)]
    pot_l = np.zeros(k)
    pot_r = np.zeros(l)
    while any(sup):
        dist_l = np.where(np.array(sup) > 0, 0.0, np.inf)
        dist_r = np.full(l, np.inf)
        prev_r = np.full(l, -1)
        prev_l = np.full(k, -1)
        done_l = np.zeros(k, dtype=bool)
        done_r = np.zeros(l, dtype=bool)
        target = -1
        while True:
            cl = np.where(done_l, np.inf, dist_l)
            cr = np.where(done_r, np.inf, dist_r)
            i, j = int(np.argmin(cl)), int(np.argmin(cr))
            if cl[i] == np.inf and cr[j] == np.inf:
                break
            if cl[i] <= cr[j]:
                done_l[i] = True
                nd = dist_l[i] + np.maximum(c[i] + pot_l[i] - pot_r, 0.0)
                better = ~done_r & (nd < dist_r)
                dist_r[better] = nd[better]
                prev_r[better] = i
            else:
                done_r[j] = True
                if dem[j] > 0:
                    target = j
                    break
                back = np.array([flow[ii][j] > 0 for ii in range(k)])
                nd = dist_r[j] + np.maximum(-c[:, j] + pot_r[j] - pot_l, 0.0)
                better = back & ~done_l & (nd < dist_l)
                dist_l[better] = nd[better]
                prev_l[better] = j
        if target < 0:
            raise RuntimeError("no augmenting path; masses are unbalanced")
        reach = dist_r[target]
        pot_l += np.minimum(dist_l, reach)
        pot_r += np.minimum(dist_r, reach)
        # walk the path back to its source, collecting the push amount
        path = []
        j = target
        push = dem[target]
        while True:
            i = int(prev_r[j])
            path.append((i, j))
            jb = int(prev_l[i])
            if jb < 0:
                push = min(push, sup[i])
                break
            push = min(push, flow[i][jb])
            j = jb
        source = path[-1][0]
        for idx, (i, j) in enumerate(path):
            flow[i][j] += push
            if idx + 1 < len(path):
                flow[i][path[idx + 1][1]] -= push
        sup[source] -= push
        dem[target] -= push
    value = math.fsum(float(Fraction(flow[i][j], denom)) * c[i, j] for i in range(k) for j in range(l) if flow[i][j])
    if return_flow:
        return value, [[Fraction(f, denom) for f in row] for row in flow]
    return value


def _check_distributions(x: WeightedDistribution, y: WeightedDistribution):
    if x.kind != y.kind:
        raise IncomparableInputError(f"cannot compare {x.kind} with {y.kind}")
    if x.m != y.m or x.dim != y.dim:
        raise IncomparableInputError(f"clouds differ in size: m={x.m}, n={x.dim} vs m={y.m}, n={y.dim}")


def _rigid_distance(x: WeightedDistribution, y: WeightedDistribution, method: str) -> float:
    costs = cost_matrix(x.items, y.items)
    if method == "emd":
        return emd(x.weights, y.weights, costs)
    # LAC works on the uncollapsed lists; repeating rows/columns of the
    # distinct-item costs gives exactly that matrix
    full = np.repeat(np.repeat(costs, x.counts, axis=0), y.counts, axis=1)
    return lac(full)


def distribution_distance(x: WeightedDistribution, y: WeightedDistribution, method: str = "emd",
                          mode: str = "rigid", tol: Tolerance = DEFAULT_TOL) -> float:
    """LAC or EMD between two OSDs or two SCDs.

    ``mode="isometry"`` also compares against the mirror image of ``y`` and
    returns the smaller value.
    """
    if method not in METHODS:
        raise InvalidInputError(f"method must be one of {METHODS}, got {method!r}")
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    _check_distributions(x, y)
    d = _rigid_distance(x, y, method)
    if mode == "isometry" and d > 0.0:
        d = min(d, _rigid_distance(x, mirror(y, tol), method))
    return d


def _check_clouds(a, b):
    a, b = as_cloud(a), as_cloud(b)
    if a.m != b.m or a.dim != b.dim:
        raise IncomparableInputError(f"clouds differ in size: m={a.m}, n={a.dim} vs m={b.m}, n={b.dim}")
    return a, b


def osd_distance(a, b, method: str = "emd", mode: str = "rigid", tol: Tolerance = DEFAULT_TOL) -> float:
    """Distance between the OSDs of two clouds with equal ``m`` and ``n``."""
    a, b = _check_clouds(a, b)
    return distribution_distance(build_osd(a, tol), build_osd(b, tol), method, mode, tol)


_SAME = object()


def scd_distance(a, b, method: str = "emd", mode: str = "rigid", anchor=None, anchor_b=_SAME,
                 tol: Tolerance = DEFAULT_TOL) -> float:
    """Distance between the SCDs of two clouds with equal ``m`` and ``n``.

    ``anchor`` is passed to :func:`~isoclouds.invariants.build_scd` for ``a``
    and, unless ``anchor_b`` is given, also for ``b`` (default: centre of mass).
    """
    a, b = _check_clouds(a, b)
    if anchor_b is _SAME:
        anchor_b = anchor
    return distribution_distance(build_scd(a, anchor, tol), build_scd(b, anchor_b, tol), method, mode, tol)
