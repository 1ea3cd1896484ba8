"""Ground truth for small clouds: brute-force alignment and reconstruction.

Nothing here uses the invariants, so it can serve as an independent check on
them: two clouds are isometric exactly when some point bijection admits an
orthogonal alignment with (near) zero residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousInputError, IncomparableInputError, InvalidInputError, NonEmbeddableError
from .geometry import DEFAULT_TOL, Isometry, PointCloud, Tolerance, as_cloud, orientation_sign, pairwise_distances
from .invariants import Ord
from .strength import as_distance_matrix

__all__ = [
    "AlignmentResult",
    "MAX_ORACLE_POINTS",
    "procrustes",
    "brute_force_isometric",
    "reconstruct_from_distances",
    "reconstruct_from_ord",
]

MAX_ORACLE_POINTS = 8


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    """Outcome of :func:`brute_force_isometric`.

    When ``matched`` is true, ``transform(a.points[i])`` lies within
    ``max_residual`` of ``b.points[permutation[i]]`` for every ``i``.
    """

    matched: bool
    rms: float
    max_residual: float
    permutation: tuple[int, ...] | None
    transform: Isometry | None

    def __bool__(self):
        return self.matched


def procrustes(x, y, rigid: bool = False) -> Isometry:
    """Best orthogonal map plus translation taking rows of ``x`` onto rows of ``y``.

    With ``rigid`` the linear part is forced to have determinant +1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 2:
        raise InvalidInputError(f"need two (m, n) arrays of equal shape, got {x.shape} and {y.shape}")
    cx, cy = x.mean(axis=0), y.mean(axis=0)
    u, _, vt = np.linalg.svd((x - cx).T @ (y - cy))
    q = vt.T @ u.T
    if rigid and np.linalg.det(q) < 0:
        vt = vt.copy()
        vt[-1] = -vt[-1]
        q = vt.T @ u.T
    return Isometry(q, cy - q @ cx)


def brute_force_isometric(a, b, mode: str = "isometry", tol: float = 1e-6,
                          max_points: int = MAX_ORACLE_POINTS) -> AlignmentResult:
    """Search point bijections for an alignment of ``a`` onto ``b``.

    Bijections are grown point by point and pruned as soon as a pair of
    distances disagrees by more than ``2 * tol`` (a necessary condition for a
    residual within ``tol``).  Each complete bijection is aligned by
    :func:`procrustes`; the first with max residual ``<= tol`` is returned.
    ``mode="rigid"`` restricts to orientation-preserving maps.
    """
    if mode not in ("rigid", "isometry"):
        raise InvalidInputError(f"mode must be 'rigid' or 'isometry', got {mode!r}")
    a, b = as_cloud(a), as_cloud(b)
    if a.m != b.m or a.dim != b.dim:
        raise IncomparableInputError(f"clouds differ in size: m={a.m}, n={a.dim} vs m={b.m}, n={b.dim}")
    if a.m > max_points:
        raise InvalidInputError(f"brute-force oracle is limited to {max_points} points, got {a.m}")
    pa, pb = a.points, b.points
    da, db = pairwise_distances(pa), pairwise_distances(pb)
    slack = 2.0 * tol
    m = a.m
    # candidates for each point of a: points of b with a matching distance profile
    prof_a, prof_b = np.sort(da, axis=1), np.sort(db, axis=1)
    cand = [[j for j in range(m) if np.max(np.abs(prof_a[i] - prof_b[j])) <= slack] for i in range(m)]
    order = sorted(range(m), key=lambda i: len(cand[i]))
    assign = [-1] * m
    used = [False] * m
    fail = AlignmentResult(False, np.inf, np.inf, None, None)

    def check_full():
        perm = np.array(assign)
        iso = procrustes(pa, pb[perm], rigid=(mode == "rigid"))
        res = np.linalg.norm(iso(pa) - pb[perm], axis=1)
        worst = float(res.max())
        if worst <= tol:
            return AlignmentResult(True, float(np.sqrt(np.mean(res**2))), worst, tuple(int(j) for j in perm), iso)
        return None

    def extend(depth):
        if depth == m:
            return check_full()
        i = order[depth]
        for j in cand[i]:
            if used[j]:
                continue
            if any(abs(da[i, order[t]] - db[j, assign[order[t]]]) > slack for t in range(depth)):
                continue
            assign[i], used[j] = j, True
            found = extend(depth + 1)
            if found is not None:
                return found
            assign[i], used[j] = -1, False
        return None

    return extend(0) or fail


def _place(placed: np.ndarray, rank: int, dists: np.ndarray, n: int, scale: float, tol: Tolerance):
    """Coordinates matching ``dists`` to the placed points, which occupy the first ``rank`` axes.

    Returns the new point and its height above that span (``>= 0``).
    """
    x = np.zeros(n)
    if rank > 0:
        # |x - p_i|^2 - |x - p_0|^2 with p_0 = 0 gives linear equations in x[:rank]
        lhs = 2.0 * placed[1:, :rank]
        rhs = np.sum(placed[1:] ** 2, axis=1) + dists[0] ** 2 - dists[1:] ** 2
        x[:rank] = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    h2 = dists[0] ** 2 - float(x @ x)
    if h2 < -max(tol.eps_zero, 1e-9) * scale**2 * 1e3:
        raise NonEmbeddableError("distances violate the triangle inequality")
    return x, np.sqrt(max(h2, 0.0))


def reconstruct_from_distances(d, n: int, tol: Tolerance = DEFAULT_TOL) -> PointCloud:
    """Points in ``R^n`` whose distance matrix is ``d``, built one point at a time.

    The first point is the origin and the ``k``-th new affine direction is the
    ``k``-th coordinate axis.  Each point is located from its distances to the
    points already placed: differences of the squared-distance equations are
    linear, and the remaining height above their span is the new coordinate.
    """
    full = as_distance_matrix(d)
    h = full.shape[0]
    if h == 0:
        raise InvalidInputError("need at least one point")
    if n < 1:
        raise InvalidInputError("dimension must be positive")
    scale = max(float(full.max()), 1e-300)
    pts = np.zeros((h, n))
    rank = 0
    flat = 1e-6 * scale
    for k in range(1, h):
        x, height = _place(pts[:k], rank, full[k, :k], n, scale, tol)
        if height > flat:
            if rank == n:
                raise NonEmbeddableError(f"distances need more than {n} dimensions")
            x[rank] = height
            rank += 1
        pts[k] = x
    err = np.max(np.abs(pairwise_distances(pts) - full))
    if err > 1e-6 * scale:
        raise NonEmbeddableError(f"distances are not realisable in R^{n} (error {err:.3g})")
    return PointCloud(pts)


def reconstruct_from_ord(x: Ord, tol: Tolerance = DEFAULT_TOL) -> PointCloud:
    """A cloud whose ORD is ``x``, unique up to rigid motion.

    The basis is placed by :func:`reconstruct_from_distances` in the first
    ``n - 1`` axes; each column point is then fixed by its distances up to a
    reflection in that hyperplane, and the stored sign picks the side.
    """
    if not isinstance(x, Ord):
        raise InvalidInputError("reconstruction needs an Ord")
    n = x.h
    basis = reconstruct_from_distances(x.basis_dist, n, tol).points
    scale = x.scale
    span = np.linalg.matrix_rank(basis[1:] - basis[0], tol=1e-9 * scale) if n > 1 else 0
    if span < n - 1:
        raise AmbiguousInputError("basis is degenerate, the column points are not determined")
    pts = [basis]
    for j in range(x.n_columns):
        q, height = _place(basis, n - 1, x.rel_dists[j], n, scale, tol)
        q[n - 1] = height
        want = int(x.signs[j])
        if want != 0 and orientation_sign(q - basis, tol) != want:
            q[n - 1] = -height
        pts.append(q[None])
    return PointCloud(np.vstack(pts))
