"""Point-cloud primitives: distances, centring, orientation and isometries."""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np
import scipy.linalg

from .errors import InvalidInputError

__all__ = [
    "PointCloud",
    "Tolerance",
    "DEFAULT_TOL",
    "Isometry",
    "as_cloud",
    "centre_of_mass",
    "centre_cloud",
    "distance",
    "pairwise_distances",
    "orientation_sign",
    "orientation_signs",
    "affine_dimension",
    "random_isometry",
    "apply_isometry",
]


@dataclass(frozen=True)
class Tolerance:
    """Thresholds used to decide when a float counts as zero or as a tie.

    ``eps_zero`` is relative: a determinant is zero when its magnitude is at
    most ``eps_zero`` times the product of its column norms, and two entries of
    an invariant tie when they differ by at most ``eps_zero`` times the
    invariant's own scale.
    """

    eps_zero: float = 1e-9

    def __post_init__(self):
        if not (self.eps_zero >= 0.0) or not np.isfinite(self.eps_zero):
            raise InvalidInputError(f"eps_zero must be a finite non-negative number, got {self.eps_zero}")


DEFAULT_TOL = Tolerance()


class PointCloud:
    """An unordered set of ``m`` points in ``R^n`` stored as an ``(m, n)`` array.

    The array is copied and made read-only, so clouds can be shared freely.
    Point order carries no meaning for any invariant; it only fixes indices
    for APIs that take a basis by index.
    """

    __slots__ = ("_points",)

    def __init__(self, points, dim: int | None = None):
        arr = np.array(points, dtype=float)
        if arr.ndim == 1:
            if dim is None and arr.size:
                raise InvalidInputError("1-D input is ambiguous; pass an (m, n) array or give dim")
            arr = arr.reshape(-1, dim if dim else 1)
        if arr.ndim != 2:
            raise InvalidInputError(f"points must form an (m, n) array, got shape {arr.shape}")
        if dim is not None and arr.shape[1] != dim:
            raise InvalidInputError(f"expected {dim} coordinates per point, got {arr.shape[1]}")
        if arr.shape[0] < 1:
            raise InvalidInputError("a cloud needs at least one point")
        if arr.shape[1] < 1:
            raise InvalidInputError("points need at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("all coordinates must be finite")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    @property
    def m(self) -> int:
        return self._points.shape[0]

    def __len__(self):
        return self.m

    def __iter__(self):
        return iter(self._points)

    def __array__(self, dtype=None, copy=None):
        return self._points if dtype is None else self._points.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self._points.shape == other._points.shape and bool(np.array_equal(self._points, other._points))

    def __hash__(self):
        return hash((self._points.shape, self._points.tobytes()))

    def __repr__(self):
        return f"PointCloud(m={self.m}, n={self.dim})"


def as_cloud(cloud) -> PointCloud:
    """Return ``cloud`` unchanged if it is a PointCloud, else wrap it."""
    if isinstance(cloud, PointCloud):
        return cloud
    return PointCloud(cloud)


def centre_of_mass(cloud) -> np.ndarray:
    """Coordinate-wise mean of the points.

    Sums are correctly rounded, so the result does not depend on point order.
    """
    pts = np.asarray(cloud.points if isinstance(cloud, PointCloud) else cloud, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidInputError("centre of mass of an empty cloud is undefined")
    return np.array([math.fsum(col) for col in pts.T]) / pts.shape[0]


def centre_cloud(cloud, anchor=None) -> PointCloud:
    """Translate ``cloud`` so that ``anchor`` (default: centre of mass) is the origin."""
    cloud = as_cloud(cloud)
    origin = centre_of_mass(cloud) if anchor is None else np.asarray(anchor, dtype=float)
    if origin.shape != (cloud.dim,):
        raise InvalidInputError(f"anchor must have {cloud.dim} coordinates")
    return PointCloud(cloud.points - origin)


def distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise InvalidInputError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(np.linalg.norm(p - q))


def pairwise_distances(points) -> np.ndarray:
    """Full symmetric matrix of Euclidean distances between rows of ``points``."""
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def orientation_signs(vectors, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Vectorised :func:`orientation_sign` over a stack of shape ``(..., n, n)``.

    Each ``(n, n)`` block holds ``n`` vectors as rows; the determinant is the
    same whether they are read as rows or columns.
    """
    vecs = np.asarray(vectors, dtype=float)
    if vecs.ndim < 2 or vecs.shape[-1] != vecs.shape[-2]:
        raise InvalidInputError(f"need n vectors of dimension n, got shape {vecs.shape}")
    if vecs.shape[-1] == 0:
        return np.ones(vecs.shape[:-2], dtype=np.int8)
    det = np.linalg.det(vecs)
    scale = np.prod(np.linalg.norm(vecs, axis=-1), axis=-1)
    signs = np.sign(det).astype(np.int8)
    signs[np.abs(det) <= tol.eps_zero * scale] = 0
    return signs


def orientation_sign(vectors, tol: Tolerance = DEFAULT_TOL) -> int:
    """Sign of the determinant of ``n`` vectors in ``R^n``, with 0 for near-singular sets.

    Zero is returned when ``|det| <= eps_zero * prod(|v_i|)``, which makes the
    test independent of the cloud's scale.
    """
    return int(orientation_signs(np.asarray(vectors, dtype=float)[None], tol)[0])


def affine_dimension(cloud, tol: Tolerance = DEFAULT_TOL) -> int:
    """Numerical rank of ``{p_i - p_1}`` using column-pivoted QR.

    A diagonal entry of R counts towards the rank when it exceeds
    ``eps_zero`` times the norm of the longest difference vector.
    """
    pts = np.asarray(cloud.points if isinstance(cloud, PointCloud) else cloud, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidInputError("affine dimension needs a non-empty (m, n) array")
    diffs = pts[1:] - pts[0]
    if diffs.shape[0] == 0:
        return 0
    scale = np.linalg.norm(diffs, axis=1).max()
    if scale == 0.0:
        return 0
    r = scipy.linalg.qr(diffs.T, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    return int(np.count_nonzero(diag > tol.eps_zero * scale))


@dataclass(frozen=True, eq=False)
class Isometry:
    """The map ``x -> Q x + t`` with ``Q`` orthogonal."""

    linear: np.ndarray
    translation: np.ndarray

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    @property
    def preserves_orientation(self) -> bool:
        return bool(np.linalg.det(self.linear) > 0)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.translation

    @classmethod
    def identity(cls, dim: int) -> "Isometry":
        return cls(np.eye(dim), np.zeros(dim))


def random_isometry(dim: int, orientation: str = "preserve", seed=None, scale: float = 1.0) -> Isometry:
    """Draw a Haar-random orthogonal map plus a Gaussian translation.

    ``orientation`` is ``"preserve"`` (det +1) or ``"reverse"`` (det -1).
    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    if dim < 1:
        raise InvalidInputError("dimension must be positive")
    if orientation not in ("preserve", "reverse"):
        raise InvalidInputError(f"orientation must be 'preserve' or 'reverse', got {orientation!r}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    want = 1.0 if orientation == "preserve" else -1.0
    if np.sign(np.linalg.det(q)) != want:
        q[:, 0] = -q[:, 0]
    return Isometry(q, scale * rng.standard_normal(dim))


def apply_isometry(cloud, isometry: Isometry) -> PointCloud:
    cloud = as_cloud(cloud)
    if isometry.dim != cloud.dim:
        raise InvalidInputError(f"isometry acts on R^{isometry.dim}, cloud lives in R^{cloud.dim}")
    return PointCloud(isometry(cloud.points))
