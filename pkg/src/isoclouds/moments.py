"""Flattened vector summaries of OSD/SCD and their coordinate-wise moments.

Each ORD is flattened to an average oriented vector (AOV)::

    sorted basis distances ++ sorted column means ++ sorted signed strengths

and each OCD to an average centred vector (ACV)::

    sorted basis distances (origin included) ++ sorted column means over the
    non-origin basis points ++ sorted |q| ++ sorted signed strengths

Moments of these vectors over all subsets are cheap to compare, and the L-inf
gap between first moments is a lower bound for the EMD between the
distributions, which makes it useful as a prefilter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import DEFAULT_TOL, Tolerance, as_cloud
from .invariants import Ocd, Ord, WeightedDistribution, build_ocd, build_ord, build_osd, build_scd

__all__ = [
    "MomentVector",
    "sorted_distance_vector",
    "average_oriented_vector",
    "average_centred_vector",
    "aov_from_ord",
    "acv_from_ocd",
    "moment",
    "odm",
    "cdm",
    "odm_length",
    "cdm_length",
]


def odm_length(m: int, n: int) -> int:
    return n * (n - 1) // 2 + 2 * (m - n)


def cdm_length(m: int, n: int) -> int:
    return n * (n - 1) // 2 + 3 * (m - n + 1)


@dataclass(frozen=True, eq=False)
class MomentVector:
    """``l``-th moment of the AOVs (kind ``"odm"``) or ACVs (kind ``"cdm"``) of a cloud."""

    kind: str
    order: int
    m: int
    n: int
    coords: np.ndarray

    def __post_init__(self):
        want = odm_length(self.m, self.n) if self.kind == "odm" else cdm_length(self.m, self.n)
        if self.kind not in ("odm", "cdm") or self.coords.shape != (want,):
            raise InvalidInputError(f"{self.kind} vector for m={self.m}, n={self.n} must have length {want}")

    def __len__(self):
        return self.coords.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, MomentVector):
            return NotImplemented
        return (self.kind, self.order, self.m, self.n) == (other.kind, other.order, other.m, other.n) and bool(
            np.array_equal(self.coords, other.coords)
        )

    __hash__ = None

    def csv_row(self) -> list:
        return [self.kind, self.order, self.m, self.n, *(float(v) for v in self.coords)]


def sorted_distance_vector(points, with_origin: bool = False) -> np.ndarray:
    """All pairwise distances of ``points`` in increasing order.

    With ``with_origin`` the distances from each point to the origin follow,
    also sorted.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidInputError("need a non-empty (h, n) array of points")
    diff = pts[:, None, :] - pts[None, :, :]
    full = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    out = np.sort(full[np.triu_indices(pts.shape[0], 1)])
    if with_origin:
        out = np.concatenate([out, np.sort(np.linalg.norm(pts, axis=1))])
    return out


def _strength_part(x, signed: bool) -> np.ndarray:
    return np.sort(x.strengths if signed else np.abs(x.strengths))


def aov_from_ord(x: Ord, signed: bool = True) -> np.ndarray:
    """AOV of an ORD; ``signed=False`` replaces strengths by their absolute values.

    The signed strengths depend on which basis order represents the class, so
    near a tie between representatives they can jump.  The unsigned variant
    does not, which keeps the L-inf lower bound on EMD valid everywhere.
    """
    d = np.sort(x.basis_vector())
    return np.concatenate([d, np.sort(x.rel_dists.mean(axis=1)), _strength_part(x, signed)])


def acv_from_ocd(x: Ocd, signed: bool = True) -> np.ndarray:
    # the origin is the last basis point
    h = x.h
    iu = np.triu_indices(h - 1, 1)
    inner = np.sort(x.basis_dist[:h - 1, :h - 1][iu])
    to_origin = np.sort(x.basis_dist[:h - 1, h - 1])
    if h > 1:
        means = x.rel_dists[:, :h - 1].mean(axis=1)
    else:
        means = np.zeros(x.n_columns)
    norms = x.rel_dists[:, h - 1]
    return np.concatenate([inner, to_origin, np.sort(means), np.sort(norms), _strength_part(x, signed)])


def average_oriented_vector(cloud, basis, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """AOV of ``cloud`` for an ``n``-point basis (indices or coordinates)."""
    return aov_from_ord(build_ord(cloud, basis, tol))


def average_centred_vector(cloud, basis, anchor=None, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """ACV of ``cloud`` for an ``(n - 1)``-point basis, around ``anchor`` (default: centre of mass)."""
    return acv_from_ocd(build_ocd(cloud, basis, anchor, tol))


def moment(vectors, order: int, counts=None) -> np.ndarray:
    """Coordinate-wise moment of a multiset of equal-length vectors.

    ``order`` 1 gives the mean, 2 the (population) standard deviation and
    ``order >= 3`` the standardised moment, which is set to 0 on coordinates
    with zero deviation (relative to the coordinate's magnitude).  ``counts`` gives optional multiplicities.
    """
    if int(order) != order or order < 1:
        raise InvalidInputError(f"moment order must be a positive integer, got {order!r}")
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or v.shape[0] == 0:
        raise InvalidInputError("need a non-empty list of equal-length vectors")
    if counts is not None:
        v = np.repeat(v, np.asarray(counts, dtype=int), axis=0)
    mu = v.mean(axis=0)
    if order == 1:
        return mu
    sd = np.sqrt(np.mean((v - mu) ** 2, axis=0))
    if order == 2:
        return sd
    out = np.zeros_like(mu)
    # equal values can leave a deviation of a few ulps; treat that as zero
    nz = sd > 1e-12 * np.max(np.abs(v), axis=0)
    out[nz] = np.mean(((v[:, nz] - mu[nz]) / sd[nz]) ** order, axis=0)
    return out


def odm(cloud, order: int = 1, tol: Tolerance = DEFAULT_TOL, osd: WeightedDistribution | None = None,
        signed: bool = True) -> MomentVector:
    """Moment of the AOVs over all ``n``-point subsets of ``cloud``."""
    cloud = as_cloud(cloud)
    dist = build_osd(cloud, tol) if osd is None else osd
    vecs = [aov_from_ord(x, signed) for x in dist.items]
    return MomentVector("odm", int(order), cloud.m, cloud.dim, moment(vecs, order, dist.counts))


def cdm(cloud, order: int = 1, anchor=None, tol: Tolerance = DEFAULT_TOL,
        scd: WeightedDistribution | None = None, signed: bool = True) -> MomentVector:
    """Moment of the ACVs over all ``(n - 1)``-point subsets of ``cloud``."""
    cloud = as_cloud(cloud)
    dist = build_scd(cloud, anchor, tol) if scd is None else scd
    vecs = [acv_from_ocd(x, signed) for x in dist.items]
    return MomentVector("cdm", int(order), cloud.m, cloud.dim, moment(vecs, order, dist.counts))
