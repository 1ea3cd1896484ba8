"""Oriented relative distributions (ORD/OCD) and their multisets (OSD/SCD).

An ORD records, for an ordered basis of ``n`` cloud points, the basis distance
matrix and one column per remaining point ``q``: the distances from ``q`` to
each basis point, the orientation sign of ``q`` relative to the basis, and the
signed strength of the simplex ``basis + q`` divided by ``c_n``.  The object is
defined up to reordering the basis; we store the lexicographically smallest
representative so that equal classes compare and serialise identically.

An OCD is the same construction with the origin appended as a fixed last
basis point, so only the first ``n - 1`` basis points are permuted.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import cmp_to_key, lru_cache

import numpy as np

from .errors import InvalidInputError
from .geometry import DEFAULT_TOL, PointCloud, Tolerance, as_cloud, centre_of_mass, orientation_signs
from .strength import lipschitz_constant, strengths

__all__ = [
    "Ord",
    "Ocd",
    "WeightedDistribution",
    "build_distance_matrix",
    "build_ord",
    "build_osd",
    "build_ocd",
    "build_scd",
    "resolve_anchor",
    "mirror",
    "permutation_parity",
]


def permutation_parity(perm) -> int:
    """+1 for an even permutation of ``range(len(perm))``, -1 for an odd one."""
    perm = list(perm)
    seen = [False] * len(perm)
    parity = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


def _lex_cmp(a, b, atol: float) -> int:
    for x, y in zip(a, b):
        if abs(x - y) > atol:
            return -1 if x < y else 1
    return (len(a) > len(b)) - (len(a) < len(b))


def build_distance_matrix(points) -> np.ndarray:
    """Strict upper-triangular matrix of distances of an ordered point tuple."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidInputError("need a non-empty (h, n) array of points")
    diff = pts[:, None, :] - pts[None, :, :]
    return np.triu(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)), 1)


class _Relative:
    """Shared storage and canonical-form logic for :class:`Ord` and :class:`Ocd`.

    Attributes:
        basis_dist: ``(h, h)`` strict upper-triangular basis distance matrix.
        rel_dists: ``(k, h)`` array, row ``j`` holds the distances of the
            ``j``-th column point to the basis points.
        signs: ``(k,)`` orientation signs in ``{-1, 0, 1}``.
        strengths: ``(k,)`` normalised signed strengths ``sign * sigma / c_n``.
    """

    n_fixed = 0
    kind = "ord"

    __slots__ = ("basis_dist", "rel_dists", "signs", "strengths", "eps", "_views")

    def __init__(self, basis_dist, rel_dists, signs, strengths=None, tol: Tolerance = DEFAULT_TOL,
                 canonical: bool = True):
        d = np.triu(np.asarray(basis_dist, dtype=float), 1)
        h = d.shape[0]
        if d.ndim != 2 or d.shape != (h, h) or h < max(self.n_fixed, 1):
            raise InvalidInputError(f"basis distance matrix must be square, got {d.shape}")
        rel = np.asarray(rel_dists, dtype=float).reshape(-1, h)
        s = np.asarray(signs, dtype=np.int8).reshape(-1)
        if rel.shape[0] != s.shape[0]:
            raise InvalidInputError("column count mismatch between distances and signs")
        if np.any(rel < 0) or np.any(d < 0):
            raise InvalidInputError("distances must be non-negative")
        if not np.all(np.isin(s, (-1, 0, 1))):
            raise InvalidInputError("signs must be -1, 0 or +1")
        self.eps = tol.eps_zero
        if canonical:
            d, rel, s = self._canonical_parts(d, rel, s)
        if canonical or strengths is None:
            # recomputing from the canonical distances makes equal classes bit-identical
            st = _signed_strengths(d, rel, s)
        else:
            st = np.asarray(strengths, dtype=float).reshape(-1)
            if st.shape[0] != s.shape[0]:
                raise InvalidInputError("column count mismatch between signs and strengths")
        for arr in (d, rel, s, st):
            arr.setflags(write=False)
        self.basis_dist, self.rel_dists, self.signs, self.strengths = d, rel, s, st
        self._views = None

    # -- shape -----------------------------------------------------------
    @property
    def h(self) -> int:
        """Number of basis points, the origin included for OCDs."""
        return self.basis_dist.shape[0]

    @property
    def dim(self) -> int:
        return self.h

    @property
    def n_columns(self) -> int:
        return self.rel_dists.shape[0]

    @property
    def scale(self) -> float:
        return float(max(self.basis_dist.max(initial=0.0), self.rel_dists.max(initial=0.0), 1e-300))

    # -- canonical form --------------------------------------------------
    def _free_perms(self, h=None):
        h = self.h if h is None else h
        free = h - self.n_fixed
        fixed = tuple(range(free, h))
        for p in itertools.permutations(range(free)):
            yield p + fixed

    @staticmethod
    def _permute(full_d, rel, s, perm):
        perm = np.asarray(perm, dtype=int)
        parity = permutation_parity(perm)
        d = np.triu(full_d[np.ix_(perm, perm)], 1)
        return d, rel[:, perm], (s * parity).astype(np.int8)

    def _column_order(self, rel, s, atol):
        keys = [tuple(rel[j]) + (int(s[j]),) for j in range(rel.shape[0])]
        return sorted(range(len(keys)), key=cmp_to_key(lambda a, b: _lex_cmp(keys[a], keys[b], atol)))

    def _canonical_parts(self, d, rel, s):
        full = d + d.T
        scale = max(d.max(initial=0.0), rel.max(initial=0.0), 1e-300)
        atol = self.eps * scale
        best, best_key = None, None
        for perm in self._free_perms(d.shape[0]):
            pd, prel, ps = self._permute(full, rel, s, perm)
            order = self._column_order(prel, ps, atol)
            prel, ps = prel[order], ps[order]
            key = _serial_key(pd, prel, ps)
            if best is None or _lex_cmp(key, best_key, atol) < 0:
                best, best_key = (pd, prel, ps), key
        return tuple(np.array(a) for a in best)

    def key(self) -> tuple:
        """Flat tuple (upper triangle of D, then each column's distances and sign)."""
        return _serial_key(self.basis_dist, self.rel_dists, self.signs)

    def canonical(self):
        return type(self)(self.basis_dist, self.rel_dists, self.signs, tol=Tolerance(self.eps))

    def mirrored(self):
        """The class with every sign and signed strength negated."""
        return type(self)(self.basis_dist, self.rel_dists, -self.signs, tol=Tolerance(self.eps))

    def compare(self, other, tol: Tolerance | None = None) -> int:
        """Tolerant lexicographic comparison of canonical keys (-1, 0 or 1)."""
        if type(self) is not type(other) or self.h != other.h or self.n_columns != other.n_columns:
            a = (self.kind, self.h, self.n_columns)
            b = (other.kind, other.h, other.n_columns)
            return (a > b) - (a < b)
        eps = self.eps if tol is None else tol.eps_zero
        atol = eps * max(self.scale, other.scale)
        c = _lex_cmp(self.key(), other.key(), atol)
        if c:
            return c
        return _lex_cmp(tuple(self.strengths), tuple(other.strengths), atol)

    def isclose(self, other, tol: Tolerance | None = None) -> bool:
        return self.compare(other, tol) == 0

    # -- metric support --------------------------------------------------
    def metric_points(self, perm=None) -> np.ndarray:
        """Columns as points ``(distances..., signed strength)`` in ``R^(h+1)``."""
        rel, st = self.rel_dists, self.strengths
        if perm is not None:
            perm = np.asarray(perm, dtype=int)
            rel, st = rel[:, perm], st * permutation_parity(perm)
        return np.column_stack([rel, st])

    def basis_vector(self, perm=None) -> np.ndarray:
        """Upper-triangle entries of the (optionally permuted) basis matrix."""
        d = self.basis_dist
        if perm is not None:
            full = d + d.T
            perm = np.asarray(perm, dtype=int)
            d = full[np.ix_(perm, perm)]
        return d[_triu(self.h)]

    def permutations(self):
        """All basis permutations this class is taken up to."""
        return list(self._free_perms())

    def permuted_views(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """``(basis_vector(perm), metric_points(perm))`` for every free permutation, computed once."""
        if self._views is None:
            views = []
            for perm in self._free_perms():
                b, pts = self.basis_vector(perm), self.metric_points(perm)
                b.setflags(write=False)
                pts.setflags(write=False)
                views.append((b, pts))
            self._views = views
        return self._views

    # -- dunder ----------------------------------------------------------
    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return (
            self.basis_dist.shape == other.basis_dist.shape
            and self.rel_dists.shape == other.rel_dists.shape
            and np.array_equal(self.basis_dist, other.basis_dist)
            and np.array_equal(self.rel_dists, other.rel_dists)
            and np.array_equal(self.signs, other.signs)
            and np.array_equal(self.strengths, other.strengths)
        )

    def __hash__(self):
        return hash((self.kind, self.basis_dist.tobytes(), self.rel_dists.tobytes(), self.signs.tobytes()))

    def __repr__(self):
        iu = np.triu_indices(self.h, 1)
        cols = ", ".join(
            "(" + ", ".join(f"{v:.4g}" for v in self.rel_dists[j]) + f"; {'-0+'[self.signs[j] + 1]})"
            for j in range(self.n_columns)
        )
        dvals = ", ".join(f"{v:.4g}" for v in self.basis_dist[iu])
        return f"{type(self).__name__}([{dvals}]; {cols})"

    def to_dict(self) -> dict:
        iu = np.triu_indices(self.h, 1)
        return {
            "kind": self.kind,
            "h": self.h,
            "basis_dist": [float(v) for v in self.basis_dist[iu]],
            "columns": [
                {"dists": [float(v) for v in self.rel_dists[j]], "sign": int(self.signs[j]),
                 "strength": float(self.strengths[j])}
                for j in range(self.n_columns)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, tol: Tolerance = DEFAULT_TOL):
        kind = data.get("kind", cls.kind)
        target = {"ord": Ord, "ocd": Ocd}.get(kind)
        if target is None:
            raise InvalidInputError(f"unknown invariant kind {kind!r}")
        h = int(data["h"])
        d = np.zeros((h, h))
        d[np.triu_indices(h, 1)] = data["basis_dist"]
        cols = data["columns"]
        rel = np.array([c["dists"] for c in cols], dtype=float).reshape(-1, h)
        # stored form is already canonical; rebuilding it must not reorder
        return target(d, rel, [c["sign"] for c in cols], [c["strength"] for c in cols], tol=tol, canonical=False)


@lru_cache(maxsize=None)
def _triu(h: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(h, 1)


def _signed_strengths(d: np.ndarray, rel: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``sign * sigma(basis + q) / c_h`` for every column; the simplex has ``h + 1`` points in ``R^h``."""
    h, k = d.shape[0], rel.shape[0]
    if k == 0:
        return np.zeros(0)
    full = np.zeros((k, h + 1, h + 1))
    full[:, :h, :h] = d + d.T
    full[:, :h, h] = rel
    full[:, h, :h] = rel
    return s * strengths(full) / lipschitz_constant(h)


def _serial_key(d, rel, s) -> tuple:
    iu = np.triu_indices(d.shape[0], 1)
    parts = [float(v) for v in d[iu]]
    for j in range(rel.shape[0]):
        parts.extend(float(v) for v in rel[j])
        parts.append(float(s[j]))
    return tuple(parts)


class Ord(_Relative):
    """Oriented relative distribution: ``[D(A); M(C; A)]`` up to permutations of ``A``."""

    n_fixed = 0
    kind = "ord"
    __slots__ = ()


class Ocd(_Relative):
    """Oriented centred distribution: the basis ends with the fixed origin."""

    n_fixed = 1
    kind = "ocd"
    __slots__ = ()


def _columns(basis_pts: np.ndarray, others: np.ndarray, tol: Tolerance):
    """Distances and orientation signs of ``others`` w.r.t. a basis of ``n`` points in ``R^n``."""
    n = basis_pts.shape[1]
    h = basis_pts.shape[0]
    if h != n:
        raise InvalidInputError(f"basis must have {n} points in R^{n}, got {h}")
    k = others.shape[0]
    diff = others[:, None, :] - basis_pts[None, :, :]
    rel = np.sqrt(np.einsum("kij,kij->ki", diff, diff))
    if k == 0:
        return rel.reshape(0, h), np.zeros(0, dtype=np.int8)
    return rel, orientation_signs(diff, tol)


def _basis_indices(cloud: PointCloud, basis, size: int) -> list[int]:
    arr = np.asarray(basis)
    if arr.dtype.kind in "iu" or (arr.ndim == 1 and size != cloud.dim and arr.size == size and arr.dtype.kind in "iu"):
        idx = [int(i) for i in arr.reshape(-1)]
    elif arr.ndim == 1 and arr.size == 0:
        idx = []
    else:
        pts = np.asarray(basis, dtype=float).reshape(-1, cloud.dim)
        idx = []
        for p in pts:
            hits = np.flatnonzero(np.all(cloud.points == p, axis=1))
            if hits.size == 0:
                raise InvalidInputError(f"basis point {p.tolist()} is not in the cloud")
            free = [int(i) for i in hits if int(i) not in idx]
            idx.append(free[0] if free else int(hits[0]))
    if len(idx) != size:
        raise InvalidInputError(f"basis must have {size} points, got {len(idx)}")
    if len(set(idx)) != len(idx):
        raise InvalidInputError("basis points must be distinct")
    for i in idx:
        if not 0 <= i < cloud.m:
            raise InvalidInputError(f"basis index {i} out of range for a cloud of {cloud.m} points")
    return idx


def build_ord(cloud, basis, tol: Tolerance = DEFAULT_TOL) -> Ord:
    """ORD of ``cloud`` for an ordered basis of ``n`` points.

    ``basis`` holds point indices, or the basis points' coordinates.
    """
    cloud = as_cloud(cloud)
    n = cloud.dim
    if cloud.m <= n:
        raise InvalidInputError(f"an ORD in R^{n} needs more than {n} points, got {cloud.m}")
    idx = _basis_indices(cloud, basis, n)
    pts = cloud.points
    others = np.delete(pts, idx, axis=0)
    basis_pts = pts[idx]
    rel, signs = _columns(basis_pts, others, tol)
    return Ord(build_distance_matrix(basis_pts), rel, signs, tol=tol)


def resolve_anchor(cloud, anchor=None) -> np.ndarray:
    """Coordinates of the SCD origin.

    ``anchor`` is ``None`` or ``"centroid"`` for the centre of mass, an
    ``int`` for a point of the cloud (which stays in the cloud), or explicit
    coordinates.
    """
    cloud = as_cloud(cloud)
    if anchor is None or (isinstance(anchor, str) and anchor in ("centroid", "centre", "center")):
        return centre_of_mass(cloud)
    if isinstance(anchor, (int, np.integer)) and not isinstance(anchor, bool):
        if not 0 <= anchor < cloud.m:
            raise InvalidInputError(f"anchor index {anchor} out of range")
        return cloud.points[int(anchor)].copy()
    if isinstance(anchor, str):
        raise InvalidInputError(f"unknown anchor {anchor!r}")
    a = np.asarray(anchor, dtype=float)
    if a.shape != (cloud.dim,):
        raise InvalidInputError(f"anchor must have {cloud.dim} coordinates")
    return a


def build_ocd(cloud, basis, anchor=None, tol: Tolerance = DEFAULT_TOL) -> Ocd:
    """OCD of ``cloud`` for an ordered basis of ``n - 1`` points plus the anchor as origin.

    With the default anchor the cloud is centred on its centre of mass; pass
    ``anchor=np.zeros(n)`` for a cloud that is already centred.
    """
    cloud = as_cloud(cloud)
    n = cloud.dim
    if cloud.m < n:
        raise InvalidInputError(f"an OCD in R^{n} needs at least {n} points, got {cloud.m}")
    idx = _basis_indices(cloud, basis, n - 1)
    origin = resolve_anchor(cloud, anchor)
    pts = cloud.points - origin
    basis_pts = np.vstack([pts[idx], np.zeros((1, n))])
    others = np.delete(pts, idx, axis=0)
    rel, signs = _columns(basis_pts, others, tol)
    return Ocd(build_distance_matrix(basis_pts), rel, signs, tol=tol)


class WeightedDistribution:
    """A finite distribution of canonical ORDs or OCDs with exact rational weights.

    ``items`` are pairwise distinct (under the tolerant comparison) and sorted;
    ``counts[i]`` is how many subsets produced ``items[i]``, and the weight of
    an item is ``counts[i] / total``.
    """

    __slots__ = ("items", "counts", "total", "kind", "m", "dim")

    def __init__(self, items, counts, kind: str, m: int, dim: int):
        if len(items) != len(counts) or not items:
            raise InvalidInputError("a distribution needs matching, non-empty items and counts")
        if any(int(c) <= 0 for c in counts):
            raise InvalidInputError("counts must be positive")
        self.items = tuple(items)
        self.counts = tuple(int(c) for c in counts)
        self.total = sum(self.counts)
        self.kind = kind
        self.m = int(m)
        self.dim = int(dim)

    @classmethod
    def collapse(cls, items, kind: str, m: int, dim: int, tol: Tolerance = DEFAULT_TOL, counts=None):
        """Merge equal items, summing their counts."""
        items = list(items)
        counts = [1] * len(items) if counts is None else list(counts)
        order = sorted(range(len(items)), key=cmp_to_key(lambda a, b: items[a].compare(items[b], tol)))
        merged, merged_counts = [], []
        for i in order:
            if merged and merged[-1].compare(items[i], tol) == 0:
                merged_counts[-1] += counts[i]
            else:
                merged.append(items[i])
                merged_counts.append(counts[i])
        return cls(merged, merged_counts, kind, m, dim)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, self.total) for c in self.counts)

    def expanded(self) -> list:
        """Items repeated by multiplicity, i.e. the uncollapsed list."""
        out = []
        for item, c in zip(self.items, self.counts):
            out.extend([item] * c)
        return out

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(zip(self.items, self.weights))

    def __eq__(self, other):
        if not isinstance(other, WeightedDistribution):
            return NotImplemented
        return (self.kind, self.m, self.dim, self.counts) == (other.kind, other.m, other.dim, other.counts) and all(
            a == b for a, b in zip(self.items, other.items)
        )

    def __hash__(self):
        return hash((self.kind, self.m, self.dim, self.counts, self.items))

    def isclose(self, other, tol: Tolerance = DEFAULT_TOL) -> bool:
        """Same items and weights up to the tolerant item comparison."""
        if (self.kind, self.m, self.dim) != (other.kind, other.m, other.dim) or len(self) != len(other):
            return False
        if self.weights != other.weights:
            return False
        return all(a.isclose(b, tol) for a, b in zip(self.items, other.items))

    def __repr__(self):
        return f"WeightedDistribution(kind={self.kind!r}, m={self.m}, n={self.dim}, distinct={len(self)}, total={self.total})"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "m": self.m,
            "n": self.dim,
            "entries": [
                {"weight": f"{w.numerator}/{w.denominator}", "count": c, "invariant": item.to_dict()}
                for item, c, w in zip(self.items, self.counts, self.weights)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, tol: Tolerance = DEFAULT_TOL) -> "WeightedDistribution":
        entries = data["entries"]
        items = [_Relative.from_dict(e["invariant"], tol) for e in entries]
        counts = [int(e["count"]) for e in entries]
        dist = cls(items, counts, data["kind"], data["m"], data["n"])
        for e, w in zip(entries, dist.weights):
            if "weight" in e and Fraction(e["weight"]) != w:
                raise InvalidInputError("stored weights disagree with counts")
        return dist


def build_osd(cloud, tol: Tolerance = DEFAULT_TOL) -> WeightedDistribution:
    """ORDs over all ``binom(m, n)`` unordered ``n``-subsets, collapsed with weights."""
    cloud = as_cloud(cloud)
    n, m = cloud.dim, cloud.m
    if m <= n:
        raise InvalidInputError(f"OSD in R^{n} needs more than {n} points, got {m}")
    items = [build_ord(cloud, list(sub), tol) for sub in itertools.combinations(range(m), n)]
    return WeightedDistribution.collapse(items, "osd", m, n, tol)


def build_scd(cloud, anchor=None, tol: Tolerance = DEFAULT_TOL) -> WeightedDistribution:
    """OCDs over all ``binom(m, n - 1)`` unordered ``(n - 1)``-subsets, collapsed with weights."""
    cloud = as_cloud(cloud)
    n, m = cloud.dim, cloud.m
    if m < n:
        raise InvalidInputError(f"SCD in R^{n} needs at least {n} points, got {m}")
    origin = resolve_anchor(cloud, anchor)
    items = [build_ocd(cloud, list(sub), origin, tol) for sub in itertools.combinations(range(m), n - 1)]
    dist = WeightedDistribution.collapse(items, "scd", m, n, tol)
    assert dist.total == math.comb(m, n - 1)
    return dist


def mirror(dist: WeightedDistribution, tol: Tolerance = DEFAULT_TOL) -> WeightedDistribution:
    """Distribution of the mirror-image cloud: all signs and signed strengths negated."""
    items = [item.mirrored() for item in dist.items]
    return WeightedDistribution.collapse(items, dist.kind, dist.m, dist.dim, tol, counts=dist.counts)
