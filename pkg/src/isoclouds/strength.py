"""Simplex volume from distances, the strength of a simplex and its Lipschitz constants.

The strength of ``n + 1`` points in ``R^n`` is ``V^2 / p^(2n - 1)`` where ``V``
is the simplex volume and ``p`` is half the sum of the pairwise distances.
It vanishes exactly on degenerate simplices and is Lipschitz in the points,
which is what lets an orientation sign be multiplied into a continuous value.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DegenerateInputError, InvalidInputError, NonEmbeddableError

__all__ = [
    "rencontre",
    "as_distance_matrix",
    "half_sum_distances",
    "cayley_menger_volume_sq",
    "strength",
    "strengths",
    "lipschitz_constant",
    "normalized_signed_strength",
    "CLAMP_RTOL",
]

# Negative squared volumes down to -CLAMP_RTOL * p^(2n) are float noise.
CLAMP_RTOL = 1e-9


def rencontre(k: int) -> int:
    """Number of permutations of ``k`` elements without a fixed point."""
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise InvalidInputError(f"rencontre number needs a non-negative integer, got {k!r}")
    r = 1
    for i in range(1, int(k) + 1):
        r = i * r + (-1) ** i
    return r


def as_distance_matrix(d) -> np.ndarray:
    """Symmetric ``(h, h)`` matrix from one whose strict upper triangle is authoritative."""
    d = np.asarray(d, dtype=float)
    if d.ndim < 2 or d.shape[-1] != d.shape[-2]:
        raise InvalidInputError(f"distance matrix must be square, got shape {d.shape}")
    upper = np.triu(d, 1)
    if np.any(upper < 0) or not np.all(np.isfinite(upper)):
        raise InvalidInputError("distances must be finite and non-negative")
    return upper + np.swapaxes(upper, -1, -2)


def half_sum_distances(d) -> float:
    """Half the sum of the pairwise distances over unordered pairs ``i < j``.

    For a triangle this is the half-perimeter.
    """
    d = as_distance_matrix(d)
    if d.shape[-1] < 2:
        raise InvalidInputError("need at least two points")
    return float(np.triu(d, 1).sum() / 2.0)


def _cm_volume_sq(full: np.ndarray) -> np.ndarray:
    """Unclamped squared volume for a stack ``(..., h, h)`` of symmetric distance matrices."""
    h = full.shape[-1]
    n = h - 1
    bordered = np.ones(full.shape[:-2] + (h + 1, h + 1))
    bordered[..., 0, 0] = 0.0
    bordered[..., 1:, 1:] = full**2
    det = np.linalg.det(bordered)
    return (-1) ** (n - 1) * det / (2.0**n * math.factorial(n) ** 2)


def cayley_menger_volume_sq(d) -> float:
    """Squared volume of the simplex spanned by ``h`` points given their distances.

    Small negative results caused by rounding are clamped to zero; clearly
    negative ones mean the distances are not realisable and raise
    :class:`NonEmbeddableError`.
    """
    full = as_distance_matrix(d)
    h = full.shape[-1]
    if h < 2:
        raise InvalidInputError("a simplex needs at least two points")
    v2 = float(_cm_volume_sq(full))
    if v2 < 0.0:
        p = np.triu(full, 1).sum() / 2.0
        if -v2 > CLAMP_RTOL * p ** (2 * (h - 1)):
            raise NonEmbeddableError(f"distances give negative squared volume {v2:.3g}")
        v2 = 0.0
    return v2


def strengths(d, clamp_error: bool = True) -> np.ndarray:
    """Vectorised strength for a stack ``(..., n + 1, n + 1)`` of distance matrices.

    Entries whose points all coincide get strength 0 instead of raising; the
    scalar :func:`strength` is the checked entry point.
    """
    full = as_distance_matrix(d)
    h = full.shape[-1]
    n = h - 1
    p = np.triu(full, 1).sum(axis=(-1, -2)) / 2.0
    v2 = _cm_volume_sq(full)
    noise = CLAMP_RTOL * p ** (2 * n)
    if clamp_error and np.any(v2 < -noise):
        raise NonEmbeddableError("distances give a clearly negative squared volume")
    v2 = np.where(v2 < 0.0, 0.0, v2)
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = np.where(p > 0.0, v2 / p ** (2 * n - 1), 0.0)
    return sig


def strength(d, n: int | None = None) -> float:
    """Strength ``V^2 / p^(2n - 1)`` of ``n + 1`` points given their distance matrix.

    For ``n = 1`` this reduces to twice the segment length.
    """
    full = as_distance_matrix(d)
    h = full.shape[-1]
    if n is None:
        n = h - 1
    if h != n + 1:
        raise InvalidInputError(f"strength in R^{n} needs {n + 1} points, got {h}")
    if n < 1:
        raise InvalidInputError("strength needs n >= 1")
    p = half_sum_distances(full)
    if p == 0.0:
        raise DegenerateInputError("all points coincide, strength is undefined")
    return cayley_menger_volume_sq(full) / p ** (2 * n - 1)


@lru_cache(maxsize=None)
def lipschitz_constant(n: int) -> float:
    """Upper bound ``c_n`` on the Lipschitz constant of the strength in ``R^n``.

    ``c_1 = 2`` follows directly from the 1-dimensional strength, ``c_2`` is
    the tight planar bound ``2 sqrt(3)``, and ``n >= 3`` uses the general
    rencontre-number bound.
    """
    if int(n) != n or n < 1:
        raise InvalidInputError(f"dimension must be a positive integer, got {n!r}")
    n = int(n)
    if n == 1:
        return 2.0
    if n == 2:
        return 2.0 * math.sqrt(3.0)
    coeff = 4 * rencontre(n) + 2 * rencontre(n + 1) + n * (2 * n - 1) / 4 * rencontre(n + 2)
    return coeff * 2 ** (n - 0.5) * math.sqrt(n + 1) / (math.factorial(n) ** 2 * n ** (2 * n - 1.5))


def normalized_signed_strength(d, sign: int, n: int | None = None) -> float:
    """``sign * strength / c_n``, the last coordinate of a column in the metric."""
    if sign not in (-1, 0, 1):
        raise InvalidInputError(f"sign must be -1, 0 or +1, got {sign!r}")
    full = as_distance_matrix(d)
    if n is None:
        n = full.shape[-1] - 1
    if sign == 0:
        # still validate the input
        strength(full, n)
        return 0.0
    return sign * strength(full, n) / lipschitz_constant(n)
