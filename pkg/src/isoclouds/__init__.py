"""Complete isometry invariants of point clouds and distances between them."""

from .errors import (
    AmbiguousInputError,
    DegenerateInputError,
    IncomparableInputError,
    InputFormatError,
    InvalidInputError,
    IsoCloudsError,
    NonEmbeddableError,
)
from .geometry import (
    DEFAULT_TOL,
    Isometry,
    PointCloud,
    Tolerance,
    affine_dimension,
    apply_isometry,
    centre_cloud,
    centre_of_mass,
    distance,
    orientation_sign,
    random_isometry,
)
from .invariants import Ocd, Ord, WeightedDistribution, build_ocd, build_ord, build_osd, build_scd, mirror
from .metrics import bottleneck, emd, lac, linf, m_inf, osd_distance, scd_distance
from .moments import MomentVector, cdm, moment, odm
from .oracle import brute_force_isometric, reconstruct_from_distances, reconstruct_from_ord
from .strength import cayley_menger_volume_sq, lipschitz_constant, rencontre, strength

__version__ = "0.1.0"
