"""Periodic billiard trajectories in smooth convex hypersurfaces.

Trajectories are found numerically as critical points of the perimeter of
inscribed polygons and compared with lower bounds coming from the mod-q
homology of cyclic configuration spaces modulo the dihedral group.
"""
from .core import (
    Configuration,
    CriticalPointReport,
    DihedralAction,
    SmoothingParams,
    ambient_gradient,
    billiard_residual,
    canonical_orbit_representative,
    chart_gradient,
    dihedral,
    length,
    morse_index,
    rotation_number,
    smoothed_gradient,
    smoothed_length,
    tangential_hessian,
)
from .homology import (
    BettiProfile,
    ChainComplex,
    FFMatrix,
    InvalidComplexError,
    cubic_bound,
    exact_sequence_bound,
    homology_dims,
    kunneth_dims,
    morse_lower_bound,
    rank,
    smith_bound,
)
from .manifold import (
    Circle,
    Ellipse,
    Ellipsoid,
    ParametricManifold,
    PerturbedCircle,
    PerturbedSphere,
    Sphere,
    from_spec,
)
from .search import SearchConfig, SearchReport, classify_family, find_trajectories, refine

__version__ = "0.1.0"
