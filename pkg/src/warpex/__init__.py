"""Warped-product metrics on spheres, curvature certification and symmetric expanding solitons."""

__version__ = "0.1.0"

from .warp import (  # noqa: E402
    ConeMetric,
    CurvatureSpectrum,
    WarpedSphereMetric,
    WarpProfile,
    cone_curvature_spectrum,
    eval_beta,
    eval_cutoff,
    round_sphere,
    scale_metric,
    smoothness_check,
    sphere_curvature_eigs,
)
from .families import (  # noqa: E402
    FamilyParams,
    a_profile,
    gamma_profile,
    limit_profile,
    nonreif_limit,
    nonreif_profile,
    nonreif_scaled,
)
from .certify import (  # noqa: E402
    Certificate,
    blowup_rate,
    certify_rm_lower,
    cone_ratio_scan,
    find_delta0,
    find_eps0,
    sup_distance,
)
from .soliton import SolitonSolution, decay_metrics, integrate, shoot, tip_series  # noqa: E402
