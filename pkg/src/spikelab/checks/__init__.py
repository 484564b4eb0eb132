"""Monte Carlo checks of the spectral theorems, one function per statement."""
from .eigenvectors import (
    check_cone_far_from_bulk,
    check_cone_near_bulk,
    check_degenerate_cone,
    check_nonoutlier_delocalization,
    check_nonoutlier_law,
    delocalization_scale,
    far_bulk_error,
    near_bulk_error,
    nonoutlier_law_scale,
    spike_gaps,
)
from .local_laws import (
    check_isotropic_law,
    check_level_repulsion,
    check_rigidity_and_que,
    check_universality_pair,
    exact_que_ks,
)
from .outliers import check_outlier_locations, check_outlier_scaling, check_sticking
from .qdot import check_qdot_equivalence, shift_invariance
from .report import CheckReport, Component, DominationProbe, domination_quantile

SINGLE_ENSEMBLE_CHECKS = {
    "outlier_locations": check_outlier_locations,
    "sticking": check_sticking,
    "cone_near_bulk": check_cone_near_bulk,
    "cone_far_from_bulk": check_cone_far_from_bulk,
    "degenerate_cone": check_degenerate_cone,
    "nonoutlier_delocalization": check_nonoutlier_delocalization,
    "nonoutlier_law": check_nonoutlier_law,
    "isotropic_law": check_isotropic_law,
    "rigidity_que": check_rigidity_and_que,
    "level_repulsion": check_level_repulsion,
    "qdot_equivalence": check_qdot_equivalence,
}

__all__ = [
    "CheckReport",
    "Component",
    "DominationProbe",
    "domination_quantile",
    "SINGLE_ENSEMBLE_CHECKS",
    "check_outlier_locations",
    "check_outlier_scaling",
    "check_sticking",
    "check_cone_near_bulk",
    "check_cone_far_from_bulk",
    "check_degenerate_cone",
    "check_nonoutlier_delocalization",
    "check_nonoutlier_law",
    "check_isotropic_law",
    "check_rigidity_and_que",
    "check_level_repulsion",
    "check_universality_pair",
    "check_qdot_equivalence",
    "shift_invariance",
    "exact_que_ks",
    "spike_gaps",
    "near_bulk_error",
    "far_bulk_error",
    "delocalization_scale",
    "nonoutlier_law_scale",
]
