"""Depth- and distance-based classification of multivariate and functional data."""

__version__ = "0.1.0"

from .depth import (
    DirectionSet,
    affine_directions,
    compute_bag,
    depth_counts,
    exact_direction_set,
    hd_approx,
    hd_bivariate_exact,
    hd_univariate,
    tukey_median,
)
from .distances import (
    Ellipsoid,
    GroupModel,
    Interval,
    Polytope,
    ao,
    bagdistance,
    fit_group,
    generalized_norm,
    halfspace_depth,
    medcouple,
    pd,
    sdo,
    spd,
)
from .classifiers import (
    DepthDistanceClassifier,
    TrainingSet,
    depth_transform,
    distance_transform,
    distspace_classify,
    fit_training_set,
    knn_fit,
    knn_predict,
    maxdepth_classify,
    mindist_classify,
)
from .functional import (
    FunctionalClassifier,
    FunctionalSample,
    augment_curves,
    fao,
    fbd,
    fsdo,
    l2_curve_distance,
    mfd,
)
from .datasets import (
    fetch_uci_banknote,
    gen_setting1,
    gen_setting2,
    gen_setting3,
    load_csv,
    load_ucr,
    mislabel,
)
from .bench import ScenarioSpec, misclassification_rate, run_benchmark, time_measures
