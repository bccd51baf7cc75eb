"""Design-based anytime-valid inference for experiments with delayed outcomes."""

__version__ = "0.1.0"

from .confidence import (
    BoundaryConfig,
    ConfidenceBand,
    chi_square_1_quantile,
    classical_pointwise,
    difference_cs,
    mixture_boundary,
    normal_quantile,
    relative_width,
    sequential_p_value,
    sequential_p_value_path,
    single_arm_cs,
)
from .core import (
    ObservedDataset,
    PotentialOutcomeTable,
    PotentialUnit,
    StepPath,
    apply_switching,
    true_delta_path,
    true_reward_path,
)
from .estimator import DelayedRewardCS
from .estimators import (
    AugmentationPolicy,
    EstimatePaths,
    InadmissibleAugmentationError,
    aipw_paths,
    ipw_paths,
    oracle_variance_path,
    running_mean_values,
)
from .simulation import SimConfig, generate_dataset

__all__ = [
    "AugmentationPolicy",
    "BoundaryConfig",
    "ConfidenceBand",
    "DelayedRewardCS",
    "EstimatePaths",
    "InadmissibleAugmentationError",
    "ObservedDataset",
    "PotentialOutcomeTable",
    "PotentialUnit",
    "SimConfig",
    "StepPath",
    "aipw_paths",
    "apply_switching",
    "chi_square_1_quantile",
    "classical_pointwise",
    "difference_cs",
    "generate_dataset",
    "ipw_paths",
    "mixture_boundary",
    "normal_quantile",
    "oracle_variance_path",
    "relative_width",
    "running_mean_values",
    "sequential_p_value",
    "sequential_p_value_path",
    "single_arm_cs",
    "true_delta_path",
    "true_reward_path",
]
