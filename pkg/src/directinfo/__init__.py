"""Bias-corrected mutual information and multi-information between many variables.

Plug-in information estimates on equal-population quantizations are
extrapolated to infinite sample size from random subsamples. The finest
usable quantization is calibrated on shuffled data.
"""
from .baseline import PcMiPoint, compare_report, gaussian_mi, pearson
from .calibrate import (
    CalibrationReport,
    MIEstimate,
    determine_bstar,
    select_level,
    triplet_bstar,
)
from .engine import (
    BatchConfig,
    MIMatrix,
    estimate_all_pairs,
    estimate_group_triplets,
    estimate_triplets,
    group_summary,
    sorted_matrix,
    verify_shuffled,
    verify_subsample_stability,
)
from .estimators import DirectMutualInformation, EqualPopulationQuantizer
from .exceptions import DirectInfoError
from .extrapolate import (
    DEFAULT_SCHEDULE,
    ExtrapolationResult,
    SubsampleSchedule,
    extrapolate_levels,
    extrapolate_pair,
    make_schedule,
)
from .ingest import Dataset, joint_sample, load_dataset, write_dataset
from .multiinfo import (
    TripletEstimate,
    consistency_check,
    estimate_multiinformation,
    estimate_triplet,
)
from .plugin import ContingencyTable, JointTable, plugin_entropy, plugin_mi
from .quantize import QuantizedVector, combine, equal_population_quantize

__version__ = "0.1.0"

__all__ = [
    "BatchConfig", "CalibrationReport", "ContingencyTable", "DEFAULT_SCHEDULE",
    "Dataset", "DirectInfoError", "DirectMutualInformation", "EqualPopulationQuantizer",
    "ExtrapolationResult", "JointTable", "MIEstimate", "MIMatrix", "PcMiPoint",
    "QuantizedVector", "SubsampleSchedule", "TripletEstimate", "combine",
    "compare_report", "consistency_check", "determine_bstar", "equal_population_quantize",
    "estimate_all_pairs", "estimate_group_triplets", "estimate_multiinformation",
    "estimate_triplet", "estimate_triplets", "extrapolate_levels", "extrapolate_pair",
    "gaussian_mi", "group_summary", "joint_sample", "load_dataset", "make_schedule",
    "pearson", "plugin_entropy", "plugin_mi", "select_level", "sorted_matrix",
    "triplet_bstar", "verify_shuffled", "verify_subsample_stability", "write_dataset",
]
