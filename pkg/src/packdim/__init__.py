"""Exact finite-scale toolkit for box/packing dimension experiments.

Capacity, covering and packing pre-measure optimizers on finite metric
spaces; Method I / Method D pre-measure constructions; symbolic fractal
set generators with exact scaling oracles; dimension estimators; and a
verification CLI.
"""

from .errors import (
    DepthExceededError,
    EmptySetError,
    InsufficientDataError,
    InvalidBlocksError,
    InvalidPackingError,
    LevelMismatchError,
    NotLipschitzError,
    PackdimError,
    ScaleOutOfRangeError,
    ScaleTooCoarseError,
    TooLargeForExactError,
    TooManyPointsError,
)
from .estimators import (
    ScalingReport,
    ScalingRow,
    dpdim_schedule_estimate,
    homo1_check,
    homogeneity_certify,
    lbdim_estimate,
    report_from_csv,
    report_to_csv,
    report_to_json,
    scaling_report,
    ubdim_estimate,
)
from .fractals import (
    DigitBlocks,
    DigitSet,
    ExhaustionSchedule,
    LogSequenceSet,
    ScheduleStage,
    ZConstruction,
    build_z,
    exhaustion_schedule,
    make_digit_blocks,
)
from .metric import (
    FiniteMetricSpace,
    ProductSpace,
    diam,
    product,
    read_matrix_csv,
    read_point_cloud,
    section,
    write_matrix_csv,
    write_point_cloud,
)
from .packing import (
    CapacityResult,
    GaugeFunction,
    Packing,
    Scale,
    box_premeasure,
    capacity,
    capacity_covering_rows,
    combine_product_packing,
    covering,
    covering_bounds,
    lipschitz_image_check,
    pack_premeasure,
)
from .premeasure import (
    PreMeasureTable,
    classify,
    method_D,
    method_I,
    random_monotone_table,
    verify_lemma_MI,
)

__version__ = "0.1.0"
