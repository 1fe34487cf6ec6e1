"""Recursive posterior Cramer-Rao bounds for filtering with temporally
correlated process and measurement noise, with a brute-force full-horizon
reference for verification."""

from .blockmatrix import BlockMatrix
from .blocks import (
    BlockProvider,
    DBlocks,
    ExpectationEstimator,
    assemble_step_blocks,
    measurement_blocks,
    transition_blocks,
)
from .baselines import pcrb_augmented, pcrb_ignore_correlation, pcrb_prewhiten
from .errors import (
    ConfigError,
    CorrboundError,
    InvariantViolationError,
    ModelBuildError,
    NumericalError,
    SingularMatrixError,
)
from .examples import (
    build_example1,
    build_example1_stacked,
    build_example2,
    simple_scalar_model,
)
from .models import (
    ArApproximation,
    GaussianPrior,
    LinearConditionalSpec,
    LinearModelInfo,
    SystemModel,
    TrajectoryBatch,
    build_linear_model,
    default_prior,
    model_from_config,
    replicate_sensors,
)
from .oracle import (
    JointInformation,
    build_joint,
    contract_through_inverse,
    information_sequence,
    partitioned_inverse,
    schur_submatrix,
    verify_recursion,
)
from .profiles import (
    CaseTag,
    CorrelationProfile,
    FactorizationSignature,
    effective_lags,
    factorization_signature,
    required_prior_window,
    select_case,
)
from .recursion import (
    PCRBTrace,
    RecursionState,
    TraceEntry,
    classical_step,
    init_state,
    initial_information,
    run,
    step,
    step_autocorrelated_measurement,
    step_autocorrelated_measurement_state,
    step_autocorrelated_process,
    step_cross_correlated,
    step_process_lag2,
)
from .selection import SensorSweepResult, SweepPoint, min_sensors, replicated_family, sweep

__version__ = "0.1.0"

__all__ = [
    "ArApproximation",
    "BlockMatrix",
    "BlockProvider",
    "CaseTag",
    "ConfigError",
    "CorrboundError",
    "CorrelationProfile",
    "DBlocks",
    "ExpectationEstimator",
    "FactorizationSignature",
    "GaussianPrior",
    "InvariantViolationError",
    "JointInformation",
    "LinearConditionalSpec",
    "LinearModelInfo",
    "ModelBuildError",
    "NumericalError",
    "PCRBTrace",
    "RecursionState",
    "SensorSweepResult",
    "SingularMatrixError",
    "SweepPoint",
    "SystemModel",
    "TraceEntry",
    "TrajectoryBatch",
    "assemble_step_blocks",
    "build_example1",
    "build_example1_stacked",
    "build_example2",
    "build_joint",
    "build_linear_model",
    "classical_step",
    "contract_through_inverse",
    "default_prior",
    "effective_lags",
    "factorization_signature",
    "init_state",
    "initial_information",
    "information_sequence",
    "measurement_blocks",
    "min_sensors",
    "model_from_config",
    "partitioned_inverse",
    "pcrb_augmented",
    "pcrb_ignore_correlation",
    "pcrb_prewhiten",
    "replicate_sensors",
    "replicated_family",
    "required_prior_window",
    "run",
    "schur_submatrix",
    "select_case",
    "simple_scalar_model",
    "step",
    "step_autocorrelated_measurement",
    "step_autocorrelated_measurement_state",
    "step_autocorrelated_process",
    "step_cross_correlated",
    "step_process_lag2",
    "sweep",
    "transition_blocks",
    "verify_recursion",
]
