"""Variational quantum circuit lab: statevector simulation, layered
ansatz construction, initialization/diffusion regularizers, tabular
dataset encoding, an Adam training loop, and a sweep harness that charts
gradient-variance trends against circuit width or depth.
"""

from .ansatz import (
    CircuitSpec,
    EncodedSample,
    batch_expectations,
    build_circuit,
    evaluate,
    first_layer_gradient,
    gate_program,
    gradient,
    gradient_batch,
    pad_angles,
    single_z,
    zero_projector,
)
from .datasets import (
    EncoderState,
    RawDataset,
    SplitDataset,
    binarize_and_split,
    encode,
    fit_encoder,
    load,
    prepare,
)
from .labcli import (
    CellFailure,
    ConfigError,
    ExperimentConfig,
    StrategySpec,
    VarianceRecord,
    emit,
    load_config,
    main,
    run_sweep,
    select_dr_max,
)
from .regularize import (
    DiffusionSchedule,
    InitStrategy,
    PriorStats,
    build_schedule,
    diffuse,
    fit_prior,
    sample_init,
)
from .simcore import (
    GateOp,
    ObservableSpec,
    StateVector,
    apply_gate,
    expectation,
    new_zero_state,
)
from .streams import derived_seed, stream
from .trainer import (
    DiffusionConfig,
    TrainConfig,
    TrainReport,
    adam_step,
    loss,
    predict,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # simcore
    "StateVector",
    "GateOp",
    "ObservableSpec",
    "new_zero_state",
    "apply_gate",
    "expectation",
    # ansatz
    "CircuitSpec",
    "EncodedSample",
    "build_circuit",
    "gate_program",
    "evaluate",
    "gradient",
    "first_layer_gradient",
    "gradient_batch",
    "batch_expectations",
    "pad_angles",
    "single_z",
    "zero_projector",
    # regularize
    "PriorStats",
    "InitStrategy",
    "DiffusionSchedule",
    "fit_prior",
    "sample_init",
    "build_schedule",
    "diffuse",
    # datasets
    "RawDataset",
    "SplitDataset",
    "EncoderState",
    "load",
    "binarize_and_split",
    "fit_encoder",
    "encode",
    "prepare",
    # trainer
    "TrainConfig",
    "DiffusionConfig",
    "TrainReport",
    "train",
    "adam_step",
    "predict",
    "loss",
    # labcli
    "ExperimentConfig",
    "StrategySpec",
    "VarianceRecord",
    "CellFailure",
    "ConfigError",
    "run_sweep",
    "select_dr_max",
    "emit",
    "load_config",
    "main",
    # streams
    "stream",
    "derived_seed",
]
