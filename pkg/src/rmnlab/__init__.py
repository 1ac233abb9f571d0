"""Residual memory network laboratory.

Feed-forward sequence models whose layers read their own earlier (and,
bidirectionally, later) activations through a single shared transform,
plus the training loop, synthetic tasks and verification probes around
them.
"""

from .data import (
    Corpus,
    FormatError,
    ParseError,
    Utterance,
    append_constant,
    gen_delayed_recall,
    gen_future_recall,
    gen_parity,
    mean_var_normalize,
    read_archive,
    splice,
    write_archive,
)
from .model import (
    ConsistencyError,
    ForwardCache,
    InputError,
    Model,
    RMNConfig,
    WindowError,
    backward,
    check_gradients,
    delay_schedule,
    delay_span,
    forward,
    init_params,
    load_checkpoint,
    model_input,
    param_count,
    param_count_lstmp,
    probe_receptive_field,
    randomize_params,
    receptive_field,
    save_checkpoint,
    streaming_forward,
)
from .numerics import (
    DimensionError,
    LabelError,
    NumericError,
    Parameter,
    grad_check,
    softmax_xent,
)
from .trainer import (
    EpochStats,
    TrainConfig,
    evaluate,
    evaluate_streaming,
    fit,
    lr_for_epoch,
    make_minibatches,
    sgd_step,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Utterance",
    "ParseError",
    "FormatError",
    "read_archive",
    "write_archive",
    "splice",
    "append_constant",
    "mean_var_normalize",
    "gen_delayed_recall",
    "gen_future_recall",
    "gen_parity",
    "RMNConfig",
    "Model",
    "ForwardCache",
    "InputError",
    "ConsistencyError",
    "WindowError",
    "init_params",
    "randomize_params",
    "forward",
    "backward",
    "check_gradients",
    "model_input",
    "delay_schedule",
    "delay_span",
    "receptive_field",
    "probe_receptive_field",
    "streaming_forward",
    "param_count",
    "param_count_lstmp",
    "save_checkpoint",
    "load_checkpoint",
    "Parameter",
    "DimensionError",
    "LabelError",
    "NumericError",
    "softmax_xent",
    "grad_check",
    "TrainConfig",
    "EpochStats",
    "fit",
    "evaluate",
    "evaluate_streaming",
    "lr_for_epoch",
    "make_minibatches",
    "sgd_step",
    "__version__",
]
