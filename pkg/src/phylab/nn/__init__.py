"""From-scratch dense networks trained with SGD + momentum."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradcheckReport, gradient_check, relative_error, run_suite, standard_cases
from .mlp import (
    Activation,
    Grads,
    LossKind,
    Mlp,
    MlpSpec,
    NoiseLayer,
    Trace,
    backward,
    forward,
    init_xavier,
    loss_and_grad,
    softmax,
)
from .train import (
    Dataset,
    TrainConfig,
    TrainingDiverged,
    TrainResult,
    evaluate_loss,
    sgd_momentum_step,
    train,
    zero_velocity,
)

__all__ = [
    "Activation",
    "Dataset",
    "GradcheckReport",
    "Grads",
    "LossKind",
    "Mlp",
    "MlpSpec",
    "NoiseLayer",
    "Trace",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "backward",
    "evaluate_loss",
    "forward",
    "gradient_check",
    "init_xavier",
    "load_checkpoint",
    "loss_and_grad",
    "relative_error",
    "run_suite",
    "save_checkpoint",
    "sgd_momentum_step",
    "softmax",
    "standard_cases",
    "train",
    "zero_velocity",
]
