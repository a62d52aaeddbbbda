from .tensor import tensor, check_finite, init_uniform, INIT_BOUND
from .network import (
    NetworkSpec,
    LstmLayerParams,
    FeedforwardLayerParams,
    LstmState,
    CONTROLLER_VARIANTS,
    controller_spec,
    init_params,
    lstm_layer_views,
    ff_layer_views,
    head_view,
    lstm_step,
    forward_sequence,
    backward_sequence,
    step_output,
)
from .losses import mse_loss, masked_mse
from .optim import OptimizerState, clip_gradients, rmsprop_update, EPSILON, CLIP_LIMIT

__all__ = [
    "tensor", "check_finite", "init_uniform", "INIT_BOUND",
    "NetworkSpec", "LstmLayerParams", "FeedforwardLayerParams", "LstmState",
    "CONTROLLER_VARIANTS", "controller_spec", "init_params",
    "lstm_layer_views", "ff_layer_views", "head_view",
    "lstm_step", "forward_sequence", "backward_sequence", "step_output",
    "mse_loss", "masked_mse",
    "OptimizerState", "clip_gradients", "rmsprop_update", "EPSILON", "CLIP_LIMIT",
]
