from .gradcheck import GradCheckResult, grad_check, relative_error
from .nn import Embedding, LayerNorm, Linear, Module, uniform_param
from .optim import OptimizerState, adamw_step, linear_schedule, warmup_steps_for
from .tensor import (
    Tensor,
    add,
    as_tensor,
    backward,
    bce_with_logits,
    bmm,
    concat,
    div,
    elu,
    exp,
    gelu,
    getitem,
    layer_norm,
    leaky_relu,
    log,
    matmul,
    mean,
    mul,
    no_grad,
    reshape,
    sigmoid,
    softmax,
    stack,
    sub,
    swapaxes,
    tanh,
    transpose,
    tsum,
)
