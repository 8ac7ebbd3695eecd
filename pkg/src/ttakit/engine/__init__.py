from .tensor import (
    Tensor,
    add,
    batchnorm,
    clip_min,
    conv2d,
    div,
    exp,
    forward_op,
    gradients,
    log,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    softmax,
    sub,
    tsum,
)
from .optim import SgdState, sgd_step

__all__ = [
    "Tensor", "add", "sub", "mul", "div", "neg", "matmul", "conv2d", "relu",
    "batchnorm", "mean", "tsum", "log", "exp", "softmax", "clip_min",
    "reshape", "forward_op", "gradients", "SgdState", "sgd_step",
]
