"""Small classifier architectures producing class posteriors.

Two architectures are registered:

* ``mlp-small``    - flatten, linear(64), relu, linear(K), softmax; no
  normalization layers, meant for 1-D / synthetic sanity checks.
* ``cnn-bn-small`` - three conv/batchnorm/relu blocks (strides 1, 2, 2),
  global average pool, linear(K), softmax.  The batchnorm layers are what
  the affine-only baseline and the batch-size effects exercise.

A model's forward subsumes the softmax, so rows of its output are
probability vectors.  Batchnorm runs either on the statistics of the
current batch (``train-stats``, used while adapting) or on stored running
estimates (``running-stats``, plain evaluation).
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .engine import Tensor, batchnorm, conv2d, matmul, mean, relu, reshape, softmax
from .errors import ConfigError, DimensionError, NumericError
from .rng import SeededRng

__all__ = ["Model", "ARCHITECTURES", "build_model", "predict", "accuracy"]

ARCHITECTURES = ("mlp-small", "cnn-bn-small")

_CNN_CHANNELS = (16, 32, 64)
_CNN_STRIDES = (1, 2, 2)
_MLP_HIDDEN = 64
_BN_MOMENTUM = 0.1


class Model:
    """Named parameters, batchnorm running buffers, and the forward pass."""

    def __init__(self, arch: str, in_shape: tuple[int, ...], num_classes: int,
                 params: dict[str, Tensor], buffers: dict[str, np.ndarray],
                 bn_affine: frozenset[str]):
        self.arch = arch
        self.in_shape = tuple(in_shape)
        self.num_classes = int(num_classes)
        self.params = params
        self.buffers = buffers
        self.bn_affine = bn_affine

    @property
    def descriptor(self) -> str:
        dims = "x".join(str(d) for d in self.in_shape)
        return f"{self.arch}|in={dims}|k={self.num_classes}"

    def parameter_names(self) -> list[str]:
        return list(self.params)

    def set_requires_grad(self, names: Iterable[str], flag: bool) -> None:
        for name in names:
            self.params[name].requires_grad = flag

    def copy(self) -> "Model":
        params = {k: Tensor(v.data.copy()) for k, v in self.params.items()}
        buffers = {k: v.copy() for k, v in self.buffers.items()}
        return Model(self.arch, self.in_shape, self.num_classes,
                     params, buffers, self.bn_affine)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Parameters then buffers, in declaration order (checkpoint layout)."""
        out: dict[str, np.ndarray] = {k: v.data for k, v in self.params.items()}
        out.update(self.buffers)
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, p in self.params.items():
            arr = arrays[name]
            if arr.shape != p.data.shape:
                raise DimensionError(
                    f"parameter {name!r}: stored shape {arr.shape} != {p.data.shape}")
            p.data = arr.astype(p.data.dtype)
        for name in self.buffers:
            arr = arrays[name]
            if arr.shape != self.buffers[name].shape:
                raise DimensionError(
                    f"buffer {name!r}: stored shape {arr.shape} != {self.buffers[name].shape}")
            self.buffers[name] = arr.astype(np.float64)

    def forward(self, x: Tensor, bn_mode: str = "running-stats",
                update_running: bool = False) -> Tensor:
        if x.data.shape[1:] != self.in_shape:
            raise DimensionError(
                f"batch shape {x.data.shape} does not match input shape {self.in_shape}")
        if self.arch == "mlp-small":
            return self._forward_mlp(x)
        return self._forward_cnn(x, bn_mode, update_running)

    def _forward_mlp(self, x: Tensor) -> Tensor:
        n = x.data.shape[0]
        h = reshape(x, (n, -1))
        h = _checked(matmul(h, self.params["fc1.weight"]) + self.params["fc1.bias"], "fc1")
        h = relu(h)
        h = _checked(matmul(h, self.params["fc2.weight"]) + self.params["fc2.bias"], "fc2")
        return softmax(h, axis=-1)

    def _forward_cnn(self, x: Tensor, bn_mode: str, update_running: bool) -> Tensor:
        h = x
        for i, stride in enumerate(_CNN_STRIDES, start=1):
            h = _checked(conv2d(h, self.params[f"conv{i}.weight"],
                                stride=stride, padding=1), f"conv{i}")
            h = batchnorm(h, self.params[f"bn{i}.gamma"], self.params[f"bn{i}.beta"],
                          mode=bn_mode,
                          running_mean=self.buffers[f"bn{i}.running_mean"],
                          running_var=self.buffers[f"bn{i}.running_var"])
            if update_running and bn_mode == "train-stats":
                m = _BN_MOMENTUM
                self.buffers[f"bn{i}.running_mean"] = \
                    (1 - m) * self.buffers[f"bn{i}.running_mean"] + m * h.batch_mean
                self.buffers[f"bn{i}.running_var"] = \
                    (1 - m) * self.buffers[f"bn{i}.running_var"] + m * h.batch_var
            h = _checked(relu(h), f"relu{i}")
        h = mean(h, axis=(2, 3))
        h = _checked(matmul(h, self.params["fc.weight"]) + self.params["fc.bias"], "fc")
        return softmax(h, axis=-1)


def _checked(t: Tensor, layer: str) -> Tensor:
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite activations in layer {layer!r}")
    return t


def _he_uniform(rng: SeededRng, shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


def build_model(arch: str, seed: int, in_shape: tuple[int, ...] = (3, 32, 32),
                num_classes: int = 10) -> Model:
    """Deterministically initialize a registered architecture."""
    if arch not in ARCHITECTURES:
        raise ConfigError(f"unknown architecture {arch!r}; registered: {ARCHITECTURES}")
    rng = SeededRng(seed)
    params: dict[str, Tensor] = {}
    buffers: dict[str, np.ndarray] = {}
    bn_affine: set[str] = set()

    if arch == "mlp-small":
        d = int(np.prod(in_shape))
        params["fc1.weight"] = Tensor(_he_uniform(rng.substream(0), (d, _MLP_HIDDEN), d))
        params["fc1.bias"] = Tensor(np.zeros(_MLP_HIDDEN, dtype=np.float32))
        params["fc2.weight"] = Tensor(
            _he_uniform(rng.substream(1), (_MLP_HIDDEN, num_classes), _MLP_HIDDEN))
        params["fc2.bias"] = Tensor(np.zeros(num_classes, dtype=np.float32))
    else:
        if len(in_shape) != 3:
            raise ConfigError("cnn-bn-small expects [C,H,W] inputs")
        c_in = in_shape[0]
        for i, c_out in enumerate(_CNN_CHANNELS, start=1):
            fan_in = c_in * 9
            params[f"conv{i}.weight"] = Tensor(
                _he_uniform(rng.substream(i), (c_out, c_in, 3, 3), fan_in))
            params[f"bn{i}.gamma"] = Tensor(np.ones(c_out, dtype=np.float32))
            params[f"bn{i}.beta"] = Tensor(np.zeros(c_out, dtype=np.float32))
            buffers[f"bn{i}.running_mean"] = np.zeros(c_out, dtype=np.float64)
            buffers[f"bn{i}.running_var"] = np.ones(c_out, dtype=np.float64)
            bn_affine.add(f"bn{i}.gamma")
            bn_affine.add(f"bn{i}.beta")
            c_in = c_out
        params["fc.weight"] = Tensor(
            _he_uniform(rng.substream(9), (_CNN_CHANNELS[-1], num_classes),
                        _CNN_CHANNELS[-1]))
        params["fc.bias"] = Tensor(np.zeros(num_classes, dtype=np.float32))

    return Model(arch, in_shape, num_classes, params, buffers, frozenset(bn_affine))


def predict(model: Model, batch, bn_mode: str = "running-stats") -> Tensor:
    """Class posteriors [N, K] for a batch; pure given (params, buffers, mode)."""
    x = batch if isinstance(batch, Tensor) else Tensor(np.asarray(batch, dtype=np.float64))
    return model.forward(x, bn_mode=bn_mode)


def accuracy(posteriors: np.ndarray, labels: np.ndarray) -> float:
    pred = np.argmax(posteriors, axis=1)
    return float(np.mean(pred == np.asarray(labels)))
