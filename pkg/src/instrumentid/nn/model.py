"""Network assembly: layer specs, shape inference, forward/backward, SGD.

The layer vocabulary is fixed to what the instrument-recognition network
needs: temporal convolution, max pooling, ReLU, fully connected, dropout and
a final sigmoid. ``TABLE1`` below is the production architecture (one-second
44.1 kHz clips); ``REDUCED`` is a scaled-down variant with the same layer
structure used for fast tests and smoke training on short inputs.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import layers as L

FULL_INPUT_LENGTH = 44100
REDUCED_INPUT_LENGTH = 200
NUM_CLASSES = 11


class LayerKind(enum.Enum):
    TEMPORAL_CONV = "temporal_conv"
    MAX_POOL = "max_pool"
    RELU = "relu"
    FULLY_CONNECTED = "fully_connected"
    DROPOUT = "dropout"
    SIGMOID = "sigmoid"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    feature_maps: int | None = None
    filter_size: int | None = None
    pool_size: int | None = None
    pool_stride: int | None = None
    output_size: int | None = None
    drop_rate: float | None = None

    def __post_init__(self):
        if self.kind is LayerKind.TEMPORAL_CONV:
            if not self.feature_maps or self.feature_maps < 1:
                raise ValueError(f"conv needs feature_maps >= 1, got {self.feature_maps}")
            if not self.filter_size or self.filter_size < 1:
                raise ValueError(f"conv needs filter_size >= 1, got {self.filter_size}")
        elif self.kind is LayerKind.MAX_POOL:
            if not self.pool_size or self.pool_size < 1:
                raise ValueError(f"pool needs pool_size >= 1, got {self.pool_size}")
            if not self.pool_stride or self.pool_stride < 1:
                raise ValueError(f"pool needs pool_stride >= 1, got {self.pool_stride}")
        elif self.kind is LayerKind.FULLY_CONNECTED:
            if not self.output_size or self.output_size < 1:
                raise ValueError(f"fc needs output_size >= 1, got {self.output_size}")
        elif self.kind is LayerKind.DROPOUT:
            if self.drop_rate is None or not 0.0 <= self.drop_rate < 1.0:
                raise ValueError(f"dropout rate must be in [0, 1), got {self.drop_rate}")


def conv(feature_maps: int, filter_size: int) -> LayerSpec:
    return LayerSpec(LayerKind.TEMPORAL_CONV, feature_maps=feature_maps, filter_size=filter_size)


def max_pool(pool_size: int, pool_stride: int) -> LayerSpec:
    return LayerSpec(LayerKind.MAX_POOL, pool_size=pool_size, pool_stride=pool_stride)


def relu() -> LayerSpec:
    return LayerSpec(LayerKind.RELU)


def fully_connected(output_size: int) -> LayerSpec:
    return LayerSpec(LayerKind.FULLY_CONNECTED, output_size=output_size)


def dropout(drop_rate: float) -> LayerSpec:
    return LayerSpec(LayerKind.DROPOUT, drop_rate=drop_rate)


def sigmoid() -> LayerSpec:
    return LayerSpec(LayerKind.SIGMOID)


def table1_layers(drop_rate: float = 0.5) -> list[LayerSpec]:
    """The production architecture: three conv/pool/ReLU blocks, then FC 400 -> 11."""
    return [
        conv(256, 3101), max_pool(40, 20), relu(),
        conv(384, 300), max_pool(30, 20), relu(),
        conv(384, 20), max_pool(8, 4), relu(),
        fully_connected(400), relu(), dropout(drop_rate),
        fully_connected(NUM_CLASSES), sigmoid(),
    ]


def reduced_layers(drop_rate: float = 0.5) -> list[LayerSpec]:
    """Scaled-down twin of :func:`table1_layers` for 200-sample inputs."""
    return [
        conv(4, 11), max_pool(4, 4), relu(),
        conv(6, 5), max_pool(2, 2), relu(),
        conv(6, 3), max_pool(2, 2), relu(),
        fully_connected(16), relu(), dropout(drop_rate),
        fully_connected(NUM_CLASSES), sigmoid(),
    ]


def infer_shapes(layer_specs, input_length: int, input_channels: int = 1):
    """Output shape after each layer, flattening before the first FC layer.

    Convolution shrinks length to ``L - F + 1``; pooling to
    ``(L - P) // S + 1``. Raises ValueError naming the layer index when an
    intermediate map is shorter than the next filter or pool window.
    """
    if input_length < 1 or input_channels < 1:
        raise ValueError(f"bad input shape [{input_channels}, {input_length}]")
    shape: tuple[int, ...] = (input_channels, input_length)
    shapes = []
    for i, spec in enumerate(layer_specs):
        if spec.kind is LayerKind.TEMPORAL_CONV:
            if len(shape) != 2:
                raise ValueError(f"layer {i}: conv requires a [channels, length] input, got {shape}")
            channels, length = shape
            if length < spec.filter_size:
                raise ValueError(
                    f"layer {i}: length {length} shorter than filter size {spec.filter_size}"
                )
            shape = (spec.feature_maps, length - spec.filter_size + 1)
        elif spec.kind is LayerKind.MAX_POOL:
            if len(shape) != 2:
                raise ValueError(f"layer {i}: pool requires a [maps, length] input, got {shape}")
            maps, length = shape
            if length < spec.pool_size:
                raise ValueError(
                    f"layer {i}: length {length} shorter than pool size {spec.pool_size}"
                )
            shape = (maps, (length - spec.pool_size) // spec.pool_stride + 1)
        elif spec.kind is LayerKind.FULLY_CONNECTED:
            shape = (spec.output_size,)
        shapes.append(shape)
    return shapes


def flatten_size(layer_specs, input_length: int, input_channels: int = 1) -> int:
    """Size of the flattened map entering the first fully-connected layer."""
    shape: tuple[int, ...] = (input_channels, input_length)
    for spec, out in zip(layer_specs, infer_shapes(layer_specs, input_length, input_channels)):
        if spec.kind is LayerKind.FULLY_CONNECTED:
            return int(np.prod(shape))
        shape = out
    raise ValueError("architecture has no fully-connected layer")


def param_shapes(layer_specs, input_length: int, input_channels: int = 1):
    """(weight shape, bias shape) per parameterized layer, in network order."""
    shapes = []
    shape: tuple[int, ...] = (input_channels, input_length)
    for spec, out in zip(layer_specs, infer_shapes(layer_specs, input_length, input_channels)):
        if spec.kind is LayerKind.TEMPORAL_CONV:
            shapes.append(((spec.feature_maps, shape[0], spec.filter_size),
                           (spec.feature_maps,)))
        elif spec.kind is LayerKind.FULLY_CONNECTED:
            shapes.append(((spec.output_size, int(np.prod(shape))), (spec.output_size,)))
        shape = out
    return shapes


@dataclass
class SgdConfig:
    learning_rate: float = 1e-2
    batch_size: int = 16
    epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass
class ModelParams:
    """Weight/bias pairs for the parameterized layers, in network order."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    def copy(self) -> "ModelParams":
        return ModelParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(
            [w.astype(dtype) for w in self.weights], [b.astype(dtype) for b in self.biases]
        )

    def zeros_like(self) -> "ModelParams":
        return ModelParams(
            [np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases]
        )


def init_params(layer_specs, input_length: int, input_channels: int = 1,
                seed: int = 0, dtype=np.float32) -> ModelParams:
    """Seeded uniform init in [-sqrt(6/fan_in), +sqrt(6/fan_in)], zero biases."""
    rng = np.random.default_rng(seed)
    shapes = infer_shapes(layer_specs, input_length, input_channels)
    params = ModelParams()
    shape: tuple[int, ...] = (input_channels, input_length)
    for spec, out in zip(layer_specs, shapes):
        if spec.kind is LayerKind.TEMPORAL_CONV:
            channels = shape[0]
            fan_in = channels * spec.filter_size
            bound = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(spec.feature_maps, channels, spec.filter_size))
            params.weights.append(w.astype(dtype))
            params.biases.append(np.zeros(spec.feature_maps, dtype=dtype))
        elif spec.kind is LayerKind.FULLY_CONNECTED:
            fan_in = int(np.prod(shape))
            bound = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(spec.output_size, fan_in))
            params.weights.append(w.astype(dtype))
            params.biases.append(np.zeros(spec.output_size, dtype=dtype))
        shape = out
    return params


@dataclass
class ForwardCache:
    """Everything backward() needs: the specs and per-clip, per-layer caches."""

    layer_specs: list
    params: ModelParams
    clip_caches: list  # one list of per-layer cache tuples per clip
    input_shape: tuple


def _forward_clip(params: ModelParams, layer_specs, x, training: bool, rng):
    caches = []
    param_idx = 0
    cur = x
    for spec in layer_specs:
        if spec.kind is LayerKind.TEMPORAL_CONV:
            w, b = params.weights[param_idx], params.biases[param_idx]
            caches.append(("conv", cur, param_idx))
            cur = L.temporal_conv_forward(cur, w, b)
            param_idx += 1
        elif spec.kind is LayerKind.MAX_POOL:
            out, argmax = L.maxpool_forward(cur, spec.pool_size, spec.pool_stride)
            caches.append(("pool", argmax, cur.shape))
            cur = out
        elif spec.kind is LayerKind.RELU:
            caches.append(("relu", cur))
            cur = L.relu(cur)
        elif spec.kind is LayerKind.FULLY_CONNECTED:
            pre_shape = cur.shape
            flat = cur.reshape(-1)
            w, b = params.weights[param_idx], params.biases[param_idx]
            caches.append(("fc", flat, param_idx, pre_shape))
            cur = L.fully_connected_forward(flat, w, b)
            param_idx += 1
        elif spec.kind is LayerKind.DROPOUT:
            out, mask = L.dropout(cur, spec.drop_rate, rng, training)
            caches.append(("dropout", mask, spec.drop_rate))
            cur = out
        elif spec.kind is LayerKind.SIGMOID:
            cur = L.sigmoid(cur)
            caches.append(("sigmoid", cur))
    return cur, caches


def forward(params: ModelParams, layer_specs, batch, mode: str = "train", rng=None):
    """Run the network over a ``[batch, channels, length]`` stack of clips.

    Clips are processed in index order (dropout draws are consumed in that
    order too), so results are deterministic for a fixed rng state.

    :returns: ``(predictions [batch, output], cache)``
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    batch = np.asarray(batch)
    if batch.ndim != 3:
        raise ValueError(f"batch must be [clips, channels, length], got shape {batch.shape}")
    training = mode == "train"
    has_dropout = any(s.kind is LayerKind.DROPOUT and s.drop_rate > 0 for s in layer_specs)
    if training and has_dropout and rng is None:
        raise ValueError("training mode with dropout requires an rng")

    preds = []
    clip_caches = []
    for clip in batch:
        out, caches = _forward_clip(params, layer_specs, clip, training, rng)
        preds.append(out)
        clip_caches.append(caches)
    predictions = np.stack(preds)
    cache = ForwardCache(list(layer_specs), params, clip_caches, batch.shape)
    return predictions, cache


def backward(cache: ForwardCache, grad_loss) -> ModelParams:
    """Backpropagate ``grad_loss`` ([batch, output]) to parameter gradients.

    ``grad_loss`` is the gradient of the (batch-mean) loss w.r.t. the
    predictions, so the per-clip contributions are summed: the result is the
    gradient of the same batch-mean loss. Accumulation runs in clip index
    order for determinism.
    """
    grad_loss = np.asarray(grad_loss)
    params = cache.params
    grads = params.zeros_like()
    if grad_loss.shape[0] != len(cache.clip_caches):
        raise ValueError(
            f"grad_loss batch {grad_loss.shape[0]} != cached batch {len(cache.clip_caches)}"
        )
    for clip_idx, caches in enumerate(cache.clip_caches):
        g = grad_loss[clip_idx]
        for entry in reversed(caches):
            kind = entry[0]
            if kind == "sigmoid":
                g = L.sigmoid_backward(entry[1], g)
            elif kind == "dropout":
                g = L.dropout_backward(entry[1], entry[2], g)
            elif kind == "fc":
                _, flat, param_idx, pre_shape = entry
                w = params.weights[param_idx]
                g, gw, gb = L.fully_connected_backward(flat, w, g)
                grads.weights[param_idx] += gw
                grads.biases[param_idx] += gb
                g = g.reshape(pre_shape)
            elif kind == "relu":
                g = L.relu_backward(entry[1], g)
            elif kind == "pool":
                _, argmax, in_shape = entry
                g = L.maxpool_backward(argmax, g, in_shape)
            elif kind == "conv":
                _, x_in, param_idx = entry
                w = params.weights[param_idx]
                g, gw, gb = L.temporal_conv_backward(x_in, w, g)
                grads.weights[param_idx] += gw
                grads.biases[param_idx] += gb
    return grads


def sgd_step(params: ModelParams, grads: ModelParams, learning_rate: float) -> ModelParams:
    """Plain SGD update ``w <- w - lr * g``; returns fresh arrays."""
    if len(grads.weights) != len(params.weights):
        raise ValueError("gradient does not match parameter layout")
    new = ModelParams()
    for w, gw in zip(params.weights, grads.weights):
        if w.shape != gw.shape:
            raise ValueError(f"gradient shape {gw.shape} != weight shape {w.shape}")
        new.weights.append(w - np.asarray(learning_rate, dtype=w.dtype) * gw)
    for b, gb in zip(params.biases, grads.biases):
        new.biases.append(b - np.asarray(learning_rate, dtype=b.dtype) * gb)
    return new
