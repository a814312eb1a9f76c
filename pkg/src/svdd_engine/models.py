"""The four classifier families: FCN head, CNN head, concat fusion, FIONA.

All models end in a 2-unit softmax (bonafide vs deepfake). Fusion models use
CNN branches up to the flatten layer. FIONA adds, per branch, a same-width
sigmoid gate multiplied into the flattened features and a linear projection;
the classifier consumes the concatenated projections and the alignment loss
reads the same two projected matrices.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import (
    ConfigError,
    DegenerateInputError,
    DimensionError,
    FormatError,
)

CONV_KERNEL = 3
CONV1_FILTERS = 16
CONV2_FILTERS = 32
HEAD_UNITS = 50
OUTPUT_UNITS = 2
FCN_HIDDEN = (128, 64, 32)
MIN_CNN_INPUT = 10  # two conv+pool stages must leave length >= 1

CHECKPOINT_MAGIC = b"FMDL"
CHECKPOINT_VERSION = 1


@dataclass
class BranchOutputs:
    """Per-branch intermediates exposed so the objective can attach CKA."""

    gated_a: Tensor
    gated_b: Tensor
    projected_a: Tensor
    projected_b: Tensor


@dataclass
class ForwardResult:
    probs: Tensor
    branches: Optional[BranchOutputs] = None


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def cnn_flatten_width(input_dim: int) -> int:
    """Flattened width after conv(3)->pool(2)->conv(3)->pool(2) on one channel."""
    if input_dim < MIN_CNN_INPUT:
        raise DegenerateInputError(
            f"CNN input dim {input_dim} < minimum {MIN_CNN_INPUT}"
        )
    l1 = input_dim - (CONV_KERNEL - 1)
    p1 = l1 // 2
    l2 = p1 - (CONV_KERNEL - 1)
    p2 = l2 // 2
    return p2 * CONV2_FILTERS


def fcn_param_count(input_dim: int) -> int:
    dims = (input_dim,) + FCN_HIDDEN + (OUTPUT_UNITS,)
    return sum(a * b + b for a, b in zip(dims, dims[1:]))


def _conv_branch_param_count() -> int:
    c1 = CONV_KERNEL * 1 * CONV1_FILTERS + CONV1_FILTERS
    c2 = CONV_KERNEL * CONV1_FILTERS * CONV2_FILTERS + CONV2_FILTERS
    return c1 + c2


def cnn_param_count(input_dim: int) -> int:
    flat = cnn_flatten_width(input_dim)
    return (
        _conv_branch_param_count()
        + flat * HEAD_UNITS + HEAD_UNITS
        + HEAD_UNITS * OUTPUT_UNITS + OUTPUT_UNITS
    )


def concat_fusion_param_count(dim_a: int, dim_b: int) -> int:
    flat = cnn_flatten_width(dim_a) + cnn_flatten_width(dim_b)
    return (
        2 * _conv_branch_param_count()
        + flat * HEAD_UNITS + HEAD_UNITS
        + HEAD_UNITS * OUTPUT_UNITS + OUTPUT_UNITS
    )


def fiona_param_count(dim_a: int, dim_b: int, projection_dim: int) -> int:
    total = 2 * _conv_branch_param_count()
    for d in (dim_a, dim_b):
        flat = cnn_flatten_width(d)
        total += flat * flat + flat  # gate
        total += flat * projection_dim + projection_dim  # projection
    total += 2 * projection_dim * HEAD_UNITS + HEAD_UNITS
    total += HEAD_UNITS * OUTPUT_UNITS + OUTPUT_UNITS
    return total


class Model:
    """Base: a named-parameter container with a forward pass."""

    arch: str

    def __init__(self):
        self.params: dict[str, Tensor] = {}

    def _param(self, name: str, data: np.ndarray) -> Tensor:
        t = Tensor(data, requires_grad=True)
        self.params[name] = t
        return t

    def param_count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def hyperparams(self) -> dict:
        raise NotImplementedError

    def forward(self, inputs, training: bool = False, rng=None) -> ForwardResult:
        raise NotImplementedError

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def restore(self, snap: dict[str, np.ndarray]):
        for name, p in self.params.items():
            p.data = snap[name].copy()


def _as_single_input(inputs) -> Tensor:
    if isinstance(inputs, Tensor):
        return inputs
    if isinstance(inputs, (list, tuple)):
        if len(inputs) != 1:
            raise DimensionError(
                f"model takes one input batch, got {len(inputs)}"
            )
        return inputs[0]
    return Tensor(inputs)


def _as_pair_input(inputs) -> tuple[Tensor, Tensor]:
    if not isinstance(inputs, (list, tuple)) or len(inputs) != 2:
        raise DimensionError("fusion model takes two input batches")
    a, b = inputs
    return (a if isinstance(a, Tensor) else Tensor(a),
            b if isinstance(b, Tensor) else Tensor(b))


def _check_width(x: Tensor, dim: int, branch: str):
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionError(
            f"branch {branch}: expected (n, {dim}) input, got {x.shape}"
        )


class FCN(Model):
    arch = "fcn"

    def __init__(self, input_dim: int, dropout_rate: float = 0.3, seed: int = 0):
        super().__init__()
        if input_dim <= 0:
            raise ConfigError(f"input_dim must be positive, got {input_dim}")
        if not 0.0 <= dropout_rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {dropout_rate}")
        self.input_dim = input_dim
        self.dropout_rate = dropout_rate
        self.seed = seed
        rng = np.random.default_rng(seed)
        dims = (input_dim,) + FCN_HIDDEN + (OUTPUT_UNITS,)
        for i, (a, b) in enumerate(zip(dims, dims[1:]), start=1):
            self._param(f"dense{i}_w", _glorot(rng, (a, b), a, b))
            self._param(f"dense{i}_b", np.zeros(b))

    def hyperparams(self) -> dict:
        return {"input_dim": self.input_dim, "dropout_rate": self.dropout_rate,
                "seed": self.seed}

    def forward(self, inputs, training: bool = False, rng=None) -> ForwardResult:
        h = _as_single_input(inputs)
        _check_width(h, self.input_dim, "a")
        n_hidden = len(FCN_HIDDEN)
        for i in range(1, n_hidden + 1):
            h = ad.relu(ad.dense(h, self.params[f"dense{i}_w"],
                                 self.params[f"dense{i}_b"]))
            h = ad.dropout(h, self.dropout_rate, training, rng)
        logits = ad.dense(h, self.params[f"dense{n_hidden + 1}_w"],
                          self.params[f"dense{n_hidden + 1}_b"])
        return ForwardResult(probs=ad.softmax(logits))


def _init_conv_branch(model: Model, prefix: str, rng: np.random.Generator):
    model._param(f"{prefix}conv1_w",
                 _glorot(rng, (CONV_KERNEL, 1, CONV1_FILTERS),
                         CONV_KERNEL * 1, CONV_KERNEL * CONV1_FILTERS))
    model._param(f"{prefix}conv1_b", np.zeros(CONV1_FILTERS))
    model._param(f"{prefix}conv2_w",
                 _glorot(rng, (CONV_KERNEL, CONV1_FILTERS, CONV2_FILTERS),
                         CONV_KERNEL * CONV1_FILTERS, CONV_KERNEL * CONV2_FILTERS))
    model._param(f"{prefix}conv2_b", np.zeros(CONV2_FILTERS))


def _conv_branch_forward(model: Model, prefix: str, x: Tensor) -> Tensor:
    """(n, d) embeddings -> flattened conv features."""
    h = ad.reshape(x, (x.shape[0], x.shape[1], 1))
    h = ad.relu(ad.conv1d(h, model.params[f"{prefix}conv1_w"],
                          model.params[f"{prefix}conv1_b"]))
    h = ad.maxpool1d(h)
    h = ad.relu(ad.conv1d(h, model.params[f"{prefix}conv2_w"],
                          model.params[f"{prefix}conv2_b"]))
    h = ad.maxpool1d(h)
    return ad.flatten(h)


class CNN(Model):
    arch = "cnn"

    def __init__(self, input_dim: int, dropout_rate: float = 0.3, seed: int = 0):
        super().__init__()
        if input_dim <= 0:
            raise ConfigError(f"input_dim must be positive, got {input_dim}")
        if not 0.0 <= dropout_rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {dropout_rate}")
        self.input_dim = input_dim
        self.dropout_rate = dropout_rate
        self.seed = seed
        self.flatten_width = cnn_flatten_width(input_dim)
        rng = np.random.default_rng(seed)
        _init_conv_branch(self, "", rng)
        self._param("head_w", _glorot(rng, (self.flatten_width, HEAD_UNITS),
                                      self.flatten_width, HEAD_UNITS))
        self._param("head_b", np.zeros(HEAD_UNITS))
        self._param("out_w", _glorot(rng, (HEAD_UNITS, OUTPUT_UNITS),
                                     HEAD_UNITS, OUTPUT_UNITS))
        self._param("out_b", np.zeros(OUTPUT_UNITS))

    def hyperparams(self) -> dict:
        return {"input_dim": self.input_dim, "dropout_rate": self.dropout_rate,
                "seed": self.seed}

    def forward(self, inputs, training: bool = False, rng=None) -> ForwardResult:
        x = _as_single_input(inputs)
        _check_width(x, self.input_dim, "a")
        h = _conv_branch_forward(self, "", x)
        h = ad.dropout(h, self.dropout_rate, training, rng)
        h = ad.relu(ad.dense(h, self.params["head_w"], self.params["head_b"]))
        logits = ad.dense(h, self.params["out_w"], self.params["out_b"])
        return ForwardResult(probs=ad.softmax(logits))


class ConcatFusion(Model):
    arch = "concat"

    def __init__(self, dim_a: int, dim_b: int, dropout_rate: float = 0.3,
                 seed: int = 0):
        super().__init__()
        for d in (dim_a, dim_b):
            if d <= 0:
                raise ConfigError(f"branch dim must be positive, got {d}")
        if not 0.0 <= dropout_rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {dropout_rate}")
        self.dim_a, self.dim_b = dim_a, dim_b
        self.dropout_rate = dropout_rate
        self.seed = seed
        flat = cnn_flatten_width(dim_a) + cnn_flatten_width(dim_b)
        rng = np.random.default_rng(seed)
        _init_conv_branch(self, "a_", rng)
        _init_conv_branch(self, "b_", rng)
        self._param("head_w", _glorot(rng, (flat, HEAD_UNITS), flat, HEAD_UNITS))
        self._param("head_b", np.zeros(HEAD_UNITS))
        self._param("out_w", _glorot(rng, (HEAD_UNITS, OUTPUT_UNITS),
                                     HEAD_UNITS, OUTPUT_UNITS))
        self._param("out_b", np.zeros(OUTPUT_UNITS))

    def hyperparams(self) -> dict:
        return {"dim_a": self.dim_a, "dim_b": self.dim_b,
                "dropout_rate": self.dropout_rate, "seed": self.seed}

    def forward(self, inputs, training: bool = False, rng=None) -> ForwardResult:
        xa, xb = _as_pair_input(inputs)
        _check_width(xa, self.dim_a, "a")
        _check_width(xb, self.dim_b, "b")
        fa = _conv_branch_forward(self, "a_", xa)
        fb = _conv_branch_forward(self, "b_", xb)
        h = ad.concat(fa, fb, axis=1)
        h = ad.dropout(h, self.dropout_rate, training, rng)
        h = ad.relu(ad.dense(h, self.params["head_w"], self.params["head_b"]))
        logits = ad.dense(h, self.params["out_w"], self.params["out_b"])
        return ForwardResult(probs=ad.softmax(logits))


class Fiona(Model):
    arch = "fiona"

    def __init__(self, dim_a: int, dim_b: int, projection_dim: int = 120,
                 dropout_rate: float = 0.3, seed: int = 0):
        super().__init__()
        for d in (dim_a, dim_b):
            if d <= 0:
                raise ConfigError(f"branch dim must be positive, got {d}")
        if projection_dim <= 0:
            raise ConfigError(
                f"projection_dim must be positive, got {projection_dim}"
            )
        if not 0.0 <= dropout_rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {dropout_rate}")
        self.dim_a, self.dim_b = dim_a, dim_b
        self.projection_dim = projection_dim
        self.dropout_rate = dropout_rate
        self.seed = seed
        rng = np.random.default_rng(seed)
        for prefix, d in (("a_", dim_a), ("b_", dim_b)):
            _init_conv_branch(self, prefix, rng)
            flat = cnn_flatten_width(d)
            self._param(f"{prefix}gate_w", _glorot(rng, (flat, flat), flat, flat))
            self._param(f"{prefix}gate_b", np.zeros(flat))
            self._param(f"{prefix}proj_w",
                        _glorot(rng, (flat, projection_dim), flat, projection_dim))
            self._param(f"{prefix}proj_b", np.zeros(projection_dim))
        fused = 2 * projection_dim
        self._param("head_w", _glorot(rng, (fused, HEAD_UNITS), fused, HEAD_UNITS))
        self._param("head_b", np.zeros(HEAD_UNITS))
        self._param("out_w", _glorot(rng, (HEAD_UNITS, OUTPUT_UNITS),
                                     HEAD_UNITS, OUTPUT_UNITS))
        self._param("out_b", np.zeros(OUTPUT_UNITS))

    def hyperparams(self) -> dict:
        return {"dim_a": self.dim_a, "dim_b": self.dim_b,
                "projection_dim": self.projection_dim,
                "dropout_rate": self.dropout_rate, "seed": self.seed}

    def _branch(self, prefix: str, x: Tensor) -> tuple[Tensor, Tensor]:
        flat = _conv_branch_forward(self, prefix, x)
        gate = ad.sigmoid(ad.dense(flat, self.params[f"{prefix}gate_w"],
                                   self.params[f"{prefix}gate_b"]))
        gated = ad.mul(gate, flat)
        projected = ad.dense(gated, self.params[f"{prefix}proj_w"],
                             self.params[f"{prefix}proj_b"])
        return gated, projected

    def forward(self, inputs, training: bool = False, rng=None) -> ForwardResult:
        xa, xb = _as_pair_input(inputs)
        _check_width(xa, self.dim_a, "a")
        _check_width(xb, self.dim_b, "b")
        if xa.shape[0] < 2:
            raise DegenerateInputError(
                "FIONA needs batches of at least 2 samples (CKA centering)"
            )
        gated_a, proj_a = self._branch("a_", xa)
        gated_b, proj_b = self._branch("b_", xb)
        h = ad.concat(proj_a, proj_b, axis=1)
        h = ad.dropout(h, self.dropout_rate, training, rng)
        h = ad.relu(ad.dense(h, self.params["head_w"], self.params["head_b"]))
        logits = ad.dense(h, self.params["out_w"], self.params["out_b"])
        return ForwardResult(
            probs=ad.softmax(logits),
            branches=BranchOutputs(gated_a=gated_a, gated_b=gated_b,
                                   projected_a=proj_a, projected_b=proj_b),
        )


def build_fcn(input_dim: int, dropout_rate: float = 0.3, seed: int = 0) -> FCN:
    return FCN(input_dim, dropout_rate, seed)


def build_cnn(input_dim: int, dropout_rate: float = 0.3, seed: int = 0) -> CNN:
    return CNN(input_dim, dropout_rate, seed)


def build_concat_fusion(dim_a: int, dim_b: int, dropout_rate: float = 0.3,
                        seed: int = 0) -> ConcatFusion:
    return ConcatFusion(dim_a, dim_b, dropout_rate, seed)


def build_fiona(dim_a: int, dim_b: int, projection_dim: int = 120,
                dropout_rate: float = 0.3, seed: int = 0) -> Fiona:
    return Fiona(dim_a, dim_b, projection_dim, dropout_rate, seed)


_ARCHS = {"fcn": FCN, "cnn": CNN, "concat": ConcatFusion, "fiona": Fiona}


def _build_from_hyperparams(arch: str, hp: dict) -> Model:
    if arch not in _ARCHS:
        raise FormatError(f"unknown architecture tag {arch!r}")
    return _ARCHS[arch](**hp)


# ---------------------------------------------------------------------------
# checkpoint container: magic "FMDL" | u32 version | arch tag | hyperparams
# (JSON) | named f64 parameter blobs; bit-exact round trip.


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError("checkpoint truncated")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def save_checkpoint(model: Model, path):
    parts = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_VERSION)]
    parts.append(_pack_str(model.arch))
    parts.append(_pack_str(json.dumps(model.hyperparams(), sort_keys=True)))
    names = sorted(model.params)
    parts.append(struct.pack("<I", len(names)))
    for name in names:
        data = model.params[name].data
        parts.append(_pack_str(name))
        parts.append(struct.pack("<I", data.ndim))
        parts.append(struct.pack(f"<{data.ndim}I", *data.shape))
        parts.append(np.ascontiguousarray(data, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_checkpoint(path) -> Model:
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(4) != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a model checkpoint (bad magic)")
    version = r.u32()
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    arch = r.string()
    hp = json.loads(r.string())
    model = _build_from_hyperparams(arch, hp)
    n_params = r.u32()
    if n_params != len(model.params):
        raise FormatError(
            f"{path}: checkpoint has {n_params} parameters, "
            f"architecture expects {len(model.params)}"
        )
    for _ in range(n_params):
        name = r.string()
        if name not in model.params:
            raise FormatError(f"{path}: unexpected parameter {name!r}")
        ndim = r.u32()
        shape = struct.unpack(f"<{ndim}I", r.take(4 * ndim))
        expected = model.params[name].data.shape
        if tuple(shape) != expected:
            raise FormatError(
                f"{path}: parameter {name!r} has shape {shape}, expected {expected}"
            )
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(shape)
        model.params[name].data = data.astype(np.float64).copy()
    return model
