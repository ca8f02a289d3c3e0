"""Little-endian binary container for float and int8 models.

Layout::

    magic        8 bytes  b"HYWBMDL\\0"
    version      u16      (1)
    kind         u8       0 = float32 model, 1 = int8 quantized
    flags        u8       bit0 autoencoder trained, bit1 classifier trained
    n_features   u32
    mean, std    f64 * n_features each (standardizer)
    n_layers     u16
    layer table  n_layers * (group u8, activation u8, dropout f32, in u32, out u32)
    tensors      per layer, in table order:
                   kind 0: W f32[in*out] row-major, b f32[out]
                   kind 1: scale f64, zero_point i32, W i8[in*out], b f32[out]

The file must end exactly after the last tensor.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .neural import GROUPS, Activation, Layer, LayerSpec, Model, QuantizedLayer, QuantizedModel

MAGIC = b"HYWBMDL\0"
VERSION = 1
KIND_FLOAT = 0
KIND_INT8 = 1

_HEADER = struct.Struct("<8sHBBI")
_LAYER = struct.Struct("<BBfII")
_QPARAMS = struct.Struct("<di")


class FormatError(ValueError):
    pass


def _layers(model):
    for gi, g in enumerate(GROUPS):
        for layer in model.group(g):
            yield gi, layer


def dumps(model: Model | QuantizedModel) -> bytes:
    quantized = isinstance(model, QuantizedModel)
    if quantized:
        flags = 3
    else:
        flags = int(model.autoencoder_trained) | (int(model.classifier_trained) << 1)
    n = len(model.feature_mean)
    out = [_HEADER.pack(MAGIC, VERSION, KIND_INT8 if quantized else KIND_FLOAT, flags, n),
           np.asarray(model.feature_mean, "<f8").tobytes(), np.asarray(model.feature_std, "<f8").tobytes()]
    layers = list(_layers(model))
    out.append(struct.pack("<H", len(layers)))
    for gi, layer in layers:
        s = layer.spec
        out.append(_LAYER.pack(gi, int(s.activation), s.dropout_rate, s.input_dim, s.output_dim))
    for _, layer in layers:
        if quantized:
            out.append(_QPARAMS.pack(layer.scale, layer.zero_point))
            out.append(np.ascontiguousarray(layer.q, "i1").tobytes())
        else:
            out.append(np.ascontiguousarray(layer.W, "<f4").tobytes())
        out.append(np.ascontiguousarray(layer.b, "<f4").tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated model file: need {n} bytes at offset {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).copy()


def loads(data: bytes) -> Model | QuantizedModel:
    r = _Reader(data)
    magic, version, kind, flags, n = r.unpack(_HEADER)
    if magic != MAGIC:
        raise FormatError("bad magic")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    if kind not in (KIND_FLOAT, KIND_INT8):
        raise FormatError(f"unknown model kind {kind}")
    mean = r.array("<f8", n).astype(np.float64)
    std = r.array("<f8", n).astype(np.float64)
    (n_layers,) = r.unpack(struct.Struct("<H"))
    table = [r.unpack(_LAYER) for _ in range(n_layers)]
    groups = {g: [] for g in GROUPS}
    for gi, act, dropout, din, dout in table:
        if gi >= len(GROUPS):
            raise FormatError(f"unknown layer group {gi}")
        try:
            spec = LayerSpec(din, dout, Activation(act), float(np.float32(dropout)))
        except ValueError as exc:
            raise FormatError(str(exc)) from exc
        if kind == KIND_INT8:
            scale, zp = r.unpack(_QPARAMS)
            q = r.array("i1", din * dout).reshape(din, dout)
            b = r.array("<f4", dout).astype(np.float64)
            groups[GROUPS[gi]].append(QuantizedLayer(spec, q, scale, zp, b))
        else:
            W = r.array("<f4", din * dout).reshape(din, dout).astype(np.float64)
            b = r.array("<f4", dout).astype(np.float64)
            groups[GROUPS[gi]].append(Layer(spec, W, b))
    if r.pos != len(data):
        raise FormatError(f"{len(data) - r.pos} trailing bytes after model")
    if kind == KIND_INT8:
        return QuantizedModel(**groups, feature_mean=mean, feature_std=std)
    return Model(**groups, feature_mean=mean, feature_std=std,
                 autoencoder_trained=bool(flags & 1), classifier_trained=bool(flags & 2))


def save_model(model, path) -> None:
    Path(path).write_bytes(dumps(model))


def load_model(path):
    return loads(Path(path).read_bytes())
