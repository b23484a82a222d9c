"""Binary model persistence (magic "EMN1").

Layout, all little-endian:
    magic     4 bytes  b"EMN1"
    version   u16      currently 1
    kind      u8       0 = cnn, 1 = lda
    seed      u64
    kind-specific header (cnn: input side u16, channels u8, layer table)
    tensor table: count u16, then per tensor rank u8, extents u32 each,
                  raw float32 values

save -> load -> save is byte-identical; the loader validates magic and
version before touching any parameters. LDA parameters are quantized to
float32 on save (in-memory fits keep float64 for oracle-grade precision).
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .classifiers import LdaModel
from .nn import CnnModel, LayerSpec

MAGIC = b"EMN1"
VERSION = 1

_KIND_CNN = 0
_KIND_LDA = 1

_LAYER_CODES = {"conv": 0, "maxpool": 1, "dense": 2, "sigmoid": 3, "softmax": 4}
_LAYER_NAMES = {v: k for k, v in _LAYER_CODES.items()}


class ModelFileError(ValueError):
    pass


class BadMagic(ModelFileError):
    pass


class VersionUnsupported(ModelFileError):
    pass


class TruncatedPayload(ModelFileError):
    pass


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedPayload(
                f"wanted {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))


def _pack_tensors(arrays: list[np.ndarray]) -> bytes:
    out = [struct.pack("<H", len(arrays))]
    for arr in arrays:
        a = np.ascontiguousarray(arr, dtype=np.float32)
        out.append(struct.pack("<B", a.ndim))
        out.append(struct.pack(f"<{a.ndim}I", *a.shape))
        out.append(a.tobytes())
    return b"".join(out)


def _unpack_tensors(r: _Reader) -> list[np.ndarray]:
    (count,) = r.unpack("H")
    arrays = []
    for _ in range(count):
        (rank,) = r.unpack("B")
        shape = r.unpack(f"{rank}I")
        n = int(np.prod(shape)) if rank else 1
        raw = r.take(4 * n)
        arrays.append(np.frombuffer(raw, dtype="<f4").reshape(shape).copy())
    return arrays


def save_model(model: CnnModel | LdaModel) -> bytes:
    """Serialize a model to EMN1 bytes."""
    if isinstance(model, CnnModel):
        head = struct.pack("<4sHBQ", MAGIC, VERSION, _KIND_CNN, model.seed)
        head += struct.pack("<HBB", model.input_side, model.channels, len(model.layers))
        for spec in model.layers:
            head += struct.pack("<BHHH", _LAYER_CODES[spec.kind],
                                spec.kernel_size, spec.filters, spec.width)
        return head + _pack_tensors(model.param_arrays())
    if isinstance(model, LdaModel):
        head = struct.pack("<4sHBQ", MAGIC, VERSION, _KIND_LDA, 0)
        tensors = [model.pca_mean, model.pca_basis, model.class_means,
                   model.covariance, model.priors]
        return head + _pack_tensors(tensors)
    raise TypeError(f"cannot serialize {type(model).__name__}")


def load_model(data: bytes) -> CnnModel | LdaModel:
    """Parse EMN1 bytes back into a model; rejects bad magic/version first."""
    r = _Reader(data)
    magic, version, kind, seed = r.unpack("4sHBQ")
    if magic != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"format version {version} unsupported")
    if kind == _KIND_CNN:
        input_side, channels, n_layers = r.unpack("HBB")
        layers = []
        for _ in range(n_layers):
            code, k, f, w = r.unpack("BHHH")
            if code not in _LAYER_NAMES:
                raise ModelFileError(f"unknown layer code {code}")
            layers.append(LayerSpec(_LAYER_NAMES[code], kernel_size=k,
                                    filters=f, width=w))
        arrays = _unpack_tensors(r)
        params: list[dict[str, np.ndarray]] = []
        i = 0
        for spec in layers:
            if spec.kind == "conv":
                params.append({"b": arrays[i], "k": arrays[i + 1]})
                i += 2
            elif spec.kind == "dense":
                params.append({"b": arrays[i], "w": arrays[i + 1]})
                i += 2
            else:
                params.append({})
        if i != len(arrays):
            raise ModelFileError(
                f"tensor table has {len(arrays)} entries, layers consume {i}")
        return CnnModel(input_side=input_side, channels=channels,
                        layers=layers, params=params, seed=seed)
    if kind == _KIND_LDA:
        mean, basis, class_means, cov, priors = _unpack_tensors(r)
        return LdaModel(pca_mean=mean.astype(np.float64),
                        pca_basis=basis.astype(np.float64),
                        class_means=class_means.astype(np.float64),
                        covariance=cov.astype(np.float64),
                        priors=priors.astype(np.float64))
    raise ModelFileError(f"unknown model kind {kind}")


def save_model_file(model, path: str) -> None:
    """Atomic write: temp file in the same directory, then rename."""
    data = save_model(model)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_model_file(path: str):
    with open(path, "rb") as fh:
        return load_model(fh.read())
