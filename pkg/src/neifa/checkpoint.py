"""Self-describing model checkpoints.

A checkpoint is a zip archive (readable by ``numpy.load`` for the tensor
members) holding ``config.json``, ``vocab.json``, ``loss_trace.json`` and one
``<name>.npy`` per parameter tensor. Member timestamps are fixed so equal
models produce byte-identical files.
"""

from __future__ import annotations

import io
import json
import zipfile

import numpy as np

from neifa.errors import CheckpointError
from neifa.params import TENSOR_NAMES, ModelParams, TrainConfig
from neifa.text_encoder import UNK, Vocabulary
from neifa.trainer import TrainedModel

FORMAT = "neifa-checkpoint/1"
_EPOCH = (1980, 1, 1, 0, 0, 0)


def _put(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def _json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, indent=1).encode("utf-8")


def save_checkpoint(path, model: TrainedModel) -> None:
    tensors = model.params.tensors()
    meta = {"format": FORMAT, "tensors": {k: list(tensors[k].shape) for k in TENSOR_NAMES}}
    with zipfile.ZipFile(path, "w") as zf:
        _put(zf, "meta.json", _json(meta))
        _put(zf, "config.json", _json(model.config.to_dict()))
        _put(zf, "vocab.json", _json(model.vocab.itos))
        _put(zf, "loss_trace.json", _json([float(x) for x in model.loss_trace]))
        for name in TENSOR_NAMES:
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(tensors[name]), allow_pickle=False)
            _put(zf, f"{name}.npy", buf.getvalue())


def load_checkpoint(path) -> TrainedModel:
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read("meta.json"))
            if meta.get("format") != FORMAT:
                raise CheckpointError(f"{path}: unsupported format {meta.get('format')!r}")
            config = TrainConfig.from_dict(json.loads(zf.read("config.json")))
            itos = json.loads(zf.read("vocab.json"))
            trace = json.loads(zf.read("loss_trace.json"))
            tensors = {}
            for name in TENSOR_NAMES:
                arr = np.lib.format.read_array(io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)
                if list(arr.shape) != meta["tensors"][name]:
                    raise CheckpointError(f"{path}: tensor {name} has shape {arr.shape}")
                tensors[name] = arr
    except CheckpointError:
        raise
    except (OSError, KeyError, ValueError, zipfile.BadZipFile, EOFError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    if not itos or itos[0] != UNK:
        raise CheckpointError(f"{path}: vocabulary does not start with {UNK}")
    vocab = Vocabulary(itos[1:])
    if vocab.size != len(itos):
        raise CheckpointError(f"{path}: vocabulary has duplicate tokens")
    params = ModelParams.from_tensors(tensors)
    c = config
    expected = {
        "word_table": (vocab.size, c.d_w),
        "conv_filter": (c.window * c.d_w, c.d_t),
        "conv_bias": (c.d_t,),
        "P": (c.d_t, c.d_s),
        "b_g": (c.d_t,),
        "Q": (c.d_t, c.d_s),
        "b_c": (c.d_t,),
    }
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise CheckpointError(f"{path}: tensor {name} has shape {tensors[name].shape}, expected {shape}")
    if tensors["structural"].ndim != 2 or tensors["structural"].shape[1] != c.d_s:
        raise CheckpointError(f"{path}: structural table has shape {tensors['structural'].shape}")
    return TrainedModel(config, vocab, params, [float(x) for x in trace])
