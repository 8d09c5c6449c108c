"""Versioned binary containers for classifiers and perturbations.

Layout shared by both kinds::

    8 bytes   magic (b"FTUAPNN\\0" or b"FTUAPPT\\0")
    u16 LE    format version
    u32 LE    header length in bytes
    ...       UTF-8 JSON header
    ...       payload: little-endian float64 arrays, C order, in header order
"""

import json
import struct
from pathlib import Path

import numpy as np

from ..attack import Perturbation
from ..bands import BandMask
from ..blockdct import DctStack
from ..jnd import JndThresholdMatrix
from ..tinynet.model import Classifier

MODEL_MAGIC = b"FTUAPNN\0"
PERT_MAGIC = b"FTUAPPT\0"
VERSION = 1
_PREFIX = struct.Struct("<8sHI")


def _pack(magic, header, arrays):
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [_PREFIX.pack(magic, VERSION, len(head)), head]
    parts += [np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays]
    return b"".join(parts)


def _unpack(data, magic):
    if len(data) < _PREFIX.size:
        raise ValueError("file too short for a container header")
    got, version, hlen = _PREFIX.unpack_from(data)
    if got != magic:
        raise ValueError(f"bad magic {got!r}, expected {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported format version {version}")
    start = _PREFIX.size
    header = json.loads(data[start:start + hlen].decode("utf-8"))
    return header, memoryview(data)[start + hlen:]


def _read_arrays(payload, shapes):
    out, pos = [], 0
    for shape in shapes:
        count = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=pos).reshape(shape)
        out.append(arr.astype(np.float64))
        pos += 8 * count
    if pos != len(payload):
        raise ValueError(f"payload size mismatch: used {pos} of {len(payload)} bytes")
    return out


def model_to_bytes(model):
    names = list(model.params)
    header = {
        "kind": "classifier",
        "arch": model.arch,
        "num_classes": model.num_classes,
        "input_shape": list(model.input_shape),
        "params": [{"name": n, "shape": list(model.params[n].shape)} for n in names],
    }
    return _pack(MODEL_MAGIC, header, [model.params[n] for n in names])


def model_from_bytes(data):
    header, payload = _unpack(data, MODEL_MAGIC)
    specs = header["params"]
    arrays = _read_arrays(payload, [tuple(s["shape"]) for s in specs])
    params = {s["name"]: a for s, a in zip(specs, arrays)}
    return Classifier(header["arch"], params, header["num_classes"], header["input_shape"])


def save_model(model, path):
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path):
    return model_from_bytes(Path(path).read_bytes())


def perturbation_to_bytes(p):
    header = {"kind": "perturbation", "domain": p.domain, "shape": list(p.shape),
              "provenance": p.provenance}
    if p.domain == "spatial":
        header["budget"] = {"kind": "linf", "epsilon": p.epsilon}
        payload = [p.values]
        header["payload_shape"] = list(p.values.shape)
    else:
        thr = p.thresholds
        header["budget"] = {
            "kind": "jnd",
            "lambda": thr.lam,
            "thresholds": [float(v) for v in thr.flat],
            "mask": None if thr.mask is None else sorted(list(ix) for ix in thr.mask.selected),
            "mask_name": None if thr.mask is None else thr.mask.name,
        }
        header["grid"] = list(p.values.grid)
        header["payload_shape"] = list(p.values.blocks.shape)
        payload = [p.values.blocks]
    return _pack(PERT_MAGIC, header, payload)


def perturbation_from_bytes(data):
    header, payload = _unpack(data, PERT_MAGIC)
    (values,) = _read_arrays(payload, [tuple(header["payload_shape"])])
    budget = header["budget"]
    if header["domain"] == "spatial":
        return Perturbation("spatial", values, epsilon=budget["epsilon"],
                            provenance=header.get("provenance", ""))
    mask = None
    if budget["mask"] is not None:
        mask = BandMask(frozenset(tuple(ix) for ix in budget["mask"]), budget["mask_name"])
    t = np.array(budget["thresholds"], dtype=np.float64).reshape(8, 8)
    t.setflags(write=False)
    thr = JndThresholdMatrix(t, budget["lambda"], mask)
    return Perturbation("dct", DctStack(values, tuple(header["grid"])), thresholds=thr,
                        provenance=header.get("provenance", ""))


def save_perturbation(p, path):
    Path(path).write_bytes(perturbation_to_bytes(p))


def load_perturbation(path):
    return perturbation_from_bytes(Path(path).read_bytes())
