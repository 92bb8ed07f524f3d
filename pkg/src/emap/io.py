"""On-disk formats: grids, decompositions, datasets, models, reports.

JSON is the canonical interchange; a compact binary form is selected by
file extension (anything but ``.json``).  Binary layouts are little-endian:

* grid:          magic ``EMAPGRID``, version u32, n u64, d u64,
                 then n*n*d float64 values, row-major.
* decomposition: magic ``EMAPDCMP``, version u32, n u64, d u64,
                 then tau (n*d), phi (n*d), mu (d) float64.
* dataset:       magic ``EMAPDATA``, version u32, n u64, d1 u64, d2 u64,
                 num_classes u64, split codes u8[n], labels u32[n],
                 text float64[n*d1], visual float64[n*d2],
                 config-JSON length u64 + UTF-8 bytes.

All writers produce byte-identical output for identical inputs.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .boosting import AdaBoostModel
from .data import SPLIT_NAMES, PairedDataset
from .exceptions import InputError
from .grid import AdditiveDecomposition, ScoreGrid
from .models import FeedForwardModel, LinearModel, Poly2Model

__all__ = [
    "save_grid",
    "load_grid",
    "save_decomposition",
    "load_decomposition",
    "save_dataset",
    "load_dataset",
    "save_model",
    "load_model",
    "dump_json",
]

GRID_MAGIC = b"EMAPGRID"
DECOMP_MAGIC = b"EMAPDCMP"
DATA_MAGIC = b"EMAPDATA"
FORMAT_VERSION = 1

_SPLIT_CODES = {name: i for i, name in enumerate(SPLIT_NAMES)}


def dump_json(payload: dict, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _is_json(path) -> bool:
    return Path(path).suffix.lower() == ".json"


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise InputError(f"truncated file while reading {what}")
    return data


# -- grids ------------------------------------------------------------------


def save_grid(grid: ScoreGrid, path) -> None:
    if not grid.is_square:
        raise InputError("grid files store square grids only")
    if _is_json(path):
        dump_json(
            {
                "n": grid.n,
                "d": grid.d,
                "values": grid.values.tolist(),
                "text_ids": list(grid.text_ids),
                "visual_ids": list(grid.visual_ids),
            },
            path,
        )
        return
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(struct.pack("<IQQ", FORMAT_VERSION, grid.n, grid.d))
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def load_grid(path) -> ScoreGrid:
    if _is_json(path):
        payload = _load_json(path)
        values = np.asarray(payload["values"], dtype=np.float64)
        if values.ndim == 2:
            values = values[:, :, np.newaxis]
        n, d = int(payload["n"]), int(payload["d"])
        if values.shape != (n, n, d):
            raise InputError(
                f"grid file claims n={n}, d={d} but values have shape {values.shape}"
            )
        return ScoreGrid(
            values=values,
            text_ids=tuple(payload.get("text_ids", ())),
            visual_ids=tuple(payload.get("visual_ids", ())),
        )
    with open(path, "rb") as fh:
        if _read_exact(fh, 8, "magic") != GRID_MAGIC:
            raise InputError(f"{path} is not a grid file (bad magic)")
        version, n, d = struct.unpack("<IQQ", _read_exact(fh, 20, "header"))
        if version != FORMAT_VERSION:
            raise InputError(f"unsupported grid format version {version}")
        raw = _read_exact(fh, 8 * n * n * d, "values")
        values = np.frombuffer(raw, dtype="<f8").reshape(n, n, d).astype(np.float64)
    return ScoreGrid(values=values)


# -- decompositions ----------------------------------------------------------


def save_decomposition(dec: AdditiveDecomposition, path) -> None:
    if dec.tau.shape[0] != dec.phi.shape[0]:
        raise InputError("decomposition files store square decompositions only")
    if _is_json(path):
        dump_json(
            {
                "n": dec.tau.shape[0],
                "d": dec.d,
                "tau": dec.tau.tolist(),
                "phi": dec.phi.tolist(),
                "mu": dec.mu.tolist(),
            },
            path,
        )
        return
    n, d = dec.tau.shape[0], dec.d
    with open(path, "wb") as fh:
        fh.write(DECOMP_MAGIC)
        fh.write(struct.pack("<IQQ", FORMAT_VERSION, n, d))
        for arr in (dec.tau, dec.phi, dec.mu):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_decomposition(path) -> AdditiveDecomposition:
    if _is_json(path):
        payload = _load_json(path)
        return AdditiveDecomposition(
            tau=np.asarray(payload["tau"], dtype=np.float64),
            phi=np.asarray(payload["phi"], dtype=np.float64),
            mu=np.asarray(payload["mu"], dtype=np.float64),
        )
    with open(path, "rb") as fh:
        if _read_exact(fh, 8, "magic") != DECOMP_MAGIC:
            raise InputError(f"{path} is not a decomposition file (bad magic)")
        version, n, d = struct.unpack("<IQQ", _read_exact(fh, 20, "header"))
        if version != FORMAT_VERSION:
            raise InputError(f"unsupported decomposition format version {version}")
        tau = np.frombuffer(_read_exact(fh, 8 * n * d, "tau"), dtype="<f8").reshape(n, d)
        phi = np.frombuffer(_read_exact(fh, 8 * n * d, "phi"), dtype="<f8").reshape(n, d)
        mu = np.frombuffer(_read_exact(fh, 8 * d, "mu"), dtype="<f8")
    return AdditiveDecomposition(tau=tau.copy(), phi=phi.copy(), mu=mu.copy())


# -- datasets ----------------------------------------------------------------


def save_dataset(dataset: PairedDataset, path) -> None:
    if _is_json(path):
        dump_json(
            {
                "n": dataset.n,
                "d1": dataset.d1,
                "d2": dataset.d2,
                "num_classes": dataset.num_classes,
                "split": dataset.split_names(),
                "labels": dataset.labels.tolist(),
                "text": dataset.text.tolist(),
                "visual": dataset.visual.tolist(),
                "config": dict(dataset.meta),
            },
            path,
        )
        return
    config_bytes = json.dumps(dict(dataset.meta)).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(DATA_MAGIC)
        fh.write(
            struct.pack(
                "<IQQQQ",
                FORMAT_VERSION,
                dataset.n,
                dataset.d1,
                dataset.d2,
                dataset.num_classes,
            )
        )
        fh.write(dataset.split.astype(np.uint8).tobytes())
        fh.write(dataset.labels.astype("<u4").tobytes())
        fh.write(np.ascontiguousarray(dataset.text, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(dataset.visual, dtype="<f8").tobytes())
        fh.write(struct.pack("<Q", len(config_bytes)))
        fh.write(config_bytes)


def load_dataset(path) -> PairedDataset:
    if _is_json(path):
        payload = _load_json(path)
        split = np.asarray([_SPLIT_CODES[name] for name in payload["split"]], dtype=np.int8)
        return PairedDataset(
            text=np.asarray(payload["text"], dtype=np.float64),
            visual=np.asarray(payload["visual"], dtype=np.float64),
            labels=np.asarray(payload["labels"], dtype=np.int64),
            split=split,
            num_classes=int(payload["num_classes"]),
            meta=dict(payload.get("config", {})),
        )
    with open(path, "rb") as fh:
        if _read_exact(fh, 8, "magic") != DATA_MAGIC:
            raise InputError(f"{path} is not a dataset file (bad magic)")
        version, n, d1, d2, num_classes = struct.unpack(
            "<IQQQQ", _read_exact(fh, 36, "header")
        )
        if version != FORMAT_VERSION:
            raise InputError(f"unsupported dataset format version {version}")
        split = np.frombuffer(_read_exact(fh, n, "split"), dtype=np.uint8).astype(np.int8)
        labels = np.frombuffer(_read_exact(fh, 4 * n, "labels"), dtype="<u4").astype(np.int64)
        text = np.frombuffer(_read_exact(fh, 8 * n * d1, "text"), dtype="<f8").reshape(n, d1)
        visual = np.frombuffer(_read_exact(fh, 8 * n * d2, "visual"), dtype="<f8").reshape(n, d2)
        (config_len,) = struct.unpack("<Q", _read_exact(fh, 8, "config length"))
        meta = json.loads(_read_exact(fh, config_len, "config").decode("utf-8"))
    return PairedDataset(
        text=text.copy(),
        visual=visual.copy(),
        labels=labels,
        split=split,
        num_classes=int(num_classes),
        meta=meta,
    )


# -- models ------------------------------------------------------------------

_MODEL_KINDS = {
    "linear": LinearModel,
    "poly2": Poly2Model,
    "feedforward": FeedForwardModel,
    "adaboost": AdaBoostModel,
}


def save_model(model, path) -> None:
    dump_json(model.to_json_dict(), path)


def load_model(path):
    payload = _load_json(path)
    kind = payload.get("kind")
    if kind not in _MODEL_KINDS:
        raise InputError(f"unknown model kind {kind!r} in {path}")
    return _MODEL_KINDS[kind].from_json_dict(payload)
