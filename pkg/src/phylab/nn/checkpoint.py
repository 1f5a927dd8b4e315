"""Model checkpoints.

Format ``phylab-mlp`` version 1 is a NumPy ``.npz`` archive holding

* ``format``: the string ``"phylab-mlp"``
* ``version``: integer 1
* ``spec``: the :class:`MlpSpec` as a JSON string
* ``W0, b0, W1, b1, ...``: float64 parameter arrays

Arrays are stored verbatim, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mlp import Mlp, MlpSpec

__all__ = ["FORMAT", "VERSION", "save_checkpoint", "load_checkpoint"]

FORMAT = "phylab-mlp"
VERSION = 1


def save_checkpoint(mlp: Mlp, path) -> Path:
    path = Path(path)
    arrays = {"format": np.array(FORMAT), "version": np.array(VERSION), "spec": np.array(mlp.spec.to_json())}
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        arrays[f"W{i}"] = np.ascontiguousarray(w, dtype=np.float64)
        arrays[f"b{i}"] = np.ascontiguousarray(b, dtype=np.float64)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path) -> Mlp:
    with np.load(Path(path), allow_pickle=False) as z:
        if str(z["format"]) != FORMAT:
            raise ValueError(f"{path}: not a {FORMAT} checkpoint")
        version = int(z["version"])
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        spec = MlpSpec.from_dict(json.loads(str(z["spec"])))
        weights = [z[f"W{i}"].copy() for i in range(spec.num_layers)]
        biases = [z[f"b{i}"].copy() for i in range(spec.num_layers)]
    return Mlp(spec, weights, biases)
