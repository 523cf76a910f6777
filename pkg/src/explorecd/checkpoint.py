"""Save and restore model parameters as versioned ``.npz`` archives."""
from __future__ import annotations

from dataclasses import fields

import numpy as np

from .embed import DirectParams, EmbedderParams
from .siamnet import SiamParams

FORMAT_VERSION = 1
_KINDS = {cls.__name__: cls for cls in (EmbedderParams, SiamParams, DirectParams)}


def save_params(params, path) -> None:
    kind = type(params).__name__
    if kind not in _KINDS:
        raise TypeError(f"cannot checkpoint {kind}")
    arrays = {f.name: getattr(params, f.name) for f in fields(params)}
    with open(path, "wb") as fh:
        np.savez(fh, __kind__=np.array(kind), __version__=np.array(FORMAT_VERSION), **arrays)


def load_params(path):
    with np.load(path, allow_pickle=False) as z:
        version = int(z["__version__"])
        if version != FORMAT_VERSION:
            raise ValueError(f"checkpoint version {version} unsupported (expected {FORMAT_VERSION})")
        cls = _KINDS[str(z["__kind__"])]
        return cls(**{f.name: z[f.name].copy() for f in fields(cls)})
