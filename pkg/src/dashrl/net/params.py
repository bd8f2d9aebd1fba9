"""Network parameter container: one flat float64 vector with named views.

Keeping every tensor as a view into a single contiguous array makes
whole-snapshot reads, gradient application, and bit-stable checkpointing
trivial.
"""

from __future__ import annotations

import functools
import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..encode import L_FEATURES
from ..env import HEAD_ARITIES as ENV_HEAD_ARITIES

HEAD_ARITIES = ENV_HEAD_ARITIES

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetSizes:
    input_dim: int = L_FEATURES
    lstm_hidden: int = 128
    block_dim: int = 64
    head_arities: tuple[int, ...] = HEAD_ARITIES
    fused_blocks: bool = True

    @property
    def shared_dim(self) -> int:
        return 2 * self.lstm_hidden

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "lstm_hidden": self.lstm_hidden,
            "block_dim": self.block_dim,
            "head_arities": list(self.head_arities),
            "fused_blocks": self.fused_blocks,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetSizes":
        return cls(
            input_dim=d["input_dim"],
            lstm_hidden=d["lstm_hidden"],
            block_dim=d["block_dim"],
            head_arities=tuple(d["head_arities"]),
            fused_blocks=d["fused_blocks"],
        )


@functools.lru_cache(maxsize=None)
def tensor_shapes(sizes: NetSizes) -> dict[str, tuple[int, ...]]:
    """Ordered name -> shape map; the flat layout follows insertion order.

    Cached per sizes; callers must treat the returned dict as read-only.
    """
    d, h, b = sizes.input_dim, sizes.lstm_hidden, sizes.block_dim
    s = sizes.shared_dim
    shapes: dict[str, tuple[int, ...]] = {}
    for direction in ("fw", "bw"):
        shapes[f"lstm_{direction}.Wx"] = (d, 4 * h)
        shapes[f"lstm_{direction}.Wh"] = (h, 4 * h)
        shapes[f"lstm_{direction}.b"] = (4 * h,)
    shapes["value.W"] = (s,)
    shapes["value.b"] = (1,)
    for k, arity in enumerate(sizes.head_arities):
        shapes[f"head{k}.Ws"] = (s, b)
        if sizes.fused_blocks and k > 0:
            shapes[f"head{k}.Wf"] = (b, b)
        shapes[f"head{k}.b"] = (b,)
        shapes[f"head{k}.Wo"] = (b, arity)
        shapes[f"head{k}.c"] = (arity,)
    return shapes


class NetworkParams:
    """Flat parameter vector plus named tensor views."""

    def __init__(self, sizes: NetSizes, flat: np.ndarray | None = None):
        self.sizes = sizes
        self.shapes = tensor_shapes(sizes)
        self.n_params = sum(int(np.prod(s)) for s in self.shapes.values())
        if flat is None:
            flat = np.zeros(self.n_params, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise ValueError(
                f"flat vector has {flat.shape}, expected ({self.n_params},)"
            )
        self.flat = np.ascontiguousarray(flat, dtype=np.float64)
        self._views: dict[str, np.ndarray] = {}
        offset = 0
        for name, shape in self.shapes.items():
            size = int(np.prod(shape))
            self._views[name] = self.flat[offset : offset + size].reshape(shape)
            offset += size

    def tensor(self, name: str) -> np.ndarray:
        return self._views[name]

    def tensor_names(self) -> tuple[str, ...]:
        return tuple(self.shapes)

    def has_tensor(self, name: str) -> bool:
        return name in self._views

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.sizes, self.flat.copy())

    #: Fusion branches start an order of magnitude below the fan-in scale so
    #: the block chain fades in without destabilizing early training.
    FUSION_INIT_SCALE = 0.1

    @classmethod
    def initialize(cls, sizes: NetSizes, rng: np.random.Generator) -> "NetworkParams":
        """Fan-in scaled uniform init; LSTM forget-gate bias starts at +1."""
        params = cls(sizes)
        h = sizes.lstm_hidden
        for name, view in params._views.items():
            if name.endswith(".b") or name.endswith(".c"):
                view[...] = 0.0
                continue
            fan_in = view.shape[0]
            scale = 1.0 / np.sqrt(fan_in)
            if name.endswith(".Wf"):
                scale *= cls.FUSION_INIT_SCALE
            view[...] = rng.uniform(-scale, scale, size=view.shape)
        for direction in ("fw", "bw"):
            params.tensor(f"lstm_{direction}.b")[h : 2 * h] = 1.0
        return params

    # -- checkpointing -------------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = {"version": CHECKPOINT_VERSION, "sizes": self.sizes.to_dict()}
        buf = io.BytesIO()
        np.save(buf, self.flat, allow_pickle=False)
        with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
            zf.writestr("meta.json", json.dumps(meta, sort_keys=True))
            zf.writestr("flat.npy", buf.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "NetworkParams":
        with zipfile.ZipFile(Path(path), "r") as zf:
            meta = json.loads(zf.read("meta.json"))
            if meta["version"] != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta['version']}")
            flat = np.load(io.BytesIO(zf.read("flat.npy")), allow_pickle=False)
        return cls(NetSizes.from_dict(meta["sizes"]), flat)
