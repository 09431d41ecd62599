"""Tensor serialization: one JSON header line, then raw coefficients.

The header is UTF-8 JSON terminated by a newline; everything after it is
little-endian complex128 (real, imag float64 pairs).  Canonical tensors
store {format: "cp", N, r, Q, b} and the payload runs term-major, dimension
middle, mode minor: term 0's dimension-0 column, then its dimension-1
column, and so on.  Tree tensors store {format: "ht", ...} with the tree as
parallel parent/left/right arrays plus per-node ranks, and the payload is
each node's array (leaf frames and transfer cores) in node order, C order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .basis import BasisSpec
from .cp import CPTensor
from .ht import DimensionTree, HTTensor, TreeNode

__all__ = ["save_tensor", "load_tensor"]

_DTYPE = np.dtype("<c16")


def _cp_header(f: CPTensor) -> dict:
    return {
        "format": "cp",
        "version": 1,
        "N": f.ndim,
        "r": f.rank,
        "Q": [s.Q for s in f.specs],
        "b": [s.b for s in f.specs],
    }


def _ht_header(h: HTTensor) -> dict:
    nodes = h.tree.nodes
    return {
        "format": "ht",
        "version": 1,
        "N": h.ndim,
        "Q": [s.Q for s in h.specs],
        "b": [s.b for s in h.specs],
        "dims": [list(n.dims) for n in nodes],
        "parent": [n.parent for n in nodes],
        "left": [n.left for n in nodes],
        "right": [n.right for n in nodes],
        "ranks": list(h.ranks),
    }


def save_tensor(path, t) -> None:
    if isinstance(t, CPTensor):
        header = _cp_header(t)
        blocks = [t.factors[k][:, l] for l in range(t.rank) for k in range(t.ndim)]
    elif isinstance(t, HTTensor):
        header = _ht_header(t)
        blocks = [arr.reshape(-1)
                  for arr in (t.frames[i] if n.is_leaf else t.transfers[i]
                              for i, n in enumerate(t.tree.nodes))]
    else:
        raise TypeError(f"cannot serialize {type(t).__name__}")
    payload = np.concatenate([np.ascontiguousarray(b, dtype=complex).reshape(-1)
                              for b in blocks]).astype(_DTYPE)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(payload.tobytes())


def load_tensor(path) -> CPTensor | HTTensor:
    raw = Path(path).read_bytes()
    cut = raw.index(b"\n")
    header = json.loads(raw[:cut].decode())
    payload = np.frombuffer(raw[cut + 1:], dtype=_DTYPE).astype(complex)
    specs = tuple(BasisSpec(q, b) for q, b in zip(header["Q"], header["b"]))
    if header.get("format") == "cp":
        n, r = header["N"], header["r"]
        if payload.size != r * sum(s.Q for s in specs):
            raise ValueError("payload length does not match the header")
        factors = [np.empty((s.Q, r), dtype=complex) for s in specs]
        pos = 0
        for l in range(r):
            for k in range(n):
                q = specs[k].Q
                factors[k][:, l] = payload[pos:pos + q]
                pos += q
        return CPTensor(specs, factors)
    if header.get("format") == "ht":
        nodes = tuple(TreeNode(tuple(d), p, lft, rgt)
                      for d, p, lft, rgt in zip(header["dims"], header["parent"],
                                                header["left"], header["right"]))
        tree = DimensionTree(nodes)
        ranks = header["ranks"]
        frames: list[np.ndarray | None] = [None] * len(nodes)
        transfers: list[np.ndarray | None] = [None] * len(nodes)
        pos = 0
        for i, node in enumerate(nodes):
            if node.is_leaf:
                shape = (specs[node.dims[0]].Q, ranks[i])
            else:
                shape = (ranks[node.left], ranks[node.right], ranks[i])
            size = int(np.prod(shape))
            block = payload[pos:pos + size].reshape(shape)
            pos += size
            if node.is_leaf:
                frames[i] = block
            else:
                transfers[i] = block
        if pos != payload.size:
            raise ValueError("payload length does not match the header")
        return HTTensor(specs, tree, frames, transfers)
    raise ValueError(f"unknown tensor format {header.get('format')!r}")
